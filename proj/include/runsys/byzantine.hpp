#pragma once

#include "engine.hpp"
#include "epistemics.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace runsys::byz
{

inline constexpr std::int64_t retreat = 0;
inline constexpr std::int64_t attack = 1;

inline std::string value_name( std::int64_t v ) { return v == attack ? "attack" : "retreat"; }

enum class failure_kind
{
    crash,
    omission,
    byzantine,
};

inline std::string to_string( failure_kind k )
{
    switch ( k )
    {
    case failure_kind::crash: return "crash";
    case failure_kind::omission: return "omission";
    case failure_kind::byzantine: return "byzantine";
    }
    return "?";
}

inline failure_kind parse_failure_kind( const std::string& s )
{
    if ( s == "crash" )
        return failure_kind::crash;
    if ( s == "omission" )
        return failure_kind::omission;
    if ( s == "byzantine" )
        return failure_kind::byzantine;
    throw config_error( "unknown failure model '" + s + "' (expected crash, omission or byzantine)" );
}

struct failure_model
{
    failure_kind kind = failure_kind::crash;
    std::size_t n = 3;
    std::size_t t = 1;

    void validate() const
    {
        if ( n < 2 )
            throw config_error( "agreement needs n >= 2 (got " + std::to_string( n ) + ")" );
        if ( t >= n )
            throw config_error( "need 0 <= t < n (got t=" + std::to_string( t ) + ", n=" + std::to_string( n ) + ")" );
    }
};

// Sequence of distinct agents i_1 ... i_k: "i_k said at round k that ... i_1 said at round 1
// that its initial preference was v". The originator comes first.
using chain = std::vector<int>;

inline bool has_agent( const chain& c, int a ) { return std::find( c.begin(), c.end(), a ) != c.end(); }

// One round's relay: chain (relative to the sender) -> value. Round-1 messages carry the
// sender's own preference under the empty chain.
using claim_message = std::map<chain, std::int64_t>;

inline term message_term( const claim_message& m )
{
    std::vector<term> kids;
    for ( const auto& [ c, v ] : m )
    {
        std::vector<term> seq;
        for ( int a : c )
            seq.push_back( atom( "a", a ) );
        kids.push_back( term{ "c", v, std::move( seq ) } );
    }
    return node( "msg", std::move( kids ) );
}

inline claim_message message_from_term( const term& t )
{
    claim_message m;
    for ( const auto& c : t.kids )
    {
        chain seq;
        for ( const auto& a : c.kids )
            seq.push_back( static_cast<int>( a.value ) );
        m[ seq ] = c.value;
    }
    return m;
}

// Everything an agent has heard, keyed by full chain. The compact form of the exponentially
// long nested messages: round k only ships the level-(k-1) entries.
class claim_tree
{
    std::map<chain, std::int64_t> _claims;

public:
    claim_tree() = default;

    static claim_tree initial( int self, std::int64_t preference )
    {
        claim_tree t;
        t._claims[ { self } ] = preference;
        return t;
    }

    [[nodiscard]] const std::map<chain, std::int64_t>& claims() const { return _claims; }

    [[nodiscard]] std::optional<std::int64_t> get( const chain& c ) const
    {
        auto it = _claims.find( c );
        if ( it == _claims.end() )
            return std::nullopt;
        return it->second;
    }

    // What `self` relays in `round` (1-based).
    [[nodiscard]] claim_message relay( int self, std::size_t round ) const
    {
        claim_message m;
        if ( round == 1 )
        {
            if ( auto v = get( { self } ) )
                m[ {} ] = *v;
            return m;
        }
        for ( const auto& [ c, v ] : _claims )
            if ( c.size() == round - 1 && !has_agent( c, self ) )
                m[ c ] = v;
        return m;
    }

    // Store a message from `sender`; chains that would repeat the sender are malformed and dropped.
    void absorb( int sender, const claim_message& m )
    {
        for ( const auto& [ c, v ] : m )
        {
            if ( has_agent( c, sender ) )
                continue;
            chain full = c;
            full.push_back( sender );
            _claims[ full ] = v;
        }
    }

    [[nodiscard]] bool any( std::int64_t value ) const
    {
        return std::any_of( _claims.begin(), _claims.end(), [ value ]( const auto& kv ) { return kv.second == value; } );
    }

    [[nodiscard]] term to_term() const
    {
        std::vector<term> kids;
        for ( const auto& [ c, v ] : _claims )
        {
            std::vector<term> seq;
            for ( int a : c )
                seq.push_back( atom( "a", a ) );
            kids.push_back( term{ "c", v, std::move( seq ) } );
        }
        return node( "eig", std::move( kids ) );
    }

    static claim_tree from_term( const term& t )
    {
        claim_tree out;
        for ( const auto& c : t.kids )
        {
            chain seq;
            for ( const auto& a : c.kids )
                seq.push_back( static_cast<int>( a.value ) );
            out._claims[ seq ] = c.value;
        }
        return out;
    }

    // The uncompressed nested sentences.
    [[nodiscard]] std::set<std::string> expand() const
    {
        std::set<std::string> out;
        for ( const auto& [ c, v ] : _claims )
        {
            std::string s;
            for ( std::size_t k = c.size(); k-- > 1; )
                s += std::to_string( c[ k ] ) + " said at round " + std::to_string( k + 1 ) + " that ";
            s += std::to_string( c.front() ) + " said at round 1 that its initial preference was " + value_name( v );
            out.insert( std::move( s ) );
        }
        return out;
    }
};

enum class decision_rule
{
    any_attack,     // attack iff some claim reports an initial attack preference
    always_retreat, // trivial protocol, excluded by validity
};

// A full-information agreement protocol that decides at the end of round `rounds`.
struct agreement_protocol
{
    std::string name;
    std::size_t n = 0;
    std::size_t t = 0;
    std::size_t rounds = 0;
    decision_rule rule = decision_rule::any_attack;

    [[nodiscard]] joint_protocol joint() const;
};

inline agreement_protocol eig_protocol( std::size_t n, std::size_t t, decision_rule rule = decision_rule::any_attack )
{
    failure_model{ failure_kind::crash, n, t }.validate();
    return { rule == decision_rule::any_attack ? "eig" : "always-retreat", n, t, t + 1, rule };
}

// Local state layout: round, id, pref, crashed, eig(...), and decision(value, round) once decided.
namespace detail
{

inline std::int64_t field( const term& t, const char* name )
{
    const term* c = t.child( name );
    return c ? c->value : 0;
}

inline term agent_state( int id, std::int64_t preference )
{
    return with_round( "agent", 0, { atom( "id", id ), atom( "pref", preference ), atom( "crashed", 0 ), claim_tree::initial( id, preference ).to_term() } );
}

inline std::int64_t decide( const claim_tree& tree, decision_rule rule )
{
    if ( rule == decision_rule::always_retreat )
        return retreat;
    return tree.any( attack ) ? attack : retreat;
}

} // namespace detail

inline joint_protocol agreement_protocol::joint() const
{
    joint_protocol jp;
    jp.name = name;
    for ( std::size_t i = 1; i <= n; ++i )
    {
        const int self = static_cast<int>( i );
        const std::size_t last = rounds;
        const auto r = rule;
        jp.agents.push_back( [ self, last, r ]( const term& l ) -> std::optional<action> {
            if ( detail::field( l, "id" ) != self )
                return std::nullopt;
            if ( detail::field( l, "crashed" ) )
                return action::noop();
            const auto round = static_cast<std::size_t>( round_of( l ) ) + 1;
            if ( round > last )
                return action::noop();
            const auto tree = claim_tree::from_term( *l.child( "eig" ) );
            const std::int64_t decide_with = round == last ? static_cast<std::int64_t>( r ) + 1 : 0;
            return action{ "send", node( "send", { message_term( tree.relay( self, round ) ), atom( "decide", decide_with ) } ) };
        } );
    }
    return jp;
}

struct decision
{
    std::int64_t value = retreat;
    std::int64_t round = 0;

    friend bool operator==( const decision&, const decision& ) = default;
};

inline std::optional<decision> decision_of( const term& local )
{
    const term* d = local.child( "decision" );
    if ( !d )
        return std::nullopt;
    return decision{ d->child( "value" )->value, d->child( "round" )->value };
}

// ---------------------------------------------------------------------------------------
// Adversary

inline std::vector<std::vector<int>> subsets_of( const std::vector<int>& items )
{
    std::vector<std::vector<int>> out;
    for ( std::size_t mask = 0; mask < ( std::size_t{ 1 } << items.size() ); ++mask )
    {
        std::vector<int> s;
        for ( std::size_t i = 0; i < items.size(); ++i )
            if ( ( mask >> i ) & 1U )
                s.push_back( items[ i ] );
        out.push_back( std::move( s ) );
    }
    return out;
}

inline std::vector<int> others( std::size_t n, int self )
{
    std::vector<int> out;
    for ( int j = 1; j <= static_cast<int>( n ); ++j )
        if ( j != self )
            out.push_back( j );
    return out;
}

// Chains of `length` distinct agents in 1..n avoiding `excluded`, in lexicographic order.
inline std::vector<chain> chains_avoiding( std::size_t n, std::size_t length, int excluded )
{
    std::vector<chain> out;
    chain cur;
    auto rec = [ & ]( auto&& self ) -> void {
        if ( cur.size() == length )
        {
            out.push_back( cur );
            return;
        }
        for ( int a = 1; a <= static_cast<int>( n ); ++a )
            if ( a != excluded && !has_agent( cur, a ) )
            {
                cur.push_back( a );
                self( self );
                cur.pop_back();
            }
    };
    rec( rec );
    return out;
}

// Every syntactically valid message a traitor can send in `round`, with at most `max_claims`
// defined entries. The empty message (silence) comes first.
inline std::vector<claim_message> forgeable_messages( std::size_t n, std::size_t round, int traitor, std::size_t max_claims )
{
    const auto slots = round == 1 ? std::vector<chain>{ chain{} } : chains_avoiding( n, round - 1, traitor );
    std::vector<claim_message> out{ claim_message{} };
    for ( const auto& c : slots )
    {
        const std::size_t before = out.size();
        for ( std::size_t i = 0; i < before; ++i )
        {
            if ( out[ i ].size() >= max_claims )
                continue;
            for ( std::int64_t v : { retreat, attack } )
            {
                auto m = out[ i ];
                m[ c ] = v;
                out.push_back( std::move( m ) );
            }
        }
    }
    return out;
}

struct adversary_options
{
    // Rounds after which the protocol is silent; forgeries beyond it would be discarded.
    std::size_t protocol_rounds = 0;
    std::size_t max_forged_claims = static_cast<std::size_t>( -1 );
};

// The adversary's possible moves in `round` (1-based) for the given faulty/crashed flags.
// Each move is an env action payload "adv(...)" with one entry per faulty agent.
inline std::vector<term> adversary_moves( const failure_model& fm, const adversary_options& opt, std::size_t round,
                                          const std::vector<std::int64_t>& faulty, const std::vector<std::int64_t>& crashed )
{
    std::vector<std::vector<term>> per_agent;
    for ( std::size_t i = 0; i < fm.n; ++i )
    {
        if ( !faulty[ i ] )
            continue;
        const int f = static_cast<int>( i + 1 );
        std::vector<term> choices;
        switch ( fm.kind )
        {
        case failure_kind::crash:
            if ( crashed[ i ] )
            {
                choices.push_back( term{ "down", f } );
                break;
            }
            choices.push_back( term{ "up", f } );
            for ( const auto& s : subsets_of( others( fm.n, f ) ) )
            {
                std::vector<term> to;
                for ( int j : s )
                    to.push_back( atom( "to", j ) );
                choices.push_back( term{ "crash", f, std::move( to ) } );
            }
            break;
        case failure_kind::omission:
            for ( const auto& s : subsets_of( others( fm.n, f ) ) )
            {
                std::vector<term> to;
                for ( int j : s )
                    to.push_back( atom( "to", j ) );
                choices.push_back( term{ "omit", f, std::move( to ) } );
            }
            break;
        case failure_kind::byzantine:
        {
            const auto msgs = round <= opt.protocol_rounds ? forgeable_messages( fm.n, round, f, opt.max_forged_claims )
                                                           : std::vector<claim_message>{ claim_message{} };
            std::vector<std::vector<term>> combos{ {} };
            for ( int j : others( fm.n, f ) )
            {
                std::vector<std::vector<term>> next;
                for ( const auto& c : combos )
                    for ( const auto& m : msgs )
                    {
                        auto extended = c;
                        if ( !m.empty() )
                            extended.push_back( term{ "to", j, { message_term( m ) } } );
                        next.push_back( std::move( extended ) );
                    }
                combos = std::move( next );
            }
            for ( auto& c : combos )
                choices.push_back( term{ "forge", f, std::move( c ) } );
            break;
        }
        }
        per_agent.push_back( std::move( choices ) );
    }
    std::vector<std::vector<term>> product{ {} };
    for ( const auto& choices : per_agent )
    {
        std::vector<std::vector<term>> next;
        for ( const auto& p : product )
            for ( const auto& c : choices )
            {
                auto q = p;
                q.push_back( c );
                next.push_back( std::move( q ) );
            }
        product = std::move( next );
    }
    std::vector<term> out;
    for ( auto& p : product )
        out.push_back( node( "adv", std::move( p ) ) );
    return out;
}

// A resolved choice of all adversary nondeterminism in one run.
struct adversary_schedule
{
    std::vector<std::int64_t> faulty; // per agent, 0/1
    std::vector<term> moves;          // one adv(...) per round

    friend auto operator<=>( const adversary_schedule&, const adversary_schedule& ) = default;
    friend bool operator==( const adversary_schedule&, const adversary_schedule& ) = default;

    [[nodiscard]] std::string key() const
    {
        std::string s = "faulty{";
        bool first = true;
        for ( std::size_t i = 0; i < faulty.size(); ++i )
            if ( faulty[ i ] )
            {
                s += ( first ? "" : "," ) + std::to_string( i + 1 );
                first = false;
            }
        s += "}";
        for ( const auto& m : moves )
            s += " " + m.str();
        return s;
    }
};

inline std::vector<std::vector<std::int64_t>> fault_assignments( std::size_t n, std::size_t t )
{
    std::vector<std::vector<std::int64_t>> out;
    for ( std::size_t mask = 0; mask < ( std::size_t{ 1 } << n ); ++mask )
    {
        if ( static_cast<std::size_t>( __builtin_popcountll( mask ) ) > t )
            continue;
        std::vector<std::int64_t> f( n );
        for ( std::size_t i = 0; i < n; ++i )
            f[ i ] = ( mask >> i ) & 1U;
        out.push_back( std::move( f ) );
    }
    std::sort( out.begin(), out.end(), []( const auto& a, const auto& b ) {
        const auto ca = std::count( a.begin(), a.end(), 1 );
        const auto cb = std::count( b.begin(), b.end(), 1 );
        return ca != cb ? ca < cb : a > b;
    } );
    return out;
}

inline void apply_crash_flags( const term& move, std::vector<std::int64_t>& crashed )
{
    for ( const auto& m : move.kids )
        if ( m.label == "crash" )
            crashed[ static_cast<std::size_t>( m.value - 1 ) ] = 1;
}

inline std::vector<adversary_schedule> enumerate_schedules( const failure_model& fm, std::size_t rounds, const adversary_options& opt,
                                                            std::size_t budget = 1'000'000 )
{
    fm.validate();
    if ( rounds < 1 )
        throw std::invalid_argument( "rounds must be at least 1" );
    std::vector<adversary_schedule> out;
    for ( const auto& faulty : fault_assignments( fm.n, fm.t ) )
    {
        struct partial
        {
            std::vector<term> moves;
            std::vector<std::int64_t> crashed;
        };
        std::vector<partial> layer{ { {}, std::vector<std::int64_t>( fm.n, 0 ) } };
        for ( std::size_t r = 1; r <= rounds; ++r )
        {
            std::vector<partial> next;
            for ( const auto& p : layer )
                for ( auto& mv : adversary_moves( fm, opt, r, faulty, p.crashed ) )
                {
                    if ( out.size() + next.size() >= budget )
                        throw resource_error( "schedule budget " + std::to_string( budget ) + " exceeded", out.size() + next.size() );
                    partial q = p;
                    apply_crash_flags( mv, q.crashed );
                    q.moves.push_back( std::move( mv ) );
                    next.push_back( std::move( q ) );
                }
            layer = std::move( next );
        }
        for ( auto& p : layer )
            out.push_back( { faulty, std::move( p.moves ) } );
    }
    return out;
}

// ---------------------------------------------------------------------------------------
// Context

inline std::vector<std::int64_t> flags( const term& env, const char* name )
{
    std::vector<std::int64_t> out;
    for ( const auto& k : env.child( name )->kids )
        out.push_back( k.value );
    return out;
}

inline term flag_node( const char* name, const char* item, const std::vector<std::int64_t>& values )
{
    std::vector<term> kids;
    for ( auto v : values )
        kids.push_back( atom( item, v ) );
    return node( name, std::move( kids ) );
}

inline global_state initial_state( const std::vector<std::int64_t>& prefs, const std::vector<std::int64_t>& faulty )
{
    global_state g;
    g.env = with_round( "env", 0,
                        { flag_node( "prefs", "p", prefs ), flag_node( "faulty", "f", faulty ),
                          flag_node( "crashed", "c", std::vector<std::int64_t>( prefs.size(), 0 ) ), node( "log", {} ) } );
    for ( std::size_t i = 0; i < prefs.size(); ++i )
        g.locals.push_back( detail::agent_state( static_cast<int>( i + 1 ), prefs[ i ] ) );
    return g;
}

inline std::vector<std::vector<std::int64_t>> preference_vectors( std::size_t n )
{
    std::vector<std::vector<std::int64_t>> out;
    for ( std::size_t mask = 0; mask < ( std::size_t{ 1 } << n ); ++mask )
    {
        std::vector<std::int64_t> p( n );
        for ( std::size_t i = 0; i < n; ++i )
            p[ i ] = ( mask >> i ) & 1U;
        out.push_back( std::move( p ) );
    }
    return out;
}

inline global_state agreement_transition( const failure_model& fm, const joint_action& ja, const global_state& g )
{
    const std::size_t n = fm.n;
    global_state next = g;
    const term& adv = ja.env.payload;
    auto crashed = flags( g.env, "crashed" );
    auto crashing = crashed;
    apply_crash_flags( adv, crashing );

    // outbox[i][j]: message from agent i+1 to agent j+1, if any
    std::vector<std::vector<std::optional<claim_message>>> outbox( n, std::vector<std::optional<claim_message>>( n ) );
    for ( std::size_t i = 0; i < n; ++i )
    {
        const action& a = ja.agents[ i ];
        if ( a.is_noop() || crashed[ i ] )
            continue;
        const auto m = message_from_term( *a.payload.child( "msg" ) );
        for ( std::size_t j = 0; j < n; ++j )
            if ( j != i )
                outbox[ i ][ j ] = m;
    }
    for ( const auto& b : adv.kids )
    {
        const auto f = static_cast<std::size_t>( b.value - 1 );
        if ( b.label == "crash" || b.label == "omit" )
        {
            std::vector<bool> keep( n, false );
            for ( const auto& to : b.kids )
                keep[ static_cast<std::size_t>( to.value - 1 ) ] = true;
            for ( std::size_t j = 0; j < n; ++j )
                if ( !keep[ j ] )
                    outbox[ f ][ j ].reset();
        }
        else if ( b.label == "forge" )
        {
            for ( std::size_t j = 0; j < n; ++j )
                outbox[ f ][ j ].reset();
            for ( const auto& to : b.kids )
                outbox[ f ][ static_cast<std::size_t>( to.value - 1 ) ] = message_from_term( to.kids.front() );
        }
    }

    const auto round = round_of( g.env ) + 1;
    for ( std::size_t j = 0; j < n; ++j )
    {
        term& local = next.locals[ j ];
        if ( crashing[ j ] )
        {
            local.child( "crashed" )->value = 1;
            continue;
        }
        auto tree = claim_tree::from_term( *local.child( "eig" ) );
        for ( std::size_t i = 0; i < n; ++i )
            if ( outbox[ i ][ j ] )
                tree.absorb( static_cast<int>( i + 1 ), *outbox[ i ][ j ] );
        *local.child( "eig" ) = tree.to_term();
        const action& a = ja.agents[ j ];
        if ( !a.is_noop() && !local.child( "decision" ) )
            if ( const auto rule = a.payload.child( "decide" )->value; rule != 0 )
                local.kids.push_back( node( "decision", { atom( "value", detail::decide( tree, static_cast<decision_rule>( rule - 1 ) ) ),
                                                          atom( "round", round ) } ) );
    }
    *next.env.child( "crashed" ) = flag_node( "crashed", "c", crashing );
    next.env.child( "log" )->kids.push_back( adv );
    return next;
}

struct agreement_options
{
    std::size_t budget = 1'000'000;
    unsigned workers = 1;
    std::size_t max_forged_claims = static_cast<std::size_t>( -1 );
};

// Initial states: every preference vector x every fault assignment (at most t faulty).
// The environment plays the adversary round by round and logs its moves.
inline context agreement_context( const failure_model& fm, std::size_t protocol_rounds, const agreement_options& opts = {} )
{
    fm.validate();
    context ctx;
    ctx.name = "agreement-" + to_string( fm.kind );
    for ( const auto& faulty : fault_assignments( fm.n, fm.t ) )
        for ( const auto& prefs : preference_vectors( fm.n ) )
            ctx.initial_states.push_back( initial_state( prefs, faulty ) );
    const adversary_options adv{ protocol_rounds, opts.max_forged_claims };
    ctx.environment = [ fm, adv ]( const term& env ) {
        std::vector<action> out;
        const auto round = static_cast<std::size_t>( round_of( env ) ) + 1;
        for ( auto& mv : adversary_moves( fm, adv, round, flags( env, "faulty" ), flags( env, "crashed" ) ) )
            out.push_back( action{ "adversary", std::move( mv ) } );
        return out;
    };
    ctx.transition = [ fm ]( const joint_action& ja, const global_state& g ) { return agreement_transition( fm, ja, g ); };
    ctx.receives = []( const global_state& before, const global_state& after, agent_id a ) {
        return before.locals[ a.slot() ].child( "eig" )->kids.size() != after.locals[ a.slot() ].child( "eig" )->kids.size();
    };
    return ctx;
}

inline system run_agreement( const agreement_protocol& ap, const failure_model& fm, std::size_t horizon, const agreement_options& opts = {} )
{
    fm.validate();
    if ( ap.n != fm.n )
        throw config_error( "protocol is for n=" + std::to_string( ap.n ) + " but the failure model has n=" + std::to_string( fm.n ) );
    if ( horizon < fm.t + 1 )
        throw config_error( "horizon " + std::to_string( horizon ) + " is shorter than t+1 = " + std::to_string( fm.t + 1 ) );
    return generate_system( agreement_context( fm, ap.rounds, opts ), ap.joint(), horizon, { opts.budget, opts.workers } );
}

inline std::vector<std::int64_t> preferences_of( const run& r ) { return flags( r.front().env, "prefs" ); }

inline adversary_schedule schedule_of( const run& r )
{
    return { flags( r.front().env, "faulty" ), r.back().env.child( "log" )->kids };
}

// Rebuild one run from its preferences and schedule, stepping the protocol directly.
inline run replay( const agreement_protocol& ap, const failure_model& fm, const std::vector<std::int64_t>& prefs,
                   const adversary_schedule& schedule )
{
    if ( prefs.size() != fm.n || schedule.faulty.size() != fm.n )
        throw config_error( "witness arity does not match n=" + std::to_string( fm.n ) );
    context ctx = agreement_context( fm, ap.rounds );
    const auto jp = ap.joint();
    run r{ initial_state( prefs, schedule.faulty ) };
    for ( const auto& mv : schedule.moves )
    {
        joint_action ja{ action{ "adversary", mv }, {} };
        for ( std::size_t i = 0; i < fm.n; ++i )
        {
            auto a = jp.agents[ i ]( r.back().locals[ i ] );
            if ( !a )
                throw config_error( "protocol undefined during replay" );
            ja.agents.push_back( std::move( *a ) );
        }
        r.push_back( step( ctx, r.back(), ja ) );
    }
    return r;
}

// ---------------------------------------------------------------------------------------
// Checkers

struct check_report
{
    std::string property;
    std::size_t runs_checked = 0;
    std::vector<std::size_t> counterexamples; // run indices
    std::vector<std::size_t> liveness;        // runs with an undecided nonfaulty agent at the horizon
    std::set<std::int64_t> decision_rounds;

    [[nodiscard]] bool clean() const { return counterexamples.empty() && liveness.empty(); }
};

namespace detail
{

struct run_outcome
{
    std::vector<std::int64_t> faulty;
    std::vector<std::optional<decision>> decisions; // nonfaulty agents only; faulty entries unset
    bool undecided = false;
};

inline run_outcome outcome( const run& r )
{
    run_outcome o;
    o.faulty = flags( r.front().env, "faulty" );
    for ( std::size_t i = 0; i < o.faulty.size(); ++i )
    {
        o.decisions.push_back( o.faulty[ i ] ? std::nullopt : decision_of( r.back().locals[ i ] ) );
        if ( !o.faulty[ i ] && !o.decisions.back() )
            o.undecided = true;
    }
    return o;
}

} // namespace detail

inline check_report check_agreement( const system& sys )
{
    check_report rep;
    rep.property = "agreement";
    for ( std::size_t ri = 0; ri < sys.runs().size(); ++ri )
    {
        const auto o = detail::outcome( sys.runs()[ ri ] );
        ++rep.runs_checked;
        if ( o.undecided )
            rep.liveness.push_back( ri );
        std::set<std::int64_t> values;
        for ( const auto& d : o.decisions )
            if ( d )
            {
                values.insert( d->value );
                rep.decision_rounds.insert( d->round );
            }
        if ( values.size() > 1 )
            rep.counterexamples.push_back( ri );
    }
    return rep;
}

inline check_report check_validity( const system& sys )
{
    check_report rep;
    rep.property = "validity";
    for ( std::size_t ri = 0; ri < sys.runs().size(); ++ri )
    {
        const auto& r = sys.runs()[ ri ];
        const auto o = detail::outcome( r );
        if ( std::count( o.faulty.begin(), o.faulty.end(), 1 ) != 0 )
            continue;
        const auto prefs = preferences_of( r );
        if ( std::adjacent_find( prefs.begin(), prefs.end(), std::not_equal_to<>() ) != prefs.end() )
            continue;
        ++rep.runs_checked;
        if ( o.undecided )
            rep.liveness.push_back( ri );
        for ( const auto& d : o.decisions )
            if ( d && d->value != prefs.front() )
            {
                rep.counterexamples.push_back( ri );
                break;
            }
    }
    return rep;
}

inline check_report check_simultaneity( const system& sys )
{
    check_report rep;
    rep.property = "simultaneity";
    for ( std::size_t ri = 0; ri < sys.runs().size(); ++ri )
    {
        const auto o = detail::outcome( sys.runs()[ ri ] );
        ++rep.runs_checked;
        if ( o.undecided )
            rep.liveness.push_back( ri );
        std::set<std::int64_t> rounds;
        for ( const auto& d : o.decisions )
            if ( d )
                rounds.insert( d->round );
        rep.decision_rounds.insert( rounds.begin(), rounds.end() );
        if ( rounds.size() > 1 )
            rep.counterexamples.push_back( ri );
    }
    return rep;
}

// ---------------------------------------------------------------------------------------
// Common-knowledge lower bound

// "some agent's initial preference was v"
inline event some_preference( const system& sys, std::int64_t v )
{
    return event::from( sys, "some-" + value_name( v ), [ v ]( const system& s, point p ) { return s.state_at( p ).env.child( "prefs" )->contains( "p", v ); } );
}

inline event some_attack_preference( const system& sys ) { return some_preference( sys, attack ); }

inline event faulty_set_is( const system& sys, const std::vector<std::int64_t>& faulty )
{
    return event::from( sys, "faulty-set", [ faulty ]( const system& s, point p ) { return flags( s.state_at( p ).env, "faulty" ) == faulty; } );
}

struct schedule_timing
{
    std::string schedule;
    std::size_t chips = 0;
    // Latest, over preference vectors, of the first time C_N(some attack) or C_N(some retreat) holds;
    // -1 if some run never gets there.
    int earliest_decision_time = -1;
};

struct lower_bound_report
{
    std::size_t n = 0;
    std::size_t t = 0;
    std::size_t runs = 0;
    std::size_t points = 0;
    std::vector<bool> failure_free_ck; // C_N(some attack) at each time of the all-attack failure-free run
    int first_ck_time = -1;
    std::vector<schedule_timing> schedules;
    int latest_decision_time = -1;
    // All-chips-in-round-1 silent crash: each nonfaulty agent knows the faulty set at time 1.
    std::string silent_schedule;
    bool silent_faults_known_after_round_1 = false;
    int silent_earliest_decision_time = -1;
};

inline lower_bound_report lower_bound_experiment( std::size_t n, std::size_t t, const agreement_options& opts = {} )
{
    if ( n > 4 || t > 1 )
        throw config_error( "lower-bound experiment is limited to n <= 4, t <= 1" );
    const failure_model fm{ failure_kind::crash, n, t };
    fm.validate();
    const auto sys = run_agreement( eig_protocol( n, t ), fm, t + 1, opts );
    const auto ck = nonfaulty_common_knowledge( sys, some_preference( sys, attack ) ).points;
    const auto decidable = ck | nonfaulty_common_knowledge( sys, some_preference( sys, retreat ) ).points;

    lower_bound_report rep;
    rep.n = n;
    rep.t = t;
    rep.runs = sys.runs().size();
    rep.points = sys.point_count();

    const std::vector<std::int64_t> no_faults( n, 0 );
    const std::vector<std::int64_t> all_attack( n, attack );
    std::map<std::string, schedule_timing> timings;
    std::optional<std::size_t> failure_free;
    for ( std::size_t ri = 0; ri < sys.runs().size(); ++ri )
    {
        const auto& r = sys.runs()[ ri ];
        const auto sched = schedule_of( r );
        if ( sched.faulty == no_faults && preferences_of( r ) == all_attack )
            failure_free = ri;
        int first = -1;
        for ( std::size_t m = 0; m <= sys.horizon() && first < 0; ++m )
            if ( decidable.test( sys.index_of( { ri, m } ) ) )
                first = static_cast<int>( m );
        auto [ it, fresh ] = timings.try_emplace( sched.key() );
        auto& st = it->second;
        if ( fresh )
        {
            st.schedule = sched.key();
            st.chips = static_cast<std::size_t>( std::count( sched.faulty.begin(), sched.faulty.end(), 1 ) );
            st.earliest_decision_time = first;
        }
        else if ( st.earliest_decision_time >= 0 )
            st.earliest_decision_time = first < 0 ? -1 : std::max( st.earliest_decision_time, first );
    }
    if ( failure_free )
        for ( std::size_t m = 0; m <= sys.horizon(); ++m )
        {
            const bool holds = ck.test( sys.index_of( { *failure_free, m } ) );
            rep.failure_free_ck.push_back( holds );
            if ( holds && rep.first_ck_time < 0 )
                rep.first_ck_time = static_cast<int>( m );
        }
    for ( auto& [ key, st ] : timings )
    {
        rep.latest_decision_time = std::max( rep.latest_decision_time, st.earliest_decision_time );
        rep.schedules.push_back( st );
    }

    if ( t >= 1 )
    {
        // Agent 1 crashes in round 1 without sending anything.
        std::vector<std::int64_t> faulty( n, 0 );
        faulty[ 0 ] = 1;
        adversary_schedule silent{ faulty, { node( "adv", { term{ "crash", 1 } } ) } };
        for ( std::size_t r = 2; r <= t + 1; ++r )
            silent.moves.push_back( node( "adv", { term{ "down", 1 } } ) );
        rep.silent_schedule = silent.key();
        if ( auto it = timings.find( silent.key() ); it != timings.end() )
            rep.silent_earliest_decision_time = it->second.earliest_decision_time;

        const auto known = faulty_set_is( sys, faulty );
        std::vector<point_set> k;
        for ( std::size_t a = 2; a <= n; ++a )
            k.push_back( knows( sys, agent_id{ a }, known ).points );
        bool all_known = true;
        bool seen = false;
        for ( std::size_t ri = 0; ri < sys.runs().size(); ++ri )
        {
            if ( schedule_of( sys.runs()[ ri ] ) != silent )
                continue;
            seen = true;
            const auto idx = sys.index_of( { ri, 1 } );
            for ( const auto& ka : k )
                all_known = all_known && ka.test( idx );
        }
        rep.silent_faults_known_after_round_1 = seen && all_known;
    }
    return rep;
}

} // namespace runsys::byz
