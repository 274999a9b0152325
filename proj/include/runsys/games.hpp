#pragma once

#include "engine.hpp"
#include "epistemics.hpp"
#include "errors.hpp"
#include "system.hpp"

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace runsys::games
{

// ---------------------------------------------------------------------------------------
// Normal form

struct normal_form_game
{
    std::vector<std::string> rows; // player 1
    std::vector<std::string> cols; // player 2
    std::map<std::pair<std::string, std::string>, std::pair<int, int>> table;

    void validate() const
    {
        for ( const auto& r : rows )
            for ( const auto& c : cols )
                if ( !table.count( { r, c } ) )
                    throw model_error( "payoff table has no entry for (" + r + "," + c + ")" );
        if ( table.size() != rows.size() * cols.size() )
            throw model_error( "payoff table has entries outside the strategy labels" );
    }

    [[nodiscard]] std::pair<int, int> payoff( const std::string& row, const std::string& col ) const
    {
        auto it = table.find( { row, col } );
        if ( it == table.end() )
            throw std::domain_error( "unknown profile (" + row + "," + col + ")" );
        return it->second;
    }
};

inline normal_form_game figure1_normal_form()
{
    normal_form_game g;
    g.rows = { "aa", "ad", "da", "dd" };
    g.cols = { "A", "D" };
    g.table = {
        { { "aa", "A" }, { 3, 3 } }, { { "aa", "D" }, { 4, 2 } }, { { "ad", "A" }, { 3, 2 } }, { { "ad", "D" }, { 4, 2 } },
        { { "da", "A" }, { 1, 2 } }, { { "da", "D" }, { 1, 3 } }, { { "dd", "A" }, { 1, 2 } }, { { "dd", "D" }, { 1, 3 } },
    };
    return g;
}

// ---------------------------------------------------------------------------------------
// Extensive form

inline constexpr int nature = 0;
inline constexpr int terminal = -1;

struct game_node
{
    std::string id;
    int owner = terminal; // 0 nature, 1.. players, -1 terminal
    std::string info_set; // decision nodes only
    std::vector<std::pair<std::string, std::string>> moves; // action -> child id, in order
    std::map<std::string, double> chance;                   // nature nodes: action -> probability
    std::vector<int> payoffs;                               // terminals only
};

using strategy = std::map<std::string, std::string>; // information set -> action

class game_tree
{
    std::size_t _players = 0;
    std::string _root;
    std::vector<game_node> _nodes;
    std::map<std::string, std::size_t> _index;

public:
    game_tree( std::size_t players, std::string root, std::vector<game_node> nodes )
            : _players{ players }, _root{ std::move( root ) }, _nodes{ std::move( nodes ) }
    {
        for ( std::size_t i = 0; i < _nodes.size(); ++i )
            if ( !_index.emplace( _nodes[ i ].id, i ).second )
                throw model_error( "duplicate node id '" + _nodes[ i ].id + "'" );
        validate();
    }

    [[nodiscard]] std::size_t players() const { return _players; }
    [[nodiscard]] const std::string& root() const { return _root; }
    [[nodiscard]] const std::vector<game_node>& nodes() const { return _nodes; }

    [[nodiscard]] const game_node& at( const std::string& id ) const
    {
        auto it = _index.find( id );
        if ( it == _index.end() )
            throw std::domain_error( "unknown node '" + id + "'" );
        return _nodes[ it->second ];
    }

    [[nodiscard]] bool has( const std::string& id ) const { return _index.count( id ) != 0; }

    // Information sets of one player, label -> member node ids.
    [[nodiscard]] std::map<std::string, std::vector<std::string>> information_sets( int player ) const
    {
        std::map<std::string, std::vector<std::string>> out;
        for ( const auto& n : _nodes )
            if ( n.owner == player )
                out[ n.info_set ].push_back( n.id );
        return out;
    }

private:
    void validate() const
    {
        if ( !has( _root ) )
            throw model_error( "root '" + _root + "' is not a node" );
        std::map<std::string, int> parents;
        for ( const auto& n : _nodes )
        {
            if ( n.owner > static_cast<int>( _players ) || n.owner < terminal )
                throw model_error( "node '" + n.id + "' has owner " + std::to_string( n.owner ) );
            if ( n.owner == terminal )
            {
                if ( !n.moves.empty() )
                    throw model_error( "terminal '" + n.id + "' has moves" );
                if ( n.payoffs.size() != _players )
                    throw model_error( "terminal '" + n.id + "' needs " + std::to_string( _players ) + " payoffs" );
                continue;
            }
            if ( n.moves.empty() )
                throw model_error( "decision node '" + n.id + "' has no moves" );
            if ( n.owner != nature && n.info_set.empty() )
                throw model_error( "decision node '" + n.id + "' has no information set" );
            std::set<std::string> labels;
            for ( const auto& [ a, child ] : n.moves )
            {
                if ( !labels.insert( a ).second )
                    throw model_error( "node '" + n.id + "' repeats action '" + a + "'" );
                if ( !has( child ) )
                    throw model_error( "node '" + n.id + "' points at unknown node '" + child + "'" );
                ++parents[ child ];
            }
        }
        for ( const auto& n : _nodes )
        {
            const int p = parents.count( n.id ) ? parents.at( n.id ) : 0;
            if ( n.id == _root ? p != 0 : p != 1 )
                throw model_error( "node '" + n.id + "' breaks the tree shape" );
        }
        for ( int player = 1; player <= static_cast<int>( _players ); ++player )
            for ( const auto& [ label, members ] : information_sets( player ) )
            {
                auto actions = []( const game_node& n ) {
                    std::vector<std::string> a;
                    for ( const auto& m : n.moves )
                        a.push_back( m.first );
                    std::sort( a.begin(), a.end() );
                    return a;
                };
                const auto ref = actions( at( members.front() ) );
                for ( const auto& id : members )
                    if ( actions( at( id ) ) != ref )
                        throw model_error( "information set '" + label + "' mixes action sets" );
            }
        for ( const auto& n : _nodes )
            if ( n.owner == nature )
                for ( const auto& [ a, child ] : n.moves )
                    if ( n.chance.count( a ) == 0 )
                        throw model_error( "nature node '" + n.id + "' has no probability for '" + a + "'" );
    }
};

struct play_result
{
    std::string terminal;
    std::vector<int> payoffs;
    std::vector<std::string> path; // node ids from root to terminal
    std::vector<std::string> actions;
};

// Nature's moves come from `nature_choice` (node id -> action).
inline play_result simulate_play( const game_tree& t, const std::vector<strategy>& profile,
                                  const std::map<std::string, std::string>& nature_choice = {} )
{
    if ( profile.size() != t.players() )
        throw std::domain_error( "profile has " + std::to_string( profile.size() ) + " strategies for " + std::to_string( t.players() ) + " players" );
    play_result out;
    const game_node* cur = &t.at( t.root() );
    while ( cur->owner != terminal )
    {
        out.path.push_back( cur->id );
        std::string a;
        if ( cur->owner == nature )
        {
            auto it = nature_choice.find( cur->id );
            if ( it == nature_choice.end() )
                throw std::domain_error( "no nature choice for node '" + cur->id + "'" );
            a = it->second;
        }
        else
        {
            const auto& s = profile[ static_cast<std::size_t>( cur->owner - 1 ) ];
            auto it = s.find( cur->info_set );
            if ( it == s.end() )
                throw std::domain_error( "strategy of player " + std::to_string( cur->owner ) + " is undefined at '" + cur->info_set + "'" );
            a = it->second;
        }
        auto mv = std::find_if( cur->moves.begin(), cur->moves.end(), [ & ]( const auto& m ) { return m.first == a; } );
        if ( mv == cur->moves.end() )
            throw std::domain_error( "action '" + a + "' is not available at '" + cur->id + "'" );
        out.actions.push_back( a );
        cur = &t.at( mv->second );
    }
    out.path.push_back( cur->id );
    out.terminal = cur->id;
    out.payoffs = cur->payoffs;
    return out;
}

inline double expected_utility( const game_tree& t, const std::vector<strategy>& profile, int player )
{
    if ( player < 1 || player > static_cast<int>( t.players() ) )
        throw std::domain_error( "no player " + std::to_string( player ) );
    auto rec = [ & ]( auto&& self, const std::string& id ) -> double {
        const auto& n = t.at( id );
        if ( n.owner == terminal )
            return n.payoffs[ static_cast<std::size_t>( player - 1 ) ];
        if ( n.owner == nature )
        {
            double sum = 0;
            for ( const auto& [ a, child ] : n.moves )
                sum += n.chance.at( a ) * self( self, child );
            return sum;
        }
        const auto& s = profile.at( static_cast<std::size_t>( n.owner - 1 ) );
        auto it = s.find( n.info_set );
        if ( it == s.end() )
            throw std::domain_error( "strategy of player " + std::to_string( n.owner ) + " is undefined at '" + n.info_set + "'" );
        for ( const auto& [ a, child ] : n.moves )
            if ( a == it->second )
                return self( self, child );
        throw std::domain_error( "action '" + it->second + "' is not available at '" + id + "'" );
    };
    return rec( rec, t.root() );
}

// Player 1 moves, player 2 answers without seeing that move, then player 1 moves again
// without seeing player 2's answer. After d the game ends at player 2's move.
inline game_tree figure1_extensive_form()
{
    auto leaf = []( std::string id, int u1, int u2 ) { return game_node{ std::move( id ), terminal, "", {}, {}, { u1, u2 } }; };
    return game_tree( 2, "root",
                      {
                          { "root", 1, "P1-first", { { "a", "a" }, { "d", "d" } }, {}, {} },
                          { "a", 2, "P2", { { "A", "aA" }, { "D", "aD" } }, {}, {} },
                          { "d", 2, "P2", { { "A", "dA" }, { "D", "dD" } }, {}, {} },
                          { "aA", 1, "P1-second", { { "a", "aAa" }, { "d", "aAd" } }, {}, {} },
                          { "aD", 1, "P1-second", { { "a", "aDa" }, { "d", "aDd" } }, {}, {} },
                          leaf( "aAa", 3, 3 ),
                          leaf( "aAd", 3, 2 ),
                          leaf( "aDa", 4, 2 ),
                          leaf( "aDd", 4, 2 ),
                          leaf( "dA", 1, 2 ),
                          leaf( "dD", 1, 3 ),
                      } );
}

// "ad" -> first move a, second move d.
inline std::vector<strategy> figure1_profile( const std::string& p1, const std::string& p2 )
{
    if ( p1.size() != 2 || p2.size() != 1 )
        throw std::domain_error( "unknown profile (" + p1 + "," + p2 + ")" );
    return { { { "P1-first", p1.substr( 0, 1 ) }, { "P1-second", p1.substr( 1, 1 ) } }, { { "P2", p2 } } };
}

struct figure2_parameters
{
    double p_x1 = 0.5;
    int stop_x1 = 2;
    int stop_x2 = 2;
    int x3_left = 3;
    int x3_right = 0;
    int x4_left = 0;
    int x4_right = 4;
};

// One player; nature picks x1 or x2; S stops, B continues to x3/x4, which share the set X.
inline game_tree figure2_tree( const figure2_parameters& p = {} )
{
    auto leaf = []( std::string id, int u ) { return game_node{ std::move( id ), terminal, "", {}, {}, { u } }; };
    return game_tree( 1, "root",
                      {
                          { "root", nature, "", { { "x1", "x1" }, { "x2", "x2" } }, { { "x1", p.p_x1 }, { "x2", 1.0 - p.p_x1 } }, {} },
                          { "x1", 1, "x1", { { "S", "x1S" }, { "B", "x3" } }, {}, {} },
                          { "x2", 1, "x2", { { "S", "x2S" }, { "B", "x4" } }, {}, {} },
                          { "x3", 1, "X", { { "L", "x3L" }, { "R", "x3R" } }, {}, {} },
                          { "x4", 1, "X", { { "L", "x4L" }, { "R", "x4R" } }, {}, {} },
                          leaf( "x1S", p.stop_x1 ),
                          leaf( "x2S", p.stop_x2 ),
                          leaf( "x3L", p.x3_left ),
                          leaf( "x3R", p.x3_right ),
                          leaf( "x4L", p.x4_left ),
                          leaf( "x4R", p.x4_right ),
                      } );
}

inline strategy figure2_f() { return { { "x1", "S" }, { "x2", "B" }, { "X", "R" } }; }
inline strategy figure2_f_prime() { return { { "x1", "B" }, { "x2", "S" }, { "X", "L" } }; }

// ---------------------------------------------------------------------------------------
// State-space form

struct state_space_model
{
    std::vector<std::string> states;
    std::vector<std::pair<std::string, std::string>> profile; // per state
    std::vector<std::vector<std::vector<std::string>>> partitions; // per player: cells

    [[nodiscard]] std::size_t index_of( const std::string& w ) const
    {
        auto it = std::find( states.begin(), states.end(), w );
        if ( it == states.end() )
            throw model_error( "unknown state '" + w + "'" );
        return static_cast<std::size_t>( it - states.begin() );
    }

    [[nodiscard]] const std::string& strategy_of( std::size_t player, std::size_t state ) const
    {
        return player == 0 ? profile[ state ].first : profile[ state ].second;
    }

    void validate() const
    {
        if ( states.empty() || profile.size() != states.size() )
            throw model_error( "every state needs exactly one strategy profile" );
        if ( partitions.size() != 2 )
            throw model_error( "need one partition per player" );
        for ( std::size_t p = 0; p < 2; ++p )
        {
            std::vector<int> seen( states.size(), 0 );
            for ( const auto& cell : partitions[ p ] )
            {
                if ( cell.empty() )
                    throw model_error( "player " + std::to_string( p + 1 ) + " has an empty cell" );
                std::string name = "{";
                for ( std::size_t k = 0; k < cell.size(); ++k )
                    name += ( k ? "," : "" ) + cell[ k ];
                name += "}";
                const auto& s = strategy_of( p, index_of( cell.front() ) );
                for ( const auto& w : cell )
                {
                    ++seen[ index_of( w ) ];
                    if ( strategy_of( p, index_of( w ) ) != s )
                        throw model_error( "player " + std::to_string( p + 1 ) + " strategy varies within cell " + name );
                }
            }
            for ( std::size_t w = 0; w < states.size(); ++w )
                if ( seen[ w ] != 1 )
                    throw model_error( "state '" + states[ w ] + "' is covered " + std::to_string( seen[ w ] ) + " times by player "
                                       + std::to_string( p + 1 ) + "'s partition" );
        }
    }

    [[nodiscard]] std::size_t cell_of( std::size_t player, std::size_t state ) const
    {
        for ( std::size_t c = 0; c < partitions[ player ].size(); ++c )
            for ( const auto& w : partitions[ player ][ c ] )
                if ( index_of( w ) == state )
                    return c;
        throw model_error( "state '" + states[ state ] + "' is in no cell" );
    }
};

inline state_space_model figure3_model()
{
    state_space_model m;
    m.states = { "w1", "w2", "w3", "w4", "w5" };
    m.profile = { { "aa", "A" }, { "aa", "D" }, { "ad", "A" }, { "ad", "D" }, { "aa", "A" } };
    m.partitions = {
        { { "w1", "w2" }, { "w3", "w4" }, { "w5" } },
        { { "w1", "w3" }, { "w2", "w4" }, { "w5" } },
    };
    return m;
}

// One run per state. Time 0: each player holds (strategy, cell); the environment holds the
// state and profile. Time 1 adds the play generated by the profile on `tree`.
inline system build_state_space_system( const state_space_model& m, const game_tree& tree = figure1_extensive_form(),
                                        const std::function<std::vector<strategy>( const std::string&, const std::string& )>& to_profile = figure1_profile )
{
    m.validate();
    std::vector<run> runs;
    for ( std::size_t w = 0; w < m.states.size(); ++w )
    {
        const auto& [ s1, s2 ] = m.profile[ w ];
        const auto play = simulate_play( tree, to_profile( s1, s2 ) );
        std::vector<term> locals;
        for ( std::size_t p = 0; p < 2; ++p )
        {
            std::vector<term> cell;
            for ( const auto& x : m.partitions[ p ][ m.cell_of( p, w ) ] )
                cell.push_back( term{ "state:" + x } );
            locals.push_back( with_round( "player", 0, { term{ "strategy:" + m.strategy_of( p, w ) }, node( "cell", std::move( cell ) ) } ) );
        }
        global_state g0{ with_round( "env", 0, { term{ "state:" + m.states[ w ] }, node( "profile", { term{ "s1:" + s1 }, term{ "s2:" + s2 } } ) } ),
                         locals };
        global_state g1 = g0;
        std::vector<term> path;
        for ( const auto& a : play.actions )
            path.push_back( term{ "move:" + a } );
        g1.env.kids.push_back( node( "play", std::move( path ) ) );
        g1.env.kids.push_back( node( "payoff", { atom( "u1", play.payoffs[ 0 ] ), atom( "u2", play.payoffs[ 1 ] ) } ) );
        g1.env.kids.front().value = 1;
        for ( auto& l : g1.locals )
            l.kids.front().value = 1;
        runs.push_back( { g0, g1 } );
    }
    return system( std::move( runs ) );
}

inline event profile_is( const system& sys, const std::string& s1, const std::string& s2 )
{
    return event::from( sys, "profile=(" + s1 + "," + s2 + ")", [ & ]( const system& s, point p ) {
        const term* prof = s.state_at( p ).env.child( "profile" );
        return prof && prof->child( "s1:" + s1 ) && prof->child( "s2:" + s2 );
    } );
}

inline event state_is( const system& sys, const std::string& w )
{
    return event::from( sys, "state=" + w, [ & ]( const system& s, point p ) { return s.state_at( p ).env.child( "state:" + w ) != nullptr; } );
}

// Run index of state w in a state-space system.
inline std::size_t run_of_state( const system& sys, const std::string& w )
{
    for ( std::size_t r = 0; r < sys.runs().size(); ++r )
        if ( sys.runs()[ r ].front().env.child( "state:" + w ) )
            return r;
    throw std::domain_error( "no run for state '" + w + "'" );
}

// ---------------------------------------------------------------------------------------
// Systems from a one-player tree with imperfect recall

struct named_strategy
{
    std::string name;
    strategy moves;
};

// On reaching `at`, the player adopts `to` and acts by it from that node on.
struct strategy_switch
{
    std::string at;
    named_strategy to;
};

struct recall_options
{
    std::vector<strategy_switch> switches;
    bool switch_aware = false;
};

// Local state: round, current information set (or "-" when not on move), own past actions, and
// the current strategy label when switch-aware. The environment records the current node.
inline system imperfect_recall_system( const game_tree& t, const named_strategy& base, const recall_options& opt = {} )
{
    if ( t.players() != 1 )
        throw model_error( "imperfect-recall systems take a one-player tree" );

    struct trace
    {
        std::vector<std::string> nodes;
        std::vector<term> locals;
        std::vector<std::string> acted; // action taken at each node ("" at nature/terminal)
    };
    std::vector<trace> plays;
    std::set<std::string> visited;

    auto local = [ & ]( std::size_t m, const game_node& n, const std::vector<std::string>& history, const std::string& label ) {
        std::vector<term> hist;
        for ( const auto& a : history )
            hist.push_back( term{ "did:" + a } );
        std::vector<term> kids{ term{ "info:" + ( n.owner == 1 ? n.info_set : std::string( "-" ) ) }, node( "history", std::move( hist ) ) };
        if ( opt.switch_aware )
            kids.push_back( term{ "strategy:" + label } );
        return with_round( "player", static_cast<std::int64_t>( m ), std::move( kids ) );
    };

    auto rec = [ & ]( auto&& self, const std::string& id, trace tr, named_strategy cur, std::vector<std::string> history ) -> void {
        const auto& n = t.at( id );
        visited.insert( id );
        tr.nodes.push_back( id );
        tr.locals.push_back( local( tr.nodes.size() - 1, n, history, cur.name ) );
        if ( n.owner == terminal )
        {
            tr.acted.emplace_back();
            plays.push_back( std::move( tr ) );
            return;
        }
        if ( n.owner == nature )
        {
            tr.acted.emplace_back();
            for ( const auto& [ a, child ] : n.moves )
                self( self, child, tr, cur, history );
            return;
        }
        for ( const auto& sw : opt.switches )
            if ( sw.at == id )
                cur = sw.to;
        auto it = cur.moves.find( n.info_set );
        if ( it == cur.moves.end() )
            throw std::domain_error( "strategy '" + cur.name + "' is undefined at '" + n.info_set + "'" );
        auto mv = std::find_if( n.moves.begin(), n.moves.end(), [ & ]( const auto& m ) { return m.first == it->second; } );
        if ( mv == n.moves.end() )
            throw std::domain_error( "action '" + it->second + "' is not available at '" + id + "'" );
        tr.acted.push_back( it->second );
        history.push_back( it->second );
        self( self, mv->second, std::move( tr ), std::move( cur ), std::move( history ) );
    };
    rec( rec, t.root(), {}, base, {} );

    for ( const auto& sw : opt.switches )
    {
        if ( !t.has( sw.at ) || t.at( sw.at ).owner != 1 )
            throw model_error( "switch point '" + sw.at + "' is not a decision node of the player" );
        if ( !visited.count( sw.at ) )
            throw model_error( "switch point '" + sw.at + "' is never reached" );
    }

    // Behaviour must be a function of the local state.
    std::map<term, std::string> chosen;
    for ( const auto& p : plays )
        for ( std::size_t m = 0; m < p.nodes.size(); ++m )
        {
            if ( p.acted[ m ].empty() )
                continue;
            auto [ it, fresh ] = chosen.emplace( p.locals[ m ], p.acted[ m ] );
            if ( !fresh && it->second != p.acted[ m ] )
                throw model_error( "switch plan makes the player act differently in the same local state " + p.locals[ m ].str() );
        }

    std::size_t horizon = 0;
    for ( const auto& p : plays )
        horizon = std::max( horizon, p.nodes.size() - 1 );
    std::vector<run> runs;
    for ( const auto& p : plays )
    {
        run r;
        for ( std::size_t m = 0; m <= horizon; ++m )
        {
            const std::size_t k = std::min( m, p.nodes.size() - 1 );
            term l = p.locals[ k ];
            l.kids.front().value = static_cast<std::int64_t>( m );
            r.push_back( { with_round( "env", static_cast<std::int64_t>( m ), { term{ "node:" + p.nodes[ k ] } } ), { std::move( l ) } } );
        }
        runs.push_back( std::move( r ) );
    }
    return system( std::move( runs ) );
}

inline event at_node( const system& sys, const std::string& id )
{
    return event::from( sys, "at=" + id, [ & ]( const system& s, point p ) { return s.state_at( p ).env.child( "node:" + id ) != nullptr; } );
}

} // namespace runsys::games
