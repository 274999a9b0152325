#pragma once

#include "engine.hpp"
#include "epistemics.hpp"

#include <algorithm>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace runsys::coord
{

// General A is agent 1, general B is agent 2.
inline constexpr agent_id general_a{ 1 };
inline constexpr agent_id general_b{ 2 };

enum class attack_rule
{
    never,          // nobody ever attacks (the default reading of "unless he is sure")
    after_exchange, // in round 2, A attacks if it planned to, B attacks if it got the first message
    sender_eager,   // A attacks as soon as it sends, B attacks on receipt (deliberately broken)
};

inline std::string to_string( attack_rule r )
{
    switch ( r )
    {
    case attack_rule::never: return "never";
    case attack_rule::after_exchange: return "after-exchange";
    case attack_rule::sender_eager: return "sender-eager";
    }
    return "?";
}

inline attack_rule parse_attack_rule( const std::string& s )
{
    if ( s == "never" )
        return attack_rule::never;
    if ( s == "after-exchange" )
        return attack_rule::after_exchange;
    if ( s == "sender-eager" )
        return attack_rule::sender_eager;
    throw config_error( "unknown attack rule '" + s + "' (expected never, after-exchange or sender-eager)" );
}

struct payoffs
{
    int low = 0;    // they do not coordinate
    int medium = 1; // neither attacks
    int high = 2;   // both attack
};

struct messenger_scenario
{
    std::size_t max_transits = 4;
    std::size_t horizon = 6;
    std::optional<payoffs> payoff;
    // A's initial state ranges over {plans to attack, no plan}. Without this, A's sending is
    // a certainty and every agent knows the message was sent from round 1 on.
    bool uncertain_plan = true;
    // Control variant: the environment always delivers.
    bool reliable = false;

    void validate() const
    {
        if ( horizon < 1 )
            throw config_error( "messenger horizon must be at least 1" );
        if ( horizon < max_transits )
            throw config_error( "messenger horizon " + std::to_string( horizon ) + " is shorter than max_transits "
                                + std::to_string( max_transits ) );
        if ( payoff && !( payoff->low < payoff->medium && payoff->medium < payoff->high ) )
            throw config_error( "payoffs must satisfy L < M < H" );
    }
};

using delivery_pattern = std::vector<bool>; // true = delivered

// Every per-transit outcome sequence of length max_transits, before protocol pruning.
inline std::vector<delivery_pattern> enumerate_delivery_patterns( std::size_t max_transits )
{
    std::vector<delivery_pattern> out;
    for ( std::size_t mask = 0; mask < ( std::size_t{ 1 } << max_transits ); ++mask )
    {
        delivery_pattern p( max_transits );
        for ( std::size_t i = 0; i < max_transits; ++i )
            p[ i ] = ( ( mask >> i ) & 1U ) != 0;
        out.push_back( std::move( p ) );
    }
    return out;
}

namespace detail
{

inline std::int64_t field( const term& t, const char* name )
{
    const term* c = t.child( name );
    return c ? c->value : 0;
}

inline void bump( term& t, const char* name, std::int64_t by = 1 )
{
    if ( term* c = t.child( name ) )
        c->value += by;
}

inline term general( const char* who, std::int64_t plan )
{
    std::vector<term> kids;
    if ( plan >= 0 )
        kids.push_back( atom( "plan", plan ) );
    kids.push_back( atom( "sent", 0 ) );
    kids.push_back( atom( "got", 0 ) );
    kids.push_back( atom( "attacking", 0 ) );
    return with_round( who, 0, std::move( kids ) );
}

inline action move( std::int64_t transit, bool attack )
{
    if ( transit == 0 && !attack )
        return action::noop();
    return { "move", node( "move", { atom( "send", transit ), atom( "attack", attack ? 1 : 0 ) } ) };
}

} // namespace detail

// Env state: round, then log(D|L ...) with one entry per attempted transit.
inline context build_messenger_context( const messenger_scenario& sc )
{
    sc.validate();
    context ctx;
    ctx.name = sc.reliable ? "reliable-messenger" : "lossy-messenger";

    const std::vector<std::int64_t> plans = sc.uncertain_plan ? std::vector<std::int64_t>{ 0, 1 } : std::vector<std::int64_t>{ 1 };
    for ( auto plan : plans )
        ctx.initial_states.push_back( { with_round( "env", 0, { node( "log", {} ) } ), { detail::general( "A", plan ), detail::general( "B", -1 ) } } );

    const auto max_transits = static_cast<std::size_t>( sc.max_transits );
    const bool reliable = sc.reliable;
    ctx.environment = [ max_transits, reliable ]( const term& env ) -> std::vector<action> {
        if ( env.child( "log" )->kids.size() >= max_transits )
            return { action::noop() };
        if ( reliable )
            return { action{ "deliver", {} } };
        return { action{ "deliver", {} }, action{ "lose", {} } };
    };

    ctx.transition = []( const joint_action& ja, const global_state& g ) {
        global_state next = g;
        for ( std::size_t i = 0; i < 2; ++i )
        {
            const action& a = ja.agents[ i ];
            if ( a.is_noop() )
                continue;
            const std::int64_t transit = a.payload.child( "send" )->value;
            if ( a.payload.child( "attack" )->value )
                next.locals[ i ].child( "attacking" )->value = 1;
            if ( transit == 0 )
                continue;
            detail::bump( next.locals[ i ], "sent" );
            if ( ja.env.label == "deliver" )
            {
                detail::bump( next.locals[ 1 - i ], "got" );
                next.env.child( "log" )->kids.push_back( atom( "D", transit ) );
            }
            else if ( ja.env.label == "lose" )
                next.env.child( "log" )->kids.push_back( atom( "L", transit ) );
            else
                throw config_error( "protocol attempts transit " + std::to_string( transit ) + " beyond the context's max_transits" );
        }
        return next;
    };

    ctx.receives = []( const global_state& before, const global_state& after, agent_id a ) {
        return detail::field( after.locals[ a.slot() ], "got" ) > detail::field( before.locals[ a.slot() ], "got" );
    };
    return ctx;
}

// A opens with "attack at dawn" (transit 1) when it has a plan; the generals then alternate
// acknowledgments, each sent the round after the previous transit arrives, up to k transits.
inline joint_protocol acknowledgment_protocol( std::size_t k, attack_rule rule = attack_rule::never )
{
    const auto limit = static_cast<std::int64_t>( k );
    joint_protocol jp;
    jp.name = "ack(" + std::to_string( k ) + "," + to_string( rule ) + ")";

    jp.agents.push_back( [ limit, rule ]( const term& l ) -> std::optional<action> {
        const auto round = round_of( l );
        const auto plan = detail::field( l, "plan" );
        const auto sent = detail::field( l, "sent" );
        const auto got = detail::field( l, "got" );
        const bool attacking = detail::field( l, "attacking" ) != 0;
        // A's s-th send is transit 2s+1; it needs B's s-th transit (or, for s = 0, a plan).
        std::int64_t transit = 0;
        if ( 2 * sent + 1 <= limit && ( sent == 0 ? plan == 1 : got == sent ) )
            transit = 2 * sent + 1;
        bool attack = false;
        if ( !attacking && rule == attack_rule::after_exchange )
            attack = round == 1 && plan == 1;
        if ( !attacking && rule == attack_rule::sender_eager )
            attack = transit == 1;
        return detail::move( transit, attack );
    } );

    jp.agents.push_back( [ limit, rule ]( const term& l ) -> std::optional<action> {
        const auto round = round_of( l );
        const auto sent = detail::field( l, "sent" );
        const auto got = detail::field( l, "got" );
        const bool attacking = detail::field( l, "attacking" ) != 0;
        // B's s-th send is transit 2s+2, answering A's (s+1)-th transit.
        std::int64_t transit = 0;
        if ( 2 * sent + 2 <= limit && got == sent + 1 )
            transit = 2 * sent + 2;
        bool attack = false;
        if ( !attacking && rule == attack_rule::after_exchange )
            attack = round == 1 && got >= 1;
        if ( !attacking && rule == attack_rule::sender_eager )
            attack = got >= 1;
        return detail::move( transit, attack );
    } );
    return jp;
}

inline system generate( const messenger_scenario& sc, attack_rule rule = attack_rule::never, const generation_options& opts = {} )
{
    return generate_system( build_messenger_context( sc ), acknowledgment_protocol( sc.max_transits, rule ), sc.horizon, opts );
}

inline delivery_pattern pattern_of( const run& r )
{
    delivery_pattern p;
    for ( const auto& entry : r.back().env.child( "log" )->kids )
        p.push_back( entry.label == "D" );
    return p;
}

inline std::string pattern_string( const delivery_pattern& p )
{
    std::string s;
    for ( bool d : p )
        s += d ? 'D' : 'L';
    return s.empty() ? "-" : s;
}

// "at least one message has been delivered"
inline event delivered( const system& sys )
{
    return event::from( sys, "delivered", []( const system& s, point p ) { return s.state_at( p ).env.child( "log" )->contains( "D" ); } );
}

// E: "a message saying 'attack at dawn' was sent by A"
inline event attack_message_sent( const system& sys )
{
    return event::from( sys, "sent", []( const system& s, point p ) { return detail::field( s.local_state( p, general_a ), "sent" ) >= 1; } );
}

inline bool attacking( const system& sys, point p, agent_id who ) { return detail::field( sys.local_state( p, who ), "attacking" ) != 0; }

// Points where both generals attack.
inline event attack( const system& sys )
{
    return event::from( sys, "attack", []( const system& s, point p ) { return attacking( s, p, general_a ) && attacking( s, p, general_b ); } );
}

inline event one_sided_attack( const system& sys )
{
    return event::from( sys, "one-sided", []( const system& s, point p ) { return attacking( s, p, general_a ) != attacking( s, p, general_b ); } );
}

inline agent_group generals() { return agent_group::fixed( { general_a, general_b } ); }

struct ck_delivery_report
{
    bool holds = true; // C(delivered) is empty
    std::size_t points = 0;
    std::size_t delivered_points = 0;
    std::vector<point> violations;
};

inline ck_delivery_report verify_no_ck_delivery( const system& sys )
{
    ck_delivery_report rep;
    const auto d = delivered( sys );
    const auto ck = common_knowledge( sys, generals(), d );
    rep.points = sys.point_count();
    rep.delivered_points = d.points.count();
    for ( auto idx : ck.points.members() )
        rep.violations.push_back( sys.point_at( idx ) );
    rep.holds = rep.violations.empty();
    return rep;
}

struct attack_ck_report
{
    bool spec_violation = false;  // some point has exactly one general attacking
    std::vector<point> one_sided; // witnesses for spec_violation
    bool holds = true;            // attack is a subset of C(attack)
    std::size_t attack_points = 0;
    std::vector<point> violations;
};

inline attack_ck_report verify_attack_requires_ck( const system& sys, const event& attack_event, const event& one_sided_event )
{
    attack_ck_report rep;
    for ( auto idx : one_sided_event.points.members() )
        rep.one_sided.push_back( sys.point_at( idx ) );
    rep.spec_violation = !rep.one_sided.empty();
    const auto ck = common_knowledge( sys, generals(), attack_event );
    rep.attack_points = attack_event.points.count();
    for ( auto idx : ( attack_event.points & ~ck.points ).members() )
        rep.violations.push_back( sys.point_at( idx ) );
    rep.holds = !rep.spec_violation && rep.violations.empty();
    return rep;
}

inline attack_ck_report verify_attack_requires_ck( const system& sys ) { return verify_attack_requires_ck( sys, attack( sys ), one_sided_attack( sys ) ); }

// Index of the run in which A planned to attack and every transit up to `transits` arrived.
inline std::optional<std::size_t> all_delivered_run( const system& sys, std::size_t transits )
{
    for ( std::size_t r = 0; r < sys.runs().size(); ++r )
    {
        const auto p = pattern_of( sys.runs()[ r ] );
        if ( p.size() == transits && std::find( p.begin(), p.end(), false ) == p.end()
             && detail::field( sys.runs()[ r ].front().locals[ 0 ], "plan" ) == 1 )
            return r;
    }
    return std::nullopt;
}

// Payoff of a point for either general (identical utilities), when payoffs are configured.
inline int payoff_at( const system& sys, point p, const payoffs& u )
{
    const bool a = attacking( sys, p, general_a );
    const bool b = attacking( sys, p, general_b );
    if ( a && b )
        return u.high;
    if ( !a && !b )
        return u.medium;
    return u.low;
}

} // namespace runsys::coord
