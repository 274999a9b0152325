#pragma once

#include "errors.hpp"
#include "system.hpp"
#include "term.hpp"

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace runsys
{

struct action
{
    std::string label = "noop";
    term payload;

    static action noop() { return {}; }
    [[nodiscard]] bool is_noop() const { return label == "noop"; }

    friend auto operator<=>( const action&, const action& ) = default;
    friend bool operator==( const action&, const action& ) = default;
};

struct joint_action
{
    action env;
    std::vector<action> agents;

    friend auto operator<=>( const joint_action&, const joint_action& ) = default;
    friend bool operator==( const joint_action&, const joint_action& ) = default;
};

// Deterministic agent protocol. An empty optional means the protocol is undefined on that
// local state, which generation reports as a configuration error.
using agent_protocol = std::function<std::optional<action>( const term& local )>;

// Nondeterministic environment protocol: the set of actions allowed at an environment state.
using env_protocol = std::function<std::vector<action>( const term& env )>;

// tau: joint action -> global state transformer.
using transition_fn = std::function<global_state( const joint_action&, const global_state& )>;

// Whether `agent` receives at least one message on the step before -> after.
using receive_fn = std::function<bool( const global_state& before, const global_state& after, agent_id agent )>;

struct joint_protocol
{
    std::string name;
    std::vector<agent_protocol> agents;
};

// (P_e, G_0, tau). Synchronous contexts keep a "round" atom as the first child of every
// local state and of the environment state; step() advances it.
struct context
{
    std::string name;
    env_protocol environment;
    std::vector<global_state> initial_states;
    transition_fn transition;
    receive_fn receives;
    bool synchronous = true;
};

struct generation_options
{
    std::size_t budget = 1'000'000;
    unsigned workers = 1;
};

inline term with_round( std::string label, std::int64_t round, std::vector<term> rest )
{
    rest.insert( rest.begin(), atom( "round", round ) );
    return node( std::move( label ), std::move( rest ) );
}

inline std::int64_t round_of( const term& t )
{
    if ( t.kids.empty() || t.kids.front().label != "round" )
        throw std::logic_error( "state has no round stamp: " + t.str() );
    return t.kids.front().value;
}

namespace detail
{

inline void advance_round( term& t )
{
    if ( t.kids.empty() || t.kids.front().label != "round" )
        throw std::logic_error( "synchronous context produced a state without a round stamp: " + t.str() );
    ++t.kids.front().value;
}

} // namespace detail

inline std::vector<joint_action> select_joint_actions( const context& ctx, const joint_protocol& jp, const global_state& g )
{
    if ( g.locals.size() != jp.agents.size() )
        throw config_error( "joint protocol '" + jp.name + "' has " + std::to_string( jp.agents.size() ) + " agents but the state has "
                            + std::to_string( g.locals.size() ) );
    std::vector<action> chosen;
    chosen.reserve( jp.agents.size() );
    for ( std::size_t i = 0; i < jp.agents.size(); ++i )
    {
        auto a = jp.agents[ i ]( g.locals[ i ] );
        if ( !a )
            throw config_error( "protocol for agent " + std::to_string( i + 1 ) + " is undefined at local state " + g.locals[ i ].str() );
        chosen.push_back( std::move( *a ) );
    }
    auto env_actions = ctx.environment( g.env );
    if ( env_actions.empty() )
        throw config_error( "environment protocol of '" + ctx.name + "' offers no action at " + g.env.str() );

    std::vector<joint_action> out;
    if ( ctx.synchronous )
    {
        for ( auto& e : env_actions )
            out.push_back( { std::move( e ), chosen } );
        return out;
    }
    // Asynchronous: the environment additionally schedules a non-empty set of movers.
    const std::size_t n = chosen.size();
    for ( const auto& e : env_actions )
        for ( std::size_t mask = 1; mask < ( std::size_t{ 1 } << n ); ++mask )
        {
            joint_action ja{ e, {} };
            for ( std::size_t i = 0; i < n; ++i )
                ja.agents.push_back( ( mask >> i ) & 1U ? chosen[ i ] : action::noop() );
            out.push_back( std::move( ja ) );
        }
    return out;
}

inline global_state step( const context& ctx, const global_state& g, const joint_action& ja )
{
    auto next = ctx.transition( ja, g );
    if ( next.locals.size() != g.locals.size() )
        throw std::logic_error( "transition of '" + ctx.name + "' changed the agent count" );
    if ( ctx.synchronous )
    {
        detail::advance_round( next.env );
        for ( auto& l : next.locals )
            detail::advance_round( l );
    }
    return next;
}

// All runs consistent with jp in ctx, truncated at `horizon`. Runs come back sorted, so the
// result does not depend on the worker count.
inline system generate_system( const context& ctx, const joint_protocol& jp, std::size_t horizon, const generation_options& opts = {} )
{
    if ( horizon < 1 )
        throw std::invalid_argument( "horizon must be at least 1" );
    if ( ctx.initial_states.empty() )
        throw config_error( "context '" + ctx.name + "' has no initial states" );

    std::vector<run> frontier;
    for ( const auto& g : ctx.initial_states )
        frontier.push_back( { g } );
    std::sort( frontier.begin(), frontier.end() );
    frontier.erase( std::unique( frontier.begin(), frontier.end() ), frontier.end() );

    std::atomic<std::size_t> produced{ frontier.size() };
    if ( produced > opts.budget )
        throw resource_error( "state budget " + std::to_string( opts.budget ) + " exceeded", produced );

    for ( std::size_t m = 0; m < horizon; ++m )
    {
        const unsigned workers = std::max( 1U, std::min<unsigned>( opts.workers, static_cast<unsigned>( frontier.size() ) ) );
        std::vector<std::vector<run>> parts( workers );
        std::vector<std::exception_ptr> errors( workers );
        auto expand = [ & ]( unsigned w ) {
            try
            {
                const std::size_t lo = frontier.size() * w / workers;
                const std::size_t hi = frontier.size() * ( w + 1 ) / workers;
                for ( std::size_t k = lo; k < hi; ++k )
                {
                    const auto& r = frontier[ k ];
                    for ( const auto& ja : select_joint_actions( ctx, jp, r.back() ) )
                    {
                        if ( ++produced > opts.budget )
                            throw resource_error( "state budget " + std::to_string( opts.budget ) + " exceeded", produced );
                        run next = r;
                        next.push_back( step( ctx, r.back(), ja ) );
                        parts[ w ].push_back( std::move( next ) );
                    }
                }
            }
            catch ( ... )
            {
                errors[ w ] = std::current_exception();
            }
        };
        if ( workers == 1 )
            expand( 0 );
        else
        {
            std::vector<std::thread> pool;
            for ( unsigned w = 0; w < workers; ++w )
                pool.emplace_back( expand, w );
            for ( auto& t : pool )
                t.join();
        }
        for ( auto& e : errors )
            if ( e )
                std::rethrow_exception( e );

        frontier.clear();
        for ( auto& part : parts )
            for ( auto& r : part )
                frontier.push_back( std::move( r ) );
        std::sort( frontier.begin(), frontier.end() );
        frontier.erase( std::unique( frontier.begin(), frontier.end() ), frontier.end() );
    }
    return system( std::move( frontier ) );
}

struct missing_witness
{
    std::size_t run = 0;
    agent_id receiver;
    std::size_t received_at = 0;
    std::size_t delayed_until = 0;
};

struct umd_report
{
    bool umd = true;
    std::size_t receive_events = 0;
    std::size_t witnesses_checked = 0;
    std::vector<missing_witness> missing;
};

// Finite-horizon check for unbounded message delays. For each receipt by agent i at time m in
// run r and each m' from m up to the step before the next receipt by some other agent (or the
// horizon), look for a run r' that agrees with r before m, in which i receives nothing during
// [m, m'], and in which every other agent's local states match r through m'.
inline umd_report check_umd_witnesses( const system& sys, const context& ctx )
{
    umd_report report;
    if ( !ctx.receives )
        return report;
    const auto& runs = sys.runs();
    const std::size_t horizon = sys.horizon();
    const std::size_t n = sys.agents();
    auto receives = [ & ]( const run& r, std::size_t m, std::size_t slot ) {
        return ctx.receives( r[ m - 1 ], r[ m ], agent_id{ slot + 1 } );
    };

    for ( std::size_t ri = 0; ri < runs.size(); ++ri )
    {
        const run& r = runs[ ri ];
        for ( std::size_t i = 0; i < n; ++i )
            for ( std::size_t m = 1; m <= horizon; ++m )
            {
                if ( !receives( r, m, i ) )
                    continue;
                ++report.receive_events;
                std::size_t window = horizon;
                for ( std::size_t m2 = m + 1; m2 <= horizon && window == horizon; ++m2 )
                    for ( std::size_t j = 0; j < n; ++j )
                        if ( j != i && receives( r, m2, j ) )
                        {
                            window = m2 - 1;
                            break;
                        }
                for ( std::size_t until = m; until <= window; ++until )
                {
                    ++report.witnesses_checked;
                    bool found = false;
                    for ( const auto& alt : runs )
                    {
                        bool ok = std::equal( r.begin(), r.begin() + static_cast<std::ptrdiff_t>( m ), alt.begin() );
                        for ( std::size_t x = m; ok && x <= until; ++x )
                            ok = !receives( alt, x, i );
                        for ( std::size_t j = 0; ok && j < n; ++j )
                            if ( j != i )
                                for ( std::size_t x = 0; ok && x <= until; ++x )
                                    ok = alt[ x ].locals[ j ] == r[ x ].locals[ j ];
                        if ( ok )
                        {
                            found = true;
                            break;
                        }
                    }
                    if ( !found )
                        report.missing.push_back( { ri, agent_id{ i + 1 }, m, until } );
                }
            }
    }
    report.umd = report.missing.empty();
    return report;
}

} // namespace runsys
