#pragma once

#include "errors.hpp"
#include "point_set.hpp"
#include "term.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace runsys
{

// 1-based agent index.
struct agent_id
{
    std::size_t index = 1;

    constexpr agent_id() = default;
    constexpr explicit agent_id( std::size_t i ) : index{ i } {}

    [[nodiscard]] constexpr std::size_t slot() const { return index - 1; }

    friend constexpr auto operator<=>( agent_id, agent_id ) = default;
};

// (l_e, l_1, ..., l_n)
struct global_state
{
    term env;
    std::vector<term> locals;

    friend auto operator<=>( const global_state&, const global_state& ) = default;
    friend bool operator==( const global_state&, const global_state& ) = default;

    [[nodiscard]] std::size_t hash() const
    {
        std::size_t h = env.hash();
        for ( const auto& l : locals )
            h ^= l.hash() + 0x9e3779b97f4a7c15ULL + ( h << 6 ) + ( h >> 2 );
        return h;
    }
};

using run = std::vector<global_state>;

struct run_hash
{
    std::size_t operator()( const run& r ) const
    {
        std::size_t h = r.size();
        for ( const auto& g : r )
            h ^= g.hash() + 0x9e3779b97f4a7c15ULL + ( h << 6 ) + ( h >> 2 );
        return h;
    }
};

struct point
{
    std::size_t run = 0;
    std::size_t time = 0;

    friend constexpr auto operator<=>( const point&, const point& ) = default;
};

inline const term& local_state_at( const run& r, agent_id agent, std::size_t time )
{
    if ( time >= r.size() )
        throw std::out_of_range( "time " + std::to_string( time ) + " beyond horizon " + std::to_string( r.size() - 1 ) );
    const auto& g = r[ time ];
    if ( agent.index < 1 || agent.index > g.locals.size() )
        throw std::out_of_range( "agent " + std::to_string( agent.index ) + " outside 1.." + std::to_string( g.locals.size() ) );
    return g.locals[ agent.slot() ];
}

// A finite, horizon-bounded set of runs. Immutable after construction; the per-agent
// indistinguishability classes are computed once up front.
class system
{
    std::size_t _agents = 0;
    std::size_t _horizon = 0;
    std::vector<run> _runs;
    // _class_of[agent slot][point index] -> equivalence class id under ~_i
    std::vector<std::vector<std::uint32_t>> _class_of;
    // _classes[agent slot][class id] -> point indices, ascending
    std::vector<std::vector<std::vector<std::size_t>>> _classes;

    void index_classes()
    {
        _class_of.assign( _agents, std::vector<std::uint32_t>( point_count() ) );
        _classes.assign( _agents, {} );
        for ( std::size_t a = 0; a < _agents; ++a )
        {
            struct ptr_hash
            {
                std::size_t operator()( const term* t ) const { return t->hash(); }
            };
            struct ptr_eq
            {
                bool operator()( const term* x, const term* y ) const { return *x == *y; }
            };
            std::unordered_map<const term*, std::uint32_t, ptr_hash, ptr_eq> ids;
            for ( std::size_t p = 0; p < point_count(); ++p )
            {
                const term* t = &_runs[ p / ( _horizon + 1 ) ][ p % ( _horizon + 1 ) ].locals[ a ];
                auto [ it, fresh ] = ids.try_emplace( t, static_cast<std::uint32_t>( _classes[ a ].size() ) );
                if ( fresh )
                    _classes[ a ].emplace_back();
                _class_of[ a ][ p ] = it->second;
                _classes[ a ][ it->second ].push_back( p );
            }
        }
    }

public:
    // Duplicate runs are dropped, keeping first occurrences in order.
    explicit system( std::vector<run> runs )
    {
        if ( runs.empty() )
            throw std::invalid_argument( "a system needs at least one run" );
        if ( runs.front().empty() )
            throw std::invalid_argument( "runs must be non-empty" );
        _horizon = runs.front().size() - 1;
        _agents = runs.front().front().locals.size();
        if ( _agents == 0 )
            throw std::invalid_argument( "a system needs at least one agent" );
        std::unordered_set<run, run_hash> seen;
        for ( auto& r : runs )
        {
            if ( r.size() != _horizon + 1 )
                throw std::invalid_argument( "all runs must have length horizon+1" );
            for ( const auto& g : r )
                if ( g.locals.size() != _agents )
                    throw std::invalid_argument( "all global states must have the same agent count" );
            if ( seen.insert( r ).second )
                _runs.push_back( std::move( r ) );
        }
        index_classes();
    }

    [[nodiscard]] std::size_t agents() const { return _agents; }
    [[nodiscard]] std::size_t horizon() const { return _horizon; }
    [[nodiscard]] const std::vector<run>& runs() const { return _runs; }
    [[nodiscard]] std::size_t point_count() const { return _runs.size() * ( _horizon + 1 ); }

    [[nodiscard]] bool contains( point p ) const { return p.run < _runs.size() && p.time <= _horizon; }

    void require( point p ) const
    {
        if ( !contains( p ) )
            throw std::domain_error( "point " + std::to_string( p.run ) + "/" + std::to_string( p.time ) + " is not in the system" );
    }

    void require( agent_id a ) const
    {
        if ( a.index < 1 || a.index > _agents )
            throw std::out_of_range( "agent " + std::to_string( a.index ) + " outside 1.." + std::to_string( _agents ) );
    }

    [[nodiscard]] std::size_t index_of( point p ) const
    {
        require( p );
        return p.run * ( _horizon + 1 ) + p.time;
    }

    [[nodiscard]] point point_at( std::size_t index ) const { return { index / ( _horizon + 1 ), index % ( _horizon + 1 ) }; }

    [[nodiscard]] const global_state& state_at( point p ) const
    {
        require( p );
        return _runs[ p.run ][ p.time ];
    }

    [[nodiscard]] const term& local_state( point p, agent_id a ) const
    {
        require( a );
        return state_at( p ).locals[ a.slot() ];
    }

    [[nodiscard]] std::uint32_t class_of( agent_id a, std::size_t point_index ) const { return _class_of[ a.slot() ][ point_index ]; }

    [[nodiscard]] const std::vector<std::vector<std::size_t>>& classes( agent_id a ) const
    {
        require( a );
        return _classes[ a.slot() ];
    }

    [[nodiscard]] point_set all_points() const { return point_set( point_count(), true ); }
    [[nodiscard]] point_set no_points() const { return point_set( point_count(), false ); }

    [[nodiscard]] point_set points_at_time( std::size_t m ) const
    {
        point_set out = no_points();
        if ( m <= _horizon )
            for ( std::size_t r = 0; r < _runs.size(); ++r )
                out.set( r * ( _horizon + 1 ) + m );
        return out;
    }
};

// A named set of points of one system.
struct event
{
    std::string name;
    point_set points;

    static event from( const system& sys, std::string name, const std::function<bool( const system&, point )>& member )
    {
        event e{ std::move( name ), sys.no_points() };
        for ( std::size_t i = 0; i < sys.point_count(); ++i )
            if ( member( sys, sys.point_at( i ) ) )
                e.points.set( i );
        return e;
    }

    static event everywhere( const system& sys, std::string name = "true" ) { return { std::move( name ), sys.all_points() }; }
    static event nowhere( const system& sys, std::string name = "false" ) { return { std::move( name ), sys.no_points() }; }
};

inline event operator&( const event& a, const event& b ) { return { "(" + a.name + " & " + b.name + ")", a.points & b.points }; }
inline event operator|( const event& a, const event& b ) { return { "(" + a.name + " | " + b.name + ")", a.points | b.points }; }
inline event operator!( const event& a ) { return { "!" + a.name, ~a.points }; }

inline bool indistinguishable( const system& sys, point p, point q, agent_id agent )
{
    sys.require( agent );
    return sys.class_of( agent, sys.index_of( p ) ) == sys.class_of( agent, sys.index_of( q ) );
}

inline std::vector<point> information_set( const system& sys, point p, agent_id agent )
{
    sys.require( agent );
    std::vector<point> out;
    for ( auto idx : sys.classes( agent )[ sys.class_of( agent, sys.index_of( p ) ) ] )
        out.push_back( sys.point_at( idx ) );
    return out;
}

inline bool event_holds( const system& sys, const event& e, point p ) { return e.points.test( sys.index_of( p ) ); }

// Graphviz rendering of the indistinguishability relation: one node per point ("run#/time"),
// one undirected edge set per agent. Reflexive loops are suppressed. When `time` is given
// only points at that time are drawn.
inline std::string to_dot( const system& sys, std::optional<std::size_t> time = std::nullopt )
{
    auto shown = [ & ]( std::size_t idx ) { return !time || sys.point_at( idx ).time == *time; };
    std::ostringstream out;
    out << "graph indistinguishability {\n";
    for ( std::size_t i = 0; i < sys.point_count(); ++i )
    {
        if ( !shown( i ) )
            continue;
        auto p = sys.point_at( i );
        out << "  p" << i << " [label=\"" << p.run << "/" << p.time << "\"];\n";
    }
    for ( std::size_t a = 1; a <= sys.agents(); ++a )
    {
        out << "  // agent " << a << "\n";
        for ( const auto& cls : sys.classes( agent_id{ a } ) )
        {
            std::vector<std::size_t> members;
            for ( auto idx : cls )
                if ( shown( idx ) )
                    members.push_back( idx );
            for ( std::size_t x = 0; x < members.size(); ++x )
                for ( std::size_t y = x + 1; y < members.size(); ++y )
                    out << "  p" << members[ x ] << " -- p" << members[ y ] << " [agent=" << a << ", label=\"" << a << "\"];\n";
        }
    }
    out << "}\n";
    return out.str();
}

} // namespace runsys
