#pragma once

#include "errors.hpp"
#include "system.hpp"

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace runsys
{

// A set of agents, either fixed or indexical (membership decided per point).
class agent_group
{
public:
    using membership = std::function<bool( const system&, point, agent_id )>;

private:
    std::string _name;
    std::vector<agent_id> _fixed;
    membership _member;

    agent_group( std::string name, std::vector<agent_id> fixed, membership member )
            : _name{ std::move( name ) }, _fixed{ std::move( fixed ) }, _member{ std::move( member ) }
    {
    }

public:
    static agent_group fixed( std::vector<agent_id> agents )
    {
        if ( agents.empty() )
            throw std::invalid_argument( "fixed agent groups must be non-empty" );
        std::string name = "{";
        for ( std::size_t i = 0; i < agents.size(); ++i )
            name += ( i ? "," : "" ) + std::to_string( agents[ i ].index );
        name += "}";
        return { std::move( name ), std::move( agents ), {} };
    }

    static agent_group everyone( const system& sys )
    {
        std::vector<agent_id> all;
        for ( std::size_t a = 1; a <= sys.agents(); ++a )
            all.emplace_back( a );
        return fixed( std::move( all ) );
    }

    static agent_group indexical( std::string name, membership member ) { return { std::move( name ), {}, std::move( member ) }; }

    [[nodiscard]] const std::string& name() const { return _name; }
    [[nodiscard]] bool is_indexical() const { return static_cast<bool>( _member ); }
    [[nodiscard]] const std::vector<agent_id>& fixed_members() const { return _fixed; }

    [[nodiscard]] bool contains( const system& sys, point p, agent_id a ) const
    {
        if ( _member )
            return _member( sys, p, a );
        for ( auto f : _fixed )
            if ( f == a )
                return true;
        return false;
    }
};

// K_i(e): points whose whole ~_i class lies inside e.
inline event knows( const system& sys, agent_id agent, const event& e )
{
    sys.require( agent );
    event out{ "K(" + std::to_string( agent.index ) + "," + e.name + ")", sys.no_points() };
    for ( const auto& cls : sys.classes( agent ) )
    {
        bool inside = true;
        for ( auto idx : cls )
            if ( !e.points.test( idx ) )
            {
                inside = false;
                break;
            }
        if ( inside )
            for ( auto idx : cls )
                out.points.set( idx );
    }
    return out;
}

// E_G(e). For indexical groups each point intersects over the agents that belong to the
// group at that point; a point with no members satisfies E_G vacuously.
inline event everyone_knows( const system& sys, const agent_group& g, const event& e )
{
    const std::string name = "E(" + g.name() + "," + e.name + ")";
    if ( !g.is_indexical() )
    {
        event out{ name, sys.all_points() };
        for ( auto a : g.fixed_members() )
            out.points &= knows( sys, a, e ).points;
        return out;
    }
    std::vector<point_set> k;
    for ( std::size_t a = 1; a <= sys.agents(); ++a )
        k.push_back( knows( sys, agent_id{ a }, e ).points );
    event out{ name, sys.all_points() };
    for ( std::size_t idx = 0; idx < sys.point_count(); ++idx )
    {
        const auto p = sys.point_at( idx );
        for ( std::size_t a = 1; a <= sys.agents(); ++a )
            if ( g.contains( sys, p, agent_id{ a } ) && !k[ a - 1 ].test( idx ) )
            {
                out.points.set( idx, false );
                break;
            }
    }
    return out;
}

inline event everyone_knows_k( const system& sys, const agent_group& g, const event& e, std::size_t k )
{
    event cur = e;
    for ( std::size_t i = 0; i < k; ++i )
        cur = everyone_knows( sys, g, cur );
    return cur;
}

// C_G(e) as the greatest fixpoint of X = E_G(e & X), iterated down from all points.
inline event common_knowledge( const system& sys, const agent_group& g, const event& e )
{
    point_set x = sys.all_points();
    for ( std::size_t iter = 0; iter <= sys.point_count() + 1; ++iter )
    {
        auto next = everyone_knows( sys, g, event{ e.name, e.points & x } ).points;
        if ( next == x )
            break;
        x = std::move( next );
    }
    return { "C(" + g.name() + "," + e.name + ")", std::move( x ) };
}

// Largest k <= max_k with E_G^k(e) true at p, found by stepping k up until it first fails;
// -1 when e itself fails at p.
inline int knowledge_depth( const system& sys, const agent_group& g, const event& e, point p, int max_k )
{
    if ( max_k < 0 )
        throw std::invalid_argument( "max_k must be non-negative" );
    const auto idx = sys.index_of( p );
    if ( !e.points.test( idx ) )
        return -1;
    event cur = e;
    for ( int k = 1; k <= max_k; ++k )
    {
        cur = everyone_knows( sys, g, cur );
        if ( !cur.points.test( idx ) )
            return k - 1;
    }
    return max_k;
}

// Environment states of fault-aware systems carry faulty(f=0|1, ...) with one entry per agent.
inline bool is_faulty( const system& sys, point p, agent_id a )
{
    const term* flags = sys.state_at( p ).env.child( "faulty" );
    if ( !flags || flags->kids.size() != sys.agents() )
        throw config_error( "environment state at " + std::to_string( p.run ) + "/" + std::to_string( p.time ) + " has no fault flags" );
    return flags->kids[ a.slot() ].value != 0;
}

inline agent_group nonfaulty_group( const system& sys )
{
    for ( std::size_t idx = 0; idx < sys.point_count(); ++idx )
        (void)is_faulty( sys, sys.point_at( idx ), agent_id{ 1 } );
    return agent_group::indexical( "N", []( const system& s, point p, agent_id a ) { return !is_faulty( s, p, a ); } );
}

inline event nonfaulty_common_knowledge( const system& sys, const event& e )
{
    return common_knowledge( sys, nonfaulty_group( sys ), e );
}

} // namespace runsys
