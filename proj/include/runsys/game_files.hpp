#pragma once

#include "errors.hpp"
#include "games.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace runsys::games
{

// Game description file:
// {
//   "normal_form": { "rows": [...], "cols": [...], "payoffs": [ { "row", "col", "payoff": [u1, u2] } ] },
//   "tree": { "players": 2, "root": "id", "nodes": [ { "id", "owner", "info_set", "moves": [[action, child]], "chance", "payoffs" } ] },
//   "strategies": [ { "player": 1, "name": "aa", "moves": { info_set: action } } ],
//   "state_space": { "rows": [ { "state", "profile": [s1, s2], "cells": [c1, c2] } ] }
// }
// Every section is optional.
struct game_file
{
    std::optional<normal_form_game> normal_form;
    std::optional<game_tree> tree;
    std::map<std::string, strategy> strategies[ 2 ];
    std::optional<state_space_model> state_space;

    // Strategy lookup for a two-player profile, by name.
    [[nodiscard]] std::vector<strategy> profile( const std::string& s1, const std::string& s2 ) const
    {
        auto a = strategies[ 0 ].find( s1 );
        auto b = strategies[ 1 ].find( s2 );
        if ( a == strategies[ 0 ].end() || b == strategies[ 1 ].end() )
            throw std::domain_error( "unknown profile (" + s1 + "," + s2 + ")" );
        return { a->second, b->second };
    }
};

namespace detail
{

using json = nlohmann::json;

inline void only_keys( const json& j, const std::set<std::string>& keys, const std::string& where )
{
    if ( !j.is_object() )
        throw config_error( where + ": expected an object" );
    for ( const auto& [ k, v ] : j.items() )
        if ( !keys.count( k ) )
            throw config_error( where + ": unknown key '" + k + "'" );
}

template <class T>
T need( const json& j, const char* key, const std::string& where )
{
    if ( !j.contains( key ) )
        throw config_error( where + ": missing '" + key + "'" );
    try
    {
        return j.at( key ).get<T>();
    }
    catch ( const json::exception& e )
    {
        throw config_error( where + "." + key + ": " + e.what() );
    }
}

inline normal_form_game load_normal_form( const json& j )
{
    only_keys( j, { "rows", "cols", "payoffs" }, "normal_form" );
    normal_form_game g;
    g.rows = need<std::vector<std::string>>( j, "rows", "normal_form" );
    g.cols = need<std::vector<std::string>>( j, "cols", "normal_form" );
    const auto cells = need<json>( j, "payoffs", "normal_form" );
    for ( std::size_t i = 0; i < cells.size(); ++i )
    {
        const std::string where = "normal_form.payoffs[" + std::to_string( i ) + "]";
        only_keys( cells[ i ], { "row", "col", "payoff" }, where );
        const auto u = need<std::vector<int>>( cells[ i ], "payoff", where );
        if ( u.size() != 2 )
            throw config_error( where + ": payoff needs two entries" );
        g.table[ { need<std::string>( cells[ i ], "row", where ), need<std::string>( cells[ i ], "col", where ) } ] = { u[ 0 ], u[ 1 ] };
    }
    g.validate();
    return g;
}

inline game_tree load_tree( const json& j )
{
    only_keys( j, { "players", "root", "nodes" }, "tree" );
    std::vector<game_node> nodes;
    const auto list = need<json>( j, "nodes", "tree" );
    for ( std::size_t i = 0; i < list.size(); ++i )
    {
        const std::string where = "tree.nodes[" + std::to_string( i ) + "]";
        const auto& n = list[ i ];
        only_keys( n, { "id", "owner", "info_set", "moves", "chance", "payoffs" }, where );
        game_node g;
        g.id = need<std::string>( n, "id", where );
        g.owner = need<int>( n, "owner", where );
        if ( n.contains( "info_set" ) )
            g.info_set = need<std::string>( n, "info_set", where );
        if ( n.contains( "moves" ) )
            g.moves = need<std::vector<std::pair<std::string, std::string>>>( n, "moves", where );
        if ( n.contains( "chance" ) )
            g.chance = need<std::map<std::string, double>>( n, "chance", where );
        if ( n.contains( "payoffs" ) )
            g.payoffs = need<std::vector<int>>( n, "payoffs", where );
        nodes.push_back( std::move( g ) );
    }
    return game_tree( need<std::size_t>( j, "players", "tree" ), need<std::string>( j, "root", "tree" ), std::move( nodes ) );
}

inline state_space_model load_state_space( const json& j )
{
    only_keys( j, { "rows" }, "state_space" );
    state_space_model m;
    std::map<std::string, std::vector<std::string>> cells[ 2 ];
    std::vector<std::string> order[ 2 ];
    const auto rows = need<json>( j, "rows", "state_space" );
    for ( std::size_t i = 0; i < rows.size(); ++i )
    {
        const std::string where = "state_space.rows[" + std::to_string( i ) + "]";
        only_keys( rows[ i ], { "state", "profile", "cells" }, where );
        const auto w = need<std::string>( rows[ i ], "state", where );
        const auto prof = need<std::vector<std::string>>( rows[ i ], "profile", where );
        const auto c = need<std::vector<std::string>>( rows[ i ], "cells", where );
        if ( prof.size() != 2 || c.size() != 2 )
            throw config_error( where + ": profile and cells need one entry per player" );
        m.states.push_back( w );
        m.profile.emplace_back( prof[ 0 ], prof[ 1 ] );
        for ( std::size_t p = 0; p < 2; ++p )
        {
            if ( !cells[ p ].count( c[ p ] ) )
                order[ p ].push_back( c[ p ] );
            cells[ p ][ c[ p ] ].push_back( w );
        }
    }
    m.partitions.resize( 2 );
    for ( std::size_t p = 0; p < 2; ++p )
        for ( const auto& label : order[ p ] )
            m.partitions[ p ].push_back( cells[ p ][ label ] );
    m.validate();
    return m;
}

} // namespace detail

inline game_file load_game_file( const nlohmann::json& j )
{
    detail::only_keys( j, { "normal_form", "tree", "strategies", "state_space" }, "game" );
    game_file g;
    if ( j.contains( "normal_form" ) )
        g.normal_form = detail::load_normal_form( j.at( "normal_form" ) );
    if ( j.contains( "tree" ) )
        g.tree = detail::load_tree( j.at( "tree" ) );
    if ( j.contains( "strategies" ) )
    {
        const auto& list = j.at( "strategies" );
        for ( std::size_t i = 0; i < list.size(); ++i )
        {
            const std::string where = "strategies[" + std::to_string( i ) + "]";
            detail::only_keys( list[ i ], { "player", "name", "moves" }, where );
            const auto player = detail::need<int>( list[ i ], "player", where );
            if ( player != 1 && player != 2 )
                throw config_error( where + ": player must be 1 or 2" );
            g.strategies[ player - 1 ][ detail::need<std::string>( list[ i ], "name", where ) ] = detail::need<strategy>( list[ i ], "moves", where );
        }
    }
    if ( j.contains( "state_space" ) )
        g.state_space = detail::load_state_space( j.at( "state_space" ) );
    return g;
}

// Representation coherence: each normal-form cell equals the simulated extensive-form play.
struct coherence_row
{
    std::string row;
    std::string col;
    std::pair<int, int> table;
    std::pair<int, int> played;
};

inline std::vector<coherence_row> coherence_table( const normal_form_game& g, const game_tree& t,
                                                   const std::function<std::vector<strategy>( const std::string&, const std::string& )>& to_profile )
{
    std::vector<coherence_row> out;
    for ( const auto& r : g.rows )
        for ( const auto& c : g.cols )
        {
            const auto play = simulate_play( t, to_profile( r, c ) );
            out.push_back( { r, c, g.payoff( r, c ), { play.payoffs.at( 0 ), play.payoffs.at( 1 ) } } );
        }
    return out;
}

} // namespace runsys::games
