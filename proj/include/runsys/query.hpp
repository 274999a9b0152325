#pragma once

#include "epistemics.hpp"
#include "errors.hpp"
#include "system.hpp"

#include <cctype>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace runsys
{

// Epistemic query strings over named events:
//   name | !q | K(i, q) | E(G, q) | C(G, q) | CN(q)
// where G is {i,j,...}, all, or N (the nonfaulty agents).
class query_parser
{
    const system& _sys;
    const std::map<std::string, event>& _events;
    std::string _text;
    std::size_t _pos = 0;

    [[noreturn]] void fail( const std::string& why ) const
    {
        throw config_error( "query '" + _text + "' at offset " + std::to_string( _pos ) + ": " + why );
    }

    void skip()
    {
        while ( _pos < _text.size() && std::isspace( static_cast<unsigned char>( _text[ _pos ] ) ) )
            ++_pos;
    }

    bool eat( char c )
    {
        skip();
        if ( _pos < _text.size() && _text[ _pos ] == c )
        {
            ++_pos;
            return true;
        }
        return false;
    }

    void expect( char c )
    {
        if ( !eat( c ) )
            fail( std::string( "expected '" ) + c + "'" );
    }

    std::string word()
    {
        skip();
        const std::size_t start = _pos;
        while ( _pos < _text.size() && ( std::isalnum( static_cast<unsigned char>( _text[ _pos ] ) ) || std::string( "_-.:=" ).find( _text[ _pos ] ) != std::string::npos ) )
            ++_pos;
        if ( _pos == start )
            fail( "expected a name" );
        return _text.substr( start, _pos - start );
    }

    std::size_t number()
    {
        skip();
        const std::size_t start = _pos;
        while ( _pos < _text.size() && std::isdigit( static_cast<unsigned char>( _text[ _pos ] ) ) )
            ++_pos;
        if ( _pos == start )
            fail( "expected an agent number" );
        const auto a = std::stoul( _text.substr( start, _pos - start ) );
        if ( a < 1 || a > _sys.agents() )
            fail( "agent " + std::to_string( a ) + " outside 1.." + std::to_string( _sys.agents() ) );
        return a;
    }

    agent_group group()
    {
        skip();
        if ( eat( '{' ) )
        {
            std::vector<agent_id> members;
            do
                members.emplace_back( number() );
            while ( eat( ',' ) );
            expect( '}' );
            return agent_group::fixed( std::move( members ) );
        }
        const auto w = word();
        if ( w == "all" )
            return agent_group::everyone( _sys );
        if ( w == "N" )
            return nonfaulty_group( _sys );
        fail( "unknown group '" + w + "'" );
    }

    bool operator_ahead()
    {
        skip();
        return _pos < _text.size() && _text[ _pos ] == '(';
    }

    event expr()
    {
        if ( eat( '!' ) )
            return !expr();
        if ( eat( '(' ) )
        {
            auto e = expr();
            expect( ')' );
            return e;
        }
        const auto w = word();
        if ( !operator_ahead() )
        {
            auto it = _events.find( w );
            if ( it == _events.end() )
                fail( "unknown event '" + w + "'" );
            return it->second;
        }
        expect( '(' );
        event out;
        if ( w == "K" )
        {
            const auto a = number();
            expect( ',' );
            out = knows( _sys, agent_id{ a }, expr() );
        }
        else if ( w == "E" || w == "C" )
        {
            const auto g = group();
            expect( ',' );
            const auto inner = expr();
            out = w == "E" ? everyone_knows( _sys, g, inner ) : common_knowledge( _sys, g, inner );
        }
        else if ( w == "CN" )
            out = nonfaulty_common_knowledge( _sys, expr() );
        else
            fail( "unknown operator '" + w + "'" );
        expect( ')' );
        return out;
    }

public:
    query_parser( const system& sys, const std::map<std::string, event>& events, std::string text )
            : _sys{ sys }, _events{ events }, _text{ std::move( text ) }
    {
    }

    event parse()
    {
        auto e = expr();
        skip();
        if ( _pos != _text.size() )
            fail( "trailing characters" );
        e.name = _text;
        return e;
    }
};

inline event evaluate_query( const system& sys, const std::map<std::string, event>& events, const std::string& text )
{
    return query_parser( sys, events, text ).parse();
}

} // namespace runsys
