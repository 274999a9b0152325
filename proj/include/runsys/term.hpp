#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace runsys
{

// A finite tree of labeled atoms. Local states, environment states and action payloads
// are all terms; equality and ordering are structural.
struct term
{
    std::string label;
    std::int64_t value = 0;
    std::vector<term> kids;

    term() = default;
    explicit term( std::string l, std::int64_t v = 0 ) : label{ std::move( l ) }, value{ v } {}
    term( std::string l, std::vector<term> k ) : label{ std::move( l ) }, kids{ std::move( k ) } {}
    term( std::string l, std::int64_t v, std::vector<term> k ) : label{ std::move( l ) }, value{ v }, kids{ std::move( k ) } {}

    friend std::strong_ordering operator<=>( const term& a, const term& b )
    {
        if ( auto c = a.label <=> b.label; c != 0 )
            return c;
        if ( auto c = a.value <=> b.value; c != 0 )
            return c;
        return std::lexicographical_compare_three_way( a.kids.begin(), a.kids.end(), b.kids.begin(), b.kids.end() );
    }
    friend bool operator==( const term&, const term& ) = default;

    [[nodiscard]] const term* child( const std::string& l ) const
    {
        for ( const auto& k : kids )
            if ( k.label == l )
                return &k;
        return nullptr;
    }

    [[nodiscard]] term* child( const std::string& l )
    {
        for ( auto& k : kids )
            if ( k.label == l )
                return &k;
        return nullptr;
    }

    // Depth-first search for any node carrying the label (and value, when given).
    [[nodiscard]] bool contains( const std::string& l, std::optional<std::int64_t> v = std::nullopt ) const
    {
        if ( label == l && ( !v || value == *v ) )
            return true;
        for ( const auto& k : kids )
            if ( k.contains( l, v ) )
                return true;
        return false;
    }

    [[nodiscard]] std::size_t hash() const
    {
        std::size_t h = std::hash<std::string>{}( label );
        h ^= std::hash<std::int64_t>{}( value ) + 0x9e3779b97f4a7c15ULL + ( h << 6 ) + ( h >> 2 );
        for ( const auto& k : kids )
            h ^= k.hash() + 0x9e3779b97f4a7c15ULL + ( h << 6 ) + ( h >> 2 );
        return h;
    }

    // label, label=value, label(kid,...) or label=value(kid,...)
    [[nodiscard]] std::string str() const
    {
        std::string out = label;
        if ( value != 0 )
            out += "=" + std::to_string( value );
        if ( !kids.empty() )
        {
            out += "(";
            for ( std::size_t i = 0; i < kids.size(); ++i )
            {
                if ( i )
                    out += ",";
                out += kids[ i ].str();
            }
            out += ")";
        }
        return out;
    }
};

inline term atom( std::string label, std::int64_t value = 0 ) { return term{ std::move( label ), value }; }

inline term node( std::string label, std::vector<term> kids ) { return term{ std::move( label ), std::move( kids ) }; }

struct term_hash
{
    std::size_t operator()( const term& t ) const { return t.hash(); }
};

// Inverse of term::str(). Labels are runs of characters other than '=', '(', ')', ',' and spaces.
inline term parse_term( const std::string& text )
{
    std::size_t pos = 0;
    auto fail = [ & ]( const std::string& why ) -> term {
        throw std::invalid_argument( "bad term at offset " + std::to_string( pos ) + " in '" + text + "': " + why );
    };
    auto skip = [ & ] {
        while ( pos < text.size() && std::isspace( static_cast<unsigned char>( text[ pos ] ) ) )
            ++pos;
    };
    auto rec = [ & ]( auto&& self ) -> term {
        skip();
        const std::size_t start = pos;
        while ( pos < text.size() && std::string_view( "=(), \t\n" ).find( text[ pos ] ) == std::string_view::npos )
            ++pos;
        if ( pos == start )
            return fail( "expected a label" );
        term t{ text.substr( start, pos - start ) };
        skip();
        if ( pos < text.size() && text[ pos ] == '=' )
        {
            ++pos;
            skip();
            const std::size_t vstart = pos;
            if ( pos < text.size() && text[ pos ] == '-' )
                ++pos;
            while ( pos < text.size() && std::isdigit( static_cast<unsigned char>( text[ pos ] ) ) )
                ++pos;
            if ( pos == vstart || text[ pos - 1 ] == '-' )
                return fail( "expected an integer" );
            t.value = std::stoll( text.substr( vstart, pos - vstart ) );
        }
        skip();
        if ( pos < text.size() && text[ pos ] == '(' )
        {
            ++pos;
            for ( ;; )
            {
                t.kids.push_back( self( self ) );
                skip();
                if ( pos < text.size() && text[ pos ] == ',' )
                {
                    ++pos;
                    continue;
                }
                if ( pos < text.size() && text[ pos ] == ')' )
                {
                    ++pos;
                    break;
                }
                return fail( "expected ',' or ')'" );
            }
        }
        return t;
    };
    term t = rec( rec );
    skip();
    if ( pos != text.size() )
        fail( "trailing characters" );
    return t;
}

} // namespace runsys
