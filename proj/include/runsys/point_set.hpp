#pragma once

#include <bit>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace runsys
{

// Fixed-size bitset over a system's point table.
class point_set
{
    std::size_t _size = 0;
    std::vector<std::uint64_t> _words;

    void trim()
    {
        if ( _size % 64 != 0 && !_words.empty() )
            _words.back() &= ( std::uint64_t{ 1 } << ( _size % 64 ) ) - 1;
    }

public:
    point_set() = default;
    explicit point_set( std::size_t size, bool value = false )
            : _size{ size }, _words( ( size + 63 ) / 64, value ? ~std::uint64_t{ 0 } : 0 )
    {
        trim();
    }

    [[nodiscard]] std::size_t size() const { return _size; }

    [[nodiscard]] bool test( std::size_t i ) const
    {
        assert( i < _size );
        return ( _words[ i / 64 ] >> ( i % 64 ) ) & 1U;
    }

    void set( std::size_t i, bool value = true )
    {
        assert( i < _size );
        if ( value )
            _words[ i / 64 ] |= std::uint64_t{ 1 } << ( i % 64 );
        else
            _words[ i / 64 ] &= ~( std::uint64_t{ 1 } << ( i % 64 ) );
    }

    [[nodiscard]] std::size_t count() const
    {
        std::size_t c = 0;
        for ( auto w : _words )
            c += static_cast<std::size_t>( std::popcount( w ) );
        return c;
    }

    [[nodiscard]] bool empty() const
    {
        for ( auto w : _words )
            if ( w )
                return false;
        return true;
    }

    [[nodiscard]] bool all() const { return count() == _size; }

    [[nodiscard]] bool subset_of( const point_set& other ) const
    {
        assert( _size == other._size );
        for ( std::size_t i = 0; i < _words.size(); ++i )
            if ( _words[ i ] & ~other._words[ i ] )
                return false;
        return true;
    }

    point_set& operator&=( const point_set& other )
    {
        assert( _size == other._size );
        for ( std::size_t i = 0; i < _words.size(); ++i )
            _words[ i ] &= other._words[ i ];
        return *this;
    }

    point_set& operator|=( const point_set& other )
    {
        assert( _size == other._size );
        for ( std::size_t i = 0; i < _words.size(); ++i )
            _words[ i ] |= other._words[ i ];
        return *this;
    }

    [[nodiscard]] point_set operator~() const
    {
        point_set out = *this;
        for ( auto& w : out._words )
            w = ~w;
        out.trim();
        return out;
    }

    friend point_set operator&( point_set a, const point_set& b ) { return a &= b; }
    friend point_set operator|( point_set a, const point_set& b ) { return a |= b; }
    friend bool operator==( const point_set&, const point_set& ) = default;

    // Indices of set bits in increasing order.
    [[nodiscard]] std::vector<std::size_t> members() const
    {
        std::vector<std::size_t> out;
        for ( std::size_t w = 0; w < _words.size(); ++w )
        {
            auto bits = _words[ w ];
            while ( bits )
            {
                out.push_back( w * 64 + static_cast<std::size_t>( std::countr_zero( bits ) ) );
                bits &= bits - 1;
            }
        }
        return out;
    }
};

} // namespace runsys
