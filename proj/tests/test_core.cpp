#include "runsys/system.hpp"

#include <gtest/gtest.h>

#include <stdexcept>

using namespace runsys;

namespace
{

global_state gs( const std::string& env, std::vector<std::string> locals )
{
    global_state g{ parse_term( env ), {} };
    for ( const auto& l : locals )
        g.locals.push_back( parse_term( l ) );
    return g;
}

} // namespace

TEST( Term, PrintParseRoundTrip )
{
    const term t = node( "env", { atom( "round", 3 ), term{ "log", { atom( "D" ), atom( "L" ) } }, atom( "x", -2 ) } );
    EXPECT_EQ( t.str(), "env(round=3,log(D,L),x=-2)" );
    EXPECT_EQ( parse_term( t.str() ), t );
    EXPECT_EQ( parse_term( " a = 4 ( b , c=1 ) " ), ( term{ "a", 4, { atom( "b" ), atom( "c", 1 ) } } ) );
}

TEST( Term, ParseRejectsGarbage )
{
    EXPECT_THROW( parse_term( "" ), std::invalid_argument );
    EXPECT_THROW( parse_term( "a(" ), std::invalid_argument );
    EXPECT_THROW( parse_term( "a=x" ), std::invalid_argument );
    EXPECT_THROW( parse_term( "a b" ), std::invalid_argument );
}

TEST( Term, OrderingIsStructural )
{
    EXPECT_LT( atom( "a" ), atom( "b" ) );
    EXPECT_LT( atom( "a", 1 ), atom( "a", 2 ) );
    EXPECT_LT( node( "a", { atom( "x" ) } ), node( "a", { atom( "x" ), atom( "y" ) } ) );
    EXPECT_TRUE( parse_term( "a(b(c=1))" ).contains( "c", 1 ) );
    EXPECT_FALSE( parse_term( "a(b(c=1))" ).contains( "c", 2 ) );
}

TEST( PointSet, Algebra )
{
    point_set a( 70 ), b( 70 );
    a.set( 0 );
    a.set( 65 );
    b.set( 65 );
    b.set( 69 );
    EXPECT_EQ( ( a & b ).members(), ( std::vector<std::size_t>{ 65 } ) );
    EXPECT_EQ( ( a | b ).count(), 3U );
    EXPECT_EQ( ( ~a ).count(), 68U );
    EXPECT_FALSE( ( ~a ).test( 65 ) );
    EXPECT_TRUE( ( a & b ).subset_of( a ) );
    EXPECT_TRUE( point_set( 70, true ).all() );
    EXPECT_TRUE( point_set( 70 ).empty() );
}

TEST( System, DeduplicatesRunsKeepingOrder )
{
    run r1{ gs( "e(round)", { "a", "b" } ), gs( "e(round=1)", { "a1", "b" } ) };
    run r2{ gs( "e(round)", { "a", "b" } ), gs( "e(round=1)", { "a2", "b" } ) };
    runsys::system sys( { r1, r2, r1 } );
    ASSERT_EQ( sys.runs().size(), 2U );
    EXPECT_EQ( sys.runs()[ 0 ], r1 );
    EXPECT_EQ( sys.point_count(), 4U );
    EXPECT_EQ( sys.horizon(), 1U );
}

TEST( System, RejectsRaggedInput )
{
    run r1{ gs( "e", { "a" } ) };
    run r2{ gs( "e", { "a" } ), gs( "e", { "a" } ) };
    EXPECT_THROW( runsys::system( { r1, r2 } ), std::invalid_argument );
    EXPECT_THROW( runsys::system( std::vector<run>{} ), std::invalid_argument );
    run r3{ gs( "e", { "a", "b" } ) };
    EXPECT_THROW( runsys::system( { r1, r3 } ), std::invalid_argument );
}

TEST( System, IndistinguishabilityAndInformationSets )
{
    run r1{ gs( "e(x=1)", { "a", "b" } ), gs( "e(x=1)", { "a(saw=1)", "b" } ) };
    run r2{ gs( "e(x=2)", { "a", "b" } ), gs( "e(x=2)", { "a(saw=2)", "b" } ) };
    runsys::system sys( { r1, r2 } );
    EXPECT_TRUE( indistinguishable( sys, { 0, 0 }, { 1, 0 }, agent_id{ 1 } ) );
    EXPECT_FALSE( indistinguishable( sys, { 0, 1 }, { 1, 1 }, agent_id{ 1 } ) );
    EXPECT_TRUE( indistinguishable( sys, { 0, 1 }, { 1, 1 }, agent_id{ 2 } ) );
    // b's local state "b" is the same at all four points.
    EXPECT_EQ( information_set( sys, { 0, 0 }, agent_id{ 2 } ).size(), 4U );
    EXPECT_EQ( information_set( sys, { 0, 1 }, agent_id{ 1 } ).size(), 1U );
}

TEST( System, OutOfRangeAccess )
{
    runsys::system sys( { run{ gs( "e", { "a" } ) } } );
    EXPECT_THROW( (void)sys.state_at( { 1, 0 } ), std::domain_error );
    EXPECT_THROW( (void)sys.state_at( { 0, 1 } ), std::domain_error );
    EXPECT_THROW( (void)sys.local_state( { 0, 0 }, agent_id{ 2 } ), std::out_of_range );
    EXPECT_THROW( (void)local_state_at( sys.runs()[ 0 ], agent_id{ 1 }, 5 ), std::out_of_range );
}

TEST( System, EventsAndOperators )
{
    run r1{ gs( "e(x=1)", { "a" } ), gs( "e(x=1)", { "a" } ) };
    run r2{ gs( "e(x=2)", { "a" } ), gs( "e(x=2)", { "a" } ) };
    runsys::system sys( { r1, r2 } );
    const auto one = event::from( sys, "one", []( const runsys::system& s, point p ) { return s.state_at( p ).env.contains( "x", 1 ); } );
    EXPECT_EQ( one.points.count(), 2U );
    EXPECT_TRUE( event_holds( sys, one, { 0, 1 } ) );
    EXPECT_FALSE( event_holds( sys, one, { 1, 1 } ) );
    EXPECT_TRUE( ( one | !one ).points.all() );
    EXPECT_TRUE( ( one & !one ).points.empty() );
}

TEST( Dot, SingleRunHasNoEdges )
{
    runsys::system sys( { run{ gs( "e", { "a", "b" } ), gs( "e", { "a", "b" } ) } } );
    const auto dot = to_dot( sys );
    EXPECT_NE( dot.find( "p0 [label=\"0/0\"]" ), std::string::npos );
    // Both points share local states, so there are edges between the two times but no loops.
    EXPECT_EQ( dot.find( "p0 -- p0" ), std::string::npos );
    const auto at0 = to_dot( sys, 0 );
    EXPECT_EQ( at0.find( "--" ), std::string::npos );
}
