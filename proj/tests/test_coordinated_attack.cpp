#include "runsys/coordinated_attack.hpp"

#include <gtest/gtest.h>

#include <deque>

using namespace runsys;
using namespace runsys::coord;

namespace
{

messenger_scenario scenario( std::size_t k, std::size_t horizon, bool uncertain = true, bool reliable = false )
{
    messenger_scenario sc;
    sc.max_transits = k;
    sc.horizon = horizon;
    sc.uncertain_plan = uncertain;
    sc.reliable = reliable;
    return sc;
}

// BFS oracle: E^d(e) holds at p iff every point within d steps of p (along either general's
// indistinguishability) lies in e. Depth is the distance to the nearest non-e point minus one.
int depth_by_distance( const runsys::system& sys, const event& e, point p, int cap )
{
    const auto n = sys.point_count();
    const auto start = sys.index_of( p );
    if ( !e.points.test( start ) )
        return -1;
    std::vector<int> dist( n, -1 );
    std::deque<std::size_t> queue{ start };
    dist[ start ] = 0;
    while ( !queue.empty() )
    {
        const auto q = queue.front();
        queue.pop_front();
        if ( !e.points.test( q ) )
            return std::min( dist[ q ] - 1, cap );
        for ( auto a : { general_a, general_b } )
            for ( auto r : sys.classes( a )[ sys.class_of( a, q ) ] )
                if ( dist[ r ] < 0 )
                {
                    dist[ r ] = dist[ q ] + 1;
                    queue.push_back( r );
                }
    }
    return cap;
}

} // namespace

TEST( Messenger, RunCounts )
{
    EXPECT_EQ( generate( scenario( 0, 1, false ) ).runs().size(), 1U );
    EXPECT_EQ( generate( scenario( 1, 2, false ) ).runs().size(), 2U );
    EXPECT_EQ( generate( scenario( 2, 2, false ) ).runs().size(), 3U );
    // A's plan is uncertain by default, adding the silent run.
    EXPECT_EQ( generate( scenario( 1, 2 ) ).runs().size(), 3U );
    EXPECT_EQ( generate( scenario( 4, 6 ) ).runs().size(), 6U );
    EXPECT_EQ( enumerate_delivery_patterns( 3 ).size(), 8U );
    EXPECT_EQ( enumerate_delivery_patterns( 0 ).size(), 1U );
}

TEST( Messenger, PatternsArePrefixClosedUntilLoss )
{
    const auto sys = generate( scenario( 3, 4, false ) );
    std::set<std::string> patterns;
    for ( const auto& r : sys.runs() )
        patterns.insert( pattern_string( pattern_of( r ) ) );
    EXPECT_EQ( patterns, ( std::set<std::string>{ "L", "DL", "DDL", "DDD" } ) );
}

TEST( Messenger, BlindAcknowledgmentUsesBothTransits )
{
    // B answers in round 2 whether or not anything arrived: all four delivery patterns occur.
    auto jp = acknowledgment_protocol( 2 );
    jp.agents[ 1 ] = []( const term& l ) -> std::optional<action> {
        if ( round_of( l ) != 1 )
            return action::noop();
        return action{ "move", node( "move", { atom( "send", 2 ), atom( "attack", 0 ) } ) };
    };
    const auto sys = generate_system( build_messenger_context( scenario( 2, 2, false ) ), jp, 2 );
    EXPECT_EQ( sys.runs().size(), 4U );
}

TEST( Messenger, ScenarioValidation )
{
    EXPECT_THROW( build_messenger_context( scenario( 4, 3 ) ), config_error );
    auto sc = scenario( 1, 2 );
    sc.payoff = payoffs{ 2, 1, 3 };
    EXPECT_THROW( sc.validate(), config_error );
    sc.payoff = payoffs{ 0, 1, 3 };
    EXPECT_NO_THROW( sc.validate() );
    EXPECT_THROW( parse_attack_rule( "sometimes" ), config_error );
}

TEST( Messenger, DepthOfSentEqualsTransits )
{
    for ( std::size_t k = 1; k <= 4; ++k )
    {
        const auto sys = generate( scenario( k, 6 ) );
        const auto r = all_delivered_run( sys, k );
        ASSERT_TRUE( r.has_value() ) << "k=" << k;
        const auto sent = attack_message_sent( sys );
        const point last{ *r, sys.horizon() };
        EXPECT_EQ( knowledge_depth( sys, generals(), sent, last, 10 ), static_cast<int>( k ) ) << "k=" << k;
        EXPECT_TRUE( everyone_knows_k( sys, generals(), sent, k ).points.test( sys.index_of( last ) ) );
        EXPECT_FALSE( everyone_knows_k( sys, generals(), sent, k + 1 ).points.test( sys.index_of( last ) ) );
    }
}

TEST( Messenger, DepthMatchesDistanceOracleEverywhere )
{
    const auto sys = generate( scenario( 4, 6 ) );
    for ( const auto& e : { attack_message_sent( sys ), delivered( sys ) } )
        for ( std::size_t i = 0; i < sys.point_count(); ++i )
            EXPECT_EQ( knowledge_depth( sys, generals(), e, sys.point_at( i ), 12 ), depth_by_distance( sys, e, sys.point_at( i ), 12 ) );
}

TEST( Messenger, NoCommonKnowledgeOfDelivery )
{
    for ( std::size_t k = 0; k <= 4; ++k )
        for ( std::size_t h = std::max<std::size_t>( k, 1 ); h <= 6; ++h )
            for ( bool uncertain : { true, false } )
            {
                const auto sys = generate( scenario( k, h, uncertain ) );
                const auto rep = verify_no_ck_delivery( sys );
                EXPECT_TRUE( rep.holds ) << "k=" << k << " h=" << h;
                EXPECT_TRUE( rep.violations.empty() );
            }
}

TEST( Messenger, ReliableControlHasCommonKnowledge )
{
    const auto sys = generate( scenario( 2, 4, false, true ) );
    ASSERT_EQ( sys.runs().size(), 1U );
    const auto rep = verify_no_ck_delivery( sys );
    EXPECT_FALSE( rep.holds );
    // Hand fixpoint: one run, so C(delivered) = delivered = times 1..4.
    EXPECT_EQ( rep.violations.size(), 4U );
}

TEST( Messenger, LossyContextsSatisfyUmd )
{
    for ( std::size_t k = 1; k <= 4; ++k )
    {
        const auto sc = scenario( k, 6 );
        const auto rep = check_umd_witnesses( generate( sc ), build_messenger_context( sc ) );
        EXPECT_TRUE( rep.umd ) << "k=" << k;
        EXPECT_EQ( rep.receive_events, k * ( k + 1 ) / 2 );
    }
    const auto reliable = scenario( 2, 4, true, true );
    EXPECT_FALSE( check_umd_witnesses( generate( reliable ), build_messenger_context( reliable ) ).umd );
}

TEST( Messenger, AttackRequiresCommonKnowledge )
{
    // Never attacking: vacuous.
    const auto never = verify_attack_requires_ck( generate( scenario( 2, 4 ), attack_rule::never ) );
    EXPECT_TRUE( never.holds );
    EXPECT_EQ( never.attack_points, 0U );

    // Reliable delivery, attack after the round-1 exchange: coordinated and common knowledge.
    const auto reliable = verify_attack_requires_ck( generate( scenario( 2, 4, true, true ), attack_rule::after_exchange ) );
    EXPECT_TRUE( reliable.holds );
    EXPECT_FALSE( reliable.spec_violation );
    EXPECT_GT( reliable.attack_points, 0U );

    // A attacks as soon as it sends: one-sided attacks exist.
    const auto eager = verify_attack_requires_ck( generate( scenario( 2, 4 ), attack_rule::sender_eager ) );
    EXPECT_TRUE( eager.spec_violation );
    EXPECT_FALSE( eager.holds );
    EXPECT_FALSE( eager.one_sided.empty() );
}

TEST( Messenger, NoCoordinatedAttackOverLossyContexts )
{
    // Every rule that passes the coordination check in a umd context never attacks.
    for ( auto rule : { attack_rule::never, attack_rule::after_exchange, attack_rule::sender_eager } )
        for ( std::size_t k = 1; k <= 4; ++k )
        {
            const auto sc = scenario( k, 6 );
            const auto sys = generate( sc, rule );
            ASSERT_TRUE( check_umd_witnesses( sys, build_messenger_context( sc ) ).umd );
            const auto rep = verify_attack_requires_ck( sys );
            if ( rep.holds )
                EXPECT_EQ( rep.attack_points, 0U ) << to_string( rule ) << " k=" << k;
        }
}

TEST( Messenger, Payoffs )
{
    const auto sys = generate( scenario( 2, 4, false, true ), attack_rule::after_exchange );
    const payoffs u{ 0, 1, 2 };
    EXPECT_EQ( payoff_at( sys, { 0, 0 }, u ), 1 );
    EXPECT_EQ( payoff_at( sys, { 0, 4 }, u ), 2 );
    const auto eager = generate( scenario( 1, 2, false ), attack_rule::sender_eager );
    bool saw_low = false;
    for ( std::size_t r = 0; r < eager.runs().size(); ++r )
        saw_low = saw_low || payoff_at( eager, { r, 2 }, u ) == 0;
    EXPECT_TRUE( saw_low );
}

TEST( Messenger, WorkersDoNotChangeTheSystem )
{
    const auto one = generate( scenario( 4, 6 ), attack_rule::after_exchange, { 1'000'000, 1 } );
    const auto four = generate( scenario( 4, 6 ), attack_rule::after_exchange, { 1'000'000, 4 } );
    EXPECT_EQ( one.runs(), four.runs() );
}
