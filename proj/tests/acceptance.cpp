// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include "runsys/runsys.hpp"

#include "random_systems.hpp"

#include <chrono>
#include <functional>
#include <iostream>
#include <random>

using namespace runsys;
using json = nlohmann::ordered_json;

namespace
{

struct criterion
{
    int id;
    std::string title;
    double limit_seconds;
    std::function<json( unsigned workers )> check;
};

json point_json( point p ) { return std::to_string( p.run ) + "/" + std::to_string( p.time ); }

json figure1_coherence( unsigned )
{
    const auto g = games::figure1_normal_form();
    const auto rows = games::coherence_table( g, games::figure1_extensive_form(), games::figure1_profile );
    json cells = json::array();
    bool ok = rows.size() == 8;
    for ( const auto& r : rows )
    {
        ok = ok && r.table == r.played;
        cells.push_back( { { "profile", r.row + "," + r.col }, { "table", { r.table.first, r.table.second } }, { "played", { r.played.first, r.played.second } } } );
    }
    ok = ok && g.payoff( "aa", "A" ) == std::pair{ 3, 3 } && g.payoff( "da", "D" ) == std::pair{ 1, 3 };
    return { { "pass", ok }, { "cells", cells } };
}

json figure3_facts( unsigned )
{
    const auto sys = games::build_state_space_system( games::figure3_model() );
    const auto at = [ & ]( const char* w ) { return sys.index_of( { games::run_of_state( sys, w ), 0 } ); };
    const auto k2 = knows( sys, agent_id{ 2 }, games::profile_is( sys, "aa", "A" ) );
    const bool at_w5 = k2.points.test( at( "w5" ) );
    const bool at_w1 = k2.points.test( at( "w1" ) );
    const bool w3_w4 = indistinguishable( sys, sys.point_at( at( "w3" ) ), sys.point_at( at( "w4" ) ), agent_id{ 1 } );
    return { { "pass", at_w5 && !at_w1 && w3_w4 }, { "K2_profile_aa_A_at_w5", at_w5 }, { "K2_profile_aa_A_at_w1", at_w1 }, { "w3_sim1_w4", w3_w4 } };
}

json depth_growth( unsigned workers )
{
    json rows = json::array();
    bool ok = true;
    for ( std::size_t k = 1; k <= 4; ++k )
    {
        coord::messenger_scenario sc;
        sc.max_transits = k;
        sc.horizon = 6;
        const auto sys = coord::generate( sc, coord::attack_rule::never, { 1'000'000, workers } );
        const auto r = coord::all_delivered_run( sys, k );
        if ( !r )
        {
            ok = false;
            continue;
        }
        const point last{ *r, sys.horizon() };
        const auto sent = coord::attack_message_sent( sys );
        const bool holds_k = everyone_knows_k( sys, coord::generals(), sent, k ).points.test( sys.index_of( last ) );
        const bool holds_k1 = everyone_knows_k( sys, coord::generals(), sent, k + 1 ).points.test( sys.index_of( last ) );
        const int depth = knowledge_depth( sys, coord::generals(), sent, last, 10 );
        ok = ok && holds_k && !holds_k1 && depth == static_cast<int>( k );
        rows.push_back( { { "transits", k }, { "runs", sys.runs().size() }, { "depth", depth }, { "E^k", holds_k }, { "E^(k+1)", holds_k1 } } );
    }
    return { { "pass", ok }, { "rows", rows } };
}

json no_ck_delivery( unsigned workers )
{
    bool ok = true;
    std::size_t systems = 0;
    for ( std::size_t k = 0; k <= 4; ++k )
        for ( std::size_t h = std::max<std::size_t>( k, 1 ); h <= 6; ++h )
        {
            coord::messenger_scenario sc;
            sc.max_transits = k;
            sc.horizon = h;
            const auto rep = coord::verify_no_ck_delivery( coord::generate( sc, coord::attack_rule::never, { 1'000'000, workers } ) );
            ok = ok && rep.holds;
            ++systems;
        }
    coord::messenger_scenario control;
    control.max_transits = 4;
    control.horizon = 6;
    control.reliable = true;
    const auto rep = coord::verify_no_ck_delivery( coord::generate( control, coord::attack_rule::never, { 1'000'000, workers } ) );
    json ck = json::array();
    for ( const auto& p : rep.violations )
        ck.push_back( point_json( p ) );
    return { { "pass", ok && !rep.violations.empty() }, { "lossy_systems_with_empty_ck", systems }, { "reliable_ck_points", ck } };
}

json eig_crash( unsigned workers )
{
    bool ok = true;
    json rows = json::array();
    for ( std::size_t n : { 3U, 4U } )
        for ( std::size_t t : { 0U, 1U } )
        {
            byz::agreement_options opts;
            opts.workers = workers;
            const auto sys = byz::run_agreement( byz::eig_protocol( n, t ), { byz::failure_kind::crash, n, t }, t + 1, opts );
            const auto a = byz::check_agreement( sys );
            const auto v = byz::check_validity( sys );
            const auto s = byz::check_simultaneity( sys );
            const bool round_ok = s.decision_rounds == std::set<std::int64_t>{ static_cast<std::int64_t>( t + 1 ) };
            ok = ok && a.clean() && v.clean() && s.clean() && round_ok;
            rows.push_back( { { "n", n },
                              { "t", t },
                              { "runs", sys.runs().size() },
                              { "counterexamples", a.counterexamples.size() + v.counterexamples.size() + s.counterexamples.size() },
                              { "decision_rounds", s.decision_rounds } } );
        }
    return { { "pass", ok }, { "rows", rows } };
}

json byzantine_witness( unsigned workers )
{
    const byz::failure_model fm{ byz::failure_kind::byzantine, 3, 1 };
    const auto ap = byz::eig_protocol( 3, 1 );
    byz::agreement_options opts;
    opts.workers = workers;
    const auto sys = byz::run_agreement( ap, fm, 2, opts );
    const auto a = byz::check_agreement( sys );
    const auto v = byz::check_validity( sys );
    json out{ { "runs", sys.runs().size() }, { "agreement_violations", a.counterexamples.size() }, { "validity_violations", v.counterexamples.size() } };
    const auto& list = a.counterexamples.empty() ? v.counterexamples : a.counterexamples;
    if ( list.empty() )
    {
        out[ "pass" ] = false;
        return out;
    }
    const auto& witness = sys.runs()[ list.front() ];
    const auto replayed = byz::replay( ap, fm, byz::preferences_of( witness ), byz::schedule_of( witness ) );
    const runsys::system one( { replayed } );
    const bool reproduced = replayed == witness && !( byz::check_agreement( one ).counterexamples.empty() && byz::check_validity( one ).counterexamples.empty() );
    out[ "witness" ] = byz::schedule_of( witness ).key();
    out[ "replayed" ] = reproduced;
    out[ "pass" ] = reproduced;
    return out;
}

json lower_bound( unsigned workers )
{
    byz::agreement_options opts;
    opts.workers = workers;
    const auto rep = byz::lower_bound_experiment( 4, 1, opts );
    const bool ok = rep.failure_free_ck.size() == 3 && !rep.failure_free_ck[ 1 ] && rep.failure_free_ck[ 2 ] && rep.silent_faults_known_after_round_1;
    return { { "pass", ok },
             { "runs", rep.runs },
             { "failure_free_ck_by_time", rep.failure_free_ck },
             { "silent_schedule", rep.silent_schedule },
             { "silent_faults_known_after_round_1", rep.silent_faults_known_after_round_1 },
             { "latest_decision_time", rep.latest_decision_time } };
}

json epistemic_laws( unsigned )
{
    std::mt19937 rng( 2024 );
    std::size_t violations = 0;
    std::size_t systems = 0;
    for ( ; systems < 120; ++systems )
    {
        const auto rc = testing::make_random_case( rng );
        const auto& sys = rc.sys;
        const auto n = sys.point_count();
        for ( std::size_t a = 1; a <= sys.agents(); ++a )
        {
            const agent_id i{ a };
            for ( std::size_t p = 0; p < n; ++p )
                for ( std::size_t q = 0; q < n; ++q )
                {
                    const bool pq = indistinguishable( sys, sys.point_at( p ), sys.point_at( q ), i );
                    violations += p == q && !pq;
                    violations += pq != indistinguishable( sys, sys.point_at( q ), sys.point_at( p ), i );
                    if ( pq )
                        for ( std::size_t r = 0; r < n; ++r )
                            violations += indistinguishable( sys, sys.point_at( q ), sys.point_at( r ), i ) &&
                                          !indistinguishable( sys, sys.point_at( p ), sys.point_at( r ), i );
                }
            const auto ke = knows( sys, i, rc.e );
            violations += !ke.points.subset_of( rc.e.points );
            violations += !ke.points.subset_of( knows( sys, i, ke ).points );
            violations += !( ~ke.points ).subset_of( knows( sys, i, !ke ).points );
            violations += !ke.points.subset_of( knows( sys, i, rc.f ).points );
        }
        const auto g = agent_group::fixed( rc.group );
        const auto ck = common_knowledge( sys, g, rc.e );
        violations += ck.points != everyone_knows( sys, g, rc.e & ck ).points;
        violations += ck.points != testing::common_knowledge_by_reachability( sys, rc.group, rc.e.points );
        for ( std::size_t k = 1; k <= n; ++k )
            violations += !ck.points.subset_of( everyone_knows_k( sys, g, rc.e, k ).points );
    }
    return { { "pass", violations == 0 }, { "systems", systems }, { "violations", violations } };
}

json imperfect_recall( unsigned )
{
    const auto tree = games::figure2_tree();
    games::recall_options aware;
    aware.switches = { { "x1", { "f'", games::figure2_f_prime() } } };
    aware.switch_aware = true;
    const auto sys = games::imperfect_recall_system( tree, { "f", games::figure2_f() }, aware );
    bool knows_node = true;
    for ( const auto* x : { "x3", "x4" } )
    {
        const auto at = games::at_node( sys, x );
        knows_node = knows_node && !at.points.empty() && knows( sys, agent_id{ 1 }, at ).points == at.points;
    }

    const auto forgetful = games::imperfect_recall_system( tree, { "BBL", { { "x1", "B" }, { "x2", "B" }, { "X", "L" } } } );
    const auto x3 = games::at_node( forgetful, "x3" ).points.members();
    const auto x4 = games::at_node( forgetful, "x4" ).points.members();
    bool merged = !x3.empty() && !x4.empty();
    for ( auto p : x3 )
        for ( auto q : x4 )
            if ( forgetful.point_at( p ).time == forgetful.point_at( q ).time )
                merged = merged && indistinguishable( forgetful, forgetful.point_at( p ), forgetful.point_at( q ), agent_id{ 1 } );
    return { { "pass", knows_node && merged }, { "switch_aware_knows_node", knows_node }, { "unaware_x3_x4_indistinguishable", merged } };
}

const std::vector<criterion>& criteria()
{
    static const std::vector<criterion> list{
        { 1, "Figure 1 coherence", 1, figure1_coherence },
        { 2, "Figure 3 knowledge facts", 1, figure3_facts },
        { 3, "knowledge depth equals transits", 5, depth_growth },
        { 4, "no common knowledge of delivery", 10, no_ck_delivery },
        { 5, "EIG correct under crash failures", 60, eig_crash },
        { 6, "byzantine n=3 t=1 witness", 120, byzantine_witness },
        { 7, "common knowledge at round t+1", 120, lower_bound },
        { 8, "epistemic property suite", 30, epistemic_laws },
        { 9, "imperfect recall", 1, imperfect_recall },
    };
    return list;
}

std::string run_all( unsigned workers )
{
    json all = json::array();
    for ( const auto& c : criteria() )
        all.push_back( c.check( workers ) );
    return all.dump();
}

} // namespace

int main()
{
    bool all_pass = true;
    for ( const auto& c : criteria() )
    {
        const auto start = std::chrono::steady_clock::now();
        json rep;
        std::string error;
        try
        {
            rep = c.check( 1 );
        }
        catch ( const std::exception& e )
        {
            error = e.what();
        }
        const double secs = std::chrono::duration<double>( std::chrono::steady_clock::now() - start ).count();
        const bool in_time = secs <= c.limit_seconds;
        const bool pass = error.empty() && rep.value( "pass", false ) && in_time;
        all_pass = all_pass && pass;
        std::cout << "criterion " << c.id << ": " << ( pass ? "PASS" : "FAIL" ) << " - " << c.title << " (" << std::fixed;
        std::cout.precision( 2 );
        std::cout << secs << "s, limit " << c.limit_seconds << "s)";
        if ( !error.empty() )
            std::cout << " error: " << error;
        else if ( !pass )
            std::cout << " " << ( in_time ? rep.dump() : "over time limit" );
        std::cout << "\n";
    }

    bool same = false;
    std::string error;
    try
    {
        const auto first = run_all( 1 );
        same = first == run_all( 1 ) && first == run_all( 4 );
    }
    catch ( const std::exception& e )
    {
        error = e.what();
    }
    all_pass = all_pass && same;
    std::cout << "criterion 10: " << ( same ? "PASS" : "FAIL" ) << " - reports identical across repeat runs and workers 1/4";
    if ( !error.empty() )
        std::cout << " error: " << error;
    std::cout << "\n";
    return all_pass ? 0 : 1;
}
