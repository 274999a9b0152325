#pragma once

#include "byzantine.hpp"
#include "coordinated_attack.hpp"
#include "engine.hpp"
#include "epistemics.hpp"
#include "errors.hpp"
#include "game_files.hpp"
#include "games.hpp"
#include "query.hpp"
#include "system.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace runsys::cli
{

using json = nlohmann::ordered_json;

inline constexpr int exit_pass = 0;
inline constexpr int exit_fail = 1;
inline constexpr int exit_error = 2;

inline constexpr const char* report_format = "runsys-report/1";
inline constexpr const char* witness_format = "runsys-witness/1";
inline constexpr const char* budget_variable = "RUNSYS_BUDGET";

inline std::size_t default_budget()
{
    if ( const char* v = std::getenv( budget_variable ) )
    {
        try
        {
            std::size_t used = 0;
            const auto b = std::stoull( v, &used );
            if ( used == std::string( v ).size() && b > 0 )
                return static_cast<std::size_t>( b );
        }
        catch ( const std::exception& )
        {
        }
        throw config_error( std::string( budget_variable ) + "='" + v + "' is not a positive integer" );
    }
    return 1'000'000;
}

struct run_options
{
    std::optional<std::size_t> budget; // overrides the scenario and the environment
    unsigned workers = 1;
    bool timing = false; // emit the wall-time section
};

inline std::string point_string( point p ) { return std::to_string( p.run ) + "/" + std::to_string( p.time ) + ""; }

inline point parse_point( const std::string& s, const std::string& where )
{
    const auto slash = s.find( '/' );
    try
    {
        if ( slash == std::string::npos )
            throw std::invalid_argument( s );
        return { std::stoul( s.substr( 0, slash ) ), std::stoul( s.substr( slash + 1 ) ) };
    }
    catch ( const std::exception& )
    {
        throw config_error( where + ": '" + s + "' is not a point of the form run/time" );
    }
}

// ---------------------------------------------------------------------------------------
// Schema helpers

namespace detail
{

inline void only_keys( const json& j, const std::set<std::string>& keys, const std::string& where )
{
    if ( !j.is_object() )
        throw config_error( where + ": expected an object" );
    for ( const auto& [ k, v ] : j.items() )
        if ( !keys.count( k ) )
            throw config_error( where + ": unknown key '" + k + "'" );
}

template <class T>
T get_or( const json& j, const char* key, T fallback, const std::string& where )
{
    if ( !j.contains( key ) )
        return fallback;
    const auto& v = j.at( key );
    if constexpr ( std::is_same_v<T, bool> )
    {
        if ( !v.is_boolean() )
            throw config_error( where + "." + key + ": expected true or false" );
    }
    else if constexpr ( std::is_integral_v<T> )
    {
        if ( !v.is_number_integer() || ( std::is_unsigned_v<T> && v.get<long long>() < 0 ) )
            throw config_error( where + "." + key + ": expected a non-negative integer" );
    }
    else if constexpr ( std::is_same_v<T, std::string> )
    {
        if ( !v.is_string() )
            throw config_error( where + "." + key + ": expected a string" );
    }
    return v.get<T>();
}

inline json points_json( const system& sys, const point_set& s, std::size_t limit )
{
    json out = json::array();
    for ( auto idx : s.members() )
    {
        if ( out.size() >= limit )
            break;
        out.push_back( point_string( sys.point_at( idx ) ) );
    }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------------------
// Event predicates over states:
//   {"has": label, "value": v, "in": "env" | agent}  {"time": m}  {"faulty": agent}
//   {"event": name}  {"not": p}  {"and": [p...]}  {"or": [p...]}

class event_compiler
{
    const system& _sys;
    const json& _defs;
    std::map<std::string, event>& _events;
    std::set<std::string> _active;

    point_set compile( const json& p, const std::string& where )
    {
        if ( !p.is_object() || p.empty() )
            throw config_error( where + ": expected a predicate object" );
        if ( p.contains( "has" ) )
        {
            detail::only_keys( p, { "has", "value", "in" }, where );
            const auto label = detail::get_or<std::string>( p, "has", "", where );
            std::optional<std::int64_t> value;
            if ( p.contains( "value" ) )
                value = detail::get_or<std::int64_t>( p, "value", 0, where );
            std::optional<std::size_t> agent;
            if ( p.contains( "in" ) )
            {
                const auto& in = p.at( "in" );
                if ( in.is_number_unsigned() )
                {
                    agent = in.get<std::size_t>();
                    if ( *agent < 1 || *agent > _sys.agents() )
                        throw config_error( where + ".in: agent " + std::to_string( *agent ) + " outside 1.." + std::to_string( _sys.agents() ) );
                }
                else if ( !( in.is_string() && in.get<std::string>() == "env" ) )
                    throw config_error( where + ".in: expected \"env\" or an agent number" );
            }
            return event::from( _sys, "", [ & ]( const system& s, point pt ) {
                       const auto& g = s.state_at( pt );
                       const term& t = agent ? g.locals[ *agent - 1 ] : g.env;
                       return t.contains( label, value );
                   } )
                .points;
        }
        if ( p.contains( "time" ) )
        {
            detail::only_keys( p, { "time" }, where );
            return _sys.points_at_time( detail::get_or<std::size_t>( p, "time", 0, where ) );
        }
        if ( p.contains( "faulty" ) )
        {
            detail::only_keys( p, { "faulty" }, where );
            const auto a = detail::get_or<std::size_t>( p, "faulty", 0, where );
            if ( a < 1 || a > _sys.agents() )
                throw config_error( where + ".faulty: agent " + std::to_string( a ) + " outside 1.." + std::to_string( _sys.agents() ) );
            return event::from( _sys, "", [ a ]( const system& s, point pt ) { return is_faulty( s, pt, agent_id{ a } ); } ).points;
        }
        if ( p.contains( "event" ) )
        {
            detail::only_keys( p, { "event" }, where );
            return resolve( detail::get_or<std::string>( p, "event", "", where ) ).points;
        }
        if ( p.contains( "not" ) )
        {
            detail::only_keys( p, { "not" }, where );
            return ~compile( p.at( "not" ), where + ".not" );
        }
        for ( const char* op : { "and", "or" } )
            if ( p.contains( op ) )
            {
                detail::only_keys( p, { op }, where );
                const auto& list = p.at( op );
                if ( !list.is_array() || list.empty() )
                    throw config_error( where + "." + op + ": expected a non-empty list" );
                point_set acc = compile( list[ 0 ], where + "." + op + "[0]" );
                for ( std::size_t i = 1; i < list.size(); ++i )
                {
                    const auto next = compile( list[ i ], where + "." + op + "[" + std::to_string( i ) + "]" );
                    acc = std::string( op ) == "and" ? acc & next : acc | next;
                }
                return acc;
            }
        throw config_error( where + ": unknown predicate '" + p.begin().key() + "'" );
    }

public:
    event_compiler( const system& sys, const json& defs, std::map<std::string, event>& events ) : _sys{ sys }, _defs{ defs }, _events{ events } {}

    const event& resolve( const std::string& name )
    {
        if ( auto it = _events.find( name ); it != _events.end() )
            return it->second;
        if ( !_defs.is_object() || !_defs.contains( name ) )
            throw config_error( "events: unknown event '" + name + "'" );
        if ( !_active.insert( name ).second )
            throw config_error( "events." + name + ": circular definition" );
        auto pts = compile( _defs.at( name ), "events." + name );
        _active.erase( name );
        return _events.emplace( name, event{ name, std::move( pts ) } ).first->second;
    }

    void compile_all()
    {
        if ( _defs.is_null() )
            return;
        if ( !_defs.is_object() )
            throw config_error( "events: expected an object" );
        for ( const auto& [ name, def ] : _defs.items() )
            resolve( name );
    }
};

// ---------------------------------------------------------------------------------------
// Suites

struct verdict
{
    std::string name;
    bool pass = true;
    std::string detail;
    json witnesses = json::array();
};

struct suite_output
{
    std::optional<system> sys;
    std::map<std::string, event> events;
    json details = json::object();
    std::vector<verdict> verdicts;
    json witness_file; // replayable witnesses, when the suite produces any
    std::optional<std::size_t> graph_time;
};

struct suite_info
{
    std::string name;
    std::string summary;
};

inline std::vector<suite_info> suites()
{
    return {
        { "coord-attack", "messenger systems: common knowledge of delivery, knowledge depth, umd, attack coordination" },
        { "byzantine", "EIG agreement under crash/omission/byzantine adversaries, checkers and the lower-bound experiment" },
        { "game", "figure1 coherence, figure3 state-space system, figure2 imperfect recall, or a game file" },
        { "custom", "explicit runs given as term strings" },
    };
}

namespace detail
{

inline json decisions_json( const run& r )
{
    json out = json::array();
    for ( const auto& l : r.back().locals )
    {
        const auto d = byz::decision_of( l );
        out.push_back( d ? json{ { "value", byz::value_name( d->value ) }, { "round", d->round } } : json() );
    }
    return out;
}

inline json byzantine_witness( const system& sys, std::size_t ri, const std::string& property )
{
    const auto& r = sys.runs()[ ri ];
    const auto sched = byz::schedule_of( r );
    json moves = json::array();
    for ( const auto& m : sched.moves )
        moves.push_back( m.str() );
    return json{ { "property", property }, { "run", ri }, { "prefs", byz::preferences_of( r ) }, { "faulty", sched.faulty },
                 { "moves", moves }, { "decisions", decisions_json( r ) } };
}

inline suite_output run_coord_attack( const json& params, std::size_t budget, unsigned workers )
{
    only_keys( params, { "transits", "horizon", "attack_rule", "reliable", "uncertain_plan", "check_umd" }, "params" );
    coord::messenger_scenario sc;
    sc.max_transits = get_or<std::size_t>( params, "transits", 2, "params" );
    sc.horizon = get_or<std::size_t>( params, "horizon", 6, "params" );
    sc.reliable = get_or<bool>( params, "reliable", false, "params" );
    sc.uncertain_plan = get_or<bool>( params, "uncertain_plan", true, "params" );
    const auto rule = coord::parse_attack_rule( get_or<std::string>( params, "attack_rule", "never", "params" ) );
    const bool check_umd = get_or<bool>( params, "check_umd", true, "params" );

    suite_output out;
    out.sys.emplace( coord::generate( sc, rule, { budget, workers } ) );
    const system& sys = *out.sys;
    out.events.emplace( "delivered", coord::delivered( sys ) );
    out.events.emplace( "sent", coord::attack_message_sent( sys ) );
    out.events.emplace( "attack", coord::attack( sys ) );
    out.events.emplace( "one_sided_attack", coord::one_sided_attack( sys ) );

    json patterns = json::array();
    for ( const auto& r : sys.runs() )
        patterns.push_back( coord::pattern_string( coord::pattern_of( r ) ) );
    out.details[ "delivery_patterns" ] = patterns;

    const auto ck = coord::verify_no_ck_delivery( sys );
    json ck_points = json::array();
    for ( auto p : ck.violations )
        ck_points.push_back( point_string( p ) );
    out.details[ "ck_delivered_points" ] = ck_points;
    if ( !sc.reliable )
    {
        verdict v{ "no-common-knowledge-of-delivery", ck.holds, ck.holds ? "C(delivered) is empty" : "C(delivered) holds somewhere" };
        for ( auto p : ck.violations )
            v.witnesses.push_back( json{ { "point", point_string( p ) }, { "pattern", coord::pattern_string( coord::pattern_of( sys.runs()[ p.run ] ) ) } } );
        out.verdicts.push_back( std::move( v ) );
    }
    else
        out.verdicts.push_back( { "control-common-knowledge-of-delivery", !ck.holds,
                                  ck.holds ? "C(delivered) is empty under reliable delivery" : "C(delivered) is non-empty under reliable delivery" } );

    // Depth of E along the all-delivered run.
    if ( auto r = coord::all_delivered_run( sys, std::min( sc.max_transits, sc.horizon ) ) )
    {
        json depth = json::array();
        const auto sent = coord::attack_message_sent( sys );
        for ( std::size_t m = 0; m <= sys.horizon(); ++m )
            depth.push_back( knowledge_depth( sys, coord::generals(), sent, { *r, m }, static_cast<int>( sys.horizon() ) + 2 ) );
        out.details[ "all_delivered_run" ] = *r;
        out.details[ "depth_of_sent" ] = depth;
    }

    if ( check_umd )
    {
        const auto umd = check_umd_witnesses( sys, coord::build_messenger_context( sc ) );
        out.details[ "umd" ] = json{ { "holds", umd.umd }, { "receive_events", umd.receive_events }, { "witnesses_checked", umd.witnesses_checked } };
        if ( !sc.reliable )
        {
            verdict v{ "umd", umd.umd, umd.umd ? "every receipt has a delayed counterpart" : "some receipt has no delayed counterpart" };
            for ( const auto& m : umd.missing )
                v.witnesses.push_back( json{ { "run", m.run }, { "agent", m.receiver.index }, { "received_at", m.received_at }, { "delayed_until", m.delayed_until } } );
            out.verdicts.push_back( std::move( v ) );
        }
    }

    const auto co = coord::verify_attack_requires_ck( sys );
    verdict v{ "attack-coordination", co.holds,
               co.holds ? "attacks are coordinated and common knowledge" : co.spec_violation ? "one general attacks alone" : "an attack happens without common knowledge" };
    for ( auto p : co.one_sided.empty() ? co.violations : co.one_sided )
    {
        if ( v.witnesses.size() >= 5 )
            break;
        v.witnesses.push_back( json{ { "point", point_string( p ) }, { "pattern", coord::pattern_string( coord::pattern_of( sys.runs()[ p.run ] ) ) } } );
    }
    out.details[ "attack_points" ] = co.attack_points;
    out.verdicts.push_back( std::move( v ) );
    return out;
}

inline void add_check( suite_output& out, const system& sys, const byz::check_report& rep, std::size_t max_witnesses )
{
    verdict v{ rep.property, rep.clean(), "" };
    v.detail = std::to_string( rep.runs_checked ) + " runs checked, " + std::to_string( rep.counterexamples.size() ) + " counterexamples, "
               + std::to_string( rep.liveness.size() ) + " liveness violations";
    for ( auto ri : rep.counterexamples )
    {
        if ( v.witnesses.size() >= max_witnesses )
            break;
        v.witnesses.push_back( byzantine_witness( sys, ri, rep.property ) );
    }
    for ( auto ri : rep.liveness )
    {
        if ( v.witnesses.size() >= max_witnesses )
            break;
        v.witnesses.push_back( byzantine_witness( sys, ri, "liveness" ) );
    }
    for ( const auto& w : v.witnesses )
        out.witness_file[ "witnesses" ].push_back( w );
    out.verdicts.push_back( std::move( v ) );
}

inline suite_output run_byzantine( const json& params, std::size_t budget, unsigned workers )
{
    only_keys( params, { "n", "t", "failures", "horizon", "experiment", "protocol", "max_forged_claims", "max_witnesses" }, "params" );
    byz::failure_model fm;
    fm.n = get_or<std::size_t>( params, "n", 3, "params" );
    fm.t = get_or<std::size_t>( params, "t", 1, "params" );
    fm.kind = byz::parse_failure_kind( get_or<std::string>( params, "failures", "crash", "params" ) );
    fm.validate();
    const auto horizon = get_or<std::size_t>( params, "horizon", fm.t + 1, "params" );
    const auto experiment = get_or<std::string>( params, "experiment", "check", "params" );
    const auto protocol = get_or<std::string>( params, "protocol", "eig", "params" );
    const auto max_witnesses = get_or<std::size_t>( params, "max_witnesses", 3, "params" );
    byz::agreement_options opts{ budget, workers };
    if ( params.contains( "max_forged_claims" ) )
        opts.max_forged_claims = get_or<std::size_t>( params, "max_forged_claims", 0, "params" );

    suite_output out;
    if ( experiment == "lower-bound" )
    {
        if ( fm.kind != byz::failure_kind::crash || protocol != "eig" )
            throw config_error( "params: the lower-bound experiment uses crash failures and the eig protocol" );
        const auto rep = byz::lower_bound_experiment( fm.n, fm.t, opts );
        json sched = json::array();
        for ( const auto& s : rep.schedules )
            sched.push_back( json{ { "schedule", s.schedule }, { "chips", s.chips }, { "earliest_decision_time", s.earliest_decision_time } } );
        out.details = json{ { "runs", rep.runs },
                            { "points", rep.points },
                            { "failure_free_ck", rep.failure_free_ck },
                            { "first_ck_time", rep.first_ck_time },
                            { "latest_decision_time", rep.latest_decision_time },
                            { "schedules", sched } };
        out.verdicts.push_back( { "ck-first-at-round-t+1", rep.first_ck_time == static_cast<int>( fm.t + 1 ),
                                  "first time CN(some-attack) holds on the failure-free run: " + std::to_string( rep.first_ck_time ) } );
        if ( fm.t >= 1 )
        {
            out.details[ "silent_schedule" ] = rep.silent_schedule;
            out.details[ "silent_faults_known_after_round_1" ] = rep.silent_faults_known_after_round_1;
            out.details[ "silent_earliest_decision_time" ] = rep.silent_earliest_decision_time;
            out.verdicts.push_back( { "silent-fault-identification", rep.silent_faults_known_after_round_1,
                                      "nonfaulty agents know the faulty set after round 1 of " + rep.silent_schedule } );
        }
        return out;
    }
    if ( experiment != "check" )
        throw config_error( "params.experiment: expected check or lower-bound, got '" + experiment + "'" );

    byz::agreement_protocol ap;
    if ( protocol == "eig" )
        ap = byz::eig_protocol( fm.n, fm.t );
    else if ( protocol == "always-retreat" )
        ap = byz::eig_protocol( fm.n, fm.t, byz::decision_rule::always_retreat );
    else
        throw config_error( "params.protocol: expected eig or always-retreat, got '" + protocol + "'" );

    out.sys.emplace( byz::run_agreement( ap, fm, horizon, opts ) );
    const system& sys = *out.sys;
    out.events.emplace( "some_attack", byz::some_attack_preference( sys ) );
    out.witness_file = json{ { "format", witness_format },
                             { "n", fm.n },
                             { "t", fm.t },
                             { "failures", byz::to_string( fm.kind ) },
                             { "protocol", protocol },
                             { "witnesses", json::array() } };
    const auto agreement = byz::check_agreement( sys );
    add_check( out, sys, agreement, max_witnesses );
    add_check( out, sys, byz::check_validity( sys ), max_witnesses );
    add_check( out, sys, byz::check_simultaneity( sys ), max_witnesses );
    json rounds = json::array();
    for ( auto r : agreement.decision_rounds )
        rounds.push_back( r );
    out.details[ "decision_rounds" ] = rounds;
    const bool on_time = agreement.decision_rounds == std::set<std::int64_t>{ static_cast<std::int64_t>( ap.rounds ) };
    out.verdicts.push_back( { "decision-at-round-t+1", on_time, "decisions happen at rounds " + rounds.dump() } );
    return out;
}

inline std::string strategy_name( const json& j, const std::string& where )
{
    if ( !j.is_string() )
        throw config_error( where + ": expected a strategy name" );
    return j.get<std::string>();
}

inline suite_output run_game( const json& params, const std::string& base_dir )
{
    only_keys( params, { "model", "path", "base", "switches", "switch_aware", "figure2" }, "params" );
    const auto model = get_or<std::string>( params, "model", "figure3", "params" );
    suite_output out;

    auto add_state_space = [ & ]( const system& sys, const games::state_space_model& m ) {
        for ( const auto& w : m.states )
            out.events.emplace( w, games::state_is( sys, w ) );
        std::set<std::pair<std::string, std::string>> profiles( m.profile.begin(), m.profile.end() );
        for ( const auto& [ s1, s2 ] : profiles )
            out.events.emplace( "profile_" + s1 + "_" + s2, games::profile_is( sys, s1, s2 ) );
        // Each player knows its own strategy everywhere.
        bool known = true;
        for ( std::size_t p = 0; p < 2; ++p )
            for ( std::size_t w = 0; w < m.states.size(); ++w )
            {
                const auto& s = m.strategy_of( p, w );
                const auto e = event::from( sys, "", [ & ]( const system& x, point pt ) {
                    const auto& prof = *x.state_at( pt ).env.child( "profile" );
                    return prof.child( ( p == 0 ? "s1:" : "s2:" ) + s ) != nullptr;
                } );
                known = known && knows( sys, agent_id{ p + 1 }, e ).points.test( sys.index_of( { w, 0 } ) );
            }
        out.verdicts.push_back( { "players-know-own-strategy", known, "strategy is constant on every own cell" } );
        out.graph_time = 0;
    };
    auto add_coherence = [ & ]( const games::normal_form_game& g, const games::game_tree& t, const auto& to_profile ) {
        verdict v{ "representation-coherence", true, "" };
        json rows = json::array();
        for ( const auto& row : games::coherence_table( g, t, to_profile ) )
        {
            rows.push_back( json{ { "profile", row.row + "," + row.col },
                                  { "table", { row.table.first, row.table.second } },
                                  { "played", { row.played.first, row.played.second } } } );
            if ( row.table != row.played )
            {
                v.pass = false;
                v.witnesses.push_back( rows.back() );
            }
        }
        v.detail = std::to_string( rows.size() ) + " profiles compared";
        out.details[ "profiles" ] = rows;
        out.verdicts.push_back( std::move( v ) );
    };

    if ( model == "figure1" )
        add_coherence( games::figure1_normal_form(), games::figure1_extensive_form(), games::figure1_profile );
    else if ( model == "figure3" )
    {
        const auto m = games::figure3_model();
        out.sys.emplace( games::build_state_space_system( m ) );
        add_state_space( *out.sys, m );
    }
    else if ( model == "figure2" )
    {
        games::figure2_parameters fp;
        if ( params.contains( "figure2" ) )
        {
            const auto& j = params.at( "figure2" );
            only_keys( j, { "p_x1", "stop_x1", "stop_x2", "x3_left", "x3_right", "x4_left", "x4_right" }, "params.figure2" );
            fp.p_x1 = j.value( "p_x1", fp.p_x1 );
            if ( fp.p_x1 < 0 || fp.p_x1 > 1 )
                throw config_error( "params.figure2.p_x1: expected a probability" );
            fp.stop_x1 = get_or<int>( j, "stop_x1", fp.stop_x1, "params.figure2" );
            fp.stop_x2 = get_or<int>( j, "stop_x2", fp.stop_x2, "params.figure2" );
            fp.x3_left = get_or<int>( j, "x3_left", fp.x3_left, "params.figure2" );
            fp.x3_right = get_or<int>( j, "x3_right", fp.x3_right, "params.figure2" );
            fp.x4_left = get_or<int>( j, "x4_left", fp.x4_left, "params.figure2" );
            fp.x4_right = get_or<int>( j, "x4_right", fp.x4_right, "params.figure2" );
        }
        const auto tree = games::figure2_tree( fp );
        auto named = [ & ]( const json& j, const std::string& where ) -> games::named_strategy {
            if ( j.is_string() )
            {
                const auto name = j.get<std::string>();
                if ( name == "f" )
                    return { "f", games::figure2_f() };
                if ( name == "f'" )
                    return { "f'", games::figure2_f_prime() };
                throw config_error( where + ": unknown strategy '" + name + "' (use f, f' or an object)" );
            }
            only_keys( j, { "name", "moves" }, where );
            return { get_or<std::string>( j, "name", "custom", where ), j.at( "moves" ).get<games::strategy>() };
        };
        const auto base = named( params.value( "base", json( "f" ) ), "params.base" );
        games::recall_options ro;
        ro.switch_aware = get_or<bool>( params, "switch_aware", false, "params" );
        if ( params.contains( "switches" ) )
            for ( std::size_t i = 0; i < params.at( "switches" ).size(); ++i )
            {
                const auto& s = params.at( "switches" )[ i ];
                const std::string where = "params.switches[" + std::to_string( i ) + "]";
                only_keys( s, { "at", "to" }, where );
                ro.switches.push_back( { get_or<std::string>( s, "at", "", where ), named( s.at( "to" ), where + ".to" ) } );
            }
        out.sys.emplace( games::imperfect_recall_system( tree, base, ro ) );
        for ( const auto& n : tree.nodes() )
            out.events.emplace( "at_" + n.id, games::at_node( *out.sys, n.id ) );
        out.details[ "expected_utility_of_base" ] = games::expected_utility( tree, { base.moves }, 1 );
    }
    else if ( model == "file" )
    {
        auto path = get_or<std::string>( params, "path", "", "params" );
        if ( path.empty() )
            throw config_error( "params.path: required for model 'file'" );
        if ( path.front() != '/' && !base_dir.empty() )
            path = base_dir + "/" + path;
        std::ifstream in( path );
        if ( !in )
            throw config_error( "params.path: cannot read '" + path + "'" );
        nlohmann::json j;
        try
        {
            j = nlohmann::json::parse( in );
        }
        catch ( const nlohmann::json::parse_error& e )
        {
            throw config_error( path + ": " + e.what() );
        }
        const auto g = games::load_game_file( j );
        auto to_profile = [ &g ]( const std::string& a, const std::string& b ) { return g.profile( a, b ); };
        if ( g.normal_form && g.tree )
            add_coherence( *g.normal_form, *g.tree, to_profile );
        if ( g.state_space )
        {
            if ( !g.tree )
                throw config_error( "game file: a state_space section needs a tree to generate plays" );
            out.sys.emplace( games::build_state_space_system( *g.state_space, *g.tree, to_profile ) );
            add_state_space( *out.sys, *g.state_space );
        }
    }
    else
        throw config_error( "params.model: expected figure1, figure2, figure3 or file, got '" + model + "'" );
    return out;
}

inline suite_output run_custom( const json& params )
{
    only_keys( params, { "runs" }, "params" );
    if ( !params.contains( "runs" ) || !params.at( "runs" ).is_array() )
        throw config_error( "params.runs: expected a list of runs" );
    std::vector<run> runs;
    const auto& list = params.at( "runs" );
    for ( std::size_t r = 0; r < list.size(); ++r )
    {
        run cur;
        if ( !list[ r ].is_array() )
            throw config_error( "params.runs[" + std::to_string( r ) + "]: expected a list of global states" );
        for ( std::size_t m = 0; m < list[ r ].size(); ++m )
        {
            const std::string where = "params.runs[" + std::to_string( r ) + "][" + std::to_string( m ) + "]";
            const auto& g = list[ r ][ m ];
            only_keys( g, { "env", "locals" }, where );
            try
            {
                global_state s{ parse_term( get_or<std::string>( g, "env", "env", where ) ), {} };
                for ( const auto& l : g.at( "locals" ) )
                    s.locals.push_back( parse_term( l.get<std::string>() ) );
                cur.push_back( std::move( s ) );
            }
            catch ( const std::invalid_argument& e )
            {
                throw config_error( where + ": " + e.what() );
            }
            catch ( const nlohmann::json::exception& e )
            {
                throw config_error( where + ": " + e.what() );
            }
        }
        runs.push_back( std::move( cur ) );
    }
    suite_output out;
    try
    {
        out.sys.emplace( std::move( runs ) );
    }
    catch ( const std::invalid_argument& e )
    {
        throw config_error( std::string( "params.runs: " ) + e.what() );
    }
    return out;
}

inline bool check_expectation( const system& sys, const std::map<std::string, event>& events, const json& expect, const event& result,
                               verdict& v, const std::string& where )
{
    auto witness_points = [ & ]( const point_set& s ) { return points_json( sys, s, 20 ); };
    if ( expect.is_string() )
    {
        const auto e = expect.get<std::string>();
        if ( e == "empty" )
        {
            v.witnesses = witness_points( result.points );
            return result.points.empty();
        }
        if ( e == "nonempty" )
            return !result.points.empty();
        if ( e == "everywhere" )
        {
            v.witnesses = witness_points( ~result.points );
            return result.points.all();
        }
        throw config_error( where + ": unknown expectation '" + e + "'" );
    }
    only_keys( expect, { "holds_at", "fails_at", "equals", "contains" }, where );
    bool ok = true;
    for ( const char* key : { "holds_at", "fails_at" } )
        if ( expect.contains( key ) )
            for ( const auto& s : expect.at( key ) )
            {
                const auto p = parse_point( s.get<std::string>(), where + "." + key );
                if ( !sys.contains( p ) )
                    throw config_error( where + "." + key + ": point " + point_string( p ) + " is not in the system" );
                if ( result.points.test( sys.index_of( p ) ) != ( std::string( key ) == "holds_at" ) )
                {
                    ok = false;
                    v.witnesses.push_back( point_string( p ) );
                }
            }
    for ( const char* key : { "equals", "contains" } )
        if ( expect.contains( key ) )
        {
            const auto name = get_or<std::string>( expect, key, "", where );
            auto it = events.find( name );
            if ( it == events.end() )
                throw config_error( where + "." + key + ": unknown event '" + name + "'" );
            const auto& other = it->second.points;
            const auto bad = std::string( key ) == "equals" ? ( ( other & ~result.points ) | ( result.points & ~other ) ) : ( other & ~result.points );
            if ( !bad.empty() )
            {
                ok = false;
                for ( const auto& w : witness_points( bad ) )
                    v.witnesses.push_back( w );
            }
        }
    return ok;
}

} // namespace detail

struct scenario_result
{
    int exit_code = exit_pass;
    json report;
    json witnesses; // byzantine witness file, when produced
    std::optional<std::string> graph;
};

// Everything but I/O: validates the config, runs the suite, evaluates queries and verdicts.
// `base_dir` resolves relative paths inside the config.
inline scenario_result run_scenario( const json& config, const run_options& opts = {}, const std::string& base_dir = "", bool want_graph = false,
                                     std::optional<std::size_t> graph_time = std::nullopt )
{
    const auto start = std::chrono::steady_clock::now();
    detail::only_keys( config, { "name", "suite", "params", "events", "queries", "budget", "graph" }, "scenario" );
    const auto suite = detail::get_or<std::string>( config, "suite", "", "scenario" );
    if ( suite.empty() )
        throw config_error( "scenario: missing 'suite'" );
    const std::size_t budget = opts.budget ? *opts.budget : config.contains( "budget" ) ? detail::get_or<std::size_t>( config, "budget", 0, "scenario" ) : default_budget();
    const json params = config.value( "params", json::object() );

    suite_output out;
    if ( suite == "coord-attack" )
        out = detail::run_coord_attack( params, budget, opts.workers );
    else if ( suite == "byzantine" )
        out = detail::run_byzantine( params, budget, opts.workers );
    else if ( suite == "game" )
        out = detail::run_game( params, base_dir );
    else if ( suite == "custom" )
        out = detail::run_custom( params );
    else
        throw config_error( "scenario.suite: unknown suite '" + suite + "'" );

    json report;
    report[ "format" ] = report_format;
    report[ "scenario" ] = config;
    report[ "budget" ] = budget;
    if ( out.sys )
    {
        const auto& sys = *out.sys;
        report[ "system" ] = json{ { "agents", sys.agents() }, { "horizon", sys.horizon() }, { "runs", sys.runs().size() }, { "points", sys.point_count() } };
        const json defs = config.value( "events", json() );
        event_compiler( sys, defs, out.events ).compile_all();
    }
    else if ( config.contains( "events" ) || config.contains( "queries" ) )
        throw config_error( "scenario: this suite configuration builds no system, so events and queries are unavailable" );
    report[ "suite" ] = out.details;

    json queries = json::array();
    if ( config.contains( "queries" ) )
    {
        const auto& list = config.at( "queries" );
        if ( !list.is_array() )
            throw config_error( "queries: expected a list" );
        for ( std::size_t i = 0; i < list.size(); ++i )
        {
            const std::string where = "queries[" + std::to_string( i ) + "]";
            const auto& q = list[ i ];
            detail::only_keys( q, { "query", "expect" }, where );
            const auto text = detail::get_or<std::string>( q, "query", "", where );
            const auto e = evaluate_query( *out.sys, out.events, text );
            json entry{ { "query", text }, { "holds", e.points.count() }, { "points", detail::points_json( *out.sys, e.points, 100 ) } };
            if ( q.contains( "expect" ) )
            {
                verdict v{ "query: " + text, true, "" };
                v.pass = detail::check_expectation( *out.sys, out.events, q.at( "expect" ), e, v, where + ".expect" );
                v.detail = "expect " + q.at( "expect" ).dump();
                entry[ "expect" ] = q.at( "expect" );
                entry[ "pass" ] = v.pass;
                out.verdicts.push_back( std::move( v ) );
            }
            queries.push_back( std::move( entry ) );
        }
    }
    report[ "queries" ] = queries;

    bool pass = true;
    json verdicts = json::array();
    for ( const auto& v : out.verdicts )
    {
        pass = pass && v.pass;
        verdicts.push_back( json{ { "name", v.name }, { "pass", v.pass }, { "detail", v.detail }, { "witnesses", v.witnesses } } );
    }
    report[ "verdicts" ] = verdicts;
    report[ "result" ] = pass ? "pass" : "fail";

    scenario_result res;
    res.exit_code = pass ? exit_pass : exit_fail;
    res.witnesses = out.witness_file;
    if ( want_graph )
    {
        if ( !out.sys )
            throw config_error( "scenario: this suite configuration builds no system to draw" );
        if ( !graph_time && config.contains( "graph" ) )
        {
            detail::only_keys( config.at( "graph" ), { "time" }, "graph" );
            graph_time = detail::get_or<std::size_t>( config.at( "graph" ), "time", 0, "graph" );
        }
        res.graph = to_dot( *out.sys, graph_time ? graph_time : out.graph_time );
    }
    if ( opts.timing )
    {
        const auto ms = std::chrono::duration<double, std::milli>( std::chrono::steady_clock::now() - start ).count();
        report[ "timing" ] = json{ { "wall_ms", ms }, { "workers", opts.workers } };
    }
    res.report = std::move( report );
    return res;
}

inline json load_json_file( const std::string& path )
{
    std::ifstream in( path );
    if ( !in )
        throw config_error( "cannot read '" + path + "'" );
    try
    {
        return json::parse( in );
    }
    catch ( const json::parse_error& e )
    {
        throw config_error( path + ": " + e.what() );
    }
}

// ---------------------------------------------------------------------------------------
// Witness replay

struct replay_outcome
{
    std::size_t index = 0;
    std::string property;
    bool reproduced = false;
    std::string detail;
};

inline std::vector<replay_outcome> replay_witnesses( const json& file )
{
    detail::only_keys( file, { "format", "n", "t", "failures", "protocol", "witnesses" }, "witness file" );
    if ( detail::get_or<std::string>( file, "format", "", "witness file" ) != witness_format )
        throw config_error( std::string( "witness file: expected format " ) + witness_format );
    byz::failure_model fm;
    fm.n = detail::get_or<std::size_t>( file, "n", 0, "witness file" );
    fm.t = detail::get_or<std::size_t>( file, "t", 0, "witness file" );
    fm.kind = byz::parse_failure_kind( detail::get_or<std::string>( file, "failures", "", "witness file" ) );
    fm.validate();
    const auto protocol = detail::get_or<std::string>( file, "protocol", "eig", "witness file" );
    const auto ap = byz::eig_protocol( fm.n, fm.t, protocol == "always-retreat" ? byz::decision_rule::always_retreat : byz::decision_rule::any_attack );

    std::vector<replay_outcome> out;
    const auto& list = file.value( "witnesses", json::array() );
    for ( std::size_t i = 0; i < list.size(); ++i )
    {
        const std::string where = "witnesses[" + std::to_string( i ) + "]";
        const auto& w = list[ i ];
        detail::only_keys( w, { "property", "run", "prefs", "faulty", "moves", "decisions" }, where );
        byz::adversary_schedule sched;
        std::vector<std::int64_t> prefs;
        try
        {
            prefs = w.at( "prefs" ).get<std::vector<std::int64_t>>();
            sched.faulty = w.at( "faulty" ).get<std::vector<std::int64_t>>();
            for ( const auto& m : w.at( "moves" ) )
                sched.moves.push_back( parse_term( m.get<std::string>() ) );
        }
        catch ( const std::exception& e )
        {
            throw config_error( where + ": " + e.what() );
        }
        replay_outcome o;
        o.index = i;
        o.property = w.value( "property", "" );
        const auto r = byz::replay( ap, fm, prefs, sched );
        const system one( { r } );
        byz::check_report rep;
        if ( o.property == "agreement" )
            rep = byz::check_agreement( one );
        else if ( o.property == "validity" )
            rep = byz::check_validity( one );
        else if ( o.property == "simultaneity" )
            rep = byz::check_simultaneity( one );
        else if ( o.property == "liveness" )
            rep = byz::check_agreement( one );
        else
            throw config_error( where + ".property: unknown property '" + o.property + "'" );
        o.reproduced = o.property == "liveness" ? !rep.liveness.empty() : !rep.counterexamples.empty();
        o.detail = "decisions " + detail::decisions_json( r ).dump();
        out.push_back( std::move( o ) );
    }
    return out;
}

} // namespace runsys::cli
