#include "runsys/runsys.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace runsys;
using cli::json;

namespace
{

struct common_flags
{
    std::optional<std::size_t> budget;
    unsigned workers = 1;
    std::string report;
    bool timing = false;
    bool seedless = false;
};

void add_common( CLI::App* app, common_flags& f )
{
    app->add_option( "--budget", f.budget, "state budget (default: $RUNSYS_BUDGET or 1000000)" );
    app->add_option( "--workers", f.workers, "generation threads" )->check( CLI::Range( 1U, 256U ) );
    app->add_option( "--report", f.report, "write the JSON report here instead of stdout" );
    app->add_flag( "--timing", f.timing, "add a wall-time section to the report" );
    app->add_flag( "--seedless", f.seedless, "assert that no randomness is used" );
}

void write_file( const std::string& path, const std::string& text )
{
    std::ofstream out( path, std::ios::binary );
    if ( !out )
        throw config_error( "cannot write '" + path + "'" );
    out << text;
}

int emit( const cli::scenario_result& res, const common_flags& f, const std::string& witness_out )
{
    const auto text = res.report.dump( 2 ) + "\n";
    if ( f.report.empty() )
        std::cout << text;
    else
    {
        write_file( f.report, text );
        std::cout << "result: " << res.report.at( "result" ).get<std::string>() << " (" << f.report << ")\n";
    }
    if ( !witness_out.empty() )
    {
        if ( res.witnesses.is_null() )
            throw config_error( "--witness-out: this scenario produces no replayable witnesses" );
        write_file( witness_out, res.witnesses.dump( 2 ) + "\n" );
    }
    return res.exit_code;
}

cli::run_options options( const common_flags& f ) { return { f.budget, f.workers, f.timing }; }

std::string directory_of( const std::string& path )
{
    const auto dir = std::filesystem::path( path ).parent_path();
    return dir.empty() ? "." : dir.string();
}

} // namespace

int main( int argc, char** argv )
{
    CLI::App app{ "runsys: runs-and-systems knowledge analysis" };
    app.require_subcommand( 1 );

    common_flags run_flags;
    std::string config;
    std::string witness_out;
    auto* run = app.add_subcommand( "run", "run a scenario file" );
    run->add_option( "--config", config, "scenario file" )->required();
    run->add_option( "--witness-out", witness_out, "write replayable witnesses (byzantine checks)" );
    add_common( run, run_flags );

    common_flags graph_flags;
    std::string graph_config;
    std::string graph_out;
    std::optional<std::size_t> graph_time;
    auto* graph = app.add_subcommand( "export-graph", "write the indistinguishability graph of a scenario as DOT" );
    graph->add_option( "--config", graph_config, "scenario file" )->required();
    graph->add_option( "--out", graph_out, "DOT output path (default stdout)" );
    graph->add_option( "--at-time", graph_time, "draw only points at this time" );
    graph->add_option( "--budget", graph_flags.budget, "state budget" );
    graph->add_option( "--workers", graph_flags.workers, "generation threads" )->check( CLI::Range( 1U, 256U ) );

    auto* list = app.add_subcommand( "list-suites", "list the available suites" );

    common_flags ca_flags;
    std::size_t transits = 2;
    std::size_t ca_horizon = 6;
    std::string rule = "never";
    bool reliable = false;
    auto* ca = app.add_subcommand( "coord-attack", "messenger system checks" );
    ca->add_option( "--transits", transits, "maximum messenger transits" );
    ca->add_option( "--horizon", ca_horizon, "rounds" );
    ca->add_option( "--attack-rule", rule, "never | after-exchange | sender-eager" );
    ca->add_flag( "--reliable", reliable, "deliver every message (control)" );
    add_common( ca, ca_flags );

    common_flags bz_flags;
    std::size_t n = 3;
    std::size_t t = 1;
    std::string failures = "crash";
    std::optional<std::size_t> bz_horizon;
    std::string experiment = "check";
    std::string protocol = "eig";
    std::optional<std::size_t> max_claims;
    std::string bz_witness_out;
    std::string replay;
    auto* bz = app.add_subcommand( "byzantine", "agreement checks and the lower-bound experiment" );
    bz->add_option( "--n", n, "agents" );
    bz->add_option( "--t", t, "maximum faulty agents" );
    bz->add_option( "--failures", failures, "crash | omission | byzantine" );
    bz->add_option( "--horizon", bz_horizon, "rounds (default t+1)" );
    bz->add_option( "--experiment", experiment, "check | lower-bound" );
    bz->add_option( "--protocol", protocol, "eig | always-retreat" );
    bz->add_option( "--max-forged-claims", max_claims, "claims per forged message" );
    bz->add_option( "--witness-out", bz_witness_out, "write replayable witnesses" );
    bz->add_option( "--replay", replay, "replay a witness file instead of searching" );
    add_common( bz, bz_flags );

    try
    {
        app.parse( argc, argv );
    }
    catch ( const CLI::ParseError& e )
    {
        const int code = app.exit( e );
        return code == 0 ? 0 : cli::exit_error;
    }

    try
    {
        if ( *list )
        {
            for ( const auto& s : cli::suites() )
                std::cout << s.name << "\t" << s.summary << "\n";
            return cli::exit_pass;
        }
        if ( *run )
        {
            const auto cfg = cli::load_json_file( config );
            return emit( cli::run_scenario( cfg, options( run_flags ), directory_of( config ) ), run_flags, witness_out );
        }
        if ( *graph )
        {
            const auto cfg = cli::load_json_file( graph_config );
            const auto res = cli::run_scenario( cfg, options( graph_flags ), directory_of( graph_config ), true, graph_time );
            if ( graph_out.empty() )
                std::cout << *res.graph;
            else
                write_file( graph_out, *res.graph );
            return cli::exit_pass;
        }
        if ( *ca )
        {
            json cfg{ { "name", "coord-attack" },
                      { "suite", "coord-attack" },
                      { "params", { { "transits", transits }, { "horizon", ca_horizon }, { "attack_rule", rule }, { "reliable", reliable } } } };
            return emit( cli::run_scenario( cfg, options( ca_flags ) ), ca_flags, "" );
        }
        if ( *bz )
        {
            if ( !replay.empty() )
            {
                const auto outcomes = cli::replay_witnesses( cli::load_json_file( replay ) );
                bool all = !outcomes.empty();
                for ( const auto& o : outcomes )
                {
                    std::cout << "witness " << o.index << " (" << o.property << "): " << ( o.reproduced ? "reproduced" : "NOT reproduced" ) << ", "
                              << o.detail << "\n";
                    all = all && o.reproduced;
                }
                return all ? cli::exit_pass : cli::exit_fail;
            }
            json params{ { "n", n }, { "t", t }, { "failures", failures }, { "experiment", experiment }, { "protocol", protocol } };
            if ( bz_horizon )
                params[ "horizon" ] = *bz_horizon;
            if ( max_claims )
                params[ "max_forged_claims" ] = *max_claims;
            json cfg{ { "name", "byzantine" }, { "suite", "byzantine" }, { "params", params } };
            return emit( cli::run_scenario( cfg, options( bz_flags ) ), bz_flags, bz_witness_out );
        }
    }
    catch ( const resource_error& e )
    {
        std::cerr << "resource error: " << e.what() << " (reached " << e.reached() << ")\n";
        return cli::exit_error;
    }
    catch ( const config_error& e )
    {
        std::cerr << "configuration error: " << e.what() << "\n";
        return cli::exit_error;
    }
    catch ( const model_error& e )
    {
        std::cerr << "model error: " << e.what() << "\n";
        return cli::exit_error;
    }
    catch ( const std::exception& e )
    {
        std::cerr << "error: " << e.what() << "\n";
        return cli::exit_error;
    }
    return cli::exit_error;
}
