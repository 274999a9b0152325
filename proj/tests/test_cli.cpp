#include "runsys/runsys.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using runsys::cli::json;

namespace
{

const std::string scenario_dir = RUNSYS_SCENARIO_DIR;

const std::map<std::string, int> expected_exit{
    { "coord_attack_default.json", 0 }, { "coord_attack_reliable.json", 0 }, { "coord_attack_eager.json", 1 },
    { "byzantine_crash_n4t1.json", 0 }, { "byzantine_n3t1.json", 1 },        { "lower_bound_n4t1.json", 0 },
    { "figure1.json", 0 },              { "figure3.json", 0 },               { "figure2_switch.json", 0 },
    { "figure2_no_switch.json", 0 },    { "custom_two_runs.json", 0 },       { "game_file.json", 0 },
    { "malformed.json", 2 },
};

class scratch
{
    fs::path _dir;

public:
    scratch() : _dir{ fs::temp_directory_path() / ( "runsys-test-" + std::to_string( ::getpid() ) + "-" + std::to_string( counter()++ ) ) }
    {
        fs::create_directories( _dir );
    }
    ~scratch() { fs::remove_all( _dir ); }
    scratch( const scratch& ) = delete;
    scratch& operator=( const scratch& ) = delete;

    [[nodiscard]] std::string file( const std::string& name ) const { return ( _dir / name ).string(); }

private:
    static int& counter()
    {
        static int c = 0;
        return c;
    }
};

std::string slurp( const std::string& path )
{
    std::ifstream in( path );
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Runs the CLI with stdout and stderr captured to files in `s`.
int cli( const scratch& s, const std::string& args, const std::string& env = "" )
{
    const auto cmd = env + " '" + std::string( RUNSYS_CLI ) + "' " + args + " >'" + s.file( "out" ) + "' 2>'" + s.file( "err" ) + "'";
    const int status = std::system( cmd.c_str() );
    return WIFEXITED( status ) ? WEXITSTATUS( status ) : -1;
}

runsys::cli::scenario_result run_file( const std::string& name, runsys::cli::run_options opts = {} )
{
    return runsys::cli::run_scenario( runsys::cli::load_json_file( scenario_dir + "/" + name ), opts, scenario_dir );
}

} // namespace

TEST( Scenarios, EveryFileIsCovered )
{
    for ( const auto& entry : fs::directory_iterator( scenario_dir ) )
        if ( entry.path().extension() == ".json" )
        {
            EXPECT_TRUE( expected_exit.count( entry.path().filename().string() ) ) << entry.path();
        }
}

TEST( Scenarios, LibraryOutcomes )
{
    for ( const auto& [ name, code ] : expected_exit )
    {
        if ( code == runsys::cli::exit_error )
        {
            EXPECT_THROW( (void)run_file( name ), runsys::config_error ) << name;
            continue;
        }
        const auto res = run_file( name );
        EXPECT_EQ( res.exit_code, code ) << name;
        EXPECT_EQ( res.report.at( "format" ), runsys::cli::report_format );
        EXPECT_EQ( res.report.at( "result" ), code == 0 ? "pass" : "fail" ) << name;
        EXPECT_FALSE( res.report.contains( "timing" ) );
    }
}

TEST( Scenarios, CliExitCodes )
{
    scratch s;
    for ( const auto& [ name, code ] : expected_exit )
        EXPECT_EQ( cli( s, "run --config '" + scenario_dir + "/" + name + "' --report '" + s.file( "r.json" ) + "'" ), code ) << name;
}

TEST( Scenarios, UnknownKeysAreNamed )
{
    scratch s;
    EXPECT_EQ( cli( s, "run --config '" + scenario_dir + "/malformed.json'" ), 2 );
    EXPECT_NE( slurp( s.file( "err" ) ).find( "horizn" ), std::string::npos );
    EXPECT_THROW( (void)runsys::cli::run_scenario( json{ { "suite", "nope" } } ), runsys::config_error );
    EXPECT_THROW( (void)runsys::cli::run_scenario( json{ { "suite", "coord-attack" }, { "params", { { "transits", -1 } } } } ), runsys::config_error );
    EXPECT_THROW( (void)runsys::cli::run_scenario( json{ { "suite", "coord-attack" }, { "queries", { { { "query", "K(1," } } } } } ), runsys::config_error );
}

TEST( Scenarios, WorkersDoNotChangeReports )
{
    for ( const auto* name : { "byzantine_n3t1.json", "coord_attack_default.json", "lower_bound_n4t1.json" } )
    {
        runsys::cli::run_options four;
        four.workers = 4;
        EXPECT_EQ( run_file( name ).report.dump(), run_file( name, four ).report.dump() ) << name;
    }
}

TEST( Scenarios, TimingIsOptIn )
{
    runsys::cli::run_options timed;
    timed.timing = true;
    auto with = run_file( "figure3.json", timed ).report;
    ASSERT_TRUE( with.contains( "timing" ) );
    with.erase( "timing" );
    EXPECT_EQ( with.dump(), run_file( "figure3.json" ).report.dump() );
}

TEST( Scenarios, BudgetFromEnvironment )
{
    scratch s;
    EXPECT_EQ( cli( s, "coord-attack --transits 4", "RUNSYS_BUDGET=3" ), 2 );
    EXPECT_NE( slurp( s.file( "err" ) ).find( "resource error" ), std::string::npos );
    EXPECT_EQ( cli( s, "coord-attack --transits 4", "RUNSYS_BUDGET=banana" ), 2 );
    EXPECT_EQ( cli( s, "coord-attack --transits 4 --budget 3" ), 2 );
    EXPECT_EQ( cli( s, "coord-attack --transits 4" ), 0 );
    EXPECT_EQ( json::parse( slurp( s.file( "out" ) ) ).at( "budget" ), 1'000'000 );
}

TEST( Cli, GraphExport )
{
    scratch s;
    ASSERT_EQ( cli( s, "export-graph --config '" + scenario_dir + "/figure3.json' --out '" + s.file( "g.dot" ) + "'" ), 0 );
    const auto dot = slurp( s.file( "g.dot" ) );
    EXPECT_EQ( dot.rfind( "graph indistinguishability {", 0 ), 0U );
    std::size_t edges = 0;
    for ( auto pos = dot.find( " -- " ); pos != std::string::npos; pos = dot.find( " -- ", pos + 1 ) )
        ++edges;
    EXPECT_EQ( edges, 4U );
}

TEST( Cli, WitnessRoundTrip )
{
    scratch s;
    ASSERT_EQ( cli( s, "byzantine --n 3 --t 1 --failures byzantine --report '" + s.file( "r.json" ) + "' --witness-out '" + s.file( "w.json" ) + "'" ), 1 );
    const auto w = json::parse( slurp( s.file( "w.json" ) ) );
    EXPECT_EQ( w.at( "format" ), runsys::cli::witness_format );
    ASSERT_FALSE( w.at( "witnesses" ).empty() );
    for ( const auto& o : runsys::cli::replay_witnesses( w ) )
        EXPECT_TRUE( o.reproduced ) << o.index;
    EXPECT_EQ( cli( s, "byzantine --n 3 --t 1 --failures byzantine --replay '" + s.file( "w.json" ) + "'" ), 0 );
    EXPECT_NE( slurp( s.file( "out" ) ).find( "reproduced" ), std::string::npos );

    // A tampered witness no longer shows the violation.
    auto tampered = w;
    tampered[ "witnesses" ] = json::array( { w.at( "witnesses" ).front() } );
    const auto faulty = tampered[ "witnesses" ][ 0 ][ "faulty" ].get<std::vector<int>>();
    const auto traitor = std::find( faulty.begin(), faulty.end(), 1 ) - faulty.begin() + 1;
    for ( auto& m : tampered[ "witnesses" ][ 0 ][ "moves" ] )
        m = "adv(forge=" + std::to_string( traitor ) + ")";
    EXPECT_FALSE( runsys::cli::replay_witnesses( tampered ).front().reproduced );
}

TEST( Cli, UsageErrors )
{
    scratch s;
    EXPECT_EQ( cli( s, "" ), 2 );
    EXPECT_EQ( cli( s, "frobnicate" ), 2 );
    EXPECT_EQ( cli( s, "run" ), 2 );
    EXPECT_EQ( cli( s, "byzantine --failures sleepy" ), 2 );
    EXPECT_EQ( cli( s, "byzantine --n 3 --t 3" ), 2 );
    EXPECT_EQ( cli( s, "run --config /nonexistent.json" ), 2 );
    EXPECT_EQ( cli( s, "list-suites" ), 0 );
    EXPECT_NE( slurp( s.file( "out" ) ).find( "byzantine" ), std::string::npos );
    EXPECT_EQ( cli( s, "--help" ), 0 );
}
