#include "hbgs/bench.hpp"

#include "hbgs/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace hbgs::bench {

using json = nlohmann::ordered_json;

namespace {

constexpr std::array< System, 9 > every_system{ System::species,          System::pressure,   System::liquid_voltage,
                                                 System::solid_voltage,    System::coupled_voltages,
                                                 System::nonvoltage,       System::end_to_end, System::monolithic_ras,
                                                 System::direct };

constexpr std::array< System, 7 > table_rows{ System::species,       System::pressure,         System::liquid_voltage,
                                              System::solid_voltage, System::coupled_voltages, System::nonvoltage,
                                              System::end_to_end };

std::string number( double v )
{
    if ( std::isnan( v ) )
        return "nan";
    if ( std::isinf( v ) )
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars( buf, buf + sizeof buf, v );
    return std::string( buf, r.ptr );
}

double seconds_since( std::chrono::steady_clock::time_point t0 )
{
    return std::chrono::duration< double >( std::chrono::steady_clock::now() - t0 ).count();
}

} // namespace

std::string_view system_name( System s )
{
    switch ( s )
    {
    case System::species: return "species";
    case System::pressure: return "pressure";
    case System::liquid_voltage: return "liquid_voltage";
    case System::solid_voltage: return "solid_voltage";
    case System::coupled_voltages: return "coupled_voltages";
    case System::nonvoltage: return "nonvoltage";
    case System::end_to_end: return "end_to_end";
    case System::monolithic_ras: return "monolithic_ras";
    case System::direct: return "direct";
    }
    return "?";
}

System system_from_name( std::string_view name )
{
    for ( System s : every_system )
        if ( system_name( s ) == name )
            return s;
    throw ConfigError( "unknown system '" + std::string( name ) + "'" );
}

std::span< const System > table_systems() { return table_rows; }

std::string solver_label( System system, const SolverSettings& st )
{
    const auto amg = []( const amg::AmgParams& p ) {
        return "amg(theta=" + number( p.drop_tolerance ) + ",deg=" + std::to_string( p.smoother_degree ) + ")";
    };
    const std::string gm = "gmres(" + std::to_string( st.restart ) + ")";
    const std::string fg = "fgmres(" + std::to_string( st.restart ) + ")";
    switch ( system )
    {
    case System::species: return gm + "+ras-ilu0(overlap=" + std::to_string( st.overlap ) + ")";
    case System::pressure: return gm + "+" + amg( st.precon.pressure_amg );
    case System::liquid_voltage: return gm + "+" + amg( st.precon.phi_l_amg );
    case System::solid_voltage: return gm + "+" + amg( st.precon.phi_s_amg );
    case System::coupled_voltages: return fg + "+voltage-bgs";
    case System::nonvoltage: return fg + "+nonvoltage-bgs";
    case System::end_to_end:
        return "fgmres(" + std::to_string( st.outer_restart ) + ")+hierarchical-bgs" +
               ( st.precon.mode == InnerMode::direct ? "(direct)" : "" );
    case System::monolithic_ras: return gm + "+ras-ilu0(overlap=" + std::to_string( st.overlap ) + ")";
    case System::direct: return "dense-lu";
    }
    return "?";
}

// ---------------------------------------------------------------------------

namespace {

std::vector< double > manufactured_rhs( const SparseMatrix& a, std::span< const double > u )
{
    std::vector< double > b( a.rows() );
    a.multiply( u, b );
    return b;
}

std::vector< double > concat( const BlockSystem& sys, std::span< const double > full, std::span< const Field > fields )
{
    std::vector< double > out;
    for ( Field f : fields )
    {
        const auto s = sys.segment( full, f );
        out.insert( out.end(), s.begin(), s.end() );
    }
    return out;
}

SolverConfig inner( const SolverSettings& st, bool flexible )
{
    SolverConfig c;
    c.restart            = st.restart;
    c.relative_tolerance = st.tolerance;
    c.max_iterations     = st.max_iterations;
    c.flexible           = flexible;
    return c;
}

void record( Run& run, const SolveResult& res )
{
    run.iterations        = res.stats.iterations;
    run.converged         = res.stats.converged;
    run.relative_residual = res.stats.final_relative_residual;
}

Run amg_solve( const SparseMatrix& a, std::span< const double > u, const amg::AmgParams& p, const SolverSettings& st )
{
    Run        run;
    const auto b  = manufactured_rhs( a, u );
    const auto t0 = std::chrono::steady_clock::now();
    const auto h  = amg::AmgHierarchy::build( a, p );
    const auto m  = h.as_preconditioner();
    run.setup_seconds = seconds_since( t0 );
    const auto t1     = std::chrono::steady_clock::now();
    record( run, gmres( as_operator( a ), &m, b, inner( st, false ) ) );
    run.solve_seconds = seconds_since( t1 );
    return run;
}

std::vector< schwarz::Point2 > all_coordinates( const BlockSystem& sys )
{
    std::vector< schwarz::Point2 > co;
    co.reserve( sys.size() );
    for ( Field f : all_fields )
        for ( const auto& p : sys.coordinates( f ) )
            co.push_back( p );
    return co;
}

Run run_once( const battery::BatteryCase& bc, System system, const SolverSettings& st, std::size_t workers )
{
    const auto& sys = bc.system;
    const auto  u   = std::span< const double >( bc.solution );
    Run         run;
    switch ( system )
    {
    case System::species:
    case System::monolithic_ras:
    {
        SparseMatrix                   mono;
        std::vector< schwarz::Point2 > mono_coords;
        const SparseMatrix*            a = nullptr;
        std::vector< double >          b;
        std::span< const schwarz::Point2 > coords;
        if ( system == System::species )
        {
            a      = sys.block( Field::liquid_species, Field::liquid_species );
            b      = manufactured_rhs( *a, sys.segment( u, Field::liquid_species ) );
            coords = sys.coordinates( Field::liquid_species );
        }
        else
        {
            mono        = sys.monolithic();
            mono_coords = all_coordinates( sys );
            a           = &mono;
            b.assign( sys.rhs().begin(), sys.rhs().end() );
            coords = mono_coords;
        }
        const auto t0  = std::chrono::steady_clock::now();
        const auto ras = schwarz::build_ras( *a, coords, workers, st.overlap );
        const auto m   = ras.as_preconditioner();
        run.setup_seconds = seconds_since( t0 );
        const auto t1     = std::chrono::steady_clock::now();
        record( run, gmres( as_operator( *a ), &m, b, inner( st, false ) ) );
        run.solve_seconds = seconds_since( t1 );
        return run;
    }
    case System::pressure:
        return amg_solve( *sys.block( Field::pressure, Field::pressure ), sys.segment( u, Field::pressure ),
                          st.precon.pressure_amg, st );
    case System::liquid_voltage:
        return amg_solve( *sys.block( Field::phi_l, Field::phi_l ), sys.segment( u, Field::phi_l ), st.precon.phi_l_amg, st );
    case System::solid_voltage:
        return amg_solve( *sys.block( Field::phi_s, Field::phi_s ), sys.segment( u, Field::phi_s ), st.precon.phi_s_amg, st );
    case System::coupled_voltages:
    {
        const auto a  = sys.group_matrix( voltage_fields, voltage_fields );
        const auto b  = manufactured_rhs( a, concat( sys, u, voltage_fields ) );
        const auto t0 = std::chrono::steady_clock::now();
        const VoltagePreconditioner pre( sys, st.precon );
        const auto                  m = pre.as_operator();
        run.setup_seconds             = seconds_since( t0 );
        const auto t1                 = std::chrono::steady_clock::now();
        record( run, fgmres( as_operator( a ), &m, b, inner( st, true ) ) );
        run.solve_seconds = seconds_since( t1 );
        return run;
    }
    case System::nonvoltage:
    {
        auto cfg               = st.precon;
        cfg.species_subdomains = workers;
        cfg.species_overlap    = st.overlap;
        const auto a           = sys.group_matrix( nonvoltage_fields, nonvoltage_fields );
        const auto b           = manufactured_rhs( a, concat( sys, u, nonvoltage_fields ) );
        const auto t0          = std::chrono::steady_clock::now();
        const NonVoltagePreconditioner pre( sys, cfg );
        const auto                     m = pre.as_operator();
        run.setup_seconds                = seconds_since( t0 );
        const auto t1                    = std::chrono::steady_clock::now();
        record( run, fgmres( as_operator( a ), &m, b, inner( st, true ) ) );
        run.solve_seconds = seconds_since( t1 );
        return run;
    }
    case System::end_to_end:
    {
        auto cfg               = st.precon;
        cfg.species_subdomains = workers;
        cfg.species_overlap    = st.overlap;
        const auto t0          = std::chrono::steady_clock::now();
        const ElectrochemPreconditioner pre( sys, cfg );
        const auto                      m = pre.as_operator();
        run.setup_seconds                 = seconds_since( t0 );
        SolverConfig oc;
        oc.restart            = st.outer_restart;
        oc.relative_tolerance = st.outer_tolerance;
        oc.max_iterations     = st.outer_max_iterations;
        oc.flexible           = true;
        const auto t1         = std::chrono::steady_clock::now();
        record( run, fgmres( sys.op(), &m, sys.rhs(), oc ) );
        run.solve_seconds  = seconds_since( t1 );
        const auto is      = pre.stats();
        run.inner_failures = is.voltage_failures + is.nonvoltage_failures;
        return run;
    }
    case System::direct:
    {
        const auto a  = sys.monolithic();
        const auto t0 = std::chrono::steady_clock::now();
        const auto lu = DenseFactorization::factor( a );
        run.setup_seconds = seconds_since( t0 );
        const auto t1     = std::chrono::steady_clock::now();
        const auto x      = lu.solve( sys.rhs() );
        run.solve_seconds = seconds_since( t1 );
        const auto r      = residual( a, x, sys.rhs() );
        const double rn   = std::sqrt( std::inner_product( r.begin(), r.end(), r.begin(), 0.0 ) );
        const double bn   = std::sqrt( std::inner_product( sys.rhs().begin(), sys.rhs().end(), sys.rhs().begin(), 0.0 ) );
        run.iterations        = 1;
        run.relative_residual = bn > 0 ? rn / bn : rn;
        run.converged         = true;
        return run;
    }
    }
    throw ConfigError( "unhandled system" );
}

} // namespace

Run run_system( const battery::BatteryCase& bc, System system, const SolverSettings& settings, std::size_t workers )
{
    if ( workers < 1 )
        throw ConfigError( "worker count must be at least 1" );
    try
    {
        return run_once( bc, system, settings, workers );
    }
    catch ( const ConfigError& )
    {
        throw;
    }
    catch ( const std::exception& e )
    {
        Run r;
        r.error = e.what();
        return r;
    }
}

Summary summarize( std::span< const double > samples )
{
    Summary s;
    if ( samples.empty() )
        return s;
    const double n = static_cast< double >( samples.size() );
    s.mean         = std::accumulate( samples.begin(), samples.end(), 0.0 ) / n;
    double var     = 0.0;
    for ( double v : samples )
        var += ( v - s.mean ) * ( v - s.mean );
    s.stddev = std::sqrt( var / n );
    return s;
}

ExperimentRecord aggregate_runs( ExperimentRecord meta, std::span< const Run > runs )
{
    if ( runs.size() < 2 )
        throw ConfigError( "aggregate_runs: need a warmup run and at least one measured run" );
    const auto            measured = runs.subspan( 1 );
    std::vector< double > setup, solve, its;
    for ( const auto& r : measured )
    {
        setup.push_back( r.setup_seconds );
        solve.push_back( r.solve_seconds );
        its.push_back( static_cast< double >( r.iterations ) );
    }
    const auto su = summarize( setup ), so = summarize( solve ), it = summarize( its );
    meta.repetitions       = measured.size();
    meta.setup_mean        = su.mean;
    meta.setup_stddev      = su.stddev;
    meta.solve_mean        = so.mean;
    meta.solve_stddev      = so.stddev;
    meta.iterations_mean   = it.mean;
    meta.iterations_stddev = it.stddev;
    meta.iterations        = measured.back().iterations;
    meta.relative_residual = measured.back().relative_residual;
    meta.converged         = std::all_of( measured.begin(), measured.end(), []( const Run& r ) {
        return r.converged && r.error.empty();
    } );
    meta.inner_failures = 0;
    for ( const auto& r : measured )
        meta.inner_failures = std::max( meta.inner_failures, r.inner_failures );
    meta.error.clear();
    for ( const auto& r : runs )
        if ( !r.error.empty() )
        {
            meta.error = r.error;
            break;
        }
    return meta;
}

// ---------------------------------------------------------------------------

namespace {

void require_points( std::span< const ScalingPoint > points, const char* what )
{
    if ( points.size() < 2 )
        throw ConfigError( std::string( what ) + ": at least two points are required" );
    for ( std::size_t k = 0; k < points.size(); ++k )
    {
        if ( !( points[k].x > 0.0 ) || !( points[k].t > 0.0 ) )
            throw ConfigError( std::string( what ) + ": sizes and times must be positive" );
        if ( k > 0 && !( points[k].x > points[k - 1].x ) )
            throw ConfigError( std::string( what ) + ": sizes must be strictly increasing" );
    }
}

} // namespace

EfficiencyFit fit_weak_efficiency( std::span< const ScalingPoint > points )
{
    require_points( points, "weak fit" );
    const std::size_t m = points.size();
    double            sx = 0, sy = 0;
    for ( const auto& p : points )
    {
        sx += std::log2( p.x );
        sy += std::log( p.t );
    }
    const double mx = sx / static_cast< double >( m ), my = sy / static_cast< double >( m );
    double       sxx = 0, sxy = 0;
    for ( const auto& p : points )
    {
        const double dx = std::log2( p.x ) - mx;
        sxx += dx * dx;
        sxy += dx * ( std::log( p.t ) - my );
    }
    const double slope = sxy / sxx;
    double       ss    = 0;
    for ( const auto& p : points )
    {
        const double e = std::log( p.t ) - ( my + slope * ( std::log2( p.x ) - mx ) );
        ss += e * e;
    }
    EfficiencyFit f;
    f.model    = Model::weak;
    f.eta      = std::exp( -slope );
    f.residual = std::sqrt( ss / static_cast< double >( m ) );
    f.points   = m;
    return f;
}

double pairwise_strong_efficiency( ScalingPoint m, ScalingPoint n )
{
    if ( !( n.x > m.x ) || !( m.t > 0.0 ) )
        throw ConfigError( "pairwise efficiency: worker counts must increase and times be positive" );
    return ( 1.0 - n.t / m.t ) / ( 1.0 - m.x / n.x );
}

EfficiencyFit fit_strong_efficiency( std::span< const ScalingPoint > points )
{
    require_points( points, "strong fit" );
    const auto&       base = points.front();
    const std::size_t k    = points.size() - 1;
    std::vector< double > le( k );
    for ( std::size_t i = 0; i < k; ++i )
    {
        const auto& p = points[i + 1];
        le[i]         = std::log( base.x * base.t ) - std::log( p.x * p.t );
    }
    const double mean = std::accumulate( le.begin(), le.end(), 0.0 ) / static_cast< double >( k );
    double       ss   = 0;
    for ( double v : le )
        ss += ( v - mean ) * ( v - mean );

    EfficiencyFit f;
    f.model    = Model::strong;
    f.eta      = std::exp( mean );
    f.residual = std::sqrt( ss / static_cast< double >( k ) );
    f.points   = points.size();
    for ( std::size_t i = 1; i < points.size(); ++i )
    {
        const double e = pairwise_strong_efficiency( points[i - 1], points[i] );
        f.pairwise.push_back( e );
        if ( !f.cutoff && e < 0.5 )
            f.cutoff = points[i].x;
    }
    return f;
}

namespace {

bool uses_workers( std::string_view system )
{
    return system == "species" || system == "nonvoltage" || system == "end_to_end" || system == "monolithic_ras";
}

} // namespace

std::vector< EfficiencyFit > fit_records( std::span< const ExperimentRecord > records )
{
    std::vector< EfficiencyFit > fits;
    // Strong: fixed case and system, varying workers.
    std::map< std::pair< std::string, std::string >, std::map< std::size_t, double > > strong;
    std::vector< std::pair< std::string, std::string > >                               strong_order;
    for ( const auto& r : records )
    {
        if ( !r.converged || !( r.solve_mean > 0.0 ) || !uses_workers( r.system ) )
            continue;
        const auto key = std::make_pair( r.case_id, r.system );
        if ( !strong.count( key ) )
            strong_order.push_back( key );
        strong[key][r.workers] = r.solve_mean;
    }
    for ( const auto& key : strong_order )
    {
        const auto& pts = strong[key];
        if ( pts.size() < 2 )
            continue;
        std::vector< ScalingPoint > p;
        for ( const auto& [w, t] : pts )
            p.push_back( { static_cast< double >( w ), t } );
        auto f  = fit_strong_efficiency( p );
        f.label = key.first + "/" + key.second;
        fits.push_back( std::move( f ) );
    }
    // Weak: fixed system and dofs per worker, varying problem size.
    std::map< std::pair< std::string, double >, std::map< std::size_t, double > > weak;
    std::vector< std::pair< std::string, double > >                              weak_order;
    for ( const auto& r : records )
    {
        if ( !r.converged || !( r.solve_mean > 0.0 ) )
            continue;
        const auto key = std::make_pair( r.system, static_cast< double >( r.dofs ) / static_cast< double >( r.workers ) );
        if ( !weak.count( key ) )
            weak_order.push_back( key );
        weak[key][r.dofs] = r.solve_mean;
    }
    for ( const auto& key : weak_order )
    {
        const auto& pts = weak[key];
        if ( pts.size() < 2 )
            continue;
        std::vector< ScalingPoint > p;
        for ( const auto& [n, t] : pts )
            p.push_back( { static_cast< double >( n ), t } );
        auto f  = fit_weak_efficiency( p );
        f.label = key.first + "/dofs_per_worker=" + number( key.second );
        fits.push_back( std::move( f ) );
    }
    return fits;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

template < class T >
T get_as( const json& j, std::string_view key )
{
    try
    {
        return j.get< T >();
    }
    catch ( const json::exception& )
    {
        throw ConfigError( "config key '" + std::string( key ) + "' has the wrong type" );
    }
}

std::size_t get_count( const json& j, std::string_view key )
{
    if ( !j.is_number_unsigned() )
        throw ConfigError( "config key '" + std::string( key ) + "' must be a non-negative integer" );
    return j.get< std::size_t >();
}

double get_number( const json& j, std::string_view key )
{
    if ( !j.is_number() )
        throw ConfigError( "config key '" + std::string( key ) + "' must be a number" );
    return j.get< double >();
}

void require_object( const json& j, std::string_view what )
{
    if ( !j.is_object() )
        throw ConfigError( std::string( what ) + " must be a JSON object" );
}

[[noreturn]] void unknown_key( std::string_view section, std::string_view key )
{
    throw ConfigError( "unknown key '" + std::string( key ) + "' in " + std::string( section ) );
}

void read_material( const json& j, battery::MaterialProps& m, std::string_view name )
{
    require_object( j, name );
    for ( const auto& [k, v] : j.items() )
    {
        if ( k == "sigma" ) m.sigma = get_number( v, k );
        else if ( k == "liquid_conductivity" ) m.liquid_conductivity = get_number( v, k );
        else if ( k == "liquid_diffusivity" ) m.liquid_diffusivity = get_number( v, k );
        else if ( k == "porosity" ) m.porosity = get_number( v, k );
        else if ( k == "particle_diameter" ) m.particle_diameter = get_number( v, k );
        else if ( k == "tortuosity_exponent" ) m.tortuosity_exponent = get_number( v, k );
        else if ( k == "solid_rate" ) m.solid_rate = get_number( v, k );
        else unknown_key( name, k );
    }
}

void read_butler_volmer( const json& j, battery::ButlerVolmerState& s )
{
    require_object( j, "butler_volmer" );
    for ( const auto& [k, v] : j.items() )
    {
        if ( k == "exchange_current" ) s.exchange_current = get_number( v, k );
        else if ( k == "beta" ) s.beta = get_number( v, k );
        else if ( k == "valence" ) s.valence = get_number( v, k );
        else if ( k == "overpotential" ) s.overpotential = get_number( v, k );
        else unknown_key( "butler_volmer", k );
    }
}

battery::CaseConfig read_case( const json& j, std::string* id )
{
    require_object( j, "case" );
    battery::CaseConfig c;
    for ( const auto& [k, v] : j.items() )
    {
        if ( k == "id" && id ) *id = get_as< std::string >( v, k );
        else if ( k == "nr" ) c.nr = get_count( v, k );
        else if ( k == "refinement" ) c.refinement = get_count( v, k );
        else if ( k == "n_cells" ) c.n_cells = get_count( v, k );
        else if ( k == "base_h" ) c.base_h = get_number( v, k );
        else if ( k == "tau_i_over_dt" ) c.tau_i_over_dt = get_number( v, k );
        else if ( k == "dt" ) c.dt = get_number( v, k );
        else if ( k == "temperature" ) c.temperature = get_number( v, k );
        else if ( k == "melt_temperature" ) c.melt_temperature = get_number( v, k );
        else if ( k == "melt_width" ) c.melt_width = get_number( v, k );
        else if ( k == "frozen_viscosity" ) c.frozen_viscosity = get_number( v, k );
        else if ( k == "concentration" ) c.concentration = get_number( v, k );
        else if ( k == "solid_species" ) c.solid_species = get_count( v, k );
        else if ( k == "species_sensitivity" ) c.species_sensitivity = get_number( v, k );
        else if ( k == "reaction_feedback" ) c.reaction_feedback = get_number( v, k );
        else if ( k == "pressure_drop" ) c.pressure_drop = get_number( v, k );
        else if ( k == "pressure_storage" ) c.pressure_storage = get_number( v, k );
        else if ( k == "xp_coupling" ) c.xp_coupling = get_number( v, k );
        else if ( k == "px_coupling" ) c.px_coupling = get_number( v, k );
        else if ( k == "seed" ) c.seed = get_count( v, k );
        else if ( k == "butler_volmer" ) read_butler_volmer( v, c.butler_volmer );
        else if ( k == "materials" )
        {
            require_object( v, "materials" );
            for ( const auto& [mk, mv] : v.items() )
                read_material( mv, c.materials[battery::material_from_name( mk )], mk );
        }
        else unknown_key( "case", k );
    }
    c.validate();
    return c;
}

void read_amg( const json& j, amg::AmgParams& p, std::string_view name )
{
    require_object( j, name );
    for ( const auto& [k, v] : j.items() )
    {
        if ( k == "drop_tolerance" ) p.drop_tolerance = get_number( v, k );
        else if ( k == "smoother_degree" ) p.smoother_degree = get_count( v, k );
        else if ( k == "max_coarse_size" ) p.max_coarse_size = get_count( v, k );
        else if ( k == "max_levels" ) p.max_levels = get_count( v, k );
        else if ( k == "prolongator_damping" ) p.prolongator_damping = get_number( v, k );
        else if ( k == "eigen_ratio" ) p.chebyshev.eigen_ratio = get_number( v, k );
        else if ( k == "boost_factor" ) p.chebyshev.boost_factor = get_number( v, k );
        else if ( k == "compensation" )
        {
            const auto s = get_as< std::string >( v, k );
            if ( s == "absolute_row_sum" ) p.compensation = amg::DiagonalCompensation::absolute_row_sum;
            else if ( s == "row_sum_preserving" ) p.compensation = amg::DiagonalCompensation::row_sum_preserving;
            else if ( s == "none" ) p.compensation = amg::DiagonalCompensation::none;
            else throw ConfigError( "unknown diagonal compensation '" + s + "'" );
        }
        else unknown_key( name, k );
    }
    p.validate();
}

void read_inner( const json& j, InnerSolverConfig& c, std::string_view name )
{
    require_object( j, name );
    for ( const auto& [k, v] : j.items() )
    {
        if ( k == "restart" ) c.restart = get_count( v, k );
        else if ( k == "tolerance" ) c.relative_tolerance = get_number( v, k );
        else if ( k == "max_iterations" ) c.max_iterations = get_count( v, k );
        else unknown_key( name, k );
    }
}

SolverSettings read_solver( const json& j )
{
    require_object( j, "solver" );
    SolverSettings s;
    for ( const auto& [k, v] : j.items() )
    {
        if ( k == "restart" ) s.restart = get_count( v, k );
        else if ( k == "tolerance" ) s.tolerance = get_number( v, k );
        else if ( k == "max_iterations" ) s.max_iterations = get_count( v, k );
        else if ( k == "outer_restart" ) s.outer_restart = get_count( v, k );
        else if ( k == "outer_tolerance" ) s.outer_tolerance = get_number( v, k );
        else if ( k == "outer_max_iterations" ) s.outer_max_iterations = get_count( v, k );
        else if ( k == "overlap" ) s.overlap = get_count( v, k );
        else if ( k == "phi_s_amg" ) read_amg( v, s.precon.phi_s_amg, k );
        else if ( k == "phi_l_amg" ) read_amg( v, s.precon.phi_l_amg, k );
        else if ( k == "pressure_amg" ) read_amg( v, s.precon.pressure_amg, k );
        else if ( k == "voltage_inner" ) read_inner( v, s.precon.voltage, k );
        else if ( k == "nonvoltage_inner" ) read_inner( v, s.precon.nonvoltage, k );
        else if ( k == "nonvoltage_block_jacobi" ) s.precon.nonvoltage_block_jacobi = get_as< bool >( v, k );
        else if ( k == "inner_mode" )
        {
            const auto m = get_as< std::string >( v, k );
            if ( m == "iterative" ) s.precon.mode = InnerMode::iterative;
            else if ( m == "direct" ) s.precon.mode = InnerMode::direct;
            else throw ConfigError( "unknown inner_mode '" + m + "'" );
        }
        else unknown_key( "solver", k );
    }
    for ( const SolverConfig c : { SolverConfig{ s.restart, s.tolerance, s.max_iterations, false, false },
                                   SolverConfig{ s.outer_restart, s.outer_tolerance, s.outer_max_iterations, true, false } } )
        c.validate();
    return s;
}

json parse( std::string_view text )
{
    try
    {
        return json::parse( text.begin(), text.end() );
    }
    catch ( const json::parse_error& e )
    {
        throw ConfigError( std::string( "invalid JSON: " ) + e.what() );
    }
}

} // namespace

battery::CaseConfig case_config_from_json( std::string_view text )
{
    const json j = parse( text );
    if ( j.is_object() && j.contains( "case" ) )
        return read_case( j.at( "case" ), nullptr );
    std::string ignored;
    return read_case( j, &ignored );
}

SuiteConfig suite_config_from_json( std::string_view text )
{
    const json j = parse( text );
    require_object( j, "suite config" );
    SuiteConfig s;
    for ( const auto& [k, v] : j.items() )
    {
        if ( k == "case" || k == "cases" )
        {
            const json list = k == "case" ? json::array( { v } ) : v;
            if ( !list.is_array() || list.empty() )
                throw ConfigError( "'cases' must be a non-empty array" );
            for ( const auto& c : list )
            {
                CaseSpec spec;
                spec.config = read_case( c, &spec.id );
                if ( spec.id.empty() )
                    spec.id = "r" + std::to_string( spec.config.refinement );
                s.cases.push_back( std::move( spec ) );
            }
        }
        else if ( k == "systems" )
        {
            if ( !v.is_array() )
                throw ConfigError( "'systems' must be an array" );
            for ( const auto& n : v )
                s.systems.push_back( system_from_name( get_as< std::string >( n, k ) ) );
        }
        else if ( k == "workers" )
        {
            if ( !v.is_array() || v.empty() )
                throw ConfigError( "'workers' must be a non-empty array" );
            s.workers.clear();
            for ( const auto& w : v )
            {
                const auto p = get_count( w, k );
                if ( p < 1 )
                    throw ConfigError( "worker counts must be at least 1" );
                s.workers.push_back( p );
            }
        }
        else if ( k == "repetitions" )
        {
            s.repetitions = get_count( v, k );
            if ( s.repetitions < 1 )
                throw ConfigError( "repetitions must be at least 1" );
        }
        else if ( k == "solver" )
            s.solver = read_solver( v );
        else
            unknown_key( "suite config", k );
    }
    if ( s.cases.empty() )
        s.cases.push_back( { "r0", battery::CaseConfig{} } );
    if ( s.systems.empty() )
        s.systems.assign( table_rows.begin(), table_rows.end() );
    return s;
}

std::string read_text( const std::filesystem::path& path )
{
    std::ifstream in( path, std::ios::binary );
    if ( !in )
        throw ConfigError( "cannot open '" + path.string() + "'" );
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SuiteConfig load_suite_config( const std::filesystem::path& path ) { return suite_config_from_json( read_text( path ) ); }

std::vector< ExperimentRecord > run_suite( const SuiteConfig& config )
{
    std::vector< ExperimentRecord > out;
    for ( const auto& spec : config.cases )
    {
        const auto bc = battery::build_case( spec.config );
        for ( System sys : config.systems )
            for ( std::size_t w : config.workers )
            {
                std::vector< Run > runs;
                for ( std::size_t k = 0; k < config.repetitions + 1; ++k )
                    runs.push_back( run_system( bc, sys, config.solver, w ) );
                ExperimentRecord meta;
                meta.case_id    = spec.id;
                meta.refinement = spec.config.refinement;
                meta.dofs       = bc.system.size();
                meta.system     = std::string( system_name( sys ) );
                meta.solver     = solver_label( sys, config.solver );
                meta.workers    = w;
                out.push_back( aggregate_runs( std::move( meta ), runs ) );
            }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports

Format format_from_name( std::string_view name )
{
    if ( name == "csv" )
        return Format::csv;
    if ( name == "json" )
        return Format::json;
    if ( name == "md" || name == "markdown" )
        return Format::markdown;
    throw ConfigError( "unknown format '" + std::string( name ) + "' (expected csv, json or md)" );
}

namespace {

std::string csv_field( const std::string& s )
{
    if ( s.find_first_of( ",\"\n" ) == std::string::npos )
        return s;
    std::string q = "\"";
    for ( char c : s )
    {
        if ( c == '"' )
            q += '"';
        q += c;
    }
    return q + "\"";
}

json record_json( const ExperimentRecord& r )
{
    json j;
    j["case_id"]           = r.case_id;
    j["refinement"]        = r.refinement;
    j["dofs"]              = r.dofs;
    j["system"]            = r.system;
    j["solver"]            = r.solver;
    j["workers"]           = r.workers;
    j["repetitions"]       = r.repetitions;
    j["setup_mean"]        = r.setup_mean;
    j["setup_stddev"]      = r.setup_stddev;
    j["solve_mean"]        = r.solve_mean;
    j["solve_stddev"]      = r.solve_stddev;
    j["iterations_mean"]   = r.iterations_mean;
    j["iterations_stddev"] = r.iterations_stddev;
    j["iterations"]        = r.iterations;
    j["converged"]         = r.converged;
    j["relative_residual"] = r.relative_residual;
    j["inner_failures"]    = r.inner_failures;
    j["error"]             = r.error;
    return j;
}

} // namespace

std::string records_to_csv( std::span< const ExperimentRecord > records )
{
    std::string out = "case_id,refinement,dofs,system,solver,workers,repetitions,setup_mean,setup_stddev,solve_mean,"
                      "solve_stddev,iterations_mean,iterations_stddev,iterations,converged,relative_residual,"
                      "inner_failures,error\n";
    for ( const auto& r : records )
    {
        out += csv_field( r.case_id ) + "," + std::to_string( r.refinement ) + "," + std::to_string( r.dofs ) + "," +
               csv_field( r.system ) + "," + csv_field( r.solver ) + "," + std::to_string( r.workers ) + "," +
               std::to_string( r.repetitions ) + "," + number( r.setup_mean ) + "," + number( r.setup_stddev ) + "," +
               number( r.solve_mean ) + "," + number( r.solve_stddev ) + "," + number( r.iterations_mean ) + "," +
               number( r.iterations_stddev ) + "," + std::to_string( r.iterations ) + "," +
               ( r.converged ? "true" : "false" ) + "," + number( r.relative_residual ) + "," +
               std::to_string( r.inner_failures ) + "," + csv_field( r.error ) + "\n";
    }
    return out;
}

std::string records_to_json( std::span< const ExperimentRecord > records )
{
    json arr = json::array();
    for ( const auto& r : records )
        arr.push_back( record_json( r ) );
    return arr.dump( 2 ) + "\n";
}

std::vector< ExperimentRecord > records_from_json( std::string_view text )
{
    const json j = parse( text );
    const json& arr = j.is_object() && j.contains( "records" ) ? j.at( "records" ) : j;
    if ( !arr.is_array() )
        throw ConfigError( "records file must hold a JSON array" );
    std::vector< ExperimentRecord > out;
    for ( const auto& e : arr )
    {
        require_object( e, "record" );
        ExperimentRecord r;
        for ( const auto& [k, v] : e.items() )
        {
            if ( k == "case_id" ) r.case_id = get_as< std::string >( v, k );
            else if ( k == "refinement" ) r.refinement = get_count( v, k );
            else if ( k == "dofs" ) r.dofs = get_count( v, k );
            else if ( k == "system" ) r.system = get_as< std::string >( v, k );
            else if ( k == "solver" ) r.solver = get_as< std::string >( v, k );
            else if ( k == "workers" ) r.workers = get_count( v, k );
            else if ( k == "repetitions" ) r.repetitions = get_count( v, k );
            else if ( k == "setup_mean" ) r.setup_mean = get_number( v, k );
            else if ( k == "setup_stddev" ) r.setup_stddev = get_number( v, k );
            else if ( k == "solve_mean" ) r.solve_mean = get_number( v, k );
            else if ( k == "solve_stddev" ) r.solve_stddev = get_number( v, k );
            else if ( k == "iterations_mean" ) r.iterations_mean = get_number( v, k );
            else if ( k == "iterations_stddev" ) r.iterations_stddev = get_number( v, k );
            else if ( k == "iterations" ) r.iterations = get_count( v, k );
            else if ( k == "converged" ) r.converged = get_as< bool >( v, k );
            else if ( k == "relative_residual" ) r.relative_residual = get_number( v, k );
            else if ( k == "inner_failures" ) r.inner_failures = get_count( v, k );
            else if ( k == "error" ) r.error = get_as< std::string >( v, k );
            else unknown_key( "record", k );
        }
        out.push_back( std::move( r ) );
    }
    return out;
}

std::string iteration_table( std::span< const ExperimentRecord > records )
{
    std::vector< std::string > columns;
    for ( const auto& r : records )
        if ( std::find( columns.begin(), columns.end(), r.case_id ) == columns.end() )
            columns.push_back( r.case_id );
    std::vector< std::string > rows;
    for ( System s : every_system )
        for ( const auto& r : records )
            if ( r.system == system_name( s ) )
            {
                rows.push_back( r.system );
                break;
            }
    for ( const auto& r : records )
        if ( std::find( rows.begin(), rows.end(), r.system ) == rows.end() )
            rows.push_back( r.system );

    std::string out = "| Subblock |";
    for ( const auto& c : columns )
        out += " " + c + " |";
    out += "\n|---|";
    for ( std::size_t k = 0; k < columns.size(); ++k )
        out += "---|";
    out += "\n";
    for ( const auto& row : rows )
    {
        out += "| " + row + " |";
        for ( const auto& c : columns )
        {
            std::size_t lo = 0, hi = 0;
            bool        any = false, failed = false;
            for ( const auto& r : records )
                if ( r.system == row && r.case_id == c )
                {
                    lo     = any ? std::min( lo, r.iterations ) : r.iterations;
                    hi     = any ? std::max( hi, r.iterations ) : r.iterations;
                    any    = true;
                    failed = failed || !r.converged;
                }
            std::string cell = !any ? "" : lo == hi ? std::to_string( lo ) : std::to_string( lo ) + "-" + std::to_string( hi );
            if ( failed )
                cell += "*";
            out += " " + cell + " |";
        }
        out += "\n";
    }
    return out;
}

std::string fits_to_json( std::span< const EfficiencyFit > fits )
{
    json arr = json::array();
    for ( const auto& f : fits )
    {
        json j;
        j["label"]    = f.label;
        j["model"]    = f.model == Model::weak ? "weak" : "strong";
        j["eta"]      = f.eta;
        j["residual"] = f.residual;
        j["points"]   = f.points;
        if ( f.model == Model::strong )
        {
            j["pairwise"] = f.pairwise;
            j["cutoff"]   = f.cutoff ? json( *f.cutoff ) : json( nullptr );
        }
        arr.push_back( std::move( j ) );
    }
    return arr.dump( 2 ) + "\n";
}

std::string fits_to_markdown( std::span< const EfficiencyFit > fits )
{
    std::string out = "| Fit | Model | eta | Residual | Points | Cut-off P |\n|---|---|---|---|---|---|\n";
    for ( const auto& f : fits )
        out += "| " + f.label + " | " + ( f.model == Model::weak ? "weak" : "strong" ) + " | " + number( f.eta ) + " | " +
               number( f.residual ) + " | " + std::to_string( f.points ) + " | " +
               ( f.cutoff ? number( *f.cutoff ) : std::string( "-" ) ) + " |\n";
    return out;
}

std::string emit_report( std::span< const ExperimentRecord > records, std::span< const EfficiencyFit > fits, Format format )
{
    if ( records.empty() )
        throw ConfigError( "emit_report: no records" );
    switch ( format )
    {
    case Format::csv: return records_to_csv( records );
    case Format::json: return records_to_json( records );
    case Format::markdown:
    {
        std::string out = iteration_table( records );
        if ( !fits.empty() )
            out += "\n" + fits_to_markdown( fits );
        return out;
    }
    }
    return {};
}

} // namespace hbgs::bench
