#include "hbgs/battery.hpp"
#include "hbgs/error.hpp"
#include "oracle.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

using namespace hbgs;
using namespace hbgs::battery;

namespace {

BatteryCase make_case( std::size_t refinement, std::size_t nr = 8, std::size_t n_cells = 4 )
{
    CaseConfig cfg;
    cfg.refinement = refinement;
    cfg.nr         = nr;
    cfg.n_cells    = n_cells;
    return build_case( cfg );
}

bool rows_only_on_electrodes( const SparseMatrix& m, const LayeredGrid& g, std::size_t rows_per_cell = 1 )
{
    for ( std::size_t r = 0; r < m.rows(); ++r )
        if ( !m.row_cols( r ).empty() && !is_electrode( g.material[r / rows_per_cell] ) )
            return false;
    return true;
}

} // namespace

TEST( Materials, DefaultsAndNames )
{
    const auto t = MaterialTable::defaults();
    EXPECT_EQ( t[Material::separator].sigma, 1e-4 );
    EXPECT_EQ( t[Material::anode].sigma, 1e6 );
    EXPECT_EQ( material_from_name( "cathode" ), Material::cathode );
    EXPECT_EQ( material_name( Material::heat_pellet ), "heat_pellet" );
    EXPECT_THROW( material_from_name( "unobtainium" ), ConfigError );
    EXPECT_TRUE( is_electrode( Material::anode ) );
    EXPECT_FALSE( is_electrode( Material::separator ) );
}

TEST( Grid, MinimalStack )
{
    const auto g = build_grid( 1, 0, 1 );
    EXPECT_EQ( g.size(), g.layers.size() );
    EXPECT_EQ( g.layers.size(), 7u );
    const std::vector< Material > stack{ Material::heat_pellet, Material::collector, Material::anode, Material::separator,
                                         Material::cathode,     Material::collector, Material::heat_pellet };
    EXPECT_EQ( g.layers, stack );
    EXPECT_EQ( g.material, stack );
}

TEST( Grid, RefinementQuadruplesCells )
{
    for ( std::size_t nr : { 1, 3, 8 } )
    {
        const auto g0 = build_grid( nr, 0, 2 );
        const auto g1 = build_grid( nr, 1, 2 );
        const auto g2 = build_grid( nr, 2, 2 );
        EXPECT_EQ( g1.size(), 4 * g0.size() );
        EXPECT_EQ( g2.size(), 4 * g1.size() );
        EXPECT_DOUBLE_EQ( g1.grid.h, g0.grid.h / 2.0 );
    }
}

TEST( Grid, ReferenceStackTopology )
{
    const auto g = build_grid( 8, 0, 20 );
    ASSERT_EQ( g.layers.size(), 2u + 4u * 20u + 1u );
    EXPECT_EQ( g.layers.front(), Material::heat_pellet );
    EXPECT_EQ( g.layers.back(), Material::heat_pellet );
    EXPECT_EQ( g.layers[g.layers.size() - 2], Material::collector );
    for ( std::size_t k = 0; k < 20; ++k )
    {
        EXPECT_EQ( g.layers[1 + 4 * k], Material::collector );
        EXPECT_EQ( g.layers[2 + 4 * k], Material::anode );
        EXPECT_EQ( g.layers[3 + 4 * k], Material::separator );
        EXPECT_EQ( g.layers[4 + 4 * k], Material::cathode );
    }
    EXPECT_EQ( std::ranges::count( g.layers, Material::anode ), 20 );
    // Outer columns: can outermost, insulation next.
    for ( std::size_t j = 0; j < g.grid.ny; ++j )
    {
        EXPECT_EQ( g.material[g.grid.index( 7, j )], Material::can );
        EXPECT_EQ( g.material[g.grid.index( 6, j )], Material::insulation );
    }
}

TEST( Grid, InvalidArgumentsRejected )
{
    EXPECT_THROW( build_grid( 0, 0, 1 ), ConfigError );
    EXPECT_THROW( build_grid( 1, 0, 0 ), ConfigError );
}

TEST( Diffusion, InteriorStencil )
{
    StructuredGrid              g{ 5, 5, 1.0 };
    const std::vector< double > one( 25, 1.0 );
    const auto                  a = assemble_diffusion_operator( g, one, 0.0 );
    const std::size_t           c = g.index( 2, 2 );
    const auto                  cols = a.row_cols( c );
    const auto                  vals = a.row_values( c );
    EXPECT_EQ( std::vector< std::size_t >( cols.begin(), cols.end() ),
               ( std::vector< std::size_t >{ c - 5, c - 1, c, c + 1, c + 5 } ) );
    EXPECT_EQ( std::vector< double >( vals.begin(), vals.end() ), ( std::vector< double >{ -1, -1, 4, -1, -1 } ) );
}

TEST( Diffusion, HarmonicFaceCoefficient )
{
    EXPECT_NEAR( harmonic_mean( 1e-4, 1e6 ), 2e-4, 1e-13 );
    StructuredGrid              g{ 2, 1, 1.0 };
    const std::vector< double > sigma{ 1e-4, 1e6 };
    const auto                  a = assemble_diffusion_operator( g, sigma, 0.0 );
    EXPECT_NEAR( a.at( 0, 1 ), -2e-4, 1e-13 );
    EXPECT_EQ( a.at( 0, 1 ), a.at( 1, 0 ) );
}

TEST( Diffusion, NeumannRowSumsVanishAwayFromDirichlet )
{
    const auto                  lg = build_grid( 4, 1, 2 );
    const auto                  mt = MaterialTable::defaults();
    std::vector< double >       sigma( lg.size() );
    for ( std::size_t c = 0; c < lg.size(); ++c )
        sigma[c] = mt[lg.material[c]].sigma;
    const std::vector< BoundaryFace > dir{ { lg.grid.index( 0, 2 ), Side::west } };
    const auto a = assemble_diffusion_operator( lg.grid, sigma, 0.0, dir );
    for ( std::size_t r = 0; r < a.rows(); ++r )
    {
        double sum = 0.0, norm = 0.0;
        for ( double v : a.row_values( r ) )
        {
            sum += v;
            norm = std::max( norm, std::abs( v ) );
        }
        if ( r == dir[0].cell )
            EXPECT_GT( sum, 0.0 );
        else
            EXPECT_LE( std::abs( sum ), 1e-12 * norm ) << r;
    }
}

TEST( Diffusion, RejectsBadInput )
{
    StructuredGrid        g{ 3, 1, 1.0 };
    std::vector< double > k{ 1.0, 0.0, 1.0 };
    EXPECT_THROW( assemble_diffusion_operator( g, k, 0.0 ), ConfigError );
    k[1] = 1.0;
    const std::vector< BoundaryFace > interior{ { 1, Side::north } };
    EXPECT_NO_THROW( assemble_diffusion_operator( g, k, 0.0, interior ) ); // ny = 1: north is a boundary
    const std::vector< BoundaryFace > inner{ { 1, Side::east } };
    EXPECT_THROW( assemble_diffusion_operator( g, k, 0.0, inner ), DimensionError );
}

TEST( Species, ZeroVelocityIsSymmetric )
{
    StructuredGrid              g{ 4, 3, 1.0 };
    const auto                  d  = oracle::random_vector( 12, 1 );
    std::vector< double >       diff( 12 ), store( 12, 0.5 );
    for ( std::size_t i = 0; i < 12; ++i )
        diff[i] = 1.5 + d[i];
    SpeciesInputs in;
    in.flux        = FaceFlux::zero( g );
    in.diffusivity = diff;
    in.storage     = store;
    in.dt          = 0.25;
    const auto b   = assemble_species_block( g, in );
    EXPECT_EQ( b.a_xx, b.a_xx.transpose() );
    EXPECT_DOUBLE_EQ( b.a_xx.at( 0, 0 ) - 2.0, assemble_diffusion_operator( g, diff, 0.0 ).at( 0, 0 ) );
    EXPECT_EQ( b.a_xp.nnz(), 0u );
}

TEST( Species, UpwindOneDimensionalStrip )
{
    // Unit diffusion, flux F = 0.5 eastward, storage 1, dt 1. Row of an
    // interior cell i: x_{i-1}: -1 - F, x_i: 1 + 2 + F, x_{i+1}: -1.
    StructuredGrid              g{ 5, 1, 1.0 };
    const std::vector< double > one( 5, 1.0 );
    SpeciesInputs               in;
    in.flux        = FaceFlux::uniform( g, 0.5, 0.0 );
    in.diffusivity = one;
    in.storage     = one;
    in.dt          = 1.0;
    const auto a   = assemble_species_block( g, in ).a_xx;
    const Eigen::MatrixXd ref = ( Eigen::MatrixXd( 5, 5 ) << 2.5, -1, 0, 0, 0,      //
                                  -1.5, 3.5, -1, 0, 0,                               //
                                  0, -1.5, 3.5, -1, 0,                               //
                                  0, 0, -1.5, 3.5, -1,                               //
                                  0, 0, 0, -1.5, 2 )
                                    .finished();
    EXPECT_EQ( oracle::dense( a ), ref );

    in.flux = FaceFlux::uniform( g, -0.5, 0.0 );
    const Eigen::MatrixXd west = oracle::dense( assemble_species_block( g, in ).a_xx );
    EXPECT_EQ( west, ref.reverse() );
}

TEST( Species, FrozenRegimeSuppressesAdvection )
{
    CaseConfig frozen;
    frozen.temperature = 400.0;
    CaseConfig still = frozen;
    still.pressure_drop = 0.0;
    const auto a  = *build_case( frozen ).system.block( Field::liquid_species, Field::liquid_species );
    const auto b  = *build_case( still ).system.block( Field::liquid_species, Field::liquid_species );
    const auto da = oracle::dense( a ), db = oracle::dense( b );
    EXPECT_LE( oracle::max_abs( da - db ), 1e-12 * oracle::max_abs( db ) );
    EXPECT_NEAR( melt_fraction( 400.0, 625.0, 10.0 ), 1.0, 1e-15 );
    EXPECT_NEAR( melt_fraction( 625.0, 625.0, 10.0 ), 0.5, 1e-15 );
    EXPECT_NEAR( melt_fraction( 800.0, 625.0, 10.0 ), 0.0, 1e-15 );
}

TEST( ButlerVolmer, LinearisationAtEquilibrium )
{
    ButlerVolmerState s;
    s.exchange_current = 2.0;
    s.valence          = 1.0;
    s.temperature      = 700.0;
    EXPECT_NEAR( butler_volmer_conductance( s ), 2.0 * faraday / ( gas_constant * 700.0 ), 1e-12 );
    s.overpotential = 0.05;
    const double f  = faraday / ( gas_constant * 700.0 );
    EXPECT_NEAR( butler_volmer_conductance( s ), 2.0 * f * ( 0.5 * std::exp( 0.5 * f * 0.05 ) + 0.5 * std::exp( -0.5 * f * 0.05 ) ), 1e-10 );
}

TEST( ButlerVolmer, ZeroExchangeCurrentDecouples )
{
    const auto                  g = build_grid( 4, 0, 2 );
    const std::vector< double > area( g.size(), 1.0 );
    CouplingInputs              in;
    in.state.exchange_current = 0.0;
    in.surface_area           = area;
    const auto c              = assemble_coupling_blocks( g, in );
    EXPECT_EQ( c.a_sl.nnz(), 0u );
    EXPECT_EQ( c.a_ls.nnz(), 0u );
    EXPECT_EQ( c.a_s_x.nnz(), 0u );
    for ( double v : c.self )
        EXPECT_EQ( v, 0.0 );

    CaseConfig cfg;
    cfg.butler_volmer.exchange_current = 0.0;
    const auto bc = build_case( cfg );
    EXPECT_FALSE( bc.system.has_block( Field::phi_s, Field::phi_l ) );
    EXPECT_FALSE( bc.system.has_block( Field::phi_l, Field::phi_s ) );
}

TEST( ButlerVolmer, OnlyElectrodeCellsCouple )
{
    const auto                  g = build_grid( 4, 1, 2 );
    const std::vector< double > area( g.size(), 1.0 );
    CouplingInputs              in;
    in.surface_area = area;
    const auto c    = assemble_coupling_blocks( g, in );
    EXPECT_TRUE( rows_only_on_electrodes( c.a_sl, g ) );
    EXPECT_TRUE( rows_only_on_electrodes( c.a_ls, g ) );
    EXPECT_TRUE( rows_only_on_electrodes( c.a_s_x, g ) );
    for ( std::size_t k = 0; k < g.size(); ++k )
    {
        if ( g.material[k] == Material::separator )
            EXPECT_EQ( c.self[k], 0.0 );
        if ( is_electrode( g.material[k] ) )
        {
            EXPECT_GT( c.self[k], 0.0 );
            EXPECT_EQ( c.a_sl.at( k, k ), -c.self[k] );
        }
    }
}

TEST( Case, MinimalCaseAssembles )
{
    const auto bc = make_case( 0, 2, 1 );
    EXPECT_NO_THROW( bc.system.validate() );
    for ( Field f : all_fields )
        EXPECT_TRUE( bc.system.has_block( f, f ) ) << field_name( f );
    EXPECT_EQ( bc.solution.size(), bc.system.size() );
    const auto rhs = bc.system.op().apply( bc.solution );
    EXPECT_EQ( rhs, std::vector< double >( bc.system.rhs().begin(), bc.system.rhs().end() ) );
}

TEST( Case, MonolithicIsNonsymmetric )
{
    const auto mono = make_case( 0 ).system.monolithic();
    EXPECT_NE( mono, mono.transpose() );
}

TEST( Case, Deterministic )
{
    const auto a = make_case( 1 );
    const auto b = make_case( 1 );
    EXPECT_EQ( a.system.monolithic(), b.system.monolithic() );
    EXPECT_EQ( a.solution, b.solution );
    CaseConfig other;
    other.refinement = 1;
    other.seed       = 2;
    EXPECT_NE( build_case( other ).solution, a.solution );
}

TEST( Case, DofScalingAndFieldProportions )
{
    std::size_t previous = 0;
    for ( std::size_t r = 0; r <= 2; ++r )
    {
        const auto bc    = make_case( r );
        const auto cells = bc.grid.size();
        EXPECT_EQ( bc.system.dim( Field::phi_s ), cells );
        EXPECT_EQ( bc.system.dim( Field::phi_l ), cells );
        EXPECT_EQ( bc.system.dim( Field::solid_species ), 2 * cells );
        EXPECT_EQ( bc.system.dim( Field::liquid_species ), cells );
        EXPECT_EQ( bc.system.dim( Field::pressure ), cells );
        if ( previous )
            EXPECT_EQ( bc.system.size(), 4 * previous );
        previous = bc.system.size();
    }
    EXPECT_EQ( make_case( 1 ).system.size(), 3648u );
}

TEST( Case, SolidVoltageContrast )
{
    const auto d = make_case( 1 ).system.block( Field::phi_s, Field::phi_s )->diagonal();
    const auto [lo, hi] = std::ranges::minmax( d );
    EXPECT_GT( lo, 0.0 );
    EXPECT_GE( hi / lo, 1e9 );
}

TEST( Case, BlockTopology )
{
    const auto  bc  = make_case( 1 );
    const auto& sys = bc.system;
    const auto* as  = sys.block( Field::solid_species, Field::solid_species );
    ASSERT_NE( as, nullptr );
    for ( std::size_t r = 0; r < as->rows(); ++r )
        for ( std::size_t c : as->row_cols( r ) )
            EXPECT_EQ( c, r );
    for ( auto [a, b] : { std::pair{ Field::solid_species, Field::liquid_species }, std::pair{ Field::liquid_species, Field::solid_species },
                          std::pair{ Field::solid_species, Field::pressure }, std::pair{ Field::pressure, Field::solid_species },
                          std::pair{ Field::pressure, Field::phi_s }, std::pair{ Field::pressure, Field::phi_l },
                          std::pair{ Field::phi_s, Field::pressure }, std::pair{ Field::phi_l, Field::pressure } } )
        EXPECT_FALSE( sys.has_block( a, b ) ) << field_name( a ) << "," << field_name( b );
    ASSERT_TRUE( sys.has_block( Field::phi_s, Field::phi_l ) );
    EXPECT_TRUE( rows_only_on_electrodes( *sys.block( Field::phi_s, Field::phi_l ), bc.grid ) );
    EXPECT_TRUE( rows_only_on_electrodes( *sys.block( Field::phi_l, Field::phi_s ), bc.grid ) );
    EXPECT_TRUE( sys.has_block( Field::liquid_species, Field::pressure ) );
}

TEST( Case, DirectSolveRecoversManufacturedSolution )
{
    const auto bc = make_case( 0 );
    const auto x  = dense_factor_solve( bc.system.monolithic(), bc.system.rhs() );
    EXPECT_LE( oracle::rel_diff( x, bc.solution ), 1e-8 );
}

TEST( Case, ConfigValidation )
{
    CaseConfig c;
    c.dt = 0.0;
    EXPECT_THROW( build_case( c ), ConfigError );
    c                  = {};
    c.frozen_viscosity = 0.5;
    EXPECT_THROW( build_case( c ), ConfigError );
}

TEST( Case, MatrixMarketExport )
{
    const auto bc  = make_case( 0, 3, 1 );
    const auto dir = std::filesystem::temp_directory_path() / "hbgs_export_test";
    std::filesystem::remove_all( dir );
    bc.export_matrix_market( dir );
    EXPECT_EQ( load_matrix_market( dir / "A.mtx" ), bc.system.monolithic() );
    EXPECT_EQ( load_matrix_market( dir / "A_phi_s_phi_s.mtx" ), *bc.system.block( Field::phi_s, Field::phi_s ) );
    EXPECT_EQ( load_matrix_market( dir / "b.mtx" ).rows(), bc.system.size() );
    std::filesystem::remove_all( dir );
}
