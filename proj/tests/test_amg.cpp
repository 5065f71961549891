#include "hbgs/amg.hpp"
#include "hbgs/battery.hpp"
#include "hbgs/error.hpp"
#include "oracle.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numeric>

using namespace hbgs;
using namespace hbgs::amg;

namespace {

AmgParams params_with( double theta, std::size_t coarse = 64 )
{
    AmgParams p;
    p.drop_tolerance  = theta;
    p.max_coarse_size = coarse;
    return p;
}

} // namespace

TEST( Strength, ThetaZeroKeepsEverything )
{
    const auto a = oracle::random_sparse( 20, 20, 0.2, 1, 3.0 );
    const auto s = strength_graph( a, 0.0 );
    for ( std::size_t i = 0; i < 20; ++i )
        for ( std::size_t j : a.row_cols( i ) )
        {
            EXPECT_TRUE( s.has_edge( i, j ) );
            EXPECT_TRUE( s.has_edge( j, i ) );
        }
}

TEST( Strength, TridiagonalAllStrong )
{
    const auto s = strength_graph( oracle::tridiag( 5 ), 0.04 );
    for ( std::size_t i = 0; i + 1 < 5; ++i )
        EXPECT_TRUE( s.has_edge( i, i + 1 ) );
    EXPECT_TRUE( is_strong( -1.0, 2.0, 2.0, 0.04 ) );
    EXPECT_FALSE( is_strong( -0.08, 2.0, 2.0, 0.04 ) );
}

TEST( Strength, WeakInterfaceEdgeDropped )
{
    battery::StructuredGrid     g{ 4, 1, 1.0 };
    const std::vector< double > sigma{ 1e-4, 1e-4, 1e6, 1e6 };
    const auto                  a = battery::assemble_diffusion_operator( g, sigma, 0.0 );
    const auto                  s = strength_graph( a, 0.04 );
    EXPECT_TRUE( s.has_edge( 0, 1 ) );
    EXPECT_FALSE( s.has_edge( 1, 2 ) );
    EXPECT_FALSE( s.has_edge( 2, 1 ) );
    EXPECT_TRUE( s.has_edge( 2, 3 ) );
    EXPECT_TRUE( strength_graph( a, 0.0 ).has_edge( 1, 2 ) );
}

TEST( Strength, PatternSymmetrisedByUnion )
{
    // a_01 is strong, a_10 is not stored.
    const auto a = SparseMatrix::from_triplets( 2, 2, { { 0, 0, 1.0 }, { 0, 1, -1.0 }, { 1, 1, 1.0 } } );
    const auto s = strength_graph( a, 0.5 );
    EXPECT_TRUE( s.has_edge( 0, 1 ) );
    EXPECT_TRUE( s.has_edge( 1, 0 ) );
    EXPECT_TRUE( s.has_edge( 0, 0 ) );
}

TEST( Aggregate, SingleNode )
{
    const auto agg = aggregate( strength_graph( SparseMatrix::identity( 1 ), 0.0 ) );
    EXPECT_EQ( agg.count, 1u );
    EXPECT_EQ( agg.aggregate_of, ( std::vector< std::size_t >{ 0 } ) );
}

TEST( Aggregate, SixNodePathFixture )
{
    const auto agg = aggregate( strength_graph( oracle::tridiag( 6 ), 0.0 ) );
    EXPECT_EQ( agg.count, 2u );
    EXPECT_EQ( agg.aggregate_of, ( std::vector< std::size_t >{ 0, 0, 1, 1, 1, 1 } ) );
}

TEST( Aggregate, IsolatedNodeBecomesSingleton )
{
    const auto a   = SparseMatrix::from_triplets( 4, 4, { { 0, 0, 2 }, { 0, 1, -1 }, { 1, 0, -1 }, { 1, 1, 2 }, { 2, 2, 1 }, { 3, 3, 1 } } );
    const auto agg = aggregate( strength_graph( a, 0.0 ) );
    EXPECT_EQ( agg.count, 3u );
    EXPECT_EQ( agg.aggregate_of[0], agg.aggregate_of[1] );
    EXPECT_NE( agg.aggregate_of[2], agg.aggregate_of[3] );
}

TEST( Aggregate, EveryAggregateNonEmptyAndConnected )
{
    const auto a   = oracle::poisson2d( 17 );
    const auto s   = strength_graph( a, 0.04 );
    const auto agg = aggregate( s );
    const auto mem = agg.members();
    ASSERT_EQ( mem.size(), agg.count );
    std::size_t total = 0;
    for ( const auto& m : mem )
    {
        ASSERT_FALSE( m.empty() );
        total += m.size();
        // Flood fill inside the aggregate through strong edges.
        std::vector< std::size_t > stack{ m.front() }, seen{ m.front() };
        while ( !stack.empty() )
        {
            const auto i = stack.back();
            stack.pop_back();
            for ( std::size_t j : s.row( i ) )
                if ( agg.aggregate_of[j] == agg.aggregate_of[i] && std::ranges::find( seen, j ) == seen.end() )
                {
                    seen.push_back( j );
                    stack.push_back( j );
                }
        }
        EXPECT_EQ( seen.size(), m.size() );
    }
    EXPECT_EQ( total, a.rows() );
}

TEST( Tentative, SizeFourAggregateIsOneHalf )
{
    AggregateMap                agg{ { 0, 0, 0, 0 }, 1 };
    const std::vector< double > ones( 4, 1.0 );
    const auto                  p = tentative_prolongator( agg, ones );
    for ( std::size_t i = 0; i < 4; ++i )
        EXPECT_DOUBLE_EQ( p.at( i, 0 ), 0.5 );
}

TEST( Tentative, SingleAggregateAndOrthonormality )
{
    AggregateMap                one{ std::vector< std::size_t >( 7, 0 ), 1 };
    const std::vector< double > ones( 7, 1.0 );
    const auto                  p1 = tentative_prolongator( one, ones );
    for ( std::size_t i = 0; i < 7; ++i )
        EXPECT_DOUBLE_EQ( p1.at( i, 0 ), 1.0 / std::sqrt( 7.0 ) );

    const auto a   = oracle::poisson2d( 9 );
    const auto agg = aggregate( strength_graph( a, 0.0 ) );
    const std::vector< double > ones81( 81, 1.0 );
    const auto p   = tentative_prolongator( agg, ones81 );
    for ( std::size_t i = 0; i < p.rows(); ++i )
        EXPECT_EQ( p.row_cols( i ).size(), 1u );
    const Eigen::MatrixXd ptp = oracle::dense( p ).transpose() * oracle::dense( p );
    EXPECT_LT( oracle::max_abs( ptp - Eigen::MatrixXd::Identity( ptp.rows(), ptp.cols() ) ), 1e-14 );

    // Nullspace preservation: P_tent c = 1 with c the coarse nullspace.
    const auto c  = coarse_nullspace( agg, ones81 );
    const auto pc = spmv( p, c );
    for ( double v : pc )
        EXPECT_NEAR( v, 1.0, 1e-12 );
}

TEST( Tentative, VanishingRestrictionRejected )
{
    AggregateMap                agg{ { 0, 1 }, 2 };
    const std::vector< double > ns{ 1.0, 0.0 };
    EXPECT_THROW( tentative_prolongator( agg, ns ), SetupError );
}

TEST( SmoothProlongator, ThetaZeroMatchesDenseOracle )
{
    const auto   a = oracle::tridiag( 4 );
    AggregateMap agg{ { 0, 0, 1, 1 }, 2 };
    const std::vector< double > ones( 4, 1.0 );
    const auto   pt = tentative_prolongator( agg, ones );
    AmgParams    prm;
    prm.prolongator_power_iterations = 300;
    const auto p = smooth_prolongator( a, pt, prm );

    const Eigen::MatrixXd ad   = oracle::dense( a );
    const Eigen::MatrixXd dinv = ad.diagonal().cwiseInverse().asDiagonal();
    const Eigen::MatrixXd da   = dinv * ad;
    const double          lmax = da.eigenvalues().real().maxCoeff();
    const double          w    = ( 4.0 / 3.0 ) / lmax;
    const Eigen::MatrixXd ref  = ( Eigen::MatrixXd::Identity( 4, 4 ) - w * da ) * oracle::dense( pt );
    EXPECT_LT( oracle::max_abs( oracle::dense( p ) - ref ), 1e-10 );
}

TEST( SmoothProlongator, DiagonalOperatorClosedForm )
{
    const auto   a = SparseMatrix::diagonal( std::vector< double >{ 3, 5, 7, 11 } );
    AggregateMap agg{ { 0, 0, 1, 1 }, 2 };
    const std::vector< double > ones( 4, 1.0 );
    const auto pt = tentative_prolongator( agg, ones );
    const auto p  = smooth_prolongator( a, pt, params_with( 0.04 ) );
    EXPECT_LT( oracle::max_abs( oracle::dense( p ) + oracle::dense( pt ) / 3.0 ), 1e-12 );
}

TEST( SmoothProlongator, PatternGrowthBoundedByFilteredMatrix )
{
    const auto a   = oracle::poisson2d( 12 );
    const auto agg = aggregate( strength_graph( a, 0.04 ) );
    const std::vector< double > ones( a.rows(), 1.0 );
    const auto pt  = tentative_prolongator( agg, ones );
    const auto af  = filtered_matrix( a, 0.04, DiagonalCompensation::absolute_row_sum );
    const auto p   = smooth_prolongator( a, pt, params_with( 0.04 ) );
    for ( std::size_t i = 0; i < a.rows(); ++i )
        EXPECT_LE( p.row_cols( i ).size(), af.row_cols( i ).size() );
}

TEST( FilteredMatrix, AbsoluteRowSumCompensation )
{
    // Row 0: a_00 = -2 with dropped entries 0.01 and -0.02.
    const auto a  = SparseMatrix::from_dense( 3, 3, std::vector< double >{ -2, 0.01, -0.02, 0.01, 1, -1, -0.02, -1, 1 } );
    const auto af = filtered_matrix( a, 0.1, DiagonalCompensation::absolute_row_sum );
    EXPECT_DOUBLE_EQ( af.at( 0, 0 ), -2.03 );
    EXPECT_EQ( af.find( 0, 1 ), SparseMatrix::npos );
    EXPECT_DOUBLE_EQ( af.at( 1, 1 ), 1.01 );
    EXPECT_EQ( af.at( 1, 2 ), -1.0 );

    const auto rs = filtered_matrix( a, 0.1, DiagonalCompensation::row_sum_preserving );
    EXPECT_DOUBLE_EQ( rs.at( 0, 0 ), -2.01 );
    const auto none = filtered_matrix( a, 0.1, DiagonalCompensation::none );
    EXPECT_EQ( none.at( 0, 0 ), -2.0 );
}

TEST( Hierarchy, SmallOperatorIsSingleLevelDirect )
{
    const auto a = oracle::poisson2d( 6 );
    const auto h = build_hierarchy( a, params_with( 0.0 ) );
    EXPECT_EQ( h.num_levels(), 1u );
    const auto b = oracle::random_vector( a.rows(), 1 );
    const std::vector< double > x0( a.rows(), 0.0 );
    const auto x = vcycle( h, b, x0 );
    EXPECT_LT( oracle::rel_diff( spmv( a, x ), b ), 1e-12 );
}

TEST( Hierarchy, Poisson1dGeometricCoarseningFixture )
{
    const auto h = build_hierarchy( oracle::tridiag( 1024 ), params_with( 0.0, 16 ) );
    const auto s = h.summary();
    std::vector< std::size_t > dims;
    for ( const auto& l : s.levels )
        dims.push_back( l.rows );
    EXPECT_EQ( dims, ( std::vector< std::size_t >{ 1024, 342, 114, 38, 13 } ) );
    EXPECT_FALSE( s.truncated );
    EXPECT_EQ( h.coarse_solver().dimension(), 13u );
}

TEST( Hierarchy, GalerkinConsistency )
{
    const auto a = oracle::poisson2d( 40 );
    const auto h = build_hierarchy( a, params_with( 0.04, 20 ) );
    ASSERT_GT( h.num_levels(), 2u );
    for ( std::size_t l = 0; l + 1 < h.num_levels(); ++l )
    {
        const auto& lv = h.level( l );
        EXPECT_EQ( lv.r, lv.p.transpose() );
        const auto  rap = triple_product( lv.r, lv.a, lv.p );
        const auto& nxt = h.level( l + 1 ).a;
        ASSERT_EQ( rap.rows(), nxt.rows() );
        EXPECT_LT( oracle::max_abs( oracle::dense( rap ) - oracle::dense( nxt ) ), 1e-12 * oracle::max_abs( oracle::dense( nxt ) ) );
        EXPECT_LE( h.level( l ).smoother.degree(), 2u );
    }
}

TEST( Hierarchy, VcycleFixedPointAndLinearity )
{
    const auto a = oracle::poisson2d( 30 );
    const auto h = build_hierarchy( a, params_with( 0.04, 30 ) );
    const auto x = oracle::random_vector( a.rows(), 2 );
    const auto b = spmv( a, x );
    EXPECT_LT( oracle::rel_diff( vcycle( h, b, x ), x ), 1e-12 );

    const auto r1 = oracle::random_vector( a.rows(), 3 );
    const auto r2 = oracle::random_vector( a.rows(), 4 );
    std::vector< double > z1( a.rows() ), z2( a.rows() ), z12( a.rows() ), r12( a.rows() );
    for ( std::size_t i = 0; i < a.rows(); ++i )
        r12[i] = 2.0 * r1[i] - 3.0 * r2[i];
    h.precondition( r1, z1 );
    h.precondition( r2, z2 );
    h.precondition( r12, z12 );
    for ( std::size_t i = 0; i < a.rows(); ++i )
        EXPECT_NEAR( z12[i], 2.0 * z1[i] - 3.0 * z2[i], 1e-12 );
}

TEST( Hierarchy, PoissonPreconditionedGmres )
{
    const auto   a = oracle::poisson2d( 32 );
    const auto   h = build_hierarchy( a, params_with( 0.0 ) );
    const auto   m = h.as_preconditioner();
    SolverConfig cfg;
    cfg.relative_tolerance = 1e-8;
    const auto b   = oracle::random_vector( a.rows(), 5 );
    const auto res = gmres( as_operator( a ), &m, b, cfg );
    ASSERT_TRUE( res.stats.converged );
    EXPECT_LE( res.stats.iterations, 15u );
}

TEST( Hierarchy, StagnationTruncatesOrFails )
{
    std::vector< double > d( 50 );
    std::iota( d.begin(), d.end(), 1.0 );
    const auto h = build_hierarchy( SparseMatrix::diagonal( d ), params_with( 0.0, 16 ) );
    EXPECT_TRUE( h.summary().truncated );
    EXPECT_EQ( h.coarse_solver().dimension(), 50u );

    std::vector< double > big( 1000, 2.0 );
    EXPECT_THROW( build_hierarchy( SparseMatrix::diagonal( big ), params_with( 0.0, 16 ) ), SetupError );
}

TEST( Hierarchy, ParamsValidated )
{
    AmgParams p;
    p.max_coarse_size = 0;
    EXPECT_THROW( p.validate(), ConfigError );
    p           = {};
    p.max_levels = 0;
    EXPECT_THROW( p.validate(), ConfigError );
    p                = {};
    p.drop_tolerance = -1.0;
    EXPECT_THROW( p.validate(), ConfigError );
}

TEST( Hierarchy, OperatorComplexityOnBatteryBlocks )
{
    battery::CaseConfig cfg;
    cfg.refinement = 1;
    const auto bc  = battery::build_case( cfg );
    const auto pc  = ElectrochemConfig::defaults();
    const std::pair< Field, AmgParams > blocks[] = { { Field::phi_s, pc.phi_s_amg },
                                                     { Field::phi_l, pc.phi_l_amg },
                                                     { Field::pressure, pc.pressure_amg } };
    for ( const auto& [f, prm] : blocks )
    {
        const auto h = build_hierarchy( *bc.system.block( f, f ), prm );
        EXPECT_LE( h.operator_complexity(), 2.5 ) << field_name( f );
    }
}
