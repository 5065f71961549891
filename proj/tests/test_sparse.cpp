#include "hbgs/battery.hpp"
#include "hbgs/error.hpp"
#include "hbgs/sparse.hpp"
#include "oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace hbgs;

TEST( SparseMatrix, RejectsNonCanonicalArrays )
{
    EXPECT_THROW( SparseMatrix( 2, 2, { 0, 2, 2 }, { 1, 0 }, { 1.0, 2.0 } ), DimensionError );
    EXPECT_THROW( SparseMatrix( 2, 2, { 0, 1, 2 }, { 0, 2 }, { 1.0, 2.0 } ), DimensionError );
    EXPECT_THROW( SparseMatrix( 2, 2, { 1, 1, 2 }, { 0, 1 }, { 1.0, 2.0 } ), DimensionError );
    EXPECT_THROW( SparseMatrix( 2, 2, { 0, 1, 2 }, { 0, 1 }, { 1.0 } ), DimensionError );
    EXPECT_NO_THROW( SparseMatrix( 2, 2, { 0, 1, 2 }, { 0, 1 }, { 1.0, 2.0 } ) );
}

TEST( SparseMatrix, TripletsSumDuplicatesAndKeepZeros )
{
    auto a = SparseMatrix::from_triplets( 2, 3, { { 1, 2, 1.0 }, { 0, 1, 2.0 }, { 1, 2, -1.0 }, { 1, 0, 4.0 } } );
    EXPECT_EQ( a.nnz(), 3u );
    EXPECT_EQ( a.at( 1, 2 ), 0.0 );
    EXPECT_NE( a.find( 1, 2 ), SparseMatrix::npos );
    EXPECT_EQ( a.at( 1, 0 ), 4.0 );
    EXPECT_EQ( a.find( 0, 0 ), SparseMatrix::npos );
}

TEST( Spmv, Identity )
{
    EXPECT_EQ( spmv( SparseMatrix::identity( 2 ), std::vector< double >{ 3.0, -5.0 } ), ( std::vector< double >{ 3.0, -5.0 } ) );
}

TEST( Spmv, TridiagRowSums )
{
    EXPECT_EQ( spmv( oracle::tridiag( 3 ), std::vector< double >{ 1, 1, 1 } ), ( std::vector< double >{ 1, 0, 1 } ) );
}

TEST( Spmv, FirstUnitVectorGivesFirstColumn )
{
    const auto a = oracle::random_sparse( 5, 5, 1.0, 42 );
    const auto y = spmv( a, std::vector< double >{ 1, 0, 0, 0, 0 } );
    const auto d = oracle::dense( a );
    for ( std::size_t i = 0; i < 5; ++i )
        EXPECT_EQ( y[i], d( static_cast< Eigen::Index >( i ), 0 ) );
}

TEST( Spmv, DimensionMismatchRejected )
{
    EXPECT_THROW( spmv( oracle::tridiag( 3 ), std::vector< double >{ 1, 1 } ), DimensionError );
}

TEST( Spmv, MatchesDenseOracle )
{
    for ( std::size_t n : { 1, 7, 23, 50 } )
        for ( std::uint64_t seed = 0; seed < 4; ++seed )
        {
            const auto a   = oracle::random_sparse( n, n + 3, 0.25, seed * 97 + n );
            const auto x   = oracle::random_vector( n + 3, seed );
            const auto ref = oracle::stdvec( oracle::dense( a ) * oracle::vec( x ) );
            EXPECT_LT( oracle::rel_diff( spmv( a, x ), ref ), 1e-13 ) << n;
        }
}

TEST( Spmv, Deterministic )
{
    const auto a = oracle::random_sparse( 40, 40, 0.3, 9 );
    const auto x = oracle::random_vector( 40, 10 );
    EXPECT_EQ( spmv( a, x ), spmv( a, x ) );
}

TEST( TripleProduct, IdentityLeavesMatrixUnchanged )
{
    const auto a = oracle::random_sparse( 6, 6, 0.4, 3 );
    EXPECT_EQ( triple_product( SparseMatrix::identity( 6 ), a, SparseMatrix::identity( 6 ) ), a );
}

TEST( TripleProduct, PiecewiseConstantCoarseningMatchesDenseRap )
{
    const double s = 1.0 / std::sqrt( 2.0 );
    const auto   p = SparseMatrix::from_triplets( 4, 2, { { 0, 0, s }, { 1, 0, s }, { 2, 1, s }, { 3, 1, s } } );
    const auto   a = oracle::tridiag( 4 );
    const auto   c = triple_product( p.transpose(), a, p );
    ASSERT_EQ( c.rows(), 2u );
    ASSERT_EQ( c.cols(), 2u );
    const Eigen::MatrixXd ref = oracle::dense( p ).transpose() * oracle::dense( a ) * oracle::dense( p );
    EXPECT_LT( oracle::max_abs( oracle::dense( c ) - ref ), 1e-12 );
    EXPECT_NEAR( c.at( 0, 0 ), 1.0, 1e-15 );
    EXPECT_NEAR( c.at( 0, 1 ), -0.5, 1e-15 );
}

TEST( TripleProduct, ZeroRestrictionAnnihilates )
{
    const auto c = triple_product( SparseMatrix::zero( 3, 5 ), oracle::tridiag( 5 ), oracle::random_sparse( 5, 4, 0.5, 1 ) );
    EXPECT_EQ( c.rows(), 3u );
    EXPECT_EQ( c.cols(), 4u );
    for ( double v : c.values() )
        EXPECT_EQ( v, 0.0 );
}

TEST( TripleProduct, DimensionMismatchRejected )
{
    EXPECT_THROW( triple_product( SparseMatrix::identity( 3 ), oracle::tridiag( 4 ), SparseMatrix::identity( 4 ) ), DimensionError );
}

TEST( TripleProduct, MatchesSuccessiveDenseProducts )
{
    for ( std::uint64_t seed = 0; seed < 6; ++seed )
    {
        const std::size_t n = 20 + 16 * seed, m = n / 3 + 1;
        const auto        a = oracle::random_sparse( n, n, 0.1, seed );
        const auto        p = oracle::random_sparse( n, m, 0.2, seed + 100 );
        const auto        r = p.transpose();
        const auto        c = triple_product( r, a, p );
        const Eigen::MatrixXd ref = oracle::dense( r ) * ( oracle::dense( a ) * oracle::dense( p ) );
        EXPECT_LT( oracle::max_abs( oracle::dense( c ) - ref ), 1e-12 * ( oracle::max_abs( ref ) + 1.0 ) );
        EXPECT_TRUE( is_canonical( c.rows(), c.cols(), c.row_offsets(), c.col_indices(), c.nnz() ) );
    }
}

TEST( TripleProduct, CancellationZerosAreKept )
{
    // [1 1] * [1; -1] cancels exactly to zero, which must stay stored.
    const auto r = SparseMatrix::from_dense( 1, 2, std::vector< double >{ 1, 1 } );
    const auto p = SparseMatrix::from_dense( 2, 1, std::vector< double >{ 1, -1 } );
    const auto c = triple_product( r, SparseMatrix::identity( 2 ), p );
    EXPECT_EQ( c.nnz(), 1u );
    EXPECT_EQ( c.at( 0, 0 ), 0.0 );
}

TEST( DenseFactorization, Diagonal )
{
    const auto x = dense_factor_solve( SparseMatrix::diagonal( std::vector< double >{ 2, 4 } ), std::vector< double >{ 2, 4 } );
    EXPECT_EQ( x, ( std::vector< double >{ 1, 1 } ) );
}

TEST( DenseFactorization, RotationNeedsPivoting )
{
    const auto a = SparseMatrix::from_dense( 2, 2, std::vector< double >{ 0, 1, -1, 0 } );
    const auto x = dense_factor_solve( a, std::vector< double >{ 1, 0 } );
    EXPECT_NEAR( x[0], 0.0, 1e-15 );
    EXPECT_NEAR( x[1], 1.0, 1e-15 );
}

TEST( DenseFactorization, ManufacturedOnes )
{
    const auto            a = oracle::random_sparse( 10, 10, 1.0, 11, 12.0 );
    const std::vector< double > ones( 10, 1.0 );
    const auto            x = dense_factor_solve( a, spmv( a, ones ) );
    for ( double v : x )
        EXPECT_NEAR( v, 1.0, 1e-10 );
}

TEST( DenseFactorization, ReproducesIdentityOnOwnColumns )
{
    const auto a = oracle::random_sparse( 30, 30, 0.4, 5, 3.0 );
    const auto f = DenseFactorization::factor( a );
    const auto d = oracle::dense( a );
    for ( Eigen::Index j = 0; j < 30; ++j )
    {
        std::vector< double > col( 30 );
        for ( Eigen::Index i = 0; i < 30; ++i )
            col[static_cast< std::size_t >( i )] = d( i, j );
        const auto e = f.solve( col );
        for ( std::size_t i = 0; i < 30; ++i )
            EXPECT_NEAR( e[i], i == static_cast< std::size_t >( j ) ? 1.0 : 0.0, 1e-12 );
    }
}

TEST( DenseFactorization, SingularNamesPivotRow )
{
    // Row 1 is twice row 0; after the first swap original row 0 holds the zero pivot.
    const auto a = SparseMatrix::from_dense( 3, 3, std::vector< double >{ 1, 2, 0, 2, 4, 0, 0, 0, 1 } );
    try
    {
        DenseFactorization::factor( a );
        FAIL() << "expected SingularPivotError";
    }
    catch ( const SingularPivotError& e )
    {
        EXPECT_EQ( e.row(), 0u );
    }
}

TEST( DenseFactorization, CapAndShapeEnforced )
{
    EXPECT_THROW( DenseFactorization::factor( SparseMatrix::identity( 5 ), 4 ), DimensionError );
    EXPECT_THROW( DenseFactorization::factor( SparseMatrix::zero( 2, 3 ) ), DimensionError );
}

TEST( MatrixMarket, OneByOneRoundTrip )
{
    const auto a = SparseMatrix::from_dense( 1, 1, std::vector< double >{ 7.5 } );
    EXPECT_EQ( parse_matrix_market( format_matrix_market( a ) ), a );
}

TEST( MatrixMarket, SymmetricExpanded )
{
    const auto a = parse_matrix_market( "%%MatrixMarket matrix coordinate real symmetric\n"
                                        "3 3 5\n1 1 2\n2 1 -1\n2 2 2\n3 2 -1\n3 3 2\n" );
    EXPECT_EQ( a.nnz(), 7u );
    EXPECT_EQ( a.at( 0, 1 ), -1.0 );
    EXPECT_EQ( a.at( 1, 2 ), -1.0 );
}

TEST( MatrixMarket, RejectsBadInputWithLineNumbers )
{
    auto line_of = []( const char* text ) -> std::size_t {
        try
        {
            parse_matrix_market( text );
        }
        catch ( const FormatError& e )
        {
            return e.line();
        }
        return 0;
    };
    EXPECT_EQ( line_of( "%%MatrixMarket matrix array real general\n1 1\n1\n" ), 1u );
    EXPECT_EQ( line_of( "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n" ), 3u );
    EXPECT_EQ( line_of( "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n1 1 2.0\n" ), 4u );
    EXPECT_EQ( line_of( "%%MatrixMarket matrix coordinate real general\n% c\n2 2 1\n1 x 1.0\n" ), 4u );
}

TEST( MatrixMarket, ValuesRoundTripBitExactly )
{
    std::vector< Triplet > t{ { 0, 0, 0.1 }, { 0, 2, 1.0 / 3.0 }, { 1, 1, -2.5e-300 }, { 2, 0, 6.02214076e23 },
                              { 2, 2, std::nextafter( 1.0, 2.0 ) } };
    const auto a = SparseMatrix::from_triplets( 3, 3, t );
    EXPECT_EQ( parse_matrix_market( format_matrix_market( a ) ), a );
}

TEST( MatrixMarket, BatteryMatrixFileRoundTrip )
{
    battery::CaseConfig cfg;
    cfg.nr      = 4;
    cfg.n_cells = 2;
    const auto bc   = battery::build_case( cfg );
    const auto a    = bc.system.monolithic();
    const auto path = std::filesystem::temp_directory_path() / "hbgs_mm_roundtrip.mtx";
    store_matrix_market( a, path );
    const auto b = load_matrix_market( path );
    std::filesystem::remove( path );
    ASSERT_EQ( b, a );
    for ( std::uint64_t seed = 0; seed < 5; ++seed )
    {
        const auto x = oracle::random_vector( a.cols(), seed );
        EXPECT_EQ( spmv( a, x ), spmv( b, x ) );
    }
}
