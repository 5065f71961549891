#include "hbgs/sparse.hpp"

#include "hbgs/error.hpp"
#include "hbgs/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace hbgs {

namespace {

std::string shape( std::size_t r, std::size_t c ) { return std::to_string( r ) + "x" + std::to_string( c ); }

kernels::CsrView view( const SparseMatrix& a )
{
    return { a.rows(), a.row_offsets(), a.col_indices(), a.values() };
}

} // namespace

bool is_canonical( std::size_t                    nrows,
                   std::size_t                    ncols,
                   std::span< const std::size_t > row_offsets,
                   std::span< const std::size_t > col_indices,
                   std::size_t                    nvalues )
{
    if ( row_offsets.size() != nrows + 1 || row_offsets[0] != 0 || row_offsets[nrows] != nvalues ||
         col_indices.size() != nvalues )
        return false;
    for ( std::size_t i = 0; i < nrows; ++i )
    {
        if ( row_offsets[i] > row_offsets[i + 1] )
            return false;
        for ( std::size_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k )
        {
            if ( col_indices[k] >= ncols )
                return false;
            if ( k > row_offsets[i] && col_indices[k] <= col_indices[k - 1] )
                return false;
        }
    }
    return true;
}

SparseMatrix::SparseMatrix( std::size_t                nrows,
                            std::size_t                ncols,
                            std::vector< std::size_t > row_offsets,
                            std::vector< std::size_t > col_indices,
                            std::vector< double >      values )
: nrows_( nrows )
, ncols_( ncols )
, row_offsets_( std::move( row_offsets ) )
, col_indices_( std::move( col_indices ) )
, values_( std::move( values ) )
{
    if ( !is_canonical( nrows_, ncols_, row_offsets_, col_indices_, values_.size() ) )
        throw DimensionError( "CSR arrays for a " + shape( nrows_, ncols_ ) + " matrix are not in canonical form" );
}

SparseMatrix SparseMatrix::from_triplets( std::size_t nrows, std::size_t ncols, std::vector< Triplet > entries )
{
    for ( const auto& t : entries )
        if ( t.row >= nrows || t.col >= ncols )
            throw DimensionError( "triplet (" + std::to_string( t.row ) + ", " + std::to_string( t.col ) +
                                  ") outside a " + shape( nrows, ncols ) + " matrix" );
    std::stable_sort( entries.begin(), entries.end(), []( const Triplet& a, const Triplet& b ) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    } );
    std::vector< std::size_t > offsets( nrows + 1, 0 );
    std::vector< std::size_t > cols;
    std::vector< double >      vals;
    cols.reserve( entries.size() );
    vals.reserve( entries.size() );
    for ( std::size_t k = 0; k < entries.size(); ++k )
    {
        const auto& t = entries[k];
        if ( k > 0 && entries[k - 1].row == t.row && entries[k - 1].col == t.col )
        {
            vals.back() += t.value;
            continue;
        }
        cols.push_back( t.col );
        vals.push_back( t.value );
        ++offsets[t.row + 1];
    }
    std::partial_sum( offsets.begin(), offsets.end(), offsets.begin() );
    return SparseMatrix( nrows, ncols, std::move( offsets ), std::move( cols ), std::move( vals ) );
}

SparseMatrix SparseMatrix::identity( std::size_t n )
{
    std::vector< double > ones( n, 1.0 );
    return diagonal( ones );
}

SparseMatrix SparseMatrix::zero( std::size_t nrows, std::size_t ncols )
{
    return SparseMatrix( nrows, ncols, std::vector< std::size_t >( nrows + 1, 0 ), {}, {} );
}

SparseMatrix SparseMatrix::diagonal( std::span< const double > d )
{
    const std::size_t          n = d.size();
    std::vector< std::size_t > offsets( n + 1 );
    std::vector< std::size_t > cols( n );
    std::iota( offsets.begin(), offsets.end(), std::size_t{ 0 } );
    std::iota( cols.begin(), cols.end(), std::size_t{ 0 } );
    return SparseMatrix( n, n, std::move( offsets ), std::move( cols ), std::vector< double >( d.begin(), d.end() ) );
}

SparseMatrix SparseMatrix::from_dense( std::size_t nrows, std::size_t ncols, std::span< const double > row_major )
{
    if ( row_major.size() != nrows * ncols )
        throw DimensionError( "dense data length does not match " + shape( nrows, ncols ) );
    std::vector< std::size_t > offsets( nrows + 1 );
    std::vector< std::size_t > cols;
    cols.reserve( nrows * ncols );
    for ( std::size_t i = 0; i < nrows; ++i )
    {
        offsets[i] = i * ncols;
        for ( std::size_t j = 0; j < ncols; ++j )
            cols.push_back( j );
    }
    offsets[nrows] = nrows * ncols;
    return SparseMatrix(
        nrows, ncols, std::move( offsets ), std::move( cols ), std::vector< double >( row_major.begin(), row_major.end() ) );
}

std::size_t SparseMatrix::find( std::size_t i, std::size_t j ) const noexcept
{
    if ( i >= nrows_ )
        return npos;
    const auto begin = col_indices_.begin() + static_cast< std::ptrdiff_t >( row_offsets_[i] );
    const auto end   = col_indices_.begin() + static_cast< std::ptrdiff_t >( row_offsets_[i + 1] );
    const auto it    = std::lower_bound( begin, end, j );
    if ( it == end || *it != j )
        return npos;
    return static_cast< std::size_t >( it - col_indices_.begin() );
}

double SparseMatrix::at( std::size_t i, std::size_t j ) const
{
    if ( i >= nrows_ || j >= ncols_ )
        throw DimensionError( "index (" + std::to_string( i ) + ", " + std::to_string( j ) + ") outside " +
                              shape( nrows_, ncols_ ) );
    const std::size_t k = find( i, j );
    return k == npos ? 0.0 : values_[k];
}

std::vector< double > SparseMatrix::diagonal() const
{
    std::vector< double > d( std::min( nrows_, ncols_ ), 0.0 );
    for ( std::size_t i = 0; i < d.size(); ++i )
    {
        const std::size_t k = find( i, i );
        if ( k != npos )
            d[i] = values_[k];
    }
    return d;
}

SparseMatrix SparseMatrix::transpose() const
{
    std::vector< std::size_t > offsets( ncols_ + 1, 0 );
    for ( std::size_t c : col_indices_ )
        ++offsets[c + 1];
    std::partial_sum( offsets.begin(), offsets.end(), offsets.begin() );
    std::vector< std::size_t > cursor( offsets.begin(), offsets.end() - 1 );
    std::vector< std::size_t > cols( nnz() );
    std::vector< double >      vals( nnz() );
    for ( std::size_t i = 0; i < nrows_; ++i )
        for ( std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k )
        {
            const std::size_t dst = cursor[col_indices_[k]]++;
            cols[dst]             = i;
            vals[dst]             = values_[k];
        }
    return SparseMatrix( ncols_, nrows_, std::move( offsets ), std::move( cols ), std::move( vals ) );
}

std::vector< double > SparseMatrix::to_dense() const
{
    std::vector< double > d( nrows_ * ncols_, 0.0 );
    for ( std::size_t i = 0; i < nrows_; ++i )
        for ( std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k )
            d[i * ncols_ + col_indices_[k]] = values_[k];
    return d;
}

void SparseMatrix::multiply( std::span< const double > x, std::span< double > y ) const
{
    if ( x.size() != ncols_ || y.size() != nrows_ )
        throw DimensionError( "spmv: " + shape( nrows_, ncols_ ) + " matrix applied to vector of length " +
                              std::to_string( x.size() ) + " into length " + std::to_string( y.size() ) );
    kernels::spmv( view( *this ), x, y );
}

std::vector< double > SparseMatrix::multiply( std::span< const double > x ) const
{
    std::vector< double > y( nrows_ );
    multiply( x, y );
    return y;
}

SparseMatrix SparseMatrix::scaled( double alpha ) const
{
    SparseMatrix out = *this;
    for ( double& v : out.values_ )
        v *= alpha;
    return out;
}

std::vector< double > spmv( const SparseMatrix& a, std::span< const double > x ) { return a.multiply( x ); }

std::vector< double > residual( const SparseMatrix& a, std::span< const double > x, std::span< const double > b )
{
    if ( b.size() != a.rows() )
        throw DimensionError( "residual: right-hand side length " + std::to_string( b.size() ) + " vs " +
                              std::to_string( a.rows() ) + " rows" );
    std::vector< double > r = a.multiply( x );
    for ( std::size_t i = 0; i < r.size(); ++i )
        r[i] = b[i] - r[i];
    return r;
}

SparseMatrix multiply( const SparseMatrix& a, const SparseMatrix& b )
{
    if ( a.cols() != b.rows() )
        throw DimensionError( "sparse product: " + shape( a.rows(), a.cols() ) + " times " + shape( b.rows(), b.cols() ) );
    const std::size_t          n = a.rows();
    std::vector< std::size_t > offsets( n + 1, 0 );
    std::vector< std::size_t > cols;
    std::vector< double >      vals;

    // Gustavson with a dense marker; rows are sorted after accumulation.
    std::vector< std::size_t > marker( b.cols(), SparseMatrix::npos );
    std::vector< double >      acc( b.cols(), 0.0 );
    std::vector< std::size_t > row_pattern;
    for ( std::size_t i = 0; i < n; ++i )
    {
        row_pattern.clear();
        const auto acols = a.row_cols( i );
        const auto avals = a.row_values( i );
        for ( std::size_t ka = 0; ka < acols.size(); ++ka )
        {
            const std::size_t k     = acols[ka];
            const double      aik   = avals[ka];
            const auto        bcols = b.row_cols( k );
            const auto        bvals = b.row_values( k );
            for ( std::size_t kb = 0; kb < bcols.size(); ++kb )
            {
                const std::size_t j = bcols[kb];
                if ( marker[j] != i )
                {
                    marker[j] = i;
                    acc[j]    = 0.0;
                    row_pattern.push_back( j );
                }
                acc[j] += aik * bvals[kb];
            }
        }
        std::sort( row_pattern.begin(), row_pattern.end() );
        for ( std::size_t j : row_pattern )
        {
            cols.push_back( j );
            vals.push_back( acc[j] );
        }
        offsets[i + 1] = cols.size();
    }
    return SparseMatrix( n, b.cols(), std::move( offsets ), std::move( cols ), std::move( vals ) );
}

SparseMatrix triple_product( const SparseMatrix& r, const SparseMatrix& a, const SparseMatrix& p )
{
    if ( r.cols() != a.rows() || a.cols() != p.rows() )
        throw DimensionError( "triple product: shapes " + shape( r.rows(), r.cols() ) + ", " + shape( a.rows(), a.cols() ) +
                              ", " + shape( p.rows(), p.cols() ) + " are incompatible" );
    return multiply( r, multiply( a, p ) );
}

SparseMatrix add( double alpha, const SparseMatrix& a, double beta, const SparseMatrix& b )
{
    if ( a.rows() != b.rows() || a.cols() != b.cols() )
        throw DimensionError( "sparse add: " + shape( a.rows(), a.cols() ) + " vs " + shape( b.rows(), b.cols() ) );
    std::vector< std::size_t > offsets( a.rows() + 1, 0 );
    std::vector< std::size_t > cols;
    std::vector< double >      vals;
    for ( std::size_t i = 0; i < a.rows(); ++i )
    {
        const auto ac = a.row_cols( i );
        const auto av = a.row_values( i );
        const auto bc = b.row_cols( i );
        const auto bv = b.row_values( i );
        std::size_t ka = 0, kb = 0;
        while ( ka < ac.size() || kb < bc.size() )
        {
            if ( kb == bc.size() || ( ka < ac.size() && ac[ka] < bc[kb] ) )
            {
                cols.push_back( ac[ka] );
                vals.push_back( alpha * av[ka] );
                ++ka;
            }
            else if ( ka == ac.size() || bc[kb] < ac[ka] )
            {
                cols.push_back( bc[kb] );
                vals.push_back( beta * bv[kb] );
                ++kb;
            }
            else
            {
                cols.push_back( ac[ka] );
                vals.push_back( alpha * av[ka] + beta * bv[kb] );
                ++ka;
                ++kb;
            }
        }
        offsets[i + 1] = cols.size();
    }
    return SparseMatrix( a.rows(), a.cols(), std::move( offsets ), std::move( cols ), std::move( vals ) );
}

SparseMatrix extract_submatrix( const SparseMatrix& a, std::span< const std::size_t > row_set, std::span< const std::size_t > col_set )
{
    std::vector< std::size_t > col_map( a.cols(), SparseMatrix::npos );
    for ( std::size_t k = 0; k < col_set.size(); ++k )
    {
        if ( col_set[k] >= a.cols() || ( k > 0 && col_set[k] <= col_set[k - 1] ) )
            throw DimensionError( "submatrix column set must be sorted, unique and in range" );
        col_map[col_set[k]] = k;
    }
    std::vector< std::size_t > offsets( row_set.size() + 1, 0 );
    std::vector< std::size_t > cols;
    std::vector< double >      vals;
    for ( std::size_t r = 0; r < row_set.size(); ++r )
    {
        const std::size_t i = row_set[r];
        if ( i >= a.rows() )
            throw DimensionError( "submatrix row " + std::to_string( i ) + " out of range" );
        const auto ac = a.row_cols( i );
        const auto av = a.row_values( i );
        for ( std::size_t k = 0; k < ac.size(); ++k )
            if ( col_map[ac[k]] != SparseMatrix::npos )
            {
                cols.push_back( col_map[ac[k]] );
                vals.push_back( av[k] );
            }
        offsets[r + 1] = cols.size();
    }
    return SparseMatrix( row_set.size(), col_set.size(), std::move( offsets ), std::move( cols ), std::move( vals ) );
}

// ---------------------------------------------------------------------------
// Dense LU

DenseFactorization DenseFactorization::factor( const SparseMatrix& a, std::size_t cap )
{
    if ( !a.square() )
        throw DimensionError( "dense factorization needs a square matrix, got " + shape( a.rows(), a.cols() ) );
    if ( a.rows() > cap )
        throw DimensionError( "dense factorization: dimension " + std::to_string( a.rows() ) + " exceeds the cap of " +
                              std::to_string( cap ) );
    return factor_dense( a.rows(), a.to_dense() );
}

DenseFactorization DenseFactorization::factor_dense( std::size_t n, std::vector< double > m )
{
    if ( m.size() != n * n )
        throw DimensionError( "dense factorization: storage does not hold an " + shape( n, n ) + " matrix" );
    DenseFactorization f;
    f.n_ = n;
    f.perm_.resize( n );
    std::iota( f.perm_.begin(), f.perm_.end(), std::size_t{ 0 } );
    for ( std::size_t k = 0; k < n; ++k )
    {
        std::size_t piv  = k;
        double      best = std::abs( m[k * n + k] );
        for ( std::size_t i = k + 1; i < n; ++i )
            if ( std::abs( m[i * n + k] ) > best )
            {
                best = std::abs( m[i * n + k] );
                piv  = i;
            }
        if ( best == 0.0 )
            throw SingularPivotError( "dense factorization: zero pivot in column " + std::to_string( k ) +
                                          " (row " + std::to_string( f.perm_[k] ) + ")",
                                      f.perm_[k] );
        if ( piv != k )
        {
            std::swap_ranges( m.begin() + static_cast< std::ptrdiff_t >( k * n ),
                              m.begin() + static_cast< std::ptrdiff_t >( ( k + 1 ) * n ),
                              m.begin() + static_cast< std::ptrdiff_t >( piv * n ) );
            std::swap( f.perm_[k], f.perm_[piv] );
        }
        const double inv = 1.0 / m[k * n + k];
        for ( std::size_t i = k + 1; i < n; ++i )
        {
            const double lik = m[i * n + k] * inv;
            m[i * n + k]     = lik;
            if ( lik == 0.0 )
                continue;
            for ( std::size_t j = k + 1; j < n; ++j )
                m[i * n + j] -= lik * m[k * n + j];
        }
    }
    f.lu_ = std::move( m );
    return f;
}

void DenseFactorization::solve_in_place( std::span< double > b ) const
{
    if ( b.size() != n_ )
        throw DimensionError( "dense solve: right-hand side length " + std::to_string( b.size() ) + " vs dimension " +
                              std::to_string( n_ ) );
    std::vector< double > y( n_ );
    for ( std::size_t i = 0; i < n_; ++i )
        y[i] = b[perm_[i]];
    for ( std::size_t i = 0; i < n_; ++i )
    {
        double s = y[i];
        for ( std::size_t j = 0; j < i; ++j )
            s -= lu_[i * n_ + j] * y[j];
        y[i] = s;
    }
    for ( std::size_t ii = n_; ii-- > 0; )
    {
        double s = y[ii];
        for ( std::size_t j = ii + 1; j < n_; ++j )
            s -= lu_[ii * n_ + j] * y[j];
        y[ii] = s / lu_[ii * n_ + ii];
    }
    std::copy( y.begin(), y.end(), b.begin() );
}

std::vector< double > DenseFactorization::solve( std::span< const double > b ) const
{
    std::vector< double > x( b.begin(), b.end() );
    solve_in_place( x );
    return x;
}

std::vector< double > dense_factor_solve( const SparseMatrix& a, std::span< const double > b )
{
    return DenseFactorization::factor( a ).solve( b );
}

} // namespace hbgs
