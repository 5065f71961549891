#include "hbgs/smoothers.hpp"

#include "hbgs/error.hpp"
#include "hbgs/kernels.hpp"

#include <cmath>
#include <random>
#include <string>

namespace hbgs {

std::vector< double > inverse_diagonal( const SparseMatrix& a )
{
    if ( !a.square() )
        throw DimensionError( "inverse_diagonal: matrix is not square" );
    std::vector< double > d = a.diagonal();
    for ( std::size_t i = 0; i < d.size(); ++i )
    {
        if ( d[i] == 0.0 )
            throw SingularPivotError( "zero diagonal entry in row " + std::to_string( i ), i );
        d[i] = 1.0 / d[i];
    }
    return d;
}

std::vector< double > jacobi_apply( const SparseMatrix& a, std::span< const double > r )
{
    if ( r.size() != a.rows() )
        throw DimensionError( "jacobi_apply: vector length " + std::to_string( r.size() ) + " vs " +
                              std::to_string( a.rows() ) + " rows" );
    const std::vector< double > inv = inverse_diagonal( a );
    std::vector< double >       z( r.size() );
    for ( std::size_t i = 0; i < z.size(); ++i )
        z[i] = inv[i] * r[i];
    return z;
}

double estimate_lambda_max( const SparseMatrix& a, std::span< const double > inverse_diag, std::size_t iterations, std::uint64_t seed )
{
    if ( !a.square() || inverse_diag.size() != a.rows() )
        throw DimensionError( "estimate_lambda_max: operator/diagonal size mismatch" );
    const std::size_t n = a.rows();
    if ( n == 0 )
        throw SetupError( "estimate_lambda_max: empty operator" );

    std::vector< double > x( n ), y( n );
    auto                  randomize = [&]( std::uint64_t s ) {
        std::mt19937_64                          rng( s );
        std::uniform_real_distribution< double > dist( -1.0, 1.0 );
        for ( double& v : x )
            v = dist( rng );
    };

    bool   reseeded = false;
    double lambda   = 0.0;
    randomize( seed );
    for ( std::size_t it = 0; it < std::max< std::size_t >( iterations, 1 ); ++it )
    {
        double xn = kernels::norm2( x );
        if ( xn == 0.0 )
        {
            if ( reseeded )
                throw SetupError( "estimate_lambda_max: iteration collapsed to the zero vector twice" );
            reseeded = true;
            randomize( seed + 1 );
            xn = kernels::norm2( x );
        }
        kernels::scale( 1.0 / xn, x );
        a.multiply( x, y );
        for ( std::size_t i = 0; i < n; ++i )
            y[i] *= inverse_diag[i];
        lambda = kernels::dot( x, y );
        std::swap( x, y );
    }
    return std::abs( lambda );
}

// ---------------------------------------------------------------------------

Ilu0Factors Ilu0Factors::factor( const SparseMatrix& a )
{
    if ( !a.square() )
        throw DimensionError( "ILU(0) needs a square matrix" );
    const std::size_t n = a.rows();

    const auto offsets = a.row_offsets();
    const auto cols    = a.col_indices();
    std::vector< double > vals( a.values().begin(), a.values().end() );

    std::vector< std::size_t > diag( n );
    double                     max_diag = 0.0;
    for ( std::size_t i = 0; i < n; ++i )
    {
        diag[i] = a.find( i, i );
        if ( diag[i] == SparseMatrix::npos )
            throw DimensionError( "ILU(0): row " + std::to_string( i ) + " has no structural diagonal entry" );
        max_diag = std::max( max_diag, std::abs( vals[diag[i]] ) );
    }
    const double threshold = pivot_tolerance * max_diag;

    std::vector< std::size_t > pos( n, SparseMatrix::npos );
    for ( std::size_t i = 0; i < n; ++i )
    {
        for ( std::size_t k = offsets[i]; k < offsets[i + 1]; ++k )
            pos[cols[k]] = k;
        for ( std::size_t kk = offsets[i]; kk < diag[i]; ++kk )
        {
            const std::size_t k   = cols[kk];
            const double      lik = vals[kk] / vals[diag[k]];
            vals[kk]              = lik;
            for ( std::size_t kj = diag[k] + 1; kj < offsets[k + 1]; ++kj )
            {
                const std::size_t p = pos[cols[kj]];
                if ( p != SparseMatrix::npos )
                    vals[p] -= lik * vals[kj];
            }
        }
        for ( std::size_t k = offsets[i]; k < offsets[i + 1]; ++k )
            pos[cols[k]] = SparseMatrix::npos;
        if ( !( std::abs( vals[diag[i]] ) >= threshold ) || vals[diag[i]] == 0.0 )
            throw SingularPivotError( "ILU(0): vanishing pivot in row " + std::to_string( i ), i );
    }

    Ilu0Factors f;
    f.lu_ = SparseMatrix( n,
                          n,
                          std::vector< std::size_t >( offsets.begin(), offsets.end() ),
                          std::vector< std::size_t >( cols.begin(), cols.end() ),
                          std::move( vals ) );
    f.diag_pos_ = std::move( diag );
    return f;
}

void Ilu0Factors::apply( std::span< const double > r, std::span< double > z ) const
{
    const std::size_t n = size();
    if ( r.size() != n || z.size() != n )
        throw DimensionError( "ILU(0) apply: vector length mismatch" );
    const auto offsets = lu_.row_offsets();
    const auto cols    = lu_.col_indices();
    const auto vals    = lu_.values();
    for ( std::size_t i = 0; i < n; ++i )
    {
        double s = r[i];
        for ( std::size_t k = offsets[i]; k < diag_pos_[i]; ++k )
            s -= vals[k] * z[cols[k]];
        z[i] = s;
    }
    for ( std::size_t i = n; i-- > 0; )
    {
        double s = z[i];
        for ( std::size_t k = diag_pos_[i] + 1; k < offsets[i + 1]; ++k )
            s -= vals[k] * z[cols[k]];
        z[i] = s / vals[diag_pos_[i]];
    }
}

std::vector< double > Ilu0Factors::apply( std::span< const double > r ) const
{
    std::vector< double > z( size() );
    apply( r, z );
    return z;
}

// ---------------------------------------------------------------------------

ChebyshevSmoother ChebyshevSmoother::setup( const SparseMatrix& a, const ChebyshevParams& params )
{
    std::vector< double > inv  = hbgs::inverse_diagonal( a );
    const double          lmax = estimate_lambda_max( a, inv, params.power_iterations, params.seed );
    ChebyshevSmoother     s    = with_lambda_max( a, lmax, params );
    return s;
}

ChebyshevSmoother ChebyshevSmoother::with_lambda_max( const SparseMatrix& a, double lambda_max, const ChebyshevParams& params )
{
    if ( params.degree < 1 )
        throw ConfigError( "Chebyshev degree must be at least 1" );
    if ( !( params.boost_factor >= 1.0 ) )
        throw ConfigError( "Chebyshev boost factor must be >= 1" );
    if ( !( params.eigen_ratio > 1.0 ) )
        throw ConfigError( "Chebyshev eigenvalue ratio must exceed 1" );
    if ( !( lambda_max > 0.0 ) )
        throw SetupError( "Chebyshev: lambda_max estimate must be positive" );
    ChebyshevSmoother s;
    s.degree_     = params.degree;
    s.lambda_max_ = lambda_max;
    s.ratio_      = params.eigen_ratio;
    s.boost_      = params.boost_factor;
    s.inv_diag_   = hbgs::inverse_diagonal( a );
    return s;
}

double ChebyshevSmoother::polynomial( double lambda ) const
{
    const double hi    = interval_max();
    const double lo    = interval_min();
    const double theta = 0.5 * ( hi + lo );
    const double delta = 0.5 * ( hi - lo );
    auto         cheb  = [&]( double t ) {
        double t0 = 1.0, t1 = t;
        if ( degree_ == 0 )
            return t0;
        for ( std::size_t k = 1; k < degree_; ++k )
        {
            const double t2 = 2.0 * t * t1 - t0;
            t0              = t1;
            t1              = t2;
        }
        return t1;
    };
    return cheb( ( theta - lambda ) / delta ) / cheb( theta / delta );
}

void ChebyshevSmoother::apply_in_place( const SparseMatrix& a, std::span< const double > b, std::span< double > x ) const
{
    const std::size_t n = inv_diag_.size();
    if ( a.rows() != n || b.size() != n || x.size() != n )
        throw DimensionError( "Chebyshev apply: size mismatch" );
    const double hi    = interval_max();
    const double lo    = interval_min();
    const double theta = 0.5 * ( hi + lo );
    const double delta = 0.5 * ( hi - lo );
    const double s1    = theta / delta;

    std::vector< double > r( n ), d( n );
    a.multiply( x, r );
    for ( std::size_t i = 0; i < n; ++i )
    {
        d[i] = inv_diag_[i] * ( b[i] - r[i] ) / theta;
        x[i] += d[i];
    }
    double rho = 1.0 / s1;
    for ( std::size_t k = 1; k < degree_; ++k )
    {
        const double rho_next = 1.0 / ( 2.0 * s1 - rho );
        const double c1       = rho_next * rho;
        const double c2       = 2.0 * rho_next / delta;
        rho                   = rho_next;
        a.multiply( x, r );
        for ( std::size_t i = 0; i < n; ++i )
        {
            d[i] = c1 * d[i] + c2 * inv_diag_[i] * ( b[i] - r[i] );
            x[i] += d[i];
        }
    }
}

std::vector< double > ChebyshevSmoother::apply( const SparseMatrix& a, std::span< const double > b, std::span< const double > x ) const
{
    std::vector< double > out( x.begin(), x.end() );
    apply_in_place( a, b, out );
    return out;
}

} // namespace hbgs
