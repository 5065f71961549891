#include "hbgs/krylov.hpp"

#include "hbgs/error.hpp"
#include "hbgs/kernels.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace hbgs {

LinearOperator::LinearOperator( std::size_t n, ApplyFn fn )
: n_( n )
, fn_( std::move( fn ) )
{}

void LinearOperator::apply( std::span< const double > in, std::span< double > out ) const
{
    if ( in.size() != n_ || out.size() != n_ )
        throw DimensionError( "operator of size " + std::to_string( n_ ) + " applied to vectors of length " +
                              std::to_string( in.size() ) + " -> " + std::to_string( out.size() ) );
    fn_( in, out );
}

std::vector< double > LinearOperator::apply( std::span< const double > in ) const
{
    std::vector< double > out( n_ );
    apply( in, out );
    return out;
}

LinearOperator as_operator( const SparseMatrix& a )
{
    if ( !a.square() )
        throw DimensionError( "as_operator: matrix is " + std::to_string( a.rows() ) + "x" + std::to_string( a.cols() ) );
    return LinearOperator( a.rows(), [&a]( std::span< const double > in, std::span< double > out ) { a.multiply( in, out ); } );
}

LinearOperator identity_operator( std::size_t n )
{
    return LinearOperator( n, []( std::span< const double > in, std::span< double > out ) {
        std::copy( in.begin(), in.end(), out.begin() );
    } );
}

void SolverConfig::validate() const
{
    if ( restart < 1 )
        throw ConfigError( "restart length must be at least 1" );
    if ( !( relative_tolerance > 0.0 && relative_tolerance < 1.0 ) )
        throw ConfigError( "relative tolerance must lie in (0, 1)" );
    if ( max_iterations < 1 )
        throw ConfigError( "max_iterations must be at least 1" );
}

namespace {

using Clock = std::chrono::steady_clock;

SolveResult run_gmres( const LinearOperator&     a,
                       const LinearOperator*     m,
                       std::span< const double > b,
                       const SolverConfig&       config,
                       bool                      flexible )
{
    config.validate();
    const std::size_t n = a.size();
    if ( b.size() != n )
        throw DimensionError( "gmres: right-hand side length " + std::to_string( b.size() ) + " vs operator size " +
                              std::to_string( n ) );
    if ( m != nullptr && *m && m->size() != n )
        throw DimensionError( "gmres: preconditioner size " + std::to_string( m->size() ) + " vs operator size " +
                              std::to_string( n ) );
    if ( m != nullptr && !*m )
        m = nullptr;

    const auto  t0 = Clock::now();
    SolveResult out;
    out.x.assign( n, 0.0 );
    SolveStats& st = out.stats;

    const double bnorm = kernels::norm2( b );
    if ( bnorm == 0.0 )
    {
        st.converged = true;
        return out;
    }

    const std::size_t                restart = config.restart;
    const double                     tol     = config.relative_tolerance;
    std::vector< std::vector< double > > v( restart + 1, std::vector< double >( n ) );
    std::vector< std::vector< double > > z( flexible ? restart : 0, std::vector< double >( n ) );
    // Column-major Hessenberg, (restart+1) x restart.
    std::vector< double > h( ( restart + 1 ) * restart, 0.0 );
    std::vector< double > cs( restart ), sn( restart ), g( restart + 1 ), y( restart );
    std::vector< double > w( n ), tmp( n );
    auto H = [&]( std::size_t i, std::size_t j ) -> double& { return h[j * ( restart + 1 ) + i]; };

    auto precondition = [&]( std::span< const double > in, std::span< double > res ) {
        if ( m != nullptr )
        {
            m->apply( in, res );
            ++st.preconditioner_applies;
        }
        else
            std::copy( in.begin(), in.end(), res.begin() );
    };

    std::vector< double > r( b.begin(), b.end() );
    double                rnorm = bnorm;

    while ( true )
    {
        if ( rnorm / bnorm <= tol )
        {
            st.converged = true;
            break;
        }
        if ( st.iterations >= config.max_iterations )
            break;

        std::copy( r.begin(), r.end(), v[0].begin() );
        kernels::scale( 1.0 / rnorm, v[0] );
        std::fill( g.begin(), g.end(), 0.0 );
        g[0] = rnorm;

        std::size_t k         = 0;
        bool        broke     = false;
        for ( std::size_t j = 0; j < restart && st.iterations < config.max_iterations; ++j )
        {
            std::span< double > zj = flexible ? std::span< double >( z[j] ) : std::span< double >( tmp );
            precondition( v[j], zj );
            a.apply( zj, w );

            for ( std::size_t i = 0; i <= j; ++i )
            {
                const double hij = kernels::dot( w, v[i] );
                H( i, j )        = hij;
                kernels::axpy( -hij, v[i], w );
            }
            const double hnext = kernels::norm2( w );
            H( j + 1, j )      = hnext;

            for ( std::size_t i = 0; i < j; ++i )
            {
                const double t0v = cs[i] * H( i, j ) + sn[i] * H( i + 1, j );
                H( i + 1, j )    = -sn[i] * H( i, j ) + cs[i] * H( i + 1, j );
                H( i, j )        = t0v;
            }
            const double hjj   = H( j, j );
            const double denom = std::hypot( hjj, hnext );
            if ( denom == 0.0 )
            {
                // Operator maps the direction to zero: singular system.
                cs[j] = 1.0;
                sn[j] = 0.0;
            }
            else
            {
                cs[j] = hjj / denom;
                sn[j] = hnext / denom;
            }
            H( j, j )     = cs[j] * hjj + sn[j] * hnext;
            H( j + 1, j ) = 0.0;
            g[j + 1]      = -sn[j] * g[j];
            g[j]          = cs[j] * g[j];

            ++st.iterations;
            k = j + 1;
            if ( config.record_history )
                st.residual_history.push_back( std::abs( g[j + 1] ) / bnorm );

            if ( hnext == 0.0 )
            {
                broke = true;
                break;
            }
            std::copy( w.begin(), w.end(), v[j + 1].begin() );
            kernels::scale( 1.0 / hnext, v[j + 1] );
            if ( std::abs( g[j + 1] ) / bnorm <= tol )
                break;
        }

        // Back substitution on the leading k x k triangle.
        for ( std::size_t ii = k; ii-- > 0; )
        {
            double s = g[ii];
            for ( std::size_t jj = ii + 1; jj < k; ++jj )
                s -= H( ii, jj ) * y[jj];
            y[ii] = H( ii, ii ) != 0.0 ? s / H( ii, ii ) : 0.0;
        }
        if ( flexible )
        {
            for ( std::size_t i = 0; i < k; ++i )
                kernels::axpy( y[i], z[i], out.x );
        }
        else
        {
            std::fill( w.begin(), w.end(), 0.0 );
            for ( std::size_t i = 0; i < k; ++i )
                kernels::axpy( y[i], v[i], w );
            precondition( w, tmp );
            kernels::axpy( 1.0, tmp, out.x );
        }

        a.apply( out.x, r );
        for ( std::size_t i = 0; i < n; ++i )
            r[i] = b[i] - r[i];
        rnorm = kernels::norm2( r );
        ++st.restarts;

        if ( broke )
        {
            st.breakdown = true;
            st.converged = rnorm / bnorm <= tol;
            break;
        }
    }

    // The restart counter counts completed cycles; report cycles beyond the first.
    if ( st.restarts > 0 )
        --st.restarts;
    st.final_relative_residual = rnorm / bnorm;
    st.solve_seconds           = std::chrono::duration< double >( Clock::now() - t0 ).count();
    return out;
}

} // namespace

SolveResult gmres( const LinearOperator& a, const LinearOperator* preconditioner, std::span< const double > b, const SolverConfig& config )
{
    return run_gmres( a, preconditioner, b, config, false );
}

SolveResult fgmres( const LinearOperator& a, const LinearOperator* preconditioner, std::span< const double > b, const SolverConfig& config )
{
    return run_gmres( a, preconditioner, b, config, true );
}

SolveResult solve( const LinearOperator& a, const LinearOperator* preconditioner, std::span< const double > b, const SolverConfig& config )
{
    return run_gmres( a, preconditioner, b, config, config.flexible );
}

} // namespace hbgs
