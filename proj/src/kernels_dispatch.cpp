#include "hbgs/error.hpp"
#include "hbgs/kernels.hpp"

#include <atomic>
#include <cmath>
#include <string>

namespace hbgs::kernels {

namespace {

std::atomic< Backend > g_backend{ Backend::scalar };

bool cpu_has_avx2()
{
#if defined( __x86_64__ ) || defined( __i386__ )
    __builtin_cpu_init();
    return __builtin_cpu_supports( "avx2" ) && __builtin_cpu_supports( "fma" );
#else
    return false;
#endif
}

} // namespace

std::string_view to_string( Backend b )
{
    switch ( b )
    {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
    }
    return "unknown";
}

bool backend_available( Backend b )
{
    switch ( b )
    {
        case Backend::scalar: return true;
        case Backend::avx2: return avx2::compiled() && cpu_has_avx2();
    }
    return false;
}

Backend best_available() { return backend_available( Backend::avx2 ) ? Backend::avx2 : Backend::scalar; }

Backend active_backend() { return g_backend.load( std::memory_order_relaxed ); }

void set_backend( Backend b )
{
    if ( !backend_available( b ) )
        throw ConfigError( "kernel backend '" + std::string( to_string( b ) ) + "' is not available on this host" );
    g_backend.store( b, std::memory_order_relaxed );
}

ScopedBackend::ScopedBackend( Backend b )
: previous_( active_backend() )
{
    set_backend( b );
}

ScopedBackend::~ScopedBackend() { g_backend.store( previous_, std::memory_order_relaxed ); }

double dot( std::span< const double > x, std::span< const double > y )
{
    return active_backend() == Backend::avx2 ? avx2::dot( x, y ) : scalar::dot( x, y );
}

double norm2( std::span< const double > x ) { return std::sqrt( dot( x, x ) ); }

void axpy( double alpha, std::span< const double > x, std::span< double > y )
{
    if ( active_backend() == Backend::avx2 )
        avx2::axpy( alpha, x, y );
    else
        scalar::axpy( alpha, x, y );
}

void scale( double alpha, std::span< double > x )
{
    if ( active_backend() == Backend::avx2 )
        avx2::scale( alpha, x );
    else
        scalar::scale( alpha, x );
}

void spmv( const CsrView& a, std::span< const double > x, std::span< double > y )
{
    if ( active_backend() == Backend::avx2 )
        avx2::spmv( a, x, y );
    else
        scalar::spmv( a, x, y );
}

} // namespace hbgs::kernels
