// AVX2/FMA variants. This translation unit is compiled with -mavx2 -mfma
// when the toolchain supports it; callers go through the runtime dispatcher,
// which checks the host CPU before routing here.

#include "hbgs/kernels.hpp"

#if defined( HBGS_HAVE_AVX2 )
#include <immintrin.h>
#endif

namespace hbgs::kernels::avx2 {

#if defined( HBGS_HAVE_AVX2 )

bool compiled() { return true; }

namespace {

inline double hsum( __m256d v )
{
    __m128d lo = _mm256_castpd256_pd128( v );
    __m128d hi = _mm256_extractf128_pd( v, 1 );
    lo         = _mm_add_pd( lo, hi );
    __m128d sw = _mm_unpackhi_pd( lo, lo );
    return _mm_cvtsd_f64( _mm_add_sd( lo, sw ) );
}

} // namespace

double dot( std::span< const double > x, std::span< const double > y )
{
    const std::size_t n   = x.size();
    std::size_t       i   = 0;
    __m256d           ac0 = _mm256_setzero_pd();
    __m256d           ac1 = _mm256_setzero_pd();
    for ( ; i + 8 <= n; i += 8 )
    {
        ac0 = _mm256_fmadd_pd( _mm256_loadu_pd( x.data() + i ), _mm256_loadu_pd( y.data() + i ), ac0 );
        ac1 = _mm256_fmadd_pd( _mm256_loadu_pd( x.data() + i + 4 ), _mm256_loadu_pd( y.data() + i + 4 ), ac1 );
    }
    for ( ; i + 4 <= n; i += 4 )
        ac0 = _mm256_fmadd_pd( _mm256_loadu_pd( x.data() + i ), _mm256_loadu_pd( y.data() + i ), ac0 );
    double s = hsum( _mm256_add_pd( ac0, ac1 ) );
    for ( ; i < n; ++i )
        s += x[i] * y[i];
    return s;
}

void axpy( double alpha, std::span< const double > x, std::span< double > y )
{
    const std::size_t n = x.size();
    const __m256d     a = _mm256_set1_pd( alpha );
    std::size_t       i = 0;
    for ( ; i + 4 <= n; i += 4 )
    {
        __m256d yv = _mm256_loadu_pd( y.data() + i );
        yv         = _mm256_fmadd_pd( a, _mm256_loadu_pd( x.data() + i ), yv );
        _mm256_storeu_pd( y.data() + i, yv );
    }
    for ( ; i < n; ++i )
        y[i] += alpha * x[i];
}

void scale( double alpha, std::span< double > x )
{
    const std::size_t n = x.size();
    const __m256d     a = _mm256_set1_pd( alpha );
    std::size_t       i = 0;
    for ( ; i + 4 <= n; i += 4 )
        _mm256_storeu_pd( x.data() + i, _mm256_mul_pd( a, _mm256_loadu_pd( x.data() + i ) ) );
    for ( ; i < n; ++i )
        x[i] *= alpha;
}

void spmv( const CsrView& a, std::span< const double > x, std::span< double > y )
{
    static_assert( sizeof( std::size_t ) == sizeof( long long ) );
    const double* xv = x.data();
    for ( std::size_t row = 0; row < a.nrows; ++row )
    {
        std::size_t       k   = a.row_offsets[row];
        const std::size_t end = a.row_offsets[row + 1];
        __m256d           acc = _mm256_setzero_pd();
        for ( ; k + 4 <= end; k += 4 )
        {
            const __m256i idx = _mm256_loadu_si256( reinterpret_cast< const __m256i* >( a.col_indices.data() + k ) );
            const __m256d xs  = _mm256_i64gather_pd( xv, idx, 8 );
            acc               = _mm256_fmadd_pd( _mm256_loadu_pd( a.values.data() + k ), xs, acc );
        }
        double s = hsum( acc );
        for ( ; k < end; ++k )
            s += a.values[k] * xv[a.col_indices[k]];
        y[row] = s;
    }
}

#else

bool compiled() { return false; }

double dot( std::span< const double > x, std::span< const double > y ) { return scalar::dot( x, y ); }
void   axpy( double alpha, std::span< const double > x, std::span< double > y ) { scalar::axpy( alpha, x, y ); }
void   scale( double alpha, std::span< double > x ) { scalar::scale( alpha, x ); }
void   spmv( const CsrView& a, std::span< const double > x, std::span< double > y ) { scalar::spmv( a, x, y ); }

#endif

} // namespace hbgs::kernels::avx2
