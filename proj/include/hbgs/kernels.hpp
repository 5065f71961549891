#pragma once

// Data-parallel inner loops shared by every solver component.
//
// Each kernel has a scalar reference implementation with a fixed, sequential
// reduction order, plus an AVX2/FMA variant. The active backend is chosen at
// runtime. The scalar backend is the default because it gives bit-identical
// results regardless of host; the SIMD backend reassociates reductions and is
// only guaranteed to agree with the reference to rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace hbgs::kernels {

enum class Backend
{
    scalar,
    avx2,
};

std::string_view to_string( Backend b );

/// True if the host CPU and the build both support `b`.
bool backend_available( Backend b );

/// Best backend available on this host.
Backend best_available();

/// Backend used by the dispatched entry points below. Process-wide.
Backend active_backend();

/// Select the active backend. Throws ConfigError if `b` is unavailable.
void set_backend( Backend b );

/// RAII guard that restores the previous backend on scope exit.
class ScopedBackend
{
  public:
    explicit ScopedBackend( Backend b );
    ~ScopedBackend();
    ScopedBackend( const ScopedBackend& )            = delete;
    ScopedBackend& operator=( const ScopedBackend& ) = delete;

  private:
    Backend previous_;
};

// CSR view used by spmv. Indices are row offsets / column indices as stored
// by SparseMatrix.
struct CsrView
{
    std::size_t                  nrows;
    std::span< const std::size_t > row_offsets;
    std::span< const std::size_t > col_indices;
    std::span< const double >      values;
};

// Dispatched kernels. Sizes are checked by callers; the kernels assume
// consistent spans.
double dot( std::span< const double > x, std::span< const double > y );
double norm2( std::span< const double > x );
void   axpy( double alpha, std::span< const double > x, std::span< double > y );
void   scale( double alpha, std::span< double > x );
void   spmv( const CsrView& a, std::span< const double > x, std::span< double > y );

namespace scalar {
double dot( std::span< const double > x, std::span< const double > y );
void   axpy( double alpha, std::span< const double > x, std::span< double > y );
void   scale( double alpha, std::span< double > x );
void   spmv( const CsrView& a, std::span< const double > x, std::span< double > y );
} // namespace scalar

namespace avx2 {
bool   compiled();
double dot( std::span< const double > x, std::span< const double > y );
void   axpy( double alpha, std::span< const double > x, std::span< double > y );
void   scale( double alpha, std::span< double > x );
void   spmv( const CsrView& a, std::span< const double > x, std::span< double > y );
} // namespace avx2

} // namespace hbgs::kernels
