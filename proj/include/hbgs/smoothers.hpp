#pragma once

#include "hbgs/sparse.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hbgs {

/// z = D^{-1} r. Throws SingularPivotError on a zero diagonal entry.
std::vector< double > jacobi_apply( const SparseMatrix& a, std::span< const double > r );

/// Inverse diagonal; throws SingularPivotError naming the first zero diagonal.
std::vector< double > inverse_diagonal( const SparseMatrix& a );

/// Power iteration on D^{-1} A from a seeded random start. Returns the
/// magnitude of the final Rayleigh quotient.
double estimate_lambda_max( const SparseMatrix&       a,
                            std::span< const double > inverse_diag,
                            std::size_t               iterations,
                            std::uint64_t             seed );

/// ILU(0): L (unit lower, implied diagonal) and U stored together on the
/// exact sparsity pattern of the input.
class Ilu0Factors
{
  public:
    /// Relative pivot threshold: |u_ii| < pivot_tolerance * max_i |a_ii| fails.
    static constexpr double pivot_tolerance = 1e-14;

    /// Throws DimensionError if `a` is not square or lacks a structural
    /// diagonal entry, SingularPivotError naming the row on a vanishing pivot.
    static Ilu0Factors factor( const SparseMatrix& a );

    std::size_t size() const noexcept { return lu_.rows(); }

    /// Combined factors; strictly lower part is L, upper part incl. diagonal is U.
    const SparseMatrix& combined() const noexcept { return lu_; }

    /// Solve L U z = r.
    void                  apply( std::span< const double > r, std::span< double > z ) const;
    std::vector< double > apply( std::span< const double > r ) const;

  private:
    SparseMatrix               lu_;
    std::vector< std::size_t > diag_pos_;
};

inline std::vector< double > ilu0_apply( const Ilu0Factors& f, std::span< const double > r ) { return f.apply( r ); }
inline Ilu0Factors           ilu0_factor( const SparseMatrix& a ) { return Ilu0Factors::factor( a ); }

struct ChebyshevParams
{
    std::size_t   degree              = 2;
    double        eigen_ratio         = 30.0; // lambda_min = lambda_max / ratio
    double        boost_factor        = 1.1;
    std::size_t   power_iterations    = 10;
    std::uint64_t seed                = 0x5eed;
};

/// Degree-d Chebyshev iteration on the diagonally scaled system over the
/// interval [lmax/ratio, boost*lmax], with lmax estimated by power
/// iteration on D^{-1} A at setup.
class ChebyshevSmoother
{
  public:
    ChebyshevSmoother() = default;

    /// Estimate the spectral bound and store the inverse diagonal.
    static ChebyshevSmoother setup( const SparseMatrix& a, const ChebyshevParams& params );

    /// Use a given (unboosted) lambda_max estimate instead of power iteration.
    static ChebyshevSmoother with_lambda_max( const SparseMatrix& a, double lambda_max, const ChebyshevParams& params );

    std::size_t degree() const noexcept { return degree_; }
    double      lambda_max_estimate() const noexcept { return lambda_max_; }
    double      eigen_ratio() const noexcept { return ratio_; }
    double      boost_factor() const noexcept { return boost_; }

    /// Upper and lower ends of the damped interval.
    double interval_max() const noexcept { return boost_ * lambda_max_; }
    double interval_min() const noexcept { return lambda_max_ / ratio_; }

    std::span< const double > inverse_diagonal() const noexcept { return inv_diag_; }

    /// Error-propagation polynomial value at an eigenvalue of D^{-1}A.
    double polynomial( double lambda ) const;

    /// Runs `degree` sweeps starting from x and returns the improved iterate.
    std::vector< double > apply( const SparseMatrix& a, std::span< const double > b, std::span< const double > x ) const;
    void apply_in_place( const SparseMatrix& a, std::span< const double > b, std::span< double > x ) const;

  private:
    std::size_t           degree_     = 1;
    double                lambda_max_ = 1.0;
    double                ratio_      = 30.0;
    double                boost_      = 1.1;
    std::vector< double > inv_diag_;
};

inline std::vector< double > chebyshev_apply( const ChebyshevSmoother&  s,
                                              const SparseMatrix&       a,
                                              std::span< const double > b,
                                              std::span< const double > x )
{
    return s.apply( a, b, x );
}

} // namespace hbgs
