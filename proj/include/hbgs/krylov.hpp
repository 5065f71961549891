#pragma once

#include "hbgs/sparse.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace hbgs {

/// Square apply-only operator: out = Op(in). Used for system operators and
/// preconditioners alike. Preconditioners may be nonlinear (e.g. an inner
/// Krylov solve); only `fgmres` tolerates that.
class LinearOperator
{
  public:
    using ApplyFn = std::function< void( std::span< const double > in, std::span< double > out ) >;

    LinearOperator() = default;
    LinearOperator( std::size_t n, ApplyFn fn );

    std::size_t size() const noexcept { return n_; }
    explicit    operator bool() const noexcept { return static_cast< bool >( fn_ ); }

    void                  apply( std::span< const double > in, std::span< double > out ) const;
    std::vector< double > apply( std::span< const double > in ) const;

  private:
    std::size_t n_ = 0;
    ApplyFn     fn_;
};

/// Wraps a square SparseMatrix. The matrix must outlive the operator.
LinearOperator as_operator( const SparseMatrix& a );

/// Identity of size n.
LinearOperator identity_operator( std::size_t n );

struct SolverConfig
{
    std::size_t restart            = 30;
    double      relative_tolerance = 1e-8;
    std::size_t max_iterations     = 1000;
    bool        flexible           = false;
    /// Keep the per-iteration recurrence residual history in SolveStats.
    bool record_history = false;

    /// Throws ConfigError when a field is out of range.
    void validate() const;
};

struct SolveStats
{
    std::size_t iterations              = 0; // Arnoldi steps, summed over restarts
    std::size_t restarts                = 0;
    std::size_t preconditioner_applies  = 0;
    double      final_relative_residual = 0.0; // true residual ||b - A x|| / ||b||
    bool        converged               = false;
    bool        breakdown               = false; // Hessenberg subdiagonal hit exactly zero
    double      setup_seconds           = 0.0;
    double      solve_seconds           = 0.0;
    /// Recurrence relative residual after each Arnoldi step (when requested).
    std::vector< double > residual_history;
};

struct SolveResult
{
    std::vector< double > x;
    SolveStats            stats;
};

/// Restarted GMRES(m), right preconditioned, zero initial guess, modified
/// Gram-Schmidt. Non-convergence is reported through `stats.converged`.
SolveResult gmres( const LinearOperator&     a,
                   const LinearOperator*     preconditioner,
                   std::span< const double > b,
                   const SolverConfig&       config );

/// Flexible GMRES(m): stores the preconditioned directions so the
/// preconditioner may change between applications. The update is formed from
/// the stored directions, so every cycle applies the preconditioner exactly
/// once per Arnoldi step.
SolveResult fgmres( const LinearOperator&     a,
                    const LinearOperator*     preconditioner,
                    std::span< const double > b,
                    const SolverConfig&       config );

/// Dispatches on `config.flexible`.
SolveResult solve( const LinearOperator&     a,
                   const LinearOperator*     preconditioner,
                   std::span< const double > b,
                   const SolverConfig&       config );

} // namespace hbgs
