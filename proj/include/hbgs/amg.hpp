#pragma once

#include "hbgs/krylov.hpp"
#include "hbgs/smoothers.hpp"
#include "hbgs/sparse.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hbgs::amg {

/// How entries dropped from the filtered matrix are folded back onto its diagonal.
enum class DiagonalCompensation
{
    /// d_i = sign(a_ii) * (|a_ii| + sum of dropped |a_ij|)
    absolute_row_sum,
    /// d_i = a_ii + sum of dropped a_ij (keeps row sums)
    row_sum_preserving,
    /// d_i = a_ii
    none,
};

struct AmgParams
{
    double               drop_tolerance      = 0.0; // theta in the strength test
    std::size_t          max_coarse_size     = 64;
    std::size_t          max_levels          = 10;
    std::size_t          smoother_degree     = 2;
    double               prolongator_damping = 4.0 / 3.0; // omega numerator
    DiagonalCompensation compensation        = DiagonalCompensation::absolute_row_sum;
    /// Power-iteration steps for the prolongator damping estimate.
    std::size_t prolongator_power_iterations = 10;
    /// Chebyshev interval settings; `degree` is taken from smoother_degree.
    ChebyshevParams chebyshev{};
    std::uint64_t   seed = 0x5a11;

    void validate() const;
};

/// Symmetric boolean pattern of strong couplings, diagonal always present.
/// `weights` holds |a_ij| / sqrt(|a_ii a_jj|) (the larger of both directions;
/// 1 on the diagonal).
struct StrengthGraph
{
    std::size_t                size = 0;
    std::vector< std::size_t > offsets;
    std::vector< std::size_t > neighbors;
    std::vector< double >      weights;

    std::span< const std::size_t > row( std::size_t i ) const
    {
        return { neighbors.data() + offsets[i], offsets[i + 1] - offsets[i] };
    }
    std::span< const double > row_weights( std::size_t i ) const
    {
        return { weights.data() + offsets[i], offsets[i + 1] - offsets[i] };
    }
    bool has_edge( std::size_t i, std::size_t j ) const;
};

/// True if off-diagonal a_ij is strong under drop tolerance theta.
bool is_strong( double aij, double aii, double ajj, double theta );

StrengthGraph strength_graph( const SparseMatrix& a, double theta );

struct AggregateMap
{
    std::vector< std::size_t > aggregate_of;
    std::size_t                count = 0;

    std::vector< std::vector< std::size_t > > members() const;
};

/// Greedy root-based aggregation in ascending node order:
///  1. a node whose strong neighbours are all unaggregated becomes a root and
///     takes them into its aggregate;
///  2. remaining nodes join the adjacent pass-1 aggregate with the strongest
///     connection (ties to the lowest aggregate id);
///  3. whatever is left becomes a singleton.
AggregateMap aggregate( const StrengthGraph& s );

/// One column per aggregate holding the nullspace restricted to it,
/// normalised to unit 2-norm. Throws SetupError if a restriction vanishes.
SparseMatrix tentative_prolongator( const AggregateMap& agg, std::span< const double > nullspace );

/// Nullspace representation on the coarse level (per-aggregate norms).
std::vector< double > coarse_nullspace( const AggregateMap& agg, std::span< const double > nullspace );

/// A with entries failing the strength test removed and the diagonal replaced
/// according to `rule`.
SparseMatrix filtered_matrix( const SparseMatrix& a, double theta, DiagonalCompensation rule );

/// P = (I - omega D^{-1} A_f) P_tent with omega = damping / lambda_max(D^{-1} A_f).
SparseMatrix smooth_prolongator( const SparseMatrix& a, const SparseMatrix& tentative, const AmgParams& params );

struct LevelSummary
{
    std::size_t rows;
    std::size_t nnz;
};

struct HierarchySummary
{
    std::vector< LevelSummary > levels;
    double                      operator_complexity = 1.0;
    bool                        truncated           = false;
};

/// Smoothed-aggregation hierarchy with Chebyshev smoothing and a dense
/// factorization on the coarsest level. Immutable after `build`.
class AmgHierarchy
{
  public:
    struct Level
    {
        SparseMatrix      a;
        SparseMatrix      p; // to this level from the next coarser one
        SparseMatrix      r; // p transposed
        ChebyshevSmoother smoother;
    };

    static AmgHierarchy build( const SparseMatrix& a, const AmgParams& params );

    std::size_t num_levels() const noexcept { return levels_.size(); }
    const Level&              level( std::size_t l ) const { return levels_.at( l ); }
    const DenseFactorization& coarse_solver() const noexcept { return coarse_; }
    const AmgParams&          params() const noexcept { return params_; }
    std::size_t               size() const noexcept { return levels_.empty() ? 0 : levels_.front().a.rows(); }

    /// One V(pre, post) cycle from initial guess x; returns the new iterate.
    std::vector< double > vcycle( std::span< const double > b, std::span< const double > x ) const;

    /// Preconditioner action: one V-cycle from a zero guess.
    void precondition( std::span< const double > r, std::span< double > z ) const;

    HierarchySummary summary() const;
    double           operator_complexity() const;

    /// The hierarchy must outlive the returned operator.
    LinearOperator as_preconditioner() const;

  private:
    void cycle( std::size_t l, std::span< const double > b, std::span< double > x ) const;

    AmgParams            params_;
    std::vector< Level > levels_;
    DenseFactorization   coarse_;
    bool                 truncated_ = false;
};

inline AmgHierarchy build_hierarchy( const SparseMatrix& a, const AmgParams& params )
{
    return AmgHierarchy::build( a, params );
}

inline std::vector< double > vcycle( const AmgHierarchy& h, std::span< const double > b, std::span< const double > x )
{
    return h.vcycle( b, x );
}

} // namespace hbgs::amg
