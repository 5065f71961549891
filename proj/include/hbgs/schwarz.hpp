#pragma once

#include "hbgs/krylov.hpp"
#include "hbgs/smoothers.hpp"
#include "hbgs/sparse.hpp"

#include <span>
#include <variant>
#include <vector>

namespace hbgs::schwarz {

struct Point2
{
    double x;
    double y;
};

/// Node ownership over virtual subdomains (stand-ins for MPI ranks).
struct Partition
{
    std::vector< std::size_t > owner;
    std::size_t                count = 0;

    std::vector< std::vector< std::size_t > > owned_sets() const;
};

/// Recursive coordinate bisection along the longer extent (x on ties); the
/// lower-coordinate half takes the extra node of an odd split. Throws
/// ConfigError if parts is zero or exceeds the node count.
Partition partition_nodes( std::span< const Point2 > coordinates, std::size_t parts );

/// Owned sets grown `overlap` times by structural adjacency in A, sorted.
std::vector< std::vector< std::size_t > > extend_overlap( const SparseMatrix& a, const Partition& part, std::size_t overlap );

enum class SubdomainSolve
{
    ilu0,
    exact,
};

/// Restricted additive Schwarz: z = sum_i R_i^T D_i M_i^{-1} R_i r, where D_i
/// keeps only entries owned by subdomain i.
class RasPreconditioner
{
  public:
    struct Subdomain
    {
        std::vector< std::size_t >                        indices; // sorted global ids
        std::vector< unsigned char >                      owned;   // D_i diagonal, per local index
        SparseMatrix                                      local;   // R_i A R_i^T
        std::variant< Ilu0Factors, DenseFactorization >   solver;
    };

    /// Throws SubdomainFactorError naming subdomain and local row on a pivot
    /// failure, DimensionError if the sets do not cover every node.
    static RasPreconditioner setup( const SparseMatrix&                               a,
                                    const std::vector< std::vector< std::size_t > >& sets,
                                    const Partition&                                  part,
                                    SubdomainSolve                                    solve = SubdomainSolve::ilu0 );

    std::size_t      size() const noexcept { return n_; }
    std::size_t      num_subdomains() const noexcept { return subdomains_.size(); }
    const Subdomain& subdomain( std::size_t i ) const { return subdomains_.at( i ); }

    void                  apply( std::span< const double > r, std::span< double > z ) const;
    std::vector< double > apply( std::span< const double > r ) const;

    /// The preconditioner must outlive the returned operator.
    LinearOperator as_preconditioner() const;

  private:
    std::size_t              n_ = 0;
    std::vector< Subdomain > subdomains_;
};

inline std::vector< double > ras_apply( const RasPreconditioner& m, std::span< const double > r ) { return m.apply( r ); }

/// Partition + overlap + setup in one call.
RasPreconditioner build_ras( const SparseMatrix&       a,
                             std::span< const Point2 > coordinates,
                             std::size_t               parts,
                             std::size_t               overlap,
                             SubdomainSolve            solve = SubdomainSolve::ilu0 );

} // namespace hbgs::schwarz
