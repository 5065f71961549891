#pragma once

#include "hbgs/amg.hpp"
#include "hbgs/krylov.hpp"
#include "hbgs/schwarz.hpp"
#include "hbgs/sparse.hpp"

#include <array>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace hbgs {

/// Physics fields in monolithic order. The voltage group {phi_s, phi_l}
/// precedes the non-voltage group {solid species, liquid species, pressure}.
enum class Field : std::size_t
{
    phi_s          = 0,
    phi_l          = 1,
    solid_species  = 2,
    liquid_species = 3,
    pressure       = 4,
};

inline constexpr std::size_t           num_fields = 5;
inline constexpr std::array< Field, 5 > all_fields{
    Field::phi_s, Field::phi_l, Field::solid_species, Field::liquid_species, Field::pressure };
inline constexpr std::array< Field, 2 > voltage_fields{ Field::phi_s, Field::phi_l };
inline constexpr std::array< Field, 3 > nonvoltage_fields{ Field::solid_species, Field::liquid_species, Field::pressure };

std::string_view field_name( Field f );

/// Labeled 5x5 block operator with a segmented right-hand side. Absent
/// blocks are structurally zero.
class BlockSystem
{
  public:
    BlockSystem() = default;
    explicit BlockSystem( std::array< std::size_t, num_fields > dims );

    std::size_t dim( Field f ) const { return dims_[index( f )]; }
    std::size_t offset( Field f ) const { return offsets_[index( f )]; }
    std::size_t size() const { return offsets_[num_fields]; }

    /// Throws DimensionError if the block shape disagrees with the field sizes.
    void                set_block( Field row, Field col, SparseMatrix m );
    void                clear_block( Field row, Field col );
    bool                has_block( Field row, Field col ) const;
    const SparseMatrix* block( Field row, Field col ) const;
    /// Block or an empty matrix of the right shape.
    SparseMatrix block_or_zero( Field row, Field col ) const;

    void                      set_rhs( std::vector< double > b );
    std::span< const double > rhs() const { return rhs_; }

    void set_coordinates( Field f, std::vector< schwarz::Point2 > pts );
    std::span< const schwarz::Point2 > coordinates( Field f ) const { return coords_[index( f )]; }

    std::span< const double > segment( std::span< const double > v, Field f ) const;
    std::span< double >       segment( std::span< double > v, Field f ) const;

    /// Concatenated matrix over the listed fields (rows and columns in list order).
    SparseMatrix group_matrix( std::span< const Field > rows, std::span< const Field > cols ) const;
    SparseMatrix monolithic() const;

    /// y = A x over all present blocks. Each output row is one running sum in
    /// global column order, so under the scalar kernel backend it matches
    /// `monolithic().multiply(x)` bit for bit.
    void apply( std::span< const double > x, std::span< double > y ) const;

    /// The system must outlive the returned operator.
    LinearOperator op() const;

    /// Throws DimensionError on inconsistent dimensions and SetupError when
    /// the solid-species block is missing or not diagonal.
    void validate() const;

  private:
    static std::size_t index( Field f ) { return static_cast< std::size_t >( f ); }

    std::array< std::size_t, num_fields >                                    dims_{};
    std::array< std::size_t, num_fields + 1 >                                offsets_{};
    std::array< std::array< std::optional< SparseMatrix >, num_fields >, num_fields > blocks_;
    std::vector< double >                                                    rhs_;
    std::array< std::vector< schwarz::Point2 >, num_fields >                 coords_;
};

inline LinearOperator assemble_block_operator( const BlockSystem& sys ) { return sys.op(); }

// ---------------------------------------------------------------------------
// Block Gauss-Seidel building blocks

/// Upper block-triangular sweep on the coupled voltages:
///   z_l = M_l^{-1} r_l ;  z_s = M_s^{-1} (r_s - A_sl z_l)
/// r and z are [phi_s; phi_l] concatenated.
void voltage_bgs_apply( const SparseMatrix&       a_sl,
                        const LinearOperator&     m_s,
                        const LinearOperator&     m_l,
                        std::span< const double > r,
                        std::span< double >       z );

/// Non-voltage sweep, r and z are [s; x; p] concatenated:
///   z_p = M_p^{-1} r_p ;  z_x = M_x^{-1} (r_x - A_xp z_p) ;  z_s = A_s^{-1} r_s.
/// Passing a null `a_xp` drops the coupling (block Jacobi over x, p).
/// Throws SingularPivotError on a zero diagonal in A_s.
void nonvoltage_bgs_apply( const SparseMatrix&       a_s,
                           const SparseMatrix*       a_xp,
                           const LinearOperator&     m_x,
                           const LinearOperator&     m_p,
                           std::span< const double > r,
                           std::span< double >       z );

struct InnerSolverConfig
{
    std::size_t restart            = 30;
    double      relative_tolerance = 1e-6;
    std::size_t max_iterations     = 300;
};

enum class InnerMode
{
    iterative, // inner FGMRES on each group
    direct,    // dense factorization of each group (small systems only)
};

struct ElectrochemConfig
{
    InnerSolverConfig voltage{};
    InnerSolverConfig nonvoltage{};
    amg::AmgParams    phi_s_amg{};
    amg::AmgParams    phi_l_amg{};
    amg::AmgParams    pressure_amg{};
    std::size_t       species_subdomains = 4;
    std::size_t       species_overlap    = 0;
    InnerMode         mode               = InnerMode::iterative;
    /// Drop A_xp from the non-voltage sweep (block Jacobi over x and p).
    bool nonvoltage_block_jacobi = false;

    /// Drop tolerance 0.04 on every AMG block; degree 4 Chebyshev on the
    /// voltage blocks and degree 2 on pressure; inner FGMRES(30) at 1e-6.
    static ElectrochemConfig defaults();
};

/// Statistics gathered over preconditioner applications.
struct InnerStats
{
    std::size_t applications         = 0;
    std::size_t voltage_iterations   = 0;
    std::size_t nonvoltage_iterations = 0;
    std::size_t voltage_failures     = 0; // inner solves that missed their tolerance
    std::size_t nonvoltage_failures  = 0;
};

/// Voltage-group preconditioner: BGS over one V-cycle per voltage field.
class VoltagePreconditioner
{
  public:
    VoltagePreconditioner( const BlockSystem& sys, const ElectrochemConfig& cfg );

    std::size_t size() const noexcept { return n_s_ + n_l_; }
    void        apply( std::span< const double > r, std::span< double > z ) const;
    LinearOperator as_operator() const;

    const amg::AmgHierarchy& phi_s_hierarchy() const { return *amg_s_; }
    const amg::AmgHierarchy& phi_l_hierarchy() const { return *amg_l_; }

  private:
    std::size_t                          n_s_, n_l_;
    SparseMatrix                         a_sl_;
    std::unique_ptr< amg::AmgHierarchy > amg_s_, amg_l_;
    LinearOperator                       m_s_, m_l_;
};

/// Non-voltage preconditioner: Jacobi on A_s, DD(0)-ILU(0) on A_xx, V-cycle on A_pp.
class NonVoltagePreconditioner
{
  public:
    NonVoltagePreconditioner( const BlockSystem& sys, const ElectrochemConfig& cfg );

    std::size_t size() const noexcept { return n_s_ + n_x_ + n_p_; }
    void        apply( std::span< const double > r, std::span< double > z ) const;
    LinearOperator as_operator() const;

    const amg::AmgHierarchy&          pressure_hierarchy() const { return *amg_p_; }
    const schwarz::RasPreconditioner& species_ras() const { return *ras_x_; }

  private:
    std::size_t                                   n_s_, n_x_, n_p_;
    SparseMatrix                                  a_s_;
    std::optional< SparseMatrix >                 a_xp_;
    std::unique_ptr< schwarz::RasPreconditioner > ras_x_;
    std::unique_ptr< amg::AmgHierarchy >          amg_p_;
    LinearOperator                                m_x_, m_p_;
};

/// Hierarchical block Gauss-Seidel preconditioner on the full system:
///   z_n = inner_nn(r_n) ;  z_v = inner_vv(r_v - A_vn z_n)
/// Inner solves are iterative, so the outer Krylov method must be flexible.
/// A_nv is never used. Inner non-convergence is recorded, not fatal.
class ElectrochemPreconditioner
{
  public:
    ElectrochemPreconditioner( const BlockSystem& sys, ElectrochemConfig cfg );

    std::size_t size() const noexcept { return n_v_ + n_n_; }
    void        apply( std::span< const double > r, std::span< double > z ) const;
    LinearOperator as_operator() const;

    InnerStats stats() const;
    void       reset_stats();

    const ElectrochemConfig& config() const noexcept { return cfg_; }
    double                   setup_seconds() const noexcept { return setup_seconds_; }

  private:
    ElectrochemConfig cfg_;
    std::size_t       n_v_, n_n_;
    SparseMatrix      a_vv_, a_nn_, a_vn_;

    std::unique_ptr< VoltagePreconditioner >    m_vv_;
    std::unique_ptr< NonVoltagePreconditioner > m_nn_;
    std::optional< DenseFactorization >         direct_vv_, direct_nn_;
    double                                      setup_seconds_ = 0.0;

    mutable std::mutex stats_mutex_;
    mutable InnerStats stats_;
};

inline void electrochem_apply( const ElectrochemPreconditioner& m, std::span< const double > r, std::span< double > z )
{
    m.apply( r, z );
}

} // namespace hbgs
