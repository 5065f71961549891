#pragma once

#include "hbgs/block.hpp"
#include "hbgs/schwarz.hpp"
#include "hbgs/sparse.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace hbgs::battery {

inline constexpr double faraday       = 96485.33212; // C/mol
inline constexpr double gas_constant  = 8.31446;     // J/(mol K)

enum class Material : std::uint8_t
{
    heat_pellet,
    collector,
    anode,
    separator,
    cathode,
    insulation,
    can,
};

inline constexpr std::size_t num_materials = 7;

std::string_view material_name( Material m );
/// Throws ConfigError on an unknown name.
Material material_from_name( std::string_view name );

struct MaterialProps
{
    double sigma;                 // electrical conductivity, S/m
    double liquid_conductivity;   // scale of the liquid-voltage coefficient
    double liquid_diffusivity;    // scale of the species diffusion coefficient
    double porosity;              // phi
    double particle_diameter;     // D in metres, S_v = 6 / D
    double tortuosity_exponent;   // tau = phi^(-exponent)
    double solid_rate;            // solid-species reaction rate (diagonal of A_s)
};

struct MaterialTable
{
    std::array< MaterialProps, num_materials > props;

    const MaterialProps& operator[]( Material m ) const { return props[static_cast< std::size_t >( m )]; }
    MaterialProps&       operator[]( Material m ) { return props[static_cast< std::size_t >( m )]; }

    /// sigma(separator) = 1e-4 and sigma(anode) = 1e6.
    static MaterialTable defaults();
};

bool is_electrode( Material m );

/// Uniform cell-centred grid, cell (i, j) has index j * nx + i. x is the
/// radial direction, y the axial one.
struct StructuredGrid
{
    std::size_t nx = 0;
    std::size_t ny = 0;
    double      h  = 1.0;

    std::size_t    size() const noexcept { return nx * ny; }
    std::size_t    index( std::size_t i, std::size_t j ) const noexcept { return j * nx + i; }
    schwarz::Point2 center( std::size_t c ) const noexcept
    {
        return { ( static_cast< double >( c % nx ) + 0.5 ) * h, ( static_cast< double >( c / nx ) + 0.5 ) * h };
    }
    std::vector< schwarz::Point2 > centers() const;
};

struct LayeredGrid
{
    StructuredGrid          grid;
    std::vector< Material > material; // per cell
    std::vector< Material > layers;   // axial stack, bottom to top
    std::size_t             nr         = 0;
    std::size_t             refinement = 0;
    std::size_t             n_cells    = 0;

    std::size_t size() const noexcept { return grid.size(); }
};

/// Axial stack: heat pellet, N x (collector, anode, separator, cathode),
/// collector, heat pellet; one cell per layer at refinement 0. With nr >= 3
/// the outermost radial column is can and the next one insulation. Each
/// refinement level halves h in both directions.
LayeredGrid build_grid( std::size_t nr, std::size_t refinement_level, std::size_t n_cells, double base_h = 1e-3 );

enum class Side : std::uint8_t
{
    west,
    east,
    south,
    north,
};

struct BoundaryFace
{
    std::size_t cell;
    Side        side;
};

/// Five-point finite-volume operator for -div(k grad u) with face coefficient
/// the harmonic mean of the adjacent cells (faces have length h at distance
/// h, so entries carry no h scaling). Homogeneous Neumann on the boundary
/// except the listed faces, which carry a homogeneous Dirichlet value through
/// a ghost cell (2 k on the diagonal). `lumped_mass` is added to the diagonal,
/// either one value for every cell or one per cell. Throws ConfigError on a
/// non-positive coefficient.
SparseMatrix assemble_diffusion_operator( const StructuredGrid&         grid,
                                          std::span< const double >     coefficient,
                                          std::span< const double >     lumped_mass,
                                          std::span< const BoundaryFace > dirichlet = {} );
SparseMatrix assemble_diffusion_operator( const StructuredGrid&         grid,
                                          std::span< const double >     coefficient,
                                          double                        lumped_mass_scale,
                                          std::span< const BoundaryFace > dirichlet = {} );

inline double harmonic_mean( double a, double b ) { return 2.0 * a * b / ( a + b ); }

/// Integrated normal flux through interior faces, positive in +x (east) and
/// +y (north). east has (nx-1)*ny entries indexed j*(nx-1)+i for the face
/// between (i,j) and (i+1,j); north has nx*(ny-1) entries indexed j*nx+i.
struct FaceFlux
{
    std::vector< double > east;
    std::vector< double > north;

    static FaceFlux zero( const StructuredGrid& g );
    static FaceFlux uniform( const StructuredGrid& g, double fx, double fy );
};

/// Face fluxes of -mobility grad p (harmonic-mean face mobility).
FaceFlux darcy_flux( const StructuredGrid& g, std::span< const double > mobility, std::span< const double > pressure );

/// C_m = (1 + tanh((T_m - T) / dT)) / 2.
double melt_fraction( double temperature, double melt_temperature, double melt_width );

struct SpeciesBlocks
{
    SparseMatrix a_xx;
    SparseMatrix a_xp;
    SparseMatrix a_px;
};

struct SpeciesInputs
{
    FaceFlux                  flux;             // c v h per face
    std::span< const double > diffusivity;      // per cell
    std::span< const double > storage;          // c phi h^2 per cell
    double                    dt = 1.0;
    /// Face coefficient of A_xp (c x_ref mobility); empty means no coupling.
    std::span< const double > xp_coefficient{};
    double                    px_magnitude = 0.0; // A_px = px_magnitude * A_xp^T
};

/// A_xx = storage/dt + first-order upwind advection + diffusion;
/// A_xp = -div(c x_ref mobility grad .) at the reference state;
/// A_px = px_magnitude * A_xp^T.
SpeciesBlocks assemble_species_block( const StructuredGrid& grid, const SpeciesInputs& in );

struct ButlerVolmerState
{
    double exchange_current = 0.1;    // i_0
    double beta             = 0.5;
    double valence          = 1.0;    // z
    double overpotential    = 0.0;    // eta_0
    double temperature      = 800.0;  // K
};

/// g = di/deta at eta_0.
double butler_volmer_conductance( const ButlerVolmerState& s );

struct CouplingBlocks
{
    std::vector< double > self; // +G_c, added to both voltage diagonals
    SparseMatrix          a_sl; // -G on electrode cells
    SparseMatrix          a_ls; // -G on electrode cells
    /// Species to voltage: G times the concentration sensitivity.
    SparseMatrix a_s_x;  // phi_s <- x
    SparseMatrix a_l_x;  // phi_l <- x
    SparseMatrix a_s_s;  // phi_s <- s (first solid species)
};

struct CouplingInputs
{
    ButlerVolmerState         state{};
    std::span< const double > surface_area; // a_s h^2 per cell (nondimensional)
    double                    species_sensitivity = 0.1;
    std::size_t               solid_species       = 2;
};

/// Electrode-only linearized Butler-Volmer coupling. Cells whose material is
/// not an electrode contribute nothing.
CouplingBlocks assemble_coupling_blocks( const LayeredGrid& grid, const CouplingInputs& in );

struct CaseConfig
{
    std::size_t   nr         = 8;
    std::size_t   refinement = 0;
    std::size_t   n_cells    = 4;
    double        base_h     = 1e-3;
    MaterialTable materials  = MaterialTable::defaults();

    double tau_i_over_dt    = 1e-4; // liquid-voltage mass coefficient
    double dt               = 0.25; // nondimensional time step for species and pressure
    double temperature      = 800.0;
    double melt_temperature = 625.0;
    double melt_width       = 10.0;
    double frozen_viscosity = 1e20; // relative viscosity below the melt; the effective ratio is frozen_viscosity^C_m
    double concentration    = 1.0;  // c

    ButlerVolmerState butler_volmer{};
    std::size_t       solid_species         = 2;
    double            species_sensitivity   = 0.1;  // A_vn scale
    double            reaction_feedback     = 0.05; // A_nv scale
    double            pressure_drop         = 20.0; // reference pressure difference, bottom to top
    double            pressure_storage      = 0.05; // pressure mass coefficient
    double            xp_coupling           = 1.0;
    double            px_coupling           = 0.05;
    std::uint64_t     seed                  = 1;

    void validate() const;
};

struct BatteryCase
{
    CaseConfig            config;
    LayeredGrid           grid;
    BlockSystem           system;
    std::vector< double > solution;
    double                conductance = 0.0; // Butler-Volmer g
    double                melt        = 0.0; // C_m

    /// Writes every present block and the monolithic matrix as Matrix Market
    /// files (`A_<row>_<col>.mtx`, `A.mtx`) plus `b.mtx`-style vectors as
    /// one-column matrices.
    void export_matrix_market( const std::filesystem::path& dir ) const;
};

BatteryCase build_case( const CaseConfig& config );

} // namespace hbgs::battery
