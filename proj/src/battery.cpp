#include "hbgs/battery.hpp"

#include "hbgs/error.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace hbgs::battery {

std::string_view material_name( Material m )
{
    switch ( m )
    {
    case Material::heat_pellet: return "heat_pellet";
    case Material::collector: return "collector";
    case Material::anode: return "anode";
    case Material::separator: return "separator";
    case Material::cathode: return "cathode";
    case Material::insulation: return "insulation";
    case Material::can: return "can";
    }
    return "?";
}

Material material_from_name( std::string_view name )
{
    for ( std::size_t k = 0; k < num_materials; ++k )
        if ( material_name( static_cast< Material >( k ) ) == name )
            return static_cast< Material >( k );
    throw ConfigError( "unknown material '" + std::string( name ) + "'" );
}

MaterialTable MaterialTable::defaults()
{
    MaterialTable t;
    //                                 sigma   kappa_l  D_l    phi    D      tau_exp rate
    t[Material::heat_pellet] = { 1e1, 1e-2, 1e-2, 0.30, 1e-5, 0.5, 0.0 };
    t[Material::collector]   = { 5e5, 1e-2, 1e-2, 0.05, 1e-5, 0.5, 0.0 };
    t[Material::anode]       = { 1e6, 1.0, 1.0, 0.40, 1e-5, 0.5, 0.5 };
    t[Material::separator]   = { 1e-4, 1.0, 1.0, 0.50, 5e-6, 0.5, 0.0 };
    t[Material::cathode]     = { 1e2, 1.0, 1.0, 0.35, 1e-5, 0.5, 2.0 };
    t[Material::insulation]  = { 1e-3, 1e-2, 1e-2, 0.10, 1e-5, 0.5, 0.0 };
    t[Material::can]         = { 1e5, 1e-2, 1e-2, 0.05, 1e-5, 0.5, 0.0 };
    return t;
}

bool is_electrode( Material m ) { return m == Material::anode || m == Material::cathode; }

std::vector< schwarz::Point2 > StructuredGrid::centers() const
{
    std::vector< schwarz::Point2 > c( size() );
    for ( std::size_t k = 0; k < size(); ++k )
        c[k] = center( k );
    return c;
}

LayeredGrid build_grid( std::size_t nr, std::size_t refinement_level, std::size_t n_cells, double base_h )
{
    if ( nr < 1 || n_cells < 1 )
        throw ConfigError( "build_grid: nr and N_cells must be at least 1" );
    if ( !( base_h > 0.0 ) )
        throw ConfigError( "build_grid: cell size must be positive" );
    if ( refinement_level > 12 )
        throw ConfigError( "build_grid: refinement level too large" );

    LayeredGrid g;
    g.nr         = nr;
    g.refinement = refinement_level;
    g.n_cells    = n_cells;
    g.layers.push_back( Material::heat_pellet );
    for ( std::size_t k = 0; k < n_cells; ++k )
        for ( Material m : { Material::collector, Material::anode, Material::separator, Material::cathode } )
            g.layers.push_back( m );
    g.layers.push_back( Material::collector );
    g.layers.push_back( Material::heat_pellet );

    const std::size_t f = std::size_t{ 1 } << refinement_level;
    g.grid.nx           = nr * f;
    g.grid.ny           = g.layers.size() * f;
    g.grid.h            = base_h / static_cast< double >( f );
    g.material.resize( g.grid.size() );
    for ( std::size_t j = 0; j < g.grid.ny; ++j )
        for ( std::size_t i = 0; i < g.grid.nx; ++i )
        {
            const std::size_t col = i / f;
            Material          m   = g.layers[j / f];
            if ( nr >= 3 && col == nr - 1 )
                m = Material::can;
            else if ( nr >= 3 && col == nr - 2 )
                m = Material::insulation;
            g.material[g.grid.index( i, j )] = m;
        }
    return g;
}

// ---------------------------------------------------------------------------

namespace {

void check_cells( const StructuredGrid& g, std::span< const double > v, const char* what )
{
    if ( v.size() != g.size() )
        throw DimensionError( std::string( what ) + ": expected one value per cell" );
}

bool on_boundary( const StructuredGrid& g, const BoundaryFace& f )
{
    const std::size_t i = f.cell % g.nx, j = f.cell / g.nx;
    switch ( f.side )
    {
    case Side::west: return i == 0;
    case Side::east: return i + 1 == g.nx;
    case Side::south: return j == 0;
    case Side::north: return j + 1 == g.ny;
    }
    return false;
}

} // namespace

SparseMatrix assemble_diffusion_operator( const StructuredGrid&           grid,
                                          std::span< const double >       coefficient,
                                          std::span< const double >       lumped_mass,
                                          std::span< const BoundaryFace > dirichlet )
{
    check_cells( grid, coefficient, "assemble_diffusion_operator" );
    check_cells( grid, lumped_mass, "assemble_diffusion_operator" );
    for ( std::size_t c = 0; c < coefficient.size(); ++c )
        if ( !( coefficient[c] > 0.0 ) )
            throw ConfigError( "assemble_diffusion_operator: coefficient in cell " + std::to_string( c ) +
                               " is not positive" );

    std::vector< double > ghost( grid.size(), 0.0 );
    for ( const auto& f : dirichlet )
    {
        if ( f.cell >= grid.size() || !on_boundary( grid, f ) )
            throw DimensionError( "assemble_diffusion_operator: Dirichlet face is not on the boundary" );
        ghost[f.cell] += 2.0 * coefficient[f.cell];
    }

    const std::size_t          nx = grid.nx, ny = grid.ny, n = grid.size();
    std::vector< std::size_t > offsets{ 0 }, cols;
    std::vector< double >      vals;
    offsets.reserve( n + 1 );
    cols.reserve( 5 * n );
    vals.reserve( 5 * n );
    for ( std::size_t j = 0; j < ny; ++j )
        for ( std::size_t i = 0; i < nx; ++i )
        {
            const std::size_t c    = grid.index( i, j );
            const double      kc   = coefficient[c];
            double            diag = lumped_mass[c] + ghost[c];
            auto              link = [&]( std::size_t nb ) {
                const double kf = harmonic_mean( kc, coefficient[nb] );
                diag += kf;
                cols.push_back( nb );
                vals.push_back( -kf );
            };
            if ( j > 0 )
                link( c - nx );
            if ( i > 0 )
                link( c - 1 );
            const std::size_t dpos = vals.size();
            cols.push_back( c );
            vals.push_back( 0.0 );
            if ( i + 1 < nx )
                link( c + 1 );
            if ( j + 1 < ny )
                link( c + nx );
            vals[dpos] = diag;
            offsets.push_back( cols.size() );
        }
    return SparseMatrix( n, n, std::move( offsets ), std::move( cols ), std::move( vals ) );
}

SparseMatrix assemble_diffusion_operator( const StructuredGrid&           grid,
                                          std::span< const double >       coefficient,
                                          double                          lumped_mass_scale,
                                          std::span< const BoundaryFace > dirichlet )
{
    const std::vector< double > mass( grid.size(), lumped_mass_scale );
    return assemble_diffusion_operator( grid, coefficient, mass, dirichlet );
}

FaceFlux FaceFlux::zero( const StructuredGrid& g ) { return uniform( g, 0.0, 0.0 ); }

FaceFlux FaceFlux::uniform( const StructuredGrid& g, double fx, double fy )
{
    FaceFlux f;
    f.east.assign( g.nx > 0 ? ( g.nx - 1 ) * g.ny : 0, fx );
    f.north.assign( g.ny > 0 ? g.nx * ( g.ny - 1 ) : 0, fy );
    return f;
}

FaceFlux darcy_flux( const StructuredGrid& g, std::span< const double > mobility, std::span< const double > pressure )
{
    check_cells( g, mobility, "darcy_flux" );
    check_cells( g, pressure, "darcy_flux" );
    FaceFlux f = FaceFlux::zero( g );
    for ( std::size_t j = 0; j < g.ny; ++j )
        for ( std::size_t i = 0; i + 1 < g.nx; ++i )
        {
            const std::size_t a = g.index( i, j ), b = a + 1;
            f.east[j * ( g.nx - 1 ) + i] = harmonic_mean( mobility[a], mobility[b] ) * ( pressure[a] - pressure[b] );
        }
    for ( std::size_t j = 0; j + 1 < g.ny; ++j )
        for ( std::size_t i = 0; i < g.nx; ++i )
        {
            const std::size_t a = g.index( i, j ), b = a + g.nx;
            f.north[j * g.nx + i] = harmonic_mean( mobility[a], mobility[b] ) * ( pressure[a] - pressure[b] );
        }
    return f;
}

double melt_fraction( double temperature, double melt_temperature, double melt_width )
{
    if ( !( melt_width > 0.0 ) )
        throw ConfigError( "melt_fraction: width must be positive" );
    return 0.5 * ( 1.0 + std::tanh( ( melt_temperature - temperature ) / melt_width ) );
}

SpeciesBlocks assemble_species_block( const StructuredGrid& grid, const SpeciesInputs& in )
{
    check_cells( grid, in.diffusivity, "assemble_species_block" );
    check_cells( grid, in.storage, "assemble_species_block" );
    if ( !( in.dt > 0.0 ) )
        throw ConfigError( "assemble_species_block: dt must be positive" );
    if ( in.flux.east.size() != ( grid.nx - 1 ) * grid.ny || in.flux.north.size() != grid.nx * ( grid.ny - 1 ) )
        throw DimensionError( "assemble_species_block: face flux has the wrong shape" );

    std::vector< double > mass( grid.size() );
    for ( std::size_t c = 0; c < grid.size(); ++c )
        mass[c] = in.storage[c] / in.dt;
    const SparseMatrix diffusion = assemble_diffusion_operator( grid, in.diffusivity, mass );

    // Upwind advection on the diffusion pattern. For flux F from a to b the
    // outflow of a is F x_up and the outflow of b is -F x_up.
    std::vector< double > vals( diffusion.values().begin(), diffusion.values().end() );
    auto add = [&]( std::size_t r, std::size_t c, double v ) { vals[diffusion.find( r, c )] += v; };
    auto face = [&]( std::size_t a, std::size_t b, double flux ) {
        if ( flux > 0.0 )
        {
            add( a, a, flux );
            add( b, a, -flux );
        }
        else if ( flux < 0.0 )
        {
            add( a, b, flux );
            add( b, b, -flux );
        }
    };
    for ( std::size_t j = 0; j < grid.ny; ++j )
        for ( std::size_t i = 0; i + 1 < grid.nx; ++i )
            face( grid.index( i, j ), grid.index( i, j ) + 1, in.flux.east[j * ( grid.nx - 1 ) + i] );
    for ( std::size_t j = 0; j + 1 < grid.ny; ++j )
        for ( std::size_t i = 0; i < grid.nx; ++i )
            face( grid.index( i, j ), grid.index( i, j ) + grid.nx, in.flux.north[j * grid.nx + i] );

    SpeciesBlocks out;
    out.a_xx = SparseMatrix( grid.size(), grid.size(),
                             std::vector< std::size_t >( diffusion.row_offsets().begin(), diffusion.row_offsets().end() ),
                             std::vector< std::size_t >( diffusion.col_indices().begin(), diffusion.col_indices().end() ),
                             std::move( vals ) );
    if ( in.xp_coefficient.empty() )
    {
        out.a_xp = SparseMatrix::zero( grid.size(), grid.size() );
        out.a_px = SparseMatrix::zero( grid.size(), grid.size() );
    }
    else
    {
        out.a_xp = assemble_diffusion_operator( grid, in.xp_coefficient, 0.0 );
        out.a_px = out.a_xp.transpose().scaled( in.px_magnitude );
    }
    return out;
}

double butler_volmer_conductance( const ButlerVolmerState& s )
{
    if ( !( s.temperature > 0.0 ) )
        throw ConfigError( "Butler-Volmer: temperature must be positive" );
    const double f = faraday * s.valence / ( gas_constant * s.temperature );
    return s.exchange_current * f *
           ( s.beta * std::exp( s.beta * f * s.overpotential ) +
             ( 1.0 - s.beta ) * std::exp( -( 1.0 - s.beta ) * f * s.overpotential ) );
}

CouplingBlocks assemble_coupling_blocks( const LayeredGrid& grid, const CouplingInputs& in )
{
    const std::size_t n = grid.size();
    if ( in.surface_area.size() != n )
        throw DimensionError( "assemble_coupling_blocks: expected one surface area per cell" );
    if ( in.solid_species < 1 )
        throw ConfigError( "assemble_coupling_blocks: at least one solid species is required" );
    const double g = butler_volmer_conductance( in.state );

    CouplingBlocks          out;
    std::vector< Triplet > sl, sx, lx, ss;
    out.self.assign( n, 0.0 );
    for ( std::size_t c = 0; c < n; ++c )
    {
        if ( !is_electrode( grid.material[c] ) )
            continue;
        const double gc = g * in.surface_area[c];
        if ( gc == 0.0 )
            continue;
        out.self[c] = gc;
        sl.push_back( { c, c, -gc } );
        if ( in.species_sensitivity != 0.0 )
        {
            sx.push_back( { c, c, in.species_sensitivity * gc } );
            lx.push_back( { c, c, -in.species_sensitivity * gc } );
            ss.push_back( { c, c * in.solid_species, in.species_sensitivity * gc } );
        }
    }
    out.a_sl  = SparseMatrix::from_triplets( n, n, sl );
    out.a_ls  = SparseMatrix::from_triplets( n, n, std::move( sl ) );
    out.a_s_x = SparseMatrix::from_triplets( n, n, std::move( sx ) );
    out.a_l_x = SparseMatrix::from_triplets( n, n, std::move( lx ) );
    out.a_s_s = SparseMatrix::from_triplets( n, n * in.solid_species, std::move( ss ) );
    return out;
}

// ---------------------------------------------------------------------------

void CaseConfig::validate() const
{
    if ( nr < 1 || n_cells < 1 )
        throw ConfigError( "case: nr and n_cells must be at least 1" );
    if ( refinement > 8 )
        throw ConfigError( "case: refinement must be at most 8" );
    if ( !( base_h > 0.0 ) || !( dt > 0.0 ) )
        throw ConfigError( "case: base_h and dt must be positive" );
    if ( !( tau_i_over_dt > 0.0 ) )
        throw ConfigError( "case: tau_i_over_dt must be positive" );
    if ( !( temperature > 0.0 ) || !( melt_width > 0.0 ) )
        throw ConfigError( "case: temperature and melt_width must be positive" );
    if ( !( concentration > 0.0 ) || !( frozen_viscosity >= 1.0 ) || pressure_storage < 0.0 )
        throw ConfigError( "case: concentration must be positive, frozen viscosity at least 1, storage non-negative" );
    if ( solid_species < 1 )
        throw ConfigError( "case: at least one solid species is required" );
    if ( butler_volmer.exchange_current < 0.0 || butler_volmer.beta < 0.0 || butler_volmer.beta > 1.0 )
        throw ConfigError( "case: Butler-Volmer parameters out of range" );
    for ( const auto& p : materials.props )
    {
        if ( !( p.sigma > 0.0 ) || !( p.liquid_conductivity > 0.0 ) || !( p.liquid_diffusivity > 0.0 ) )
            throw ConfigError( "case: material coefficients must be positive" );
        if ( !( p.porosity > 0.0 ) || !( p.porosity < 1.0 ) || !( p.particle_diameter > 0.0 ) || p.solid_rate < 0.0 )
            throw ConfigError( "case: material porosity, particle diameter or rate out of range" );
    }
}

namespace {

double permeability( const MaterialProps& m )
{
    const double sv  = 6.0 / m.particle_diameter;
    const double tau = std::pow( m.porosity, -m.tortuosity_exponent );
    return std::pow( m.porosity, 3 ) / ( 2.0 * sv * sv * tau * tau * ( 1.0 - m.porosity ) * ( 1.0 - m.porosity ) );
}

double bruggemann( const MaterialProps& m ) { return m.porosity * std::pow( m.porosity, m.tortuosity_exponent ); }

} // namespace

BatteryCase build_case( const CaseConfig& config )
{
    config.validate();
    BatteryCase bc;
    bc.config = config;
    bc.grid   = build_grid( config.nr, config.refinement, config.n_cells, config.base_h );

    const auto&       g    = bc.grid.grid;
    const std::size_t n    = g.size();
    const std::size_t ns   = config.solid_species;
    const double      area = ( g.h / config.base_h ) * ( g.h / config.base_h );
    const double      lx   = static_cast< double >( g.nx ) * g.h;
    const double      ly   = static_cast< double >( g.ny ) * g.h;
    const auto&       mt   = config.materials;
    const double      c    = config.concentration;

    bc.melt        = melt_fraction( config.temperature, config.melt_temperature, config.melt_width );
    bc.conductance = butler_volmer_conductance( config.butler_volmer );
    const double viscosity = std::pow( config.frozen_viscosity, bc.melt );
    const double k_ref     = permeability( mt[Material::anode] );

    std::vector< double > sigma( n ), kappa_l( n ), diff_x( n ), mobility( n ), phi( n ), surface( n );
    for ( std::size_t k = 0; k < n; ++k )
    {
        const auto& m = mt[bc.grid.material[k]];
        sigma[k]      = m.sigma;
        kappa_l[k]    = m.liquid_conductivity * bruggemann( m );
        diff_x[k]     = c * m.liquid_diffusivity * bruggemann( m );
        mobility[k]   = permeability( m ) / k_ref / viscosity;
        phi[k]        = m.porosity;
        surface[k]    = ( 6.0 / m.particle_diameter ) * ( 1.0 - m.porosity ) * g.h * g.h;
    }

    // Manufactured solution: per-field base + amplitude * sin * cos with seeded phases.
    std::mt19937_64                          rng( config.seed );
    std::uniform_real_distribution< double > phase( 0.0, 2.0 * std::numbers::pi );
    const auto                               centers = g.centers();
    auto profile = [&]( double base, double amp ) {
        const double a = phase( rng ), b = phase( rng );
        std::vector< double > u( n );
        for ( std::size_t k = 0; k < n; ++k )
            u[k] = base + amp * std::sin( std::numbers::pi * centers[k].x / lx + a ) *
                              std::cos( 2.0 * std::numbers::pi * centers[k].y / ly + b );
        return u;
    };
    const auto u_phis = profile( 0.0, 1.0 );
    const auto u_phil = profile( 0.0, 0.5 );
    std::vector< double > u_s( n * ns );
    for ( std::size_t sp = 0; sp < ns; ++sp )
    {
        const auto u = profile( 1.0 + 0.1 * static_cast< double >( sp ), 0.3 );
        for ( std::size_t k = 0; k < n; ++k )
            u_s[k * ns + sp] = u[k];
    }
    const auto u_x = profile( 0.5, 0.2 );
    const auto u_p = profile( 1.0, 0.5 );

    // Reference pressure driving the advective velocity: upward and outward.
    std::vector< double > p_ref( n );
    for ( std::size_t k = 0; k < n; ++k )
        p_ref[k] = config.pressure_drop * ( ( 1.0 - centers[k].y / ly ) + 0.2 * ( 1.0 - centers[k].x / lx ) );

    BlockSystem sys( { n, n, n * ns, n, n } );

    // Voltages.
    std::vector< BoundaryFace > ground;
    const std::size_t           f = std::size_t{ 1 } << config.refinement;
    for ( std::size_t j = f; j < 2 * f; ++j )
        ground.push_back( { g.index( 0, j ), Side::west } );
    CouplingInputs ci;
    ci.state               = config.butler_volmer;
    ci.state.temperature   = config.temperature;
    ci.surface_area        = surface;
    ci.species_sensitivity = config.species_sensitivity;
    ci.solid_species       = ns;
    const auto cpl         = assemble_coupling_blocks( bc.grid, ci );

    sys.set_block( Field::phi_s, Field::phi_s, assemble_diffusion_operator( g, sigma, cpl.self, ground ) );
    std::vector< double > mass_l( n );
    for ( std::size_t k = 0; k < n; ++k )
        mass_l[k] = config.tau_i_over_dt * area + cpl.self[k];
    sys.set_block( Field::phi_l, Field::phi_l, assemble_diffusion_operator( g, kappa_l, mass_l ) );
    if ( cpl.a_sl.nnz() > 0 )
    {
        sys.set_block( Field::phi_s, Field::phi_l, cpl.a_sl );
        sys.set_block( Field::phi_l, Field::phi_s, cpl.a_ls );
    }
    if ( cpl.a_s_x.nnz() > 0 )
    {
        sys.set_block( Field::phi_s, Field::liquid_species, cpl.a_s_x );
        sys.set_block( Field::phi_l, Field::liquid_species, cpl.a_l_x );
        sys.set_block( Field::phi_s, Field::solid_species, cpl.a_s_s );
    }

    // Solid species: diagonal storage plus reaction.
    std::vector< double > a_s( n * ns );
    for ( std::size_t k = 0; k < n; ++k )
        for ( std::size_t sp = 0; sp < ns; ++sp )
            a_s[k * ns + sp] =
                area * ( 1.0 / config.dt + mt[bc.grid.material[k]].solid_rate * static_cast< double >( 1 + 2 * sp ) );
    sys.set_block( Field::solid_species, Field::solid_species, SparseMatrix::diagonal( a_s ) );

    // Liquid species and pressure.
    FaceFlux flux = darcy_flux( g, mobility, p_ref );
    for ( double& v : flux.east )
        v *= c * ( 1.0 - bc.melt );
    for ( double& v : flux.north )
        v *= c * ( 1.0 - bc.melt );
    std::vector< double > storage( n ), xp( n ), mass_p( n );
    for ( std::size_t k = 0; k < n; ++k )
    {
        storage[k] = c * phi[k] * area;
        xp[k]      = config.xp_coupling * c * u_x[k] * mobility[k];
        mass_p[k]  = config.pressure_storage * phi[k] * area;
    }
    SpeciesInputs si;
    si.flux           = std::move( flux );
    si.diffusivity    = diff_x;
    si.storage        = storage;
    si.dt             = config.dt;
    if ( config.xp_coupling != 0.0 )
        si.xp_coefficient = xp;
    si.px_magnitude = config.px_coupling;
    auto species    = assemble_species_block( g, si );
    sys.set_block( Field::liquid_species, Field::liquid_species, std::move( species.a_xx ) );
    if ( config.xp_coupling != 0.0 )
    {
        sys.set_block( Field::liquid_species, Field::pressure, std::move( species.a_xp ) );
        if ( config.px_coupling != 0.0 )
            sys.set_block( Field::pressure, Field::liquid_species, std::move( species.a_px ) );
    }
    std::vector< double > p_coef( n );
    for ( std::size_t k = 0; k < n; ++k )
        p_coef[k] = c * mobility[k];
    sys.set_block( Field::pressure, Field::pressure, assemble_diffusion_operator( g, p_coef, mass_p ) );

    // Reaction feedback of the voltages onto the species (never used by the preconditioner).
    if ( config.reaction_feedback != 0.0 )
    {
        std::vector< Triplet > xs, xl, ss_, sl_;
        for ( std::size_t k = 0; k < n; ++k )
            if ( cpl.self[k] != 0.0 )
            {
                const double v = config.reaction_feedback * cpl.self[k];
                xs.push_back( { k, k, -v } );
                xl.push_back( { k, k, v } );
                ss_.push_back( { k * ns, k, -v } );
                sl_.push_back( { k * ns, k, v } );
            }
        if ( !xs.empty() )
        {
            sys.set_block( Field::liquid_species, Field::phi_s, SparseMatrix::from_triplets( n, n, std::move( xs ) ) );
            sys.set_block( Field::liquid_species, Field::phi_l, SparseMatrix::from_triplets( n, n, std::move( xl ) ) );
            sys.set_block( Field::solid_species, Field::phi_s, SparseMatrix::from_triplets( n * ns, n, std::move( ss_ ) ) );
            sys.set_block( Field::solid_species, Field::phi_l, SparseMatrix::from_triplets( n * ns, n, std::move( sl_ ) ) );
        }
    }

    std::vector< schwarz::Point2 > s_coords( n * ns );
    for ( std::size_t k = 0; k < n; ++k )
        for ( std::size_t sp = 0; sp < ns; ++sp )
            s_coords[k * ns + sp] = centers[k];
    sys.set_coordinates( Field::phi_s, centers );
    sys.set_coordinates( Field::phi_l, centers );
    sys.set_coordinates( Field::solid_species, std::move( s_coords ) );
    sys.set_coordinates( Field::liquid_species, centers );
    sys.set_coordinates( Field::pressure, centers );

    bc.solution.reserve( sys.size() );
    for ( const auto* part : std::initializer_list< const std::vector< double >* >{ &u_phis, &u_phil, &u_s, &u_x, &u_p } )
        bc.solution.insert( bc.solution.end(), part->begin(), part->end() );
    std::vector< double > rhs( sys.size() );
    sys.apply( bc.solution, rhs );
    sys.set_rhs( std::move( rhs ) );
    sys.validate();
    bc.system = std::move( sys );
    return bc;
}

void BatteryCase::export_matrix_market( const std::filesystem::path& dir ) const
{
    std::filesystem::create_directories( dir );
    for ( Field r : all_fields )
        for ( Field c : all_fields )
            if ( const auto* b = system.block( r, c ) )
                store_matrix_market( *b, dir / ( "A_" + std::string( field_name( r ) ) + "_" +
                                                 std::string( field_name( c ) ) + ".mtx" ) );
    store_matrix_market( system.monolithic(), dir / "A.mtx" );
    auto column = []( std::span< const double > v ) {
        return SparseMatrix::from_dense( v.size(), 1, v );
    };
    store_matrix_market( column( system.rhs() ), dir / "b.mtx" );
    store_matrix_market( column( solution ), dir / "u.mtx" );
}

} // namespace hbgs::battery
