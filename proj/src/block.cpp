#include "hbgs/block.hpp"

#include "hbgs/error.hpp"

#include <algorithm>
#include <chrono>
#include <string>

namespace hbgs {

std::string_view field_name( Field f )
{
    switch ( f )
    {
    case Field::phi_s: return "phi_s";
    case Field::phi_l: return "phi_l";
    case Field::solid_species: return "s";
    case Field::liquid_species: return "x";
    case Field::pressure: return "p";
    }
    return "?";
}

BlockSystem::BlockSystem( std::array< std::size_t, num_fields > dims )
    : dims_( dims )
{
    offsets_[0] = 0;
    for ( std::size_t f = 0; f < num_fields; ++f )
        offsets_[f + 1] = offsets_[f] + dims_[f];
}

void BlockSystem::set_block( Field row, Field col, SparseMatrix m )
{
    if ( m.rows() != dim( row ) || m.cols() != dim( col ) )
        throw DimensionError( "block (" + std::string( field_name( row ) ) + ", " + std::string( field_name( col ) ) +
                              ") is " + std::to_string( m.rows() ) + "x" + std::to_string( m.cols() ) + ", expected " +
                              std::to_string( dim( row ) ) + "x" + std::to_string( dim( col ) ) );
    blocks_[index( row )][index( col )] = std::move( m );
}

void BlockSystem::clear_block( Field row, Field col ) { blocks_[index( row )][index( col )].reset(); }

bool BlockSystem::has_block( Field row, Field col ) const { return blocks_[index( row )][index( col )].has_value(); }

const SparseMatrix* BlockSystem::block( Field row, Field col ) const
{
    const auto& b = blocks_[index( row )][index( col )];
    return b ? &*b : nullptr;
}

SparseMatrix BlockSystem::block_or_zero( Field row, Field col ) const
{
    if ( const auto* b = block( row, col ) )
        return *b;
    return SparseMatrix::zero( dim( row ), dim( col ) );
}

void BlockSystem::set_rhs( std::vector< double > b )
{
    if ( b.size() != size() )
        throw DimensionError( "right-hand side has " + std::to_string( b.size() ) + " entries, system has " +
                              std::to_string( size() ) );
    rhs_ = std::move( b );
}

void BlockSystem::set_coordinates( Field f, std::vector< schwarz::Point2 > pts )
{
    if ( pts.size() != dim( f ) )
        throw DimensionError( "coordinates for field " + std::string( field_name( f ) ) + " have the wrong length" );
    coords_[index( f )] = std::move( pts );
}

std::span< const double > BlockSystem::segment( std::span< const double > v, Field f ) const
{
    if ( v.size() != size() )
        throw DimensionError( "segment: vector length mismatch" );
    return v.subspan( offset( f ), dim( f ) );
}

std::span< double > BlockSystem::segment( std::span< double > v, Field f ) const
{
    if ( v.size() != size() )
        throw DimensionError( "segment: vector length mismatch" );
    return v.subspan( offset( f ), dim( f ) );
}

SparseMatrix BlockSystem::group_matrix( std::span< const Field > rows, std::span< const Field > cols ) const
{
    std::size_t nrows = 0, ncols = 0;
    std::vector< std::size_t > col_off;
    for ( Field c : cols )
    {
        col_off.push_back( ncols );
        ncols += dim( c );
    }
    for ( Field r : rows )
        nrows += dim( r );

    std::vector< std::size_t > offsets{ 0 }, indices;
    std::vector< double >      values;
    offsets.reserve( nrows + 1 );
    for ( Field r : rows )
        for ( std::size_t i = 0; i < dim( r ); ++i )
        {
            for ( std::size_t k = 0; k < cols.size(); ++k )
                if ( const auto* b = block( r, cols[k] ) )
                {
                    const auto bc = b->row_cols( i );
                    const auto bv = b->row_values( i );
                    for ( std::size_t e = 0; e < bc.size(); ++e )
                    {
                        indices.push_back( col_off[k] + bc[e] );
                        values.push_back( bv[e] );
                    }
                }
            offsets.push_back( indices.size() );
        }
    // Column groups must be listed in increasing order for the rows to come out
    // canonical; fall back to a triplet rebuild otherwise.
    if ( is_canonical( nrows, ncols, offsets, indices, values.size() ) )
        return SparseMatrix( nrows, ncols, std::move( offsets ), std::move( indices ), std::move( values ) );
    std::vector< Triplet > t;
    t.reserve( values.size() );
    for ( std::size_t i = 0; i < nrows; ++i )
        for ( std::size_t e = offsets[i]; e < offsets[i + 1]; ++e )
            t.push_back( { i, indices[e], values[e] } );
    return SparseMatrix::from_triplets( nrows, ncols, std::move( t ) );
}

SparseMatrix BlockSystem::monolithic() const { return group_matrix( all_fields, all_fields ); }

void BlockSystem::apply( std::span< const double > x, std::span< double > y ) const
{
    if ( x.size() != size() || y.size() != size() )
        throw DimensionError( "block apply: vector length mismatch" );
    for ( std::size_t r = 0; r < num_fields; ++r )
    {
        double* out = y.data() + offsets_[r];
        for ( std::size_t i = 0; i < dims_[r]; ++i )
        {
            double s = 0.0;
            for ( std::size_t c = 0; c < num_fields; ++c )
            {
                const auto& b = blocks_[r][c];
                if ( !b )
                    continue;
                const double* xc   = x.data() + offsets_[c];
                const auto    cols = b->row_cols( i );
                const auto    vals = b->row_values( i );
                for ( std::size_t e = 0; e < cols.size(); ++e )
                    s += vals[e] * xc[cols[e]];
            }
            out[i] = s;
        }
    }
}

LinearOperator BlockSystem::op() const
{
    return LinearOperator( size(), [this]( std::span< const double > in, std::span< double > out ) { apply( in, out ); } );
}

void BlockSystem::validate() const
{
    for ( std::size_t r = 0; r < num_fields; ++r )
        for ( std::size_t c = 0; c < num_fields; ++c )
            if ( blocks_[r][c] && ( blocks_[r][c]->rows() != dims_[r] || blocks_[r][c]->cols() != dims_[c] ) )
                throw DimensionError( "block shape disagrees with field sizes" );
    if ( !rhs_.empty() && rhs_.size() != size() )
        throw DimensionError( "right-hand side length disagrees with the system" );
    const auto* as = block( Field::solid_species, Field::solid_species );
    if ( dim( Field::solid_species ) > 0 )
    {
        if ( !as )
            throw SetupError( "solid-species block is missing" );
        for ( std::size_t i = 0; i < as->rows(); ++i )
            for ( std::size_t j : as->row_cols( i ) )
                if ( j != i )
                    throw SetupError( "solid-species block is not diagonal (row " + std::to_string( i ) + ")" );
    }
}

// ---------------------------------------------------------------------------

void voltage_bgs_apply( const SparseMatrix&       a_sl,
                        const LinearOperator&     m_s,
                        const LinearOperator&     m_l,
                        std::span< const double > r,
                        std::span< double >       z )
{
    const std::size_t ns = m_s.size(), nl = m_l.size();
    if ( r.size() != ns + nl || z.size() != ns + nl || a_sl.rows() != ns || a_sl.cols() != nl )
        throw DimensionError( "voltage BGS: dimension mismatch" );
    auto z_s = z.first( ns );
    auto z_l = z.subspan( ns );
    m_l.apply( r.subspan( ns ), z_l );
    std::vector< double > t( ns );
    a_sl.multiply( z_l, t );
    for ( std::size_t i = 0; i < ns; ++i )
        t[i] = r[i] - t[i];
    m_s.apply( t, z_s );
}

void nonvoltage_bgs_apply( const SparseMatrix&       a_s,
                           const SparseMatrix*       a_xp,
                           const LinearOperator&     m_x,
                           const LinearOperator&     m_p,
                           std::span< const double > r,
                           std::span< double >       z )
{
    const std::size_t ns = a_s.rows(), nx = m_x.size(), np = m_p.size();
    if ( r.size() != ns + nx + np || z.size() != ns + nx + np )
        throw DimensionError( "non-voltage BGS: dimension mismatch" );
    if ( a_xp && ( a_xp->rows() != nx || a_xp->cols() != np ) )
        throw DimensionError( "non-voltage BGS: A_xp shape mismatch" );

    const auto z_s = jacobi_apply( a_s, r.first( ns ) );
    std::copy( z_s.begin(), z_s.end(), z.begin() );

    auto z_x = z.subspan( ns, nx );
    auto z_p = z.subspan( ns + nx );
    m_p.apply( r.subspan( ns + nx ), z_p );
    if ( a_xp )
    {
        std::vector< double > t( nx );
        a_xp->multiply( z_p, t );
        for ( std::size_t i = 0; i < nx; ++i )
            t[i] = r[ns + i] - t[i];
        m_x.apply( t, z_x );
    }
    else
        m_x.apply( r.subspan( ns, nx ), z_x );
}

ElectrochemConfig ElectrochemConfig::defaults()
{
    ElectrochemConfig c;
    c.phi_s_amg.drop_tolerance    = 0.04;
    c.phi_s_amg.smoother_degree   = 4;
    c.phi_l_amg.drop_tolerance    = 0.04;
    c.phi_l_amg.smoother_degree   = 4;
    c.pressure_amg.drop_tolerance  = 0.04;
    c.pressure_amg.smoother_degree = 2;
    return c;
}

// ---------------------------------------------------------------------------

VoltagePreconditioner::VoltagePreconditioner( const BlockSystem& sys, const ElectrochemConfig& cfg )
    : n_s_( sys.dim( Field::phi_s ) )
    , n_l_( sys.dim( Field::phi_l ) )
    , a_sl_( sys.block_or_zero( Field::phi_s, Field::phi_l ) )
{
    const auto* a_ss = sys.block( Field::phi_s, Field::phi_s );
    const auto* a_ll = sys.block( Field::phi_l, Field::phi_l );
    if ( !a_ss || !a_ll )
        throw SetupError( "voltage preconditioner: diagonal voltage blocks are required" );
    amg_s_ = std::make_unique< amg::AmgHierarchy >( amg::AmgHierarchy::build( *a_ss, cfg.phi_s_amg ) );
    amg_l_ = std::make_unique< amg::AmgHierarchy >( amg::AmgHierarchy::build( *a_ll, cfg.phi_l_amg ) );
    m_s_   = amg_s_->as_preconditioner();
    m_l_   = amg_l_->as_preconditioner();
}

void VoltagePreconditioner::apply( std::span< const double > r, std::span< double > z ) const
{
    voltage_bgs_apply( a_sl_, m_s_, m_l_, r, z );
}

LinearOperator VoltagePreconditioner::as_operator() const
{
    return LinearOperator( size(), [this]( std::span< const double > in, std::span< double > out ) { apply( in, out ); } );
}

NonVoltagePreconditioner::NonVoltagePreconditioner( const BlockSystem& sys, const ElectrochemConfig& cfg )
    : n_s_( sys.dim( Field::solid_species ) )
    , n_x_( sys.dim( Field::liquid_species ) )
    , n_p_( sys.dim( Field::pressure ) )
    , a_s_( sys.block_or_zero( Field::solid_species, Field::solid_species ) )
{
    const auto* a_xx = sys.block( Field::liquid_species, Field::liquid_species );
    const auto* a_pp = sys.block( Field::pressure, Field::pressure );
    if ( !a_xx || !a_pp )
        throw SetupError( "non-voltage preconditioner: species and pressure diagonal blocks are required" );
    if ( !cfg.nonvoltage_block_jacobi && sys.has_block( Field::liquid_species, Field::pressure ) )
        a_xp_ = *sys.block( Field::liquid_species, Field::pressure );

    auto coords = sys.coordinates( Field::liquid_species );
    if ( coords.size() != n_x_ )
        throw SetupError( "non-voltage preconditioner: species coordinates are required for partitioning" );
    ras_x_ = std::make_unique< schwarz::RasPreconditioner >(
        schwarz::build_ras( *a_xx, coords, cfg.species_subdomains, cfg.species_overlap ) );
    amg_p_ = std::make_unique< amg::AmgHierarchy >( amg::AmgHierarchy::build( *a_pp, cfg.pressure_amg ) );
    m_x_   = ras_x_->as_preconditioner();
    m_p_   = amg_p_->as_preconditioner();
}

void NonVoltagePreconditioner::apply( std::span< const double > r, std::span< double > z ) const
{
    nonvoltage_bgs_apply( a_s_, a_xp_ ? &*a_xp_ : nullptr, m_x_, m_p_, r, z );
}

LinearOperator NonVoltagePreconditioner::as_operator() const
{
    return LinearOperator( size(), [this]( std::span< const double > in, std::span< double > out ) { apply( in, out ); } );
}

// ---------------------------------------------------------------------------

ElectrochemPreconditioner::ElectrochemPreconditioner( const BlockSystem& sys, ElectrochemConfig cfg )
    : cfg_( std::move( cfg ) )
    , n_v_( sys.dim( Field::phi_s ) + sys.dim( Field::phi_l ) )
    , n_n_( sys.dim( Field::solid_species ) + sys.dim( Field::liquid_species ) + sys.dim( Field::pressure ) )
{
    const auto t0 = std::chrono::steady_clock::now();
    sys.validate();
    a_vv_ = sys.group_matrix( voltage_fields, voltage_fields );
    a_nn_ = sys.group_matrix( nonvoltage_fields, nonvoltage_fields );
    a_vn_ = sys.group_matrix( voltage_fields, nonvoltage_fields );
    if ( cfg_.mode == InnerMode::direct )
    {
        direct_vv_ = DenseFactorization::factor( a_vv_ );
        direct_nn_ = DenseFactorization::factor( a_nn_ );
    }
    else
    {
        SolverConfig probe;
        probe.restart            = cfg_.voltage.restart;
        probe.relative_tolerance = cfg_.voltage.relative_tolerance;
        probe.max_iterations     = cfg_.voltage.max_iterations;
        probe.validate();
        probe.restart            = cfg_.nonvoltage.restart;
        probe.relative_tolerance = cfg_.nonvoltage.relative_tolerance;
        probe.max_iterations     = cfg_.nonvoltage.max_iterations;
        probe.validate();
        m_vv_ = std::make_unique< VoltagePreconditioner >( sys, cfg_ );
        m_nn_ = std::make_unique< NonVoltagePreconditioner >( sys, cfg_ );
    }
    setup_seconds_ = std::chrono::duration< double >( std::chrono::steady_clock::now() - t0 ).count();
}

namespace {

SolverConfig inner_config( const InnerSolverConfig& c )
{
    SolverConfig s;
    s.restart            = c.restart;
    s.relative_tolerance = c.relative_tolerance;
    s.max_iterations     = c.max_iterations;
    s.flexible           = true;
    return s;
}

} // namespace

void ElectrochemPreconditioner::apply( std::span< const double > r, std::span< double > z ) const
{
    if ( r.size() != size() || z.size() != size() )
        throw DimensionError( "electrochemical preconditioner: vector length mismatch" );
    auto r_v = r.first( n_v_ );
    auto r_n = r.subspan( n_v_ );
    auto z_v = z.first( n_v_ );
    auto z_n = z.subspan( n_v_ );

    InnerStats local;
    local.applications = 1;

    if ( direct_nn_ )
    {
        std::copy( r_n.begin(), r_n.end(), z_n.begin() );
        direct_nn_->solve_in_place( z_n );
    }
    else
    {
        const auto op  = hbgs::as_operator( a_nn_ );
        const auto pre = m_nn_->as_operator();
        const auto res = fgmres( op, &pre, r_n, inner_config( cfg_.nonvoltage ) );
        std::copy( res.x.begin(), res.x.end(), z_n.begin() );
        local.nonvoltage_iterations = res.stats.iterations;
        local.nonvoltage_failures   = res.stats.converged ? 0 : 1;
    }

    std::vector< double > t( n_v_ );
    a_vn_.multiply( z_n, t );
    for ( std::size_t i = 0; i < n_v_; ++i )
        t[i] = r_v[i] - t[i];

    if ( direct_vv_ )
    {
        std::copy( t.begin(), t.end(), z_v.begin() );
        direct_vv_->solve_in_place( z_v );
    }
    else
    {
        const auto op  = hbgs::as_operator( a_vv_ );
        const auto pre = m_vv_->as_operator();
        const auto res = fgmres( op, &pre, t, inner_config( cfg_.voltage ) );
        std::copy( res.x.begin(), res.x.end(), z_v.begin() );
        local.voltage_iterations = res.stats.iterations;
        local.voltage_failures   = res.stats.converged ? 0 : 1;
    }

    std::lock_guard lock( stats_mutex_ );
    stats_.applications += local.applications;
    stats_.voltage_iterations += local.voltage_iterations;
    stats_.nonvoltage_iterations += local.nonvoltage_iterations;
    stats_.voltage_failures += local.voltage_failures;
    stats_.nonvoltage_failures += local.nonvoltage_failures;
}

LinearOperator ElectrochemPreconditioner::as_operator() const
{
    return LinearOperator( size(), [this]( std::span< const double > in, std::span< double > out ) { apply( in, out ); } );
}

InnerStats ElectrochemPreconditioner::stats() const
{
    std::lock_guard lock( stats_mutex_ );
    return stats_;
}

void ElectrochemPreconditioner::reset_stats()
{
    std::lock_guard lock( stats_mutex_ );
    stats_ = {};
}

} // namespace hbgs
