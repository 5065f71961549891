#include "hbgs/amg.hpp"

#include "hbgs/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace hbgs::amg {

void AmgParams::validate() const
{
    if ( !( drop_tolerance >= 0.0 ) )
        throw ConfigError( "AMG drop tolerance must be non-negative" );
    if ( max_coarse_size < 1 )
        throw ConfigError( "AMG max_coarse_size must be at least 1" );
    if ( max_levels < 1 )
        throw ConfigError( "AMG max_levels must be at least 1" );
    if ( smoother_degree < 1 )
        throw ConfigError( "AMG smoother degree must be at least 1" );
    if ( !( prolongator_damping > 0.0 ) )
        throw ConfigError( "AMG prolongator damping must be positive" );
}

bool StrengthGraph::has_edge( std::size_t i, std::size_t j ) const
{
    const auto r = row( i );
    return std::binary_search( r.begin(), r.end(), j );
}

bool is_strong( double aij, double aii, double ajj, double theta )
{
    if ( theta == 0.0 )
        return true; // no dropping at all, structural zeros included
    return std::abs( aij ) > theta * std::sqrt( std::abs( aii ) * std::abs( ajj ) );
}

namespace {

double normalized_strength( double aij, double aii, double ajj )
{
    const double scale = std::sqrt( std::abs( aii ) * std::abs( ajj ) );
    return scale > 0.0 ? std::abs( aij ) / scale : std::numeric_limits< double >::infinity();
}

} // namespace

StrengthGraph strength_graph( const SparseMatrix& a, double theta )
{
    if ( !a.square() )
        throw DimensionError( "strength_graph: matrix is not square" );
    const std::size_t                                         n    = a.rows();
    const std::vector< double >                               diag = a.diagonal();
    std::vector< std::vector< std::pair< std::size_t, double > > > adj( n );
    for ( std::size_t i = 0; i < n; ++i )
    {
        adj[i].emplace_back( i, 1.0 );
        const auto cols = a.row_cols( i );
        const auto vals = a.row_values( i );
        for ( std::size_t k = 0; k < cols.size(); ++k )
        {
            const std::size_t j = cols[k];
            if ( j == i || !is_strong( vals[k], diag[i], diag[j], theta ) )
                continue;
            const double w = normalized_strength( vals[k], diag[i], diag[j] );
            adj[i].emplace_back( j, w );
            adj[j].emplace_back( i, w );
        }
    }
    StrengthGraph s;
    s.size = n;
    s.offsets.assign( n + 1, 0 );
    for ( std::size_t i = 0; i < n; ++i )
    {
        auto& row = adj[i];
        std::sort( row.begin(), row.end() );
        for ( std::size_t k = 0; k < row.size(); ++k )
        {
            if ( k > 0 && row[k].first == row[k - 1].first )
            {
                s.weights.back() = std::max( s.weights.back(), row[k].second );
                continue;
            }
            s.neighbors.push_back( row[k].first );
            s.weights.push_back( row[k].second );
        }
        s.offsets[i + 1] = s.neighbors.size();
    }
    return s;
}

std::vector< std::vector< std::size_t > > AggregateMap::members() const
{
    std::vector< std::vector< std::size_t > > m( count );
    for ( std::size_t i = 0; i < aggregate_of.size(); ++i )
        m[aggregate_of[i]].push_back( i );
    return m;
}

AggregateMap aggregate( const StrengthGraph& s )
{
    constexpr std::size_t none = SparseMatrix::npos;
    const std::size_t     n    = s.size;
    AggregateMap          agg;
    agg.aggregate_of.assign( n, none );

    // Pass 1: roots.
    for ( std::size_t i = 0; i < n; ++i )
    {
        if ( agg.aggregate_of[i] != none )
            continue;
        const auto nb   = s.row( i );
        const bool free = std::all_of( nb.begin(), nb.end(), [&]( std::size_t j ) { return agg.aggregate_of[j] == none; } );
        if ( !free )
            continue;
        const std::size_t id = agg.count++;
        for ( std::size_t j : nb )
            agg.aggregate_of[j] = id;
    }

    // Pass 2: attach to the strongest pass-1 neighbour aggregate.
    const std::vector< std::size_t > first_pass = agg.aggregate_of;
    for ( std::size_t i = 0; i < n; ++i )
    {
        if ( first_pass[i] != none )
            continue;
        const auto  nb     = s.row( i );
        const auto  w      = s.row_weights( i );
        std::size_t best   = none;
        double      best_w = -1.0;
        for ( std::size_t k = 0; k < nb.size(); ++k )
        {
            const std::size_t j = nb[k];
            if ( j == i || first_pass[j] == none )
                continue;
            const std::size_t id = first_pass[j];
            if ( w[k] > best_w || ( w[k] == best_w && id < best ) )
            {
                best   = id;
                best_w = w[k];
            }
        }
        if ( best != none )
            agg.aggregate_of[i] = best;
    }

    // Pass 3: singletons.
    for ( std::size_t i = 0; i < n; ++i )
        if ( agg.aggregate_of[i] == none )
            agg.aggregate_of[i] = agg.count++;
    return agg;
}

std::vector< double > coarse_nullspace( const AggregateMap& agg, std::span< const double > nullspace )
{
    if ( nullspace.size() != agg.aggregate_of.size() )
        throw DimensionError( "nullspace length does not match the aggregate map" );
    std::vector< double > norms( agg.count, 0.0 );
    for ( std::size_t i = 0; i < nullspace.size(); ++i )
        norms[agg.aggregate_of[i]] += nullspace[i] * nullspace[i];
    for ( std::size_t a = 0; a < agg.count; ++a )
    {
        if ( norms[a] == 0.0 )
            throw SetupError( "nullspace vanishes on aggregate " + std::to_string( a ) );
        norms[a] = std::sqrt( norms[a] );
    }
    return norms;
}

SparseMatrix tentative_prolongator( const AggregateMap& agg, std::span< const double > nullspace )
{
    const std::vector< double > norms = coarse_nullspace( agg, nullspace );
    const std::size_t           n     = nullspace.size();
    std::vector< std::size_t >  offsets( n + 1 );
    std::vector< std::size_t >  cols( n );
    std::vector< double >       vals( n );
    for ( std::size_t i = 0; i < n; ++i )
    {
        offsets[i + 1] = i + 1;
        cols[i]        = agg.aggregate_of[i];
        vals[i]        = nullspace[i] / norms[cols[i]];
    }
    return SparseMatrix( n, agg.count, std::move( offsets ), std::move( cols ), std::move( vals ) );
}

SparseMatrix filtered_matrix( const SparseMatrix& a, double theta, DiagonalCompensation rule )
{
    if ( !a.square() )
        throw DimensionError( "filtered_matrix: matrix is not square" );
    const std::size_t           n    = a.rows();
    const std::vector< double > diag = a.diagonal();
    std::vector< std::size_t >  offsets( n + 1, 0 );
    std::vector< std::size_t >  cols;
    std::vector< double >       vals;
    cols.reserve( a.nnz() );
    vals.reserve( a.nnz() );
    for ( std::size_t i = 0; i < n; ++i )
    {
        const auto  rc        = a.row_cols( i );
        const auto  rv        = a.row_values( i );
        double      dropped   = 0.0; // signed sum
        double      dropped_a = 0.0; // magnitude sum
        std::size_t diag_pos  = SparseMatrix::npos;
        for ( std::size_t k = 0; k < rc.size(); ++k )
        {
            const std::size_t j = rc[k];
            if ( j == i )
            {
                diag_pos = cols.size();
                cols.push_back( j );
                vals.push_back( rv[k] );
                continue;
            }
            if ( is_strong( rv[k], diag[i], diag[j], theta ) )
            {
                cols.push_back( j );
                vals.push_back( rv[k] );
            }
            else
            {
                dropped += rv[k];
                dropped_a += std::abs( rv[k] );
            }
        }
        if ( diag_pos == SparseMatrix::npos )
            throw SetupError( "filtered_matrix: row " + std::to_string( i ) + " has no diagonal entry" );
        switch ( rule )
        {
            case DiagonalCompensation::absolute_row_sum:
                vals[diag_pos] = std::copysign( std::abs( diag[i] ) + dropped_a, diag[i] );
                break;
            case DiagonalCompensation::row_sum_preserving: vals[diag_pos] = diag[i] + dropped; break;
            case DiagonalCompensation::none: break;
        }
        offsets[i + 1] = cols.size();
    }
    return SparseMatrix( n, n, std::move( offsets ), std::move( cols ), std::move( vals ) );
}

namespace {

SparseMatrix scale_rows( const SparseMatrix& a, std::span< const double > s )
{
    std::vector< double > vals( a.values().begin(), a.values().end() );
    const auto            off = a.row_offsets();
    for ( std::size_t i = 0; i < a.rows(); ++i )
        for ( std::size_t k = off[i]; k < off[i + 1]; ++k )
            vals[k] *= s[i];
    return SparseMatrix( a.rows(),
                         a.cols(),
                         std::vector< std::size_t >( off.begin(), off.end() ),
                         std::vector< std::size_t >( a.col_indices().begin(), a.col_indices().end() ),
                         std::move( vals ) );
}

} // namespace

SparseMatrix smooth_prolongator( const SparseMatrix& a, const SparseMatrix& tentative, const AmgParams& params )
{
    if ( a.cols() != tentative.rows() )
        throw DimensionError( "smooth_prolongator: operator and tentative prolongator disagree" );
    const SparseMatrix          af  = filtered_matrix( a, params.drop_tolerance, params.compensation );
    const std::vector< double > inv = inverse_diagonal( af );
    const double lambda = estimate_lambda_max( af, inv, params.prolongator_power_iterations, params.seed ^ 0x9e3779b97f4a7c15ULL );
    if ( !( lambda > 0.0 ) )
        throw SetupError( "smooth_prolongator: non-positive lambda_max estimate" );
    const double omega = params.prolongator_damping / lambda;
    return add( 1.0, tentative, -omega, multiply( scale_rows( af, inv ), tentative ) );
}

// ---------------------------------------------------------------------------

AmgHierarchy AmgHierarchy::build( const SparseMatrix& a, const AmgParams& params )
{
    params.validate();
    if ( !a.square() )
        throw DimensionError( "AMG hierarchy needs a square operator" );

    AmgHierarchy h;
    h.params_ = params;
    h.levels_.push_back( Level{ a, {}, {}, {} } );
    std::vector< double > nullspace( a.rows(), 1.0 );
    std::size_t           stagnant = 0;

    while ( h.levels_.back().a.rows() > params.max_coarse_size && h.levels_.size() < params.max_levels )
    {
        const std::size_t fine_l = h.levels_.size() - 1;
        AmgParams         lp     = params;
        lp.seed                  = params.seed + fine_l;
        const SparseMatrix& fine = h.levels_.back().a;

        const StrengthGraph s   = strength_graph( fine, params.drop_tolerance );
        const AggregateMap  agg = aggregate( s );
        if ( agg.count >= 0.9 * static_cast< double >( fine.rows() ) )
            ++stagnant;
        else
            stagnant = 0;
        if ( stagnant >= 2 )
        {
            h.truncated_ = true;
            break;
        }
        SparseMatrix p      = smooth_prolongator( fine, tentative_prolongator( agg, nullspace ), lp );
        SparseMatrix r      = p.transpose();
        SparseMatrix coarse = triple_product( r, fine, p );
        nullspace           = coarse_nullspace( agg, nullspace );

        h.levels_.back().p = std::move( p );
        h.levels_.back().r = std::move( r );
        h.levels_.push_back( Level{ std::move( coarse ), {}, {}, {} } );
    }

    const std::size_t coarse_n = h.levels_.back().a.rows();
    if ( coarse_n > params.max_coarse_size )
    {
        const std::size_t limit = h.truncated_ ? 4 * params.max_coarse_size : DenseFactorization::default_cap;
        if ( coarse_n > limit )
            throw SetupError( "AMG coarsening stalled at " + std::to_string( coarse_n ) + " rows (limit " +
                              std::to_string( limit ) + ")" );
    }
    h.coarse_ = DenseFactorization::factor( h.levels_.back().a, std::max( coarse_n, std::size_t{ 1 } ) );

    ChebyshevParams cp = params.chebyshev;
    cp.degree          = params.smoother_degree;
    for ( std::size_t l = 0; l + 1 < h.levels_.size(); ++l )
    {
        cp.seed                 = params.chebyshev.seed + l;
        h.levels_[l].smoother = ChebyshevSmoother::setup( h.levels_[l].a, cp );
    }
    return h;
}

void AmgHierarchy::cycle( std::size_t l, std::span< const double > b, std::span< double > x ) const
{
    if ( l + 1 == levels_.size() )
    {
        std::copy( b.begin(), b.end(), x.begin() );
        coarse_.solve_in_place( x );
        return;
    }
    const Level& lev = levels_[l];
    lev.smoother.apply_in_place( lev.a, b, x );
    std::vector< double > r = residual( lev.a, x, b );
    std::vector< double > rc( lev.r.rows() );
    lev.r.multiply( r, rc );
    std::vector< double > ec( rc.size(), 0.0 );
    cycle( l + 1, rc, ec );
    std::vector< double > e( lev.p.rows() );
    lev.p.multiply( ec, e );
    for ( std::size_t i = 0; i < e.size(); ++i )
        x[i] += e[i];
    lev.smoother.apply_in_place( lev.a, b, x );
}

std::vector< double > AmgHierarchy::vcycle( std::span< const double > b, std::span< const double > x ) const
{
    if ( b.size() != size() || x.size() != size() )
        throw DimensionError( "vcycle: vector length does not match the fine level" );
    std::vector< double > out( x.begin(), x.end() );
    cycle( 0, b, out );
    return out;
}

void AmgHierarchy::precondition( std::span< const double > r, std::span< double > z ) const
{
    if ( r.size() != size() || z.size() != size() )
        throw DimensionError( "AMG preconditioner: vector length does not match the fine level" );
    std::fill( z.begin(), z.end(), 0.0 );
    cycle( 0, r, z );
}

LinearOperator AmgHierarchy::as_preconditioner() const
{
    return LinearOperator( size(), [this]( std::span< const double > in, std::span< double > out ) { precondition( in, out ); } );
}

double AmgHierarchy::operator_complexity() const
{
    if ( levels_.empty() || levels_.front().a.nnz() == 0 )
        return 1.0;
    double total = 0.0;
    for ( const auto& l : levels_ )
        total += static_cast< double >( l.a.nnz() );
    return total / static_cast< double >( levels_.front().a.nnz() );
}

HierarchySummary AmgHierarchy::summary() const
{
    HierarchySummary s;
    for ( const auto& l : levels_ )
        s.levels.push_back( { l.a.rows(), l.a.nnz() } );
    s.operator_complexity = operator_complexity();
    s.truncated           = truncated_;
    return s;
}

} // namespace hbgs::amg
