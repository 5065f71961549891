#include "hbgs/schwarz.hpp"

#include "hbgs/error.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace hbgs::schwarz {

std::vector< std::vector< std::size_t > > Partition::owned_sets() const
{
    std::vector< std::vector< std::size_t > > sets( count );
    for ( std::size_t i = 0; i < owner.size(); ++i )
        sets[owner[i]].push_back( i );
    return sets;
}

namespace {

void bisect( std::span< const Point2 >  coords,
             std::vector< std::size_t > nodes,
             std::size_t                parts,
             std::size_t                first_id,
             std::vector< std::size_t >& owner )
{
    if ( parts == 1 )
    {
        for ( std::size_t i : nodes )
            owner[i] = first_id;
        return;
    }
    double xmin = coords[nodes[0]].x, xmax = xmin, ymin = coords[nodes[0]].y, ymax = ymin;
    for ( std::size_t i : nodes )
    {
        xmin = std::min( xmin, coords[i].x );
        xmax = std::max( xmax, coords[i].x );
        ymin = std::min( ymin, coords[i].y );
        ymax = std::max( ymax, coords[i].y );
    }
    const bool along_x = ( xmax - xmin ) >= ( ymax - ymin );
    std::stable_sort( nodes.begin(), nodes.end(), [&]( std::size_t a, std::size_t b ) {
        const double ca = along_x ? coords[a].x : coords[a].y;
        const double cb = along_x ? coords[b].x : coords[b].y;
        return ca != cb ? ca < cb : a < b;
    } );
    const std::size_t left_parts = parts / 2;
    const std::size_t n          = nodes.size();
    const std::size_t n_left     = ( n * left_parts + parts - 1 ) / parts;
    std::vector< std::size_t > left( nodes.begin(), nodes.begin() + static_cast< std::ptrdiff_t >( n_left ) );
    std::vector< std::size_t > right( nodes.begin() + static_cast< std::ptrdiff_t >( n_left ), nodes.end() );
    bisect( coords, std::move( left ), left_parts, first_id, owner );
    bisect( coords, std::move( right ), parts - left_parts, first_id + left_parts, owner );
}

} // namespace

Partition partition_nodes( std::span< const Point2 > coordinates, std::size_t parts )
{
    if ( parts == 0 )
        throw ConfigError( "partition_nodes: at least one subdomain is required" );
    if ( parts > coordinates.size() )
        throw ConfigError( "partition_nodes: " + std::to_string( parts ) + " subdomains requested for " +
                           std::to_string( coordinates.size() ) + " nodes" );
    Partition p;
    p.count = parts;
    p.owner.assign( coordinates.size(), 0 );
    std::vector< std::size_t > nodes( coordinates.size() );
    std::iota( nodes.begin(), nodes.end(), std::size_t{ 0 } );
    bisect( coordinates, std::move( nodes ), parts, 0, p.owner );
    return p;
}

std::vector< std::vector< std::size_t > > extend_overlap( const SparseMatrix& a, const Partition& part, std::size_t overlap )
{
    if ( part.owner.size() != a.rows() )
        throw DimensionError( "extend_overlap: partition covers " + std::to_string( part.owner.size() ) + " nodes, matrix has " +
                              std::to_string( a.rows() ) + " rows" );
    auto                       sets = part.owned_sets();
    std::vector< unsigned char > in( a.rows(), 0 );
    for ( auto& set : sets )
    {
        for ( std::size_t i : set )
            in[i] = 1;
        std::vector< std::size_t > frontier = set;
        for ( std::size_t level = 0; level < overlap; ++level )
        {
            std::vector< std::size_t > next;
            for ( std::size_t i : frontier )
                for ( std::size_t j : a.row_cols( i ) )
                    if ( !in[j] )
                    {
                        in[j] = 1;
                        next.push_back( j );
                    }
            set.insert( set.end(), next.begin(), next.end() );
            frontier = std::move( next );
        }
        for ( std::size_t i : set )
            in[i] = 0;
        std::sort( set.begin(), set.end() );
    }
    return sets;
}

RasPreconditioner RasPreconditioner::setup( const SparseMatrix&                               a,
                                            const std::vector< std::vector< std::size_t > >& sets,
                                            const Partition&                                  part,
                                            SubdomainSolve                                    solve )
{
    if ( !a.square() )
        throw DimensionError( "RAS setup: matrix is not square" );
    if ( part.owner.size() != a.rows() || sets.size() != part.count )
        throw DimensionError( "RAS setup: partition and index sets disagree with the operator" );
    std::vector< unsigned char > covered( a.rows(), 0 );
    for ( const auto& s : sets )
        for ( std::size_t i : s )
            covered.at( i ) = 1;
    if ( std::find( covered.begin(), covered.end(), 0 ) != covered.end() )
        throw DimensionError( "RAS setup: index sets do not cover every node" );

    RasPreconditioner m;
    m.n_ = a.rows();
    m.subdomains_.reserve( sets.size() );
    for ( std::size_t d = 0; d < sets.size(); ++d )
    {
        Subdomain sub;
        sub.indices = sets[d];
        sub.owned.resize( sub.indices.size() );
        for ( std::size_t k = 0; k < sub.indices.size(); ++k )
            sub.owned[k] = part.owner[sub.indices[k]] == d ? 1 : 0;
        sub.local = extract_submatrix( a, sub.indices, sub.indices );
        try
        {
            if ( solve == SubdomainSolve::ilu0 )
                sub.solver = Ilu0Factors::factor( sub.local );
            else
                sub.solver = DenseFactorization::factor( sub.local, sub.local.rows() );
        }
        catch ( const SingularPivotError& e )
        {
            throw SubdomainFactorError( "RAS subdomain " + std::to_string( d ) + ": " + e.what(), d, e.row() );
        }
        m.subdomains_.push_back( std::move( sub ) );
    }
    return m;
}

void RasPreconditioner::apply( std::span< const double > r, std::span< double > z ) const
{
    if ( r.size() != n_ || z.size() != n_ )
        throw DimensionError( "RAS apply: vector length mismatch" );
    std::fill( z.begin(), z.end(), 0.0 );
    std::vector< double > local_r, local_z;
    for ( const auto& sub : subdomains_ )
    {
        const std::size_t m = sub.indices.size();
        local_r.resize( m );
        local_z.resize( m );
        for ( std::size_t k = 0; k < m; ++k )
            local_r[k] = r[sub.indices[k]];
        if ( const auto* ilu = std::get_if< Ilu0Factors >( &sub.solver ) )
            ilu->apply( local_r, local_z );
        else
        {
            local_z = local_r;
            std::get< DenseFactorization >( sub.solver ).solve_in_place( local_z );
        }
        for ( std::size_t k = 0; k < m; ++k )
            if ( sub.owned[k] )
                z[sub.indices[k]] = local_z[k];
    }
}

std::vector< double > RasPreconditioner::apply( std::span< const double > r ) const
{
    std::vector< double > z( n_ );
    apply( r, z );
    return z;
}

LinearOperator RasPreconditioner::as_preconditioner() const
{
    return LinearOperator( n_, [this]( std::span< const double > in, std::span< double > out ) { apply( in, out ); } );
}

RasPreconditioner build_ras( const SparseMatrix&       a,
                             std::span< const Point2 > coordinates,
                             std::size_t               parts,
                             std::size_t               overlap,
                             SubdomainSolve            solve )
{
    if ( coordinates.size() != a.rows() )
        throw DimensionError( "build_ras: one coordinate per row is required" );
    const Partition part = partition_nodes( coordinates, parts );
    return RasPreconditioner::setup( a, extend_overlap( a, part, overlap ), part, solve );
}

} // namespace hbgs::schwarz
