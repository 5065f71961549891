#include "hbgs/error.hpp"
#include "hbgs/sparse.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace hbgs {

namespace {

std::string_view trim( std::string_view s )
{
    while ( !s.empty() && ( s.front() == ' ' || s.front() == '\t' || s.front() == '\r' ) )
        s.remove_prefix( 1 );
    while ( !s.empty() && ( s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ) )
        s.remove_suffix( 1 );
    return s;
}

std::string lower( std::string_view s )
{
    std::string out( s );
    std::transform( out.begin(), out.end(), out.begin(), []( unsigned char c ) { return static_cast< char >( std::tolower( c ) ); } );
    return out;
}

std::vector< std::string_view > split_ws( std::string_view s )
{
    std::vector< std::string_view > out;
    std::size_t                     i = 0;
    while ( i < s.size() )
    {
        while ( i < s.size() && ( s[i] == ' ' || s[i] == '\t' ) )
            ++i;
        std::size_t j = i;
        while ( j < s.size() && s[j] != ' ' && s[j] != '\t' )
            ++j;
        if ( j > i )
            out.push_back( s.substr( i, j - i ) );
        i = j;
    }
    return out;
}

template < typename T >
T parse_number( std::string_view tok, std::size_t line, const char* what )
{
    T           v{};
    const char* first = tok.data();
    const char* last  = tok.data() + tok.size();
    if ( !tok.empty() && tok.front() == '+' )
        ++first;
    auto [ptr, ec] = std::from_chars( first, last, v );
    if ( ec != std::errc() || ptr != last )
        throw FormatError( "matrix market line " + std::to_string( line ) + ": cannot parse " + what + " '" +
                               std::string( tok ) + "'",
                           line );
    return v;
}

} // namespace

SparseMatrix parse_matrix_market( std::string_view text )
{
    std::size_t line_no = 0;
    std::size_t pos     = 0;
    auto        next_line = [&]( std::string_view& out ) -> bool {
        if ( pos >= text.size() )
            return false;
        std::size_t end = text.find( '\n', pos );
        if ( end == std::string_view::npos )
            end = text.size();
        out = text.substr( pos, end - pos );
        pos = end + 1;
        ++line_no;
        return true;
    };

    std::string_view line;
    if ( !next_line( line ) )
        throw FormatError( "matrix market: empty input", 0 );
    const auto header = split_ws( trim( line ) );
    if ( header.size() != 5 || lower( header[0] ) != "%%matrixmarket" )
        throw FormatError( "matrix market line 1: missing '%%MatrixMarket' banner", 1 );
    if ( lower( header[1] ) != "matrix" || lower( header[2] ) != "coordinate" )
        throw FormatError( "matrix market line 1: only 'matrix coordinate' is supported", 1 );
    if ( lower( header[3] ) != "real" )
        throw FormatError( "matrix market line 1: only the 'real' field is supported", 1 );
    const std::string symmetry = lower( header[4] );
    if ( symmetry != "general" && symmetry != "symmetric" )
        throw FormatError( "matrix market line 1: unsupported symmetry '" + std::string( header[4] ) + "'", 1 );
    const bool symmetric = symmetry == "symmetric";

    // Size line, after comments.
    std::vector< std::string_view > size_tok;
    for ( ;; )
    {
        if ( !next_line( line ) )
            throw FormatError( "matrix market: missing size line", line_no );
        line = trim( line );
        if ( line.empty() || line.front() == '%' )
            continue;
        size_tok = split_ws( line );
        break;
    }
    if ( size_tok.size() != 3 )
        throw FormatError( "matrix market line " + std::to_string( line_no ) + ": size line needs 'rows cols nnz'", line_no );
    const auto nrows = parse_number< std::size_t >( size_tok[0], line_no, "row count" );
    const auto ncols = parse_number< std::size_t >( size_tok[1], line_no, "column count" );
    const auto count = parse_number< std::size_t >( size_tok[2], line_no, "entry count" );
    if ( symmetric && nrows != ncols )
        throw FormatError( "matrix market line " + std::to_string( line_no ) + ": symmetric matrix must be square", line_no );

    struct Entry
    {
        Triplet     t;
        std::size_t line;
    };
    std::vector< Entry > entries;
    entries.reserve( symmetric ? 2 * count : count );
    std::size_t read = 0;
    while ( read < count )
    {
        if ( !next_line( line ) )
            throw FormatError( "matrix market: expected " + std::to_string( count ) + " entries, found " + std::to_string( read ),
                               line_no );
        line = trim( line );
        if ( line.empty() || line.front() == '%' )
            continue;
        const auto tok = split_ws( line );
        if ( tok.size() != 3 )
            throw FormatError( "matrix market line " + std::to_string( line_no ) + ": entry needs 'row col value'", line_no );
        const auto i = parse_number< std::size_t >( tok[0], line_no, "row index" );
        const auto j = parse_number< std::size_t >( tok[1], line_no, "column index" );
        const auto v = parse_number< double >( tok[2], line_no, "value" );
        if ( i < 1 || i > nrows || j < 1 || j > ncols )
            throw FormatError( "matrix market line " + std::to_string( line_no ) + ": index (" + std::to_string( i ) + ", " +
                                   std::to_string( j ) + ") out of range",
                               line_no );
        entries.push_back( { { i - 1, j - 1, v }, line_no } );
        if ( symmetric && i != j )
            entries.push_back( { { j - 1, i - 1, v }, line_no } );
        ++read;
    }
    while ( next_line( line ) )
    {
        line = trim( line );
        if ( !line.empty() && line.front() != '%' )
            throw FormatError( "matrix market line " + std::to_string( line_no ) + ": data beyond the declared entry count",
                               line_no );
    }

    std::stable_sort( entries.begin(), entries.end(), []( const Entry& a, const Entry& b ) {
        return a.t.row != b.t.row ? a.t.row < b.t.row : a.t.col < b.t.col;
    } );
    std::vector< std::size_t > offsets( nrows + 1, 0 );
    std::vector< std::size_t > cols;
    std::vector< double >      vals;
    cols.reserve( entries.size() );
    vals.reserve( entries.size() );
    for ( std::size_t k = 0; k < entries.size(); ++k )
    {
        if ( k > 0 && entries[k].t.row == entries[k - 1].t.row && entries[k].t.col == entries[k - 1].t.col )
        {
            const std::size_t l = std::max( entries[k].line, entries[k - 1].line );
            throw FormatError( "matrix market line " + std::to_string( l ) + ": duplicate entry (" +
                                   std::to_string( entries[k].t.row + 1 ) + ", " + std::to_string( entries[k].t.col + 1 ) + ")",
                               l );
        }
        cols.push_back( entries[k].t.col );
        vals.push_back( entries[k].t.value );
        ++offsets[entries[k].t.row + 1];
    }
    for ( std::size_t i = 0; i < nrows; ++i )
        offsets[i + 1] += offsets[i];
    return SparseMatrix( nrows, ncols, std::move( offsets ), std::move( cols ), std::move( vals ) );
}

SparseMatrix load_matrix_market( const std::filesystem::path& path )
{
    std::ifstream in( path, std::ios::binary );
    if ( !in )
        throw FormatError( "cannot open matrix market file '" + path.string() + "'", 0 );
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_matrix_market( ss.str() );
}

std::string format_matrix_market( const SparseMatrix& a )
{
    std::string out = "%%MatrixMarket matrix coordinate real general\n";
    out += std::to_string( a.rows() ) + " " + std::to_string( a.cols() ) + " " + std::to_string( a.nnz() ) + "\n";
    char buf[64];
    for ( std::size_t i = 0; i < a.rows(); ++i )
    {
        const auto cols = a.row_cols( i );
        const auto vals = a.row_values( i );
        for ( std::size_t k = 0; k < cols.size(); ++k )
        {
            auto [ptr, ec] = std::to_chars( buf, buf + sizeof( buf ), vals[k] );
            out += std::to_string( i + 1 );
            out += ' ';
            out += std::to_string( cols[k] + 1 );
            out += ' ';
            out.append( buf, ptr );
            out += '\n';
        }
    }
    return out;
}

void store_matrix_market( const SparseMatrix& a, const std::filesystem::path& path )
{
    std::ofstream out( path, std::ios::binary );
    if ( !out )
        throw FormatError( "cannot write matrix market file '" + path.string() + "'", 0 );
    out << format_matrix_market( a );
}

} // namespace hbgs
