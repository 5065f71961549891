#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hbgs {

struct Triplet
{
    std::size_t row;
    std::size_t col;
    double      value;
};

/// Compressed sparse row matrix in canonical form: within each row the column
/// indices are strictly increasing. Explicitly stored zeros are legal and are
/// never dropped implicitly, so sparsity patterns are a deterministic function
/// of the inputs.
///
/// Instances are immutable after construction.
class SparseMatrix
{
  public:
    /// Empty 0x0 matrix.
    SparseMatrix() = default;

    /// Adopt CSR arrays. Throws DimensionError if the arrays violate the
    /// canonical-form invariants.
    SparseMatrix( std::size_t                nrows,
                  std::size_t                ncols,
                  std::vector< std::size_t > row_offsets,
                  std::vector< std::size_t > col_indices,
                  std::vector< double >      values );

    /// Build from unordered triplets; duplicates are summed.
    static SparseMatrix from_triplets( std::size_t nrows, std::size_t ncols, std::vector< Triplet > entries );

    static SparseMatrix identity( std::size_t n );
    static SparseMatrix zero( std::size_t nrows, std::size_t ncols );
    static SparseMatrix diagonal( std::span< const double > d );

    /// Row-major dense input; every entry (including zeros) is stored.
    static SparseMatrix from_dense( std::size_t nrows, std::size_t ncols, std::span< const double > row_major );

    std::size_t rows() const noexcept { return nrows_; }
    std::size_t cols() const noexcept { return ncols_; }
    std::size_t nnz() const noexcept { return values_.size(); }
    bool        square() const noexcept { return nrows_ == ncols_; }

    std::span< const std::size_t > row_offsets() const noexcept { return row_offsets_; }
    std::span< const std::size_t > col_indices() const noexcept { return col_indices_; }
    std::span< const double >      values() const noexcept { return values_; }

    std::span< const std::size_t > row_cols( std::size_t i ) const noexcept
    {
        return { col_indices_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i] };
    }
    std::span< const double > row_values( std::size_t i ) const noexcept
    {
        return { values_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i] };
    }

    /// Entry (i, j), zero when not stored.
    double at( std::size_t i, std::size_t j ) const;

    /// Position of (i, j) in the value array, or npos.
    std::size_t find( std::size_t i, std::size_t j ) const noexcept;

    std::vector< double > diagonal() const;
    SparseMatrix          transpose() const;
    std::vector< double > to_dense() const;

    /// y = A x. Throws DimensionError on mismatched lengths.
    void                  multiply( std::span< const double > x, std::span< double > y ) const;
    std::vector< double > multiply( std::span< const double > x ) const;

    /// Copy with every value multiplied by `alpha`.
    SparseMatrix scaled( double alpha ) const;

    bool operator==( const SparseMatrix& other ) const = default;

    static constexpr std::size_t npos = static_cast< std::size_t >( -1 );

  private:
    std::size_t                nrows_ = 0;
    std::size_t                ncols_ = 0;
    std::vector< std::size_t > row_offsets_{ 0 };
    std::vector< std::size_t > col_indices_;
    std::vector< double >      values_;
};

/// y = A x.
std::vector< double > spmv( const SparseMatrix& a, std::span< const double > x );

/// Residual r = b - A x.
std::vector< double > residual( const SparseMatrix& a, std::span< const double > x, std::span< const double > b );

/// C = A B. The pattern of C is the structural product; cancellation zeros are kept.
SparseMatrix multiply( const SparseMatrix& a, const SparseMatrix& b );

/// Galerkin product R A P.
SparseMatrix triple_product( const SparseMatrix& r, const SparseMatrix& a, const SparseMatrix& p );

/// C = alpha A + beta B over the union pattern.
SparseMatrix add( double alpha, const SparseMatrix& a, double beta, const SparseMatrix& b );

/// Rows `row_set` and columns `col_set` of A (both sorted ascending), renumbered densely.
SparseMatrix extract_submatrix( const SparseMatrix& a, std::span< const std::size_t > row_set, std::span< const std::size_t > col_set );

/// True if the matrix satisfies every canonical-form invariant.
bool is_canonical( std::size_t                    nrows,
                   std::size_t                    ncols,
                   std::span< const std::size_t > row_offsets,
                   std::span< const std::size_t > col_indices,
                   std::size_t                    nvalues );

/// Dense LU with partial pivoting; stands in for a sparse direct coarse solver.
class DenseFactorization
{
  public:
    /// Default coarse-size cap accepted by `factor`.
    static constexpr std::size_t default_cap = 6000;

    /// Factor a square matrix. Throws DimensionError if it is not square or
    /// exceeds `cap`, SingularPivotError naming the pivot row on an exactly
    /// zero pivot.
    static DenseFactorization factor( const SparseMatrix& a, std::size_t cap = default_cap );
    static DenseFactorization factor_dense( std::size_t n, std::vector< double > row_major );

    std::size_t dimension() const noexcept { return n_; }

    std::vector< double > solve( std::span< const double > b ) const;
    void                  solve_in_place( std::span< double > b ) const;

    std::span< const std::size_t > pivot_permutation() const noexcept { return perm_; }

  private:
    std::size_t                n_ = 0;
    std::vector< double >      lu_;
    std::vector< std::size_t > perm_;
};

/// Convenience: factor and solve once.
std::vector< double > dense_factor_solve( const SparseMatrix& a, std::span< const double > b );

/// Matrix Market coordinate/real reader. Accepts `general` and `symmetric`;
/// symmetric inputs are expanded to full storage. Throws FormatError with the
/// 1-based line number on malformed input, out-of-range or duplicate entries.
SparseMatrix load_matrix_market( const std::filesystem::path& path );
SparseMatrix parse_matrix_market( std::string_view text );

/// Writes `general` coordinate format with shortest round-trip decimal values.
void        store_matrix_market( const SparseMatrix& a, const std::filesystem::path& path );
std::string format_matrix_market( const SparseMatrix& a );

} // namespace hbgs
