#include "hbgs/kernels.hpp"

namespace hbgs::kernels::scalar {

double dot( std::span< const double > x, std::span< const double > y )
{
    double s = 0.0;
    for ( std::size_t i = 0; i < x.size(); ++i )
        s += x[i] * y[i];
    return s;
}

void axpy( double alpha, std::span< const double > x, std::span< double > y )
{
    for ( std::size_t i = 0; i < x.size(); ++i )
        y[i] += alpha * x[i];
}

void scale( double alpha, std::span< double > x )
{
    for ( double& v : x )
        v *= alpha;
}

void spmv( const CsrView& a, std::span< const double > x, std::span< double > y )
{
    for ( std::size_t i = 0; i < a.nrows; ++i )
    {
        double s = 0.0;
        for ( std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k )
            s += a.values[k] * x[a.col_indices[k]];
        y[i] = s;
    }
}

} // namespace hbgs::kernels::scalar
