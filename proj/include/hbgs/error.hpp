#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hbgs {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error
{
  public:
    using Error::Error;
};

/// A factorization met a zero (or numerically vanishing) pivot.
class SingularPivotError : public Error
{
  public:
    SingularPivotError( const std::string& what, std::size_t row )
    : Error( what )
    , row_( row )
    {}

    std::size_t row() const noexcept { return row_; }

  private:
    std::size_t row_;
};

/// ILU(0) pivot failure inside one Schwarz subdomain.
class SubdomainFactorError : public SingularPivotError
{
  public:
    SubdomainFactorError( const std::string& what, std::size_t subdomain, std::size_t row )
    : SingularPivotError( what, row )
    , subdomain_( subdomain )
    {}

    std::size_t subdomain() const noexcept { return subdomain_; }

  private:
    std::size_t subdomain_;
};

/// Malformed input file. `line()` is 1-based; 0 means "no specific line".
class FormatError : public Error
{
  public:
    FormatError( const std::string& what, std::size_t line )
    : Error( what )
    , line_( line )
    {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// Invalid configuration or parameter value.
class ConfigError : public Error
{
  public:
    using Error::Error;
};

/// A setup phase (hierarchy construction, eigenvalue estimation, aggregation) could not proceed.
class SetupError : public Error
{
  public:
    using Error::Error;
};

} // namespace hbgs
