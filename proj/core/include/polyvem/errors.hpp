#pragma once

#include <stdexcept>
#include <string>

namespace polyvem {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  /// Short machine-readable category, e.g. "topology".
  [[nodiscard]] virtual const char* kind() const noexcept { return "error"; }
  /// True for failures of the numerics rather than of the input.
  [[nodiscard]] virtual bool numerical() const noexcept { return false; }
};

#define POLYVEM_DEFINE_ERROR(Name, Kind, Numerical)                            \
  class Name : public Error {                                                  \
  public:                                                                      \
    using Error::Error;                                                        \
    [[nodiscard]] const char* kind() const noexcept override { return Kind; }  \
    [[nodiscard]] bool numerical() const noexcept override { return Numerical; } \
  };

POLYVEM_DEFINE_ERROR(InvalidParameter, "invalid_parameter", false)
POLYVEM_DEFINE_ERROR(ParseError, "parse", false)
POLYVEM_DEFINE_ERROR(TopologyError, "topology", false)
POLYVEM_DEFINE_ERROR(GeometryError, "geometry", false)
POLYVEM_DEFINE_ERROR(DataError, "data", false)
POLYVEM_DEFINE_ERROR(DomainError, "domain", false)
POLYVEM_DEFINE_ERROR(UnsupportedError, "unsupported", false)
POLYVEM_DEFINE_ERROR(ConditioningError, "conditioning", true)
POLYVEM_DEFINE_ERROR(SingularSystemError, "singular_system", true)

#undef POLYVEM_DEFINE_ERROR

}  // namespace polyvem
