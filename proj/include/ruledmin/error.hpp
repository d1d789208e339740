#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ruledmin {

enum class ErrorKind {
  invalid_argument,
  unsupported_order,
  domain_error,
  off_sphere,
  degenerate_basis,
  degenerate_metric,
  not_minimal,
  degenerate_first_normal,
  rank_deficient,
  singular_point,
  oracle_unavailable,
  slice_required,
  isotropy_required,
  integration_diverged,
  precondition_violation,
  invalid_parameters,
  unknown_surface,
  flag_mismatch,
};

std::string_view to_string(ErrorKind kind);

/// Error raised by every geometric operation; `kind()` carries the category.
class GeometryError : public std::runtime_error {
 public:
  GeometryError(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ruledmin
