#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ruledmin/config.hpp"
#include "ruledmin/surface_model.hpp"

namespace ruledmin {

struct SurfaceFlags {
  bool minimal = false;
  bool substantial = false;
  bool one_isotropic = false;
  bool pseudoholomorphic = false;
  bool regular = false;
  bool flat = false;

  bool operator==(const SurfaceFlags&) const = default;
};

/// Flags measured on a seeded sample plus the residuals behind each verdict.
struct FlagVerification {
  SurfaceFlags computed;
  std::map<std::string, double> residuals;
  std::vector<std::string> mismatches;  // declared != computed
};

struct CatalogEntry {
  std::string name;
  SurfaceModel model;
  SurfaceFlags declared;
  std::string provenance;
  /// Controls are shipped to fail some checks on purpose.
  bool control = false;
  FlagVerification verification;
};

/// Measure every flag of `model` on `samples` seeded points.
FlagVerification verify_flags(const SurfaceModel& model, const SurfaceFlags& declared,
                              std::size_t samples = 24, std::uint64_t seed = 1,
                              const Tolerances& tol = default_tolerances());

/// (1/sqrt 3)(e^{iu}, e^{iv}, e^{-i(u+v)}) in S^5, flat and 1-isotropic.
CatalogEntry equilateral_torus();

/// sum_j r_j e^{i <w_j, (u,v)>} packed to R^6.
///
/// Flags are measured rather than declared. Throws invalid-parameters when
/// the radii are not a unit vector and not-minimal when the exponents fail
/// w_j^T M^{-1} w_j = 2 with M = sum_j r_j^2 w_j w_j^T.
CatalogEntry exponential_torus(const std::array<double, 3>& r,
                               const std::array<std::array<double, 2>, 3>& w);

/// Product torus in a totally geodesic S^3; first normal space of rank one.
CatalogEntry clifford_control();

/// Minimal 2-sphere of constant curvature 2/(k(k+1)) in S^{2k} built from an
/// orthonormal basis of degree-k spherical harmonics. Degree 3 gives the
/// pseudoholomorphic sphere in S^6 with K = 1/6.
CatalogEntry harmonic_sphere(int degree);
inline CatalogEntry boruvka_sphere() { return harmonic_sphere(3); }

/// Totally geodesic 2-sphere inside S^{n+2} (only the first three coordinates move).
SurfaceModel great_sphere_model(int ambient_dim = 6);

/// Catalog lookup by name; throws unknown-surface. With `verify` set, a
/// declared flag that fails re-verification throws flag-mismatch.
CatalogEntry load_entry(const std::string& name, bool verify = true);
std::vector<std::string> catalog_names();

}  // namespace ruledmin
