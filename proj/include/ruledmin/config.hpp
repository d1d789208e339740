#pragma once

namespace ruledmin {

/// Numerical thresholds shared by all modules. Every field is overridable from
/// the command line or a config file.
struct Tolerances {
  double jet = 1e-9;          // |g| = 1 for analytic jets
  double lin = 1e-8;          // linear independence / orthogonality
  double frame = 1e-8;        // frame orthonormality
  double minimality = 1e-7;   // |alpha(e1,e1) + alpha(e2,e2)|
  double rank = 1e-6;         // rank decisions (relative)
  double isotropy = 1e-6;     // |kappa - mu| <= isotropy * max(kappa, 1)
  double slice = 1e-10;       // s^2 + |t|^2 = 1
  double loop_closure = 1e-7; // frame mismatch around one integration cell
};

inline const Tolerances& default_tolerances() {
  static const Tolerances t{};
  return t;
}

}  // namespace ruledmin
