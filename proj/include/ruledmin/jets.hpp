#pragma once

#include <vector>

#include "ruledmin/config.hpp"
#include "ruledmin/surface_model.hpp"
#include "ruledmin/types.hpp"

namespace ruledmin {

/// Exact partials up to `order` (at most 4).
JetTable analytic_jet(const SurfaceModel& surface, DomainPoint point, int order);

/// Central-difference partials with one Richardson step.
///
/// Each partial d^{i+j} is approximated by tensor products of second-order
/// central stencils of half-width 2*step at spacings step and step/2 and
/// then combined as (4 D(step/2) - D(step)) / 3. Without the extrapolation
/// the error is O(step^2) per derivative order; with it, O(step^4) plus a
/// roundoff term of size eps / step^{i+j}.
JetTable fd_jet(const SurfaceModel& surface, DomainPoint point, int order, double step);

/// v minus its orthogonal projection onto span(basis).
AmbientVector project_orthogonal(const AmbientVector& v, const std::vector<AmbientVector>& basis,
                                 double tol = default_tolerances().lin);

}  // namespace ruledmin
