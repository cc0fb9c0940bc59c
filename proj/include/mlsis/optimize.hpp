#pragma once

#include <functional>

namespace mlsis {

struct ScalarMinimum {
  double x = 0.0;
  double value = 0.0;
};

/// Minimizes f on [lo, hi]: a scan of `grid_points` equispaced points
/// (both ends included) picks a bracket, golden-section search refines it to
/// width `tol`, and the better of the two results is returned. Ties go to
/// the preferred end (lo if prefer_lo).
ScalarMinimum minimize_with_audit(const std::function<double(double)>& f, double lo, double hi,
                                  double tol, int grid_points, bool prefer_lo);

}  // namespace mlsis
