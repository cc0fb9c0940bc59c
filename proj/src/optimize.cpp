#include "mlsis/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mlsis/errors.hpp"

namespace mlsis {

ScalarMinimum minimize_with_audit(const std::function<double(double)>& f, double lo, double hi,
                                  double tol, int grid_points, bool prefer_lo) {
  if (!(hi >= lo) || !(tol > 0.0) || grid_points < 2) {
    throw InvalidArgument("minimize_with_audit: bad interval or tolerance");
  }
  auto better = [prefer_lo](const ScalarMinimum& a, const ScalarMinimum& b) {
    if (a.value != b.value) return a.value < b.value;
    return prefer_lo ? a.x < b.x : a.x > b.x;
  };

  // Grid audit first: it brackets the global minimizer even where f is flat
  // over most of the interval, which would mislead a bare golden section.
  std::vector<double> xs(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i) {
    xs[static_cast<std::size_t>(i)] =
        i == grid_points - 1
            ? hi
            : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
  }
  std::size_t best_i = 0;
  ScalarMinimum best{xs[0], f(xs[0])};
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const ScalarMinimum cand{xs[i], f(xs[i])};
    if (better(cand, best)) {
      best = cand;
      best_i = i;
    }
  }

  double a = xs[best_i == 0 ? 0 : best_i - 1];
  double b = xs[std::min(best_i + 1, xs.size() - 1)];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2 || (f1 == f2 && prefer_lo)) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  const ScalarMinimum golden = (f1 < f2 || (f1 == f2 && prefer_lo)) ? ScalarMinimum{x1, f1}
                                                                     : ScalarMinimum{x2, f2};
  return better(golden, best) ? golden : best;
}

}  // namespace mlsis
