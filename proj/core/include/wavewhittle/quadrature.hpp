#pragma once

#include <functional>
#include <vector>

namespace ww::quad {

// f(x, out) fills out[0..m)
using VecFn = std::function<void(double, double*)>;

struct Result {
  std::vector<double> value;
  std::vector<double> error;
  int panels = 0;
  long evaluations = 0;
  bool converged = false;
};

// Globally adaptive G7K15 for vector integrands. Starts from the partition given by
// `breaks` (sorted, at least two points) and bisects the panel with the largest
// normalized error until every component satisfies err <= max(abs_tol[i], rel_tol*|value|).
Result gauss_kronrod(const VecFn& f, int m, const std::vector<double>& breaks,
                     const std::vector<double>& abs_tol, double rel_tol, int max_panels = 4000);

// Single fixed G7K15 panel (value and |K - G| error).
void gk15_panel(const VecFn& f, int m, double a, double b, double* value, double* error,
                std::vector<double>& scratch);

}  // namespace ww::quad
