#include "wavewhittle/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <utility>

namespace ww::quad {

namespace {

// QUADPACK qk15 abscissae/weights
constexpr double xgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                           0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                           0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                           0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double wgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                           0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                           0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                           0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                          0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b;
  std::vector<double> val, err;
};

}  // namespace

void gk15_panel(const VecFn& f, int m, double a, double b, double* value, double* error,
                std::vector<double>& scratch) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  scratch.assign(3 * m, 0.0);
  double* fx = scratch.data();
  double* kr = fx + m;
  double* ga = kr + m;
  f(c, fx);
  for (int i = 0; i < m; ++i) {
    kr[i] = wgk[7] * fx[i];
    ga[i] = wg[3] * fx[i];
  }
  for (int j = 0; j < 7; ++j) {
    const double dx = h * xgk[j];
    for (double x : {c - dx, c + dx}) {
      f(x, fx);
      for (int i = 0; i < m; ++i) {
        kr[i] += wgk[j] * fx[i];
        if (j % 2 == 1) ga[i] += wg[j / 2] * fx[i];
      }
    }
  }
  for (int i = 0; i < m; ++i) {
    value[i] = kr[i] * h;
    error[i] = std::abs((kr[i] - ga[i]) * h);
  }
}

Result gauss_kronrod(const VecFn& f, int m, const std::vector<double>& breaks,
                     const std::vector<double>& abs_tol, double rel_tol, int max_panels) {
  std::vector<Panel> panels;
  std::vector<double> scratch;
  Result res;
  res.value.assign(m, 0.0);
  res.error.assign(m, 0.0);
  auto eval = [&](double a, double b) {
    Panel p{a, b, std::vector<double>(m), std::vector<double>(m)};
    gk15_panel(f, m, a, b, p.val.data(), p.err.data(), scratch);
    res.evaluations += 15;
    for (int i = 0; i < m; ++i) {
      res.value[i] += p.val[i];
      res.error[i] += p.err[i];
    }
    return p;
  };
  auto remove = [&](const Panel& p) {
    for (int i = 0; i < m; ++i) {
      res.value[i] -= p.val[i];
      res.error[i] -= p.err[i];
    }
  };
  for (size_t i = 0; i + 1 < breaks.size(); ++i) panels.push_back(eval(breaks[i], breaks[i + 1]));

  std::vector<double> target(m);
  auto refresh_targets = [&] {
    bool ok = true;
    for (int i = 0; i < m; ++i) {
      target[i] = std::max(abs_tol[i], rel_tol * std::abs(res.value[i]));
      if (!(res.error[i] <= target[i])) ok = false;
    }
    return ok;
  };
  auto score = [&](const Panel& p) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s = std::max(s, p.err[i] / target[i]);
    return s;
  };
  using Entry = std::pair<double, size_t>;
  std::priority_queue<Entry> heap;
  auto rebuild = [&] {
    heap = {};
    for (size_t k = 0; k < panels.size(); ++k) heap.push({score(panels[k]), k});
  };

  int since_rebuild = 0;
  bool ok = refresh_targets();
  if (!ok) rebuild();
  while (!ok && static_cast<int>(panels.size()) < max_panels) {
    if (++since_rebuild >= 64) {
      rebuild();
      since_rebuild = 0;
    }
    const size_t worst = heap.top().second;
    heap.pop();
    const double a = panels[worst].a, b = panels[worst].b, mid = 0.5 * (a + b);
    if (!(mid > a && mid < b)) break;
    remove(panels[worst]);
    panels[worst] = eval(a, mid);
    panels.push_back(eval(mid, b));
    ok = refresh_targets();
    heap.push({score(panels[worst]), worst});
    heap.push({score(panels.back()), panels.size() - 1});
  }

  // exact re-summation
  std::fill(res.value.begin(), res.value.end(), 0.0);
  std::fill(res.error.begin(), res.error.end(), 0.0);
  for (const auto& p : panels)
    for (int i = 0; i < m; ++i) {
      res.value[i] += p.val[i];
      res.error[i] += p.err[i];
    }
  res.converged = refresh_targets();
  res.panels = static_cast<int>(panels.size());
  return res;
}

}  // namespace ww::quad
