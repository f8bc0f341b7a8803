// Manufactured solutions for the elliptic solver, shared by the unit and
// acceptance tests.
#ifndef LPEKI_TESTS_DARCY_MMS_H_
#define LPEKI_TESTS_DARCY_MMS_H_

#include <cmath>
#include <numbers>

#include "lpeki/darcy.h"

namespace lpeki::testing {

// p = 100 + x2^2 with k = 1: f = -2, zero side fluxes, top inflow k dp/dx2 = 2.
inline EllipticBvp quadratic_bvp() {
  EllipticBvp bvp;
  bvp.source = [](double, double) { return -2.0; };
  bvp.bottom_value = [](double) { return 100.0; };
  bvp.left_inflow = [](double) { return 0.0; };
  bvp.right_inflow = [](double) { return 0.0; };
  bvp.top_inflow = [](double) { return 2.0; };
  return bvp;
}

inline double quadratic_exact(double, double x2) { return 100.0 + x2 * x2; }

// k = exp(x1/2), p = 100 + (1 + x1^2) sin(pi x2 / 2). Variable k and a
// non-polynomial profile so the discretization error is visible.
inline double smooth_k(double x1, double) { return std::exp(0.5 * x1); }

inline double smooth_exact(double x1, double x2) {
  return 100.0 + (1.0 + x1 * x1) * std::sin(0.5 * std::numbers::pi * x2);
}

inline EllipticBvp smooth_bvp() {
  const double pi = std::numbers::pi;
  EllipticBvp bvp;
  // -(k p_1)_1 - k p_22 with p_1 = 2 x1 s, p_22 = -(pi^2/4)(1 + x1^2) s.
  bvp.source = [pi](double x1, double x2) {
    const double s = std::sin(0.5 * pi * x2);
    return smooth_k(x1, x2) * s * (-x1 - 2.0 + 0.25 * pi * pi * (1.0 + x1 * x1));
  };
  bvp.bottom_value = [](double) { return 100.0; };
  bvp.left_inflow = [](double) { return 0.0; };  // p_1 = 0 at x1 = 0
  bvp.right_inflow = [pi](double x2) { return smooth_k(1.0, x2) * 2.0 * std::sin(0.5 * pi * x2); };
  bvp.top_inflow = [](double) { return 0.0; };  // cos(pi/2) = 0
  return bvp;
}

template <class KFn>
NodalField nodal_field(int n, KFn fn) {
  NodalField f = NodalField::constant(n, 0.0);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) f.at(i, j) = fn(f.coord(i), f.coord(j));
  return f;
}

template <class Exact>
double max_nodal_error(const PressureField& p, Exact exact) {
  double err = 0.0;
  for (int j = 0; j <= p.mesh_n; ++j)
    for (int i = 0; i <= p.mesh_n; ++i)
      err = std::max(err, std::fabs(p.at(i, j) - exact(p.coord(i), p.coord(j))));
  return err;
}

inline double smooth_error(int n) {
  PressureField p = darcy_solve(nodal_field(n, smooth_k), smooth_bvp());
  return max_nodal_error(p, smooth_exact);
}

}  // namespace lpeki::testing

#endif  // LPEKI_TESTS_DARCY_MMS_H_
