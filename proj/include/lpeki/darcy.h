#ifndef LPEKI_DARCY_H_
#define LPEKI_DARCY_H_

#include <cstdint>
#include <functional>
#include <memory>

#include <Eigen/Dense>

#include "lpeki/forward_model.h"

namespace lpeki {

/// Scalar field sampled at the (mesh_n + 1)^2 vertices of a uniform grid on
/// [0, 1]^2. Vertex (i, j) sits at (i/mesh_n, j/mesh_n) and is stored at
/// j * (mesh_n + 1) + i, i.e. x1 runs fastest.
struct NodalField {
  int mesh_n = 0;
  Eigen::VectorXd values;

  NodalField() = default;
  NodalField(int n, Eigen::VectorXd v);

  static NodalField constant(int n, double value);

  int nodes_per_side() const { return mesh_n + 1; }
  double at(int i, int j) const { return values(static_cast<Eigen::Index>(j) * (mesh_n + 1) + i); }
  double& at(int i, int j) { return values(static_cast<Eigen::Index>(j) * (mesh_n + 1) + i); }
  double coord(int i) const { return static_cast<double>(i) / mesh_n; }
};

/// Nodal pressure including the Dirichlet row at x2 = 0.
using PressureField = NodalField;

/// -div(k grad p) = f on (0, 1)^2 with
///   p = bottom_value(x1)             on x2 = 0,
///   k grad p . n = inflow(s)          on the other three edges,
/// where n is the outward normal, so `left_inflow` is -k dp/dx1 at x1 = 0,
/// `right_inflow` is k dp/dx1 at x1 = 1 and `top_inflow` is k dp/dx2 at
/// x2 = 1.
struct EllipticBvp {
  std::function<double(double, double)> source;
  std::function<double(double)> bottom_value;
  std::function<double(double)> left_inflow;   // argument x2
  std::function<double(double)> right_inflow;  // argument x2
  std::function<double(double)> top_inflow;    // argument x1
};

/// Reservoir configuration: p = 100 at the bottom, inflow 500 on the left,
/// no flow on the right and top, source 0 / 137 / 274 by x2 band.
EllipticBvp darcy_reference_bvp();

/// Piecewise-constant source of the reference configuration; bands are
/// [0, 4/6], (4/6, 5/6], (5/6, 1] in x2.
double darcy_reference_source(double x1, double x2);

/// log k = sum_{i,j < basis_order} u[i * basis_order + j] cos(i pi x1) cos(j pi x2),
/// evaluated at every vertex. Throws OverflowError when |log k| > 700.
NodalField darcy_synthesize_logk(const Eigen::VectorXd& u, int mesh_n, int basis_order = 20);

/// Vertex-centred finite-volume (5-point) discretization with harmonic
/// face averages of k, Dirichlet elimination at x2 = 0 and flux data on the
/// other edges. Source and boundary fluxes are integrated over each control
/// volume with 2-point Gauss rules. The SPD system is solved by sparse
/// Cholesky; a relative residual above 1e-10 raises NumericalError.
PressureField darcy_solve(const NodalField& k, const EllipticBvp& bvp);

/// Bilinear samples at ((a / (per_side + 1), b / (per_side + 1))), a, b = 1..per_side,
/// ordered with x1 fastest.
Eigen::VectorXd darcy_observe(const PressureField& pressure, int per_side = 15);

struct DarcyOptions {
  int basis_order = 20;
  int mesh_n = 60;
  int obs_per_side = 15;
  double noise_var = 1e-6;
  int n_nonzero = 6;
  double min_magnitude = 0.05;
};

/// u (cosine coefficients of log k) -> pressure at the observation grid.
class DarcyModel final : public ForwardModel {
 public:
  explicit DarcyModel(DarcyOptions options = {});

  Eigen::Index state_dim() const override {
    return static_cast<Eigen::Index>(options_.basis_order) * options_.basis_order;
  }
  Eigen::Index obs_dim() const override {
    return static_cast<Eigen::Index>(options_.obs_per_side) * options_.obs_per_side;
  }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& u) const override;
  const Eigen::MatrixXd& noise_cov() const override { return noise_cov_; }

  const DarcyOptions& options() const { return options_; }
  PressureField pressure(const Eigen::VectorXd& u) const;

 private:
  DarcyOptions options_;
  EllipticBvp bvp_;
  Eigen::MatrixXd noise_cov_;
};

struct DarcyProblem {
  std::uint64_t seed = 0;
  DarcyOptions options;
  Eigen::VectorXd u_true;
  Eigen::VectorXd y;

  std::shared_ptr<const DarcyModel> model() const;
};

/// Seeded truth with options.n_nonzero entries at uniform positions and
/// N(0, 1) magnitudes pushed out to at least min_magnitude; y = G(u_true)
/// plus N(0, noise_var) noise.
DarcyProblem darcy_generate(std::uint64_t seed, const DarcyOptions& options = {});

}  // namespace lpeki

#endif  // LPEKI_DARCY_H_
