#include "lpeki/darcy.h"

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "lpeki/errors.h"
#include "lpeki/random.h"

namespace lpeki {

namespace {

constexpr double kMaxLogK = 700.0;

// Two-point Gauss nodes on [-1, 1] are +-1/sqrt(3) with unit weights.
const double kGaussOffset = 1.0 / std::sqrt(3.0);

double gauss_line(const std::function<double(double)>& g, double a, double b) {
  if (!g || b <= a) return 0.0;
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  return half * (g(mid - half * kGaussOffset) + g(mid + half * kGaussOffset));
}

double gauss_rect(const std::function<double(double, double)>& f, double a0, double a1,
                  double b0, double b1) {
  if (!f) return 0.0;
  const double am = 0.5 * (a0 + a1), ah = 0.5 * (a1 - a0);
  const double bm = 0.5 * (b0 + b1), bh = 0.5 * (b1 - b0);
  double sum = 0.0;
  for (double sa : {-kGaussOffset, kGaussOffset}) {
    for (double sb : {-kGaussOffset, kGaussOffset}) sum += f(am + ah * sa, bm + bh * sb);
  }
  return ah * bh * sum;
}

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

}  // namespace

NodalField::NodalField(int n, Eigen::VectorXd v) : mesh_n(n), values(std::move(v)) {
  if (n < 1) throw InvalidInput("NodalField: mesh_n must be positive");
  const Eigen::Index expected = static_cast<Eigen::Index>(n + 1) * (n + 1);
  if (values.size() != expected) {
    throw InvalidInput("NodalField: expected " + std::to_string(expected) + " values, got " +
                       std::to_string(values.size()));
  }
}

NodalField NodalField::constant(int n, double value) {
  return NodalField(n, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n + 1) * (n + 1), value));
}

double darcy_reference_source(double /*x1*/, double x2) {
  if (x2 <= 4.0 / 6.0) return 0.0;
  if (x2 <= 5.0 / 6.0) return 137.0;
  return 274.0;
}

EllipticBvp darcy_reference_bvp() {
  EllipticBvp bvp;
  bvp.source = darcy_reference_source;
  bvp.bottom_value = [](double) { return 100.0; };
  bvp.left_inflow = [](double) { return 500.0; };
  bvp.right_inflow = [](double) { return 0.0; };
  bvp.top_inflow = [](double) { return 0.0; };
  return bvp;
}

NodalField darcy_synthesize_logk(const Eigen::VectorXd& u, int mesh_n, int basis_order) {
  if (mesh_n < 1 || basis_order < 1) throw InvalidInput("darcy_synthesize_logk: bad sizes");
  const Eigen::Index basis = basis_order;
  if (u.size() != basis * basis) {
    throw InvalidInput("darcy_synthesize_logk: expected " + std::to_string(basis * basis) +
                       " coefficients, got " + std::to_string(u.size()));
  }
  if (!u.allFinite()) throw InvalidInput("darcy_synthesize_logk: non-finite coefficient");

  const Eigen::Index nodes = mesh_n + 1;
  Eigen::MatrixXd cosines(nodes, basis);
  for (Eigen::Index a = 0; a < nodes; ++a) {
    const double x = static_cast<double>(a) / mesh_n;
    for (Eigen::Index i = 0; i < basis; ++i) {
      cosines(a, i) = std::cos(static_cast<double>(i) * std::numbers::pi * x);
    }
  }
  // Row i of the coefficient block holds u_{i0}..u_{i,B-1}.
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      coeffs(u.data(), basis, basis);
  // Entry (a, b) is log k at x1 = a/n, x2 = b/n; column-major storage gives x1 fastest.
  const Eigen::MatrixXd logk = cosines * coeffs * cosines.transpose();

  NodalField field(mesh_n, Eigen::Map<const Eigen::VectorXd>(logk.data(), logk.size()));
  Eigen::Index where = 0;
  const double peak = field.values.cwiseAbs().maxCoeff(&where);
  if (peak > kMaxLogK) {
    std::ostringstream msg;
    msg << "darcy_synthesize_logk: |log k| = " << peak << " exceeds " << kMaxLogK
        << " at node " << where;
    throw OverflowError(msg.str(), static_cast<long>(where));
  }
  return field;
}

PressureField darcy_solve(const NodalField& k, const EllipticBvp& bvp) {
  const int n = k.mesh_n;
  if (n < 1) throw InvalidInput("darcy_solve: empty mesh");
  if (!(k.values.minCoeff() > 0.0) || !k.values.allFinite()) {
    throw InvalidInput("darcy_solve: permeability must be finite and strictly positive");
  }
  const double h = 1.0 / n;
  const int per_side = n + 1;
  const Eigen::Index unknowns = static_cast<Eigen::Index>(n) * per_side;
  auto index = [per_side](int i, int j) { return static_cast<Eigen::Index>(j - 1) * per_side + i; };

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(unknowns) * 5);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(unknowns);

  auto couple = [&](Eigen::Index a, Eigen::Index b, double c) {
    triplets.emplace_back(a, a, c);
    triplets.emplace_back(b, b, c);
    triplets.emplace_back(a, b, -c);
    triplets.emplace_back(b, a, -c);
  };

  for (int j = 1; j <= n; ++j) {
    const double x2 = j * h;
    const double b0 = x2 - 0.5 * h;
    const double b1 = std::min(1.0, x2 + 0.5 * h);
    for (int i = 0; i <= n; ++i) {
      const double x1 = i * h;
      const double a0 = std::max(0.0, x1 - 0.5 * h);
      const double a1 = std::min(1.0, x1 + 0.5 * h);
      const Eigen::Index row = index(i, j);

      rhs(row) += gauss_rect(bvp.source, a0, a1, b0, b1);
      if (i == 0) rhs(row) += gauss_line(bvp.left_inflow, b0, b1);
      if (i == n) rhs(row) += gauss_line(bvp.right_inflow, b0, b1);
      if (j == n) rhs(row) += gauss_line(bvp.top_inflow, a0, a1);

      if (i < n) {
        const double c = harmonic(k.at(i, j), k.at(i + 1, j)) * (b1 - b0) / h;
        couple(row, index(i + 1, j), c);
      }
      if (j < n) {
        const double c = harmonic(k.at(i, j), k.at(i, j + 1)) * (a1 - a0) / h;
        couple(row, index(i, j + 1), c);
      }
      if (j == 1) {
        const double c = harmonic(k.at(i, 1), k.at(i, 0)) * (a1 - a0) / h;
        triplets.emplace_back(row, row, c);
        rhs(row) += c * bvp.bottom_value(x1);
      }
    }
  }

  Eigen::SparseMatrix<double> system(unknowns, unknowns);
  system.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(system);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("darcy_solve: sparse Cholesky factorization failed");
  }
  Eigen::VectorXd interior = llt.solve(rhs);
  // High-contrast k leaves the factor-only solve just short of the tolerance;
  // a few refinement sweeps with the same factor recover it.
  const double scale = std::max(rhs.norm(), 1e-300);
  Eigen::VectorXd r = rhs - system * interior;
  for (int sweep = 0; sweep < 3 && r.norm() > 1e-12 * scale; ++sweep) {
    interior += llt.solve(r);
    r = rhs - system * interior;
  }
  const double residual = r.norm() / scale;
  if (!(residual <= 1e-10)) {
    std::ostringstream msg;
    msg << "darcy_solve: relative residual " << residual << " above 1e-10";
    throw NumericalError(msg.str());
  }

  PressureField pressure = NodalField::constant(n, 0.0);
  for (int i = 0; i <= n; ++i) pressure.at(i, 0) = bvp.bottom_value(i * h);
  pressure.values.tail(unknowns) = interior;
  return pressure;
}

Eigen::VectorXd darcy_observe(const PressureField& pressure, int per_side) {
  const int n = pressure.mesh_n;
  Eigen::VectorXd out(static_cast<Eigen::Index>(per_side) * per_side);
  auto locate = [n](double x, int& cell, double& t) {
    cell = std::min(static_cast<int>(std::floor(x * n)), n - 1);
    t = x * n - cell;
  };
  for (int b = 1; b <= per_side; ++b) {
    const double x2 = static_cast<double>(b) / (per_side + 1);
    int cj = 0;
    double s = 0.0;
    locate(x2, cj, s);
    for (int a = 1; a <= per_side; ++a) {
      const double x1 = static_cast<double>(a) / (per_side + 1);
      int ci = 0;
      double t = 0.0;
      locate(x1, ci, t);
      out(static_cast<Eigen::Index>(b - 1) * per_side + (a - 1)) =
          (1 - t) * (1 - s) * pressure.at(ci, cj) + t * (1 - s) * pressure.at(ci + 1, cj) +
          (1 - t) * s * pressure.at(ci, cj + 1) + t * s * pressure.at(ci + 1, cj + 1);
    }
  }
  return out;
}

DarcyModel::DarcyModel(DarcyOptions options)
    : options_(options), bvp_(darcy_reference_bvp()) {
  if (options_.basis_order < 1 || options_.mesh_n < 2 || options_.obs_per_side < 1) {
    throw InvalidInput("DarcyModel: basis_order, mesh_n and obs_per_side must be positive");
  }
  if (!(options_.noise_var > 0.0)) throw InvalidInput("DarcyModel: noise_var must be positive");
  noise_cov_ = options_.noise_var * Eigen::MatrixXd::Identity(obs_dim(), obs_dim());
}

PressureField DarcyModel::pressure(const Eigen::VectorXd& u) const {
  NodalField field = darcy_synthesize_logk(u, options_.mesh_n, options_.basis_order);
  field.values = field.values.array().exp().matrix();
  return darcy_solve(field, bvp_);
}

Eigen::VectorXd DarcyModel::evaluate(const Eigen::VectorXd& u) const {
  return darcy_observe(pressure(u), options_.obs_per_side);
}

std::shared_ptr<const DarcyModel> DarcyProblem::model() const {
  return std::make_shared<DarcyModel>(options);
}

DarcyProblem darcy_generate(std::uint64_t seed, const DarcyOptions& options) {
  DarcyModel model(options);
  const Eigen::Index dim = model.state_dim();
  if (options.n_nonzero < 0 || options.n_nonzero > dim) {
    throw InvalidInput("darcy_generate: n_nonzero must lie in [0, basis_order^2]");
  }

  Rng rng(seed);
  DarcyProblem problem;
  problem.seed = seed;
  problem.options = options;
  problem.u_true = Eigen::VectorXd::Zero(dim);

  std::vector<Eigen::Index> pool(static_cast<std::size_t>(dim));
  std::iota(pool.begin(), pool.end(), Eigen::Index{0});
  for (int s = 0; s < options.n_nonzero; ++s) {
    const std::size_t pick = s + rng.index(pool.size() - static_cast<std::size_t>(s));
    std::swap(pool[static_cast<std::size_t>(s)], pool[pick]);
  }
  for (int s = 0; s < options.n_nonzero; ++s) {
    double magnitude = rng.normal();
    if (std::fabs(magnitude) < options.min_magnitude) {
      magnitude = magnitude < 0.0 ? -options.min_magnitude : options.min_magnitude;
    }
    problem.u_true(pool[static_cast<std::size_t>(s)]) = magnitude;
  }

  problem.y = model.evaluate(problem.u_true);
  const double noise_sd = std::sqrt(options.noise_var);
  for (Eigen::Index i = 0; i < problem.y.size(); ++i) problem.y(i) += noise_sd * rng.normal();
  return problem;
}

}  // namespace lpeki
