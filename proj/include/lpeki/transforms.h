#ifndef LPEKI_TRANSFORMS_H_
#define LPEKI_TRANSFORMS_H_

#include <Eigen/Dense>

namespace lpeki {

/// Exponent p of the lp penalty, 0 < p <= 2. p = 2 gives identity maps
/// (plain Tikhonov), p <= 1 is the sparsity regime.
///
/// Construction rejects any p for which |x|^(2/p) overflows a double for some
/// |x| within kWorkingRange, so a run fails at configuration time instead of
/// mid-iteration.
class PExponent {
 public:
  static constexpr double kWorkingRange = 1e6;

  explicit PExponent(double p);

  double value() const noexcept { return p_; }
  /// 2/p, the exponent of the l2 -> lp map.
  double inv_exponent() const noexcept { return inv_exponent_; }
  bool is_identity() const noexcept { return p_ == 2.0; }

 private:
  double p_;
  double inv_exponent_;
};

/// sgn(x) |x|^(p/2); maps lp coordinates to l2 coordinates. psi(0) = 0.
double psi(double x, const PExponent& p);

/// sgn(x) |x|^(2/p); inverse of psi. Throws OverflowError instead of
/// saturating to infinity.
double xi(double x, const PExponent& p);

/// Componentwise psi. Errors name the offending component.
Eigen::VectorXd psi_vec(const Eigen::Ref<const Eigen::VectorXd>& u, const PExponent& p);
/// Componentwise xi.
Eigen::VectorXd xi_vec(const Eigen::Ref<const Eigen::VectorXd>& v, const PExponent& p);

/// Standard normal CDF through erfc.
double std_normal_cdf(double x);

/// Gaussian-to-Laplace transform -sgn(v) log(1 - 2|phi(v) - 1/2|).
/// Evaluated as -sgn(v) log(erfc(|v|/sqrt 2)), which is the same quantity
/// without the cancellation in 1 - 2|phi - 1/2|.
double gl_reference(double v);

}  // namespace lpeki

#endif  // LPEKI_TRANSFORMS_H_
