#include "lpeki/transforms.h"

#include <cmath>
#include <limits>
#include <sstream>

#include "lpeki/errors.h"

namespace lpeki {

namespace {

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

void require_finite(double x, const char* where, long component = -1) {
  if (!std::isfinite(x)) {
    std::ostringstream msg;
    msg << where << ": non-finite input " << x;
    if (component >= 0) msg << " at component " << component;
    throw InvalidInput(msg.str());
  }
}

double xi_checked(double x, const PExponent& p, long component) {
  require_finite(x, "xi", component);
  if (p.is_identity()) return x;
  const double mag = std::pow(std::fabs(x), p.inv_exponent());
  if (!std::isfinite(mag)) {
    std::ostringstream msg;
    msg << "xi: |" << x << "|^" << p.inv_exponent() << " overflows";
    if (component >= 0) msg << " at component " << component;
    throw OverflowError(msg.str(), component);
  }
  return sgn(x) * mag;
}

double psi_checked(double x, const PExponent& p, long component) {
  require_finite(x, "psi", component);
  if (p.is_identity()) return x;
  return sgn(x) * std::pow(std::fabs(x), 0.5 * p.value());
}

}  // namespace

PExponent::PExponent(double p) : p_(p), inv_exponent_(2.0 / p) {
  if (!(p > 0.0 && p <= 2.0)) {
    std::ostringstream msg;
    msg << "PExponent: p must lie in (0, 2], got " << p;
    throw InvalidInput(msg.str());
  }
  const double log10_max = std::log10(std::numeric_limits<double>::max());
  if (std::log10(kWorkingRange) * inv_exponent_ > log10_max) {
    std::ostringstream msg;
    msg << "PExponent: p=" << p << " gives |x|^" << inv_exponent_
        << " overflow within the working range |x| <= " << kWorkingRange;
    throw OverflowError(msg.str());
  }
}

double psi(double x, const PExponent& p) { return psi_checked(x, p, -1); }

double xi(double x, const PExponent& p) { return xi_checked(x, p, -1); }

Eigen::VectorXd psi_vec(const Eigen::Ref<const Eigen::VectorXd>& u, const PExponent& p) {
  Eigen::VectorXd out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) out(i) = psi_checked(u(i), p, static_cast<long>(i));
  return out;
}

Eigen::VectorXd xi_vec(const Eigen::Ref<const Eigen::VectorXd>& v, const PExponent& p) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = xi_checked(v(i), p, static_cast<long>(i));
  return out;
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double gl_reference(double v) {
  require_finite(v, "gl_reference");
  if (v == 0.0) return 0.0;
  const double tail = std::erfc(std::fabs(v) / std::sqrt(2.0));
  if (tail <= 0.0) {
    std::ostringstream msg;
    msg << "gl_reference: log argument underflows to zero at v=" << v;
    throw OverflowError(msg.str());
  }
  return -sgn(v) * std::log(tail);
}

}  // namespace lpeki
