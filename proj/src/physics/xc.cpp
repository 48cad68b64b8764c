#include "ksfem/physics/xc.hpp"

#include "ksfem/physics/pz81_constants.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ksfem::physics {

double dirac_constant() { return 0.75 * std::cbrt(3.0 / std::numbers::pi); }

namespace {

void require_nonnegative(double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("exchange-correlation: density must be nonnegative");
}

double wigner_seitz_radius(double t) { return std::cbrt(3.0 / (4.0 * std::numbers::pi * t)); }

struct CorrelationDerivs {
  double e, d1, d2;  // ε_c and its first two r_s derivatives
};

CorrelationDerivs pz81_eps(double rs) {
  using namespace pz81;
  if (rs >= 1.0) {
    const double sq = std::sqrt(rs);
    const double den = 1.0 + kBeta1 * sq + kBeta2 * rs;
    const double dden = kBeta1 / (2.0 * sq) + kBeta2;
    const double ddden = -kBeta1 / (4.0 * rs * sq);
    return {kGamma / den, -kGamma * dden / (den * den), kGamma * (2.0 * dden * dden - den * ddden) / (den * den * den)};
  }
  const double lr = std::log(rs);
  return {kA * lr + kB + kC * rs * lr + kD * rs, kA / rs + kC * (lr + 1.0) + kD, -kA / (rs * rs) + kC / rs};
}

} // namespace

double pz81_energy(double t) {
  require_nonnegative(t);
  if (t == 0.0) return 0.0;
  return t * pz81_eps(wigner_seitz_radius(t)).e;
}

double pz81_potential(double t) {
  require_nonnegative(t);
  if (t == 0.0) return 0.0;
  const double rs = wigner_seitz_radius(t);
  const auto c = pz81_eps(rs);
  return c.e - rs / 3.0 * c.d1;
}

double pz81_second(double t) {
  require_nonnegative(t);
  t = std::max(t, kRhoFloor);
  const double rs = wigner_seitz_radius(t);
  const auto c = pz81_eps(rs);
  return -rs / (3.0 * t) * (2.0 / 3.0 * c.d1 - rs / 3.0 * c.d2);
}

XcFunctional XcFunctional::xalpha(double alpha_x) {
  if (!(alpha_x > 0.0) || !std::isfinite(alpha_x)) throw std::invalid_argument("xalpha: alpha must be positive");
  return XcFunctional(XcKind::xalpha, alpha_x);
}

XcFunctional XcFunctional::from_name(const std::string &name, double alpha_x) {
  if (name == "none") return none();
  if (name == "dirac") return dirac();
  if (name == "xalpha") return xalpha(alpha_x);
  if (name == "lda_pz81") return lda_pz81();
  throw std::invalid_argument("unknown exchange-correlation functional '" + name + "'");
}

std::string XcFunctional::name() const {
  switch (kind_) {
  case XcKind::none: return "none";
  case XcKind::dirac_exchange: return "dirac";
  case XcKind::xalpha: return "xalpha";
  case XcKind::dirac_plus_pz81: return "lda_pz81";
  }
  return "?";
}

double XcFunctional::exchange_scale() const noexcept {
  switch (kind_) {
  case XcKind::none: return 0.0;
  case XcKind::xalpha: return 1.5 * alpha_x_;
  default: return 1.0;
  }
}

double XcFunctional::energy_density(double t) const {
  require_nonnegative(t);
  double e = -exchange_scale() * dirac_constant() * t * std::cbrt(t);
  if (kind_ == XcKind::dirac_plus_pz81) e += pz81_energy(t);
  return e;
}

double XcFunctional::potential(double t) const {
  require_nonnegative(t);
  double v = -exchange_scale() * (4.0 / 3.0) * dirac_constant() * std::cbrt(t);
  if (kind_ == XcKind::dirac_plus_pz81) v += pz81_potential(t);
  return v;
}

double XcFunctional::second(double t) const {
  require_nonnegative(t);
  t = std::max(t, kRhoFloor);
  double v = -exchange_scale() * (4.0 / 9.0) * dirac_constant() / std::cbrt(t * t);
  if (kind_ == XcKind::dirac_plus_pz81) v += pz81_second(t);
  return v;
}

double XcFunctional::third(double t) const {
  require_nonnegative(t);
  t = std::max(t, kRhoFloor);
  double v = exchange_scale() * (8.0 / 27.0) * dirac_constant() / (t * std::cbrt(t * t));
  if (kind_ == XcKind::dirac_plus_pz81) {
    // five-point central difference of the analytic correlation ℰ″
    const double h = 1e-3 * t;
    v += (pz81_second(t - 2 * h) - 8.0 * pz81_second(t - h) + 8.0 * pz81_second(t + h) - pz81_second(t + 2 * h)) /
         (12.0 * h);
  }
  return v;
}

double xc_energy_density(const XcFunctional &f, double t) { return f.energy_density(t); }
double xc_potential(const XcFunctional &f, double t) { return f.potential(t); }

} // namespace ksfem::physics
