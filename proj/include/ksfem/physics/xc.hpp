#pragma once

#include <string>

namespace ksfem::physics {

enum class XcKind { none, dirac_exchange, xalpha, dirac_plus_pz81 };

/// Regularization applied to t inside ℰ″ and ℰ‴, which blow up at t = 0.
inline constexpr double kRhoFloor = 1e-12;

/// Dirac exchange constant (3/4)(3/π)^{1/3}.
double dirac_constant();

/// LDA-type exchange-correlation energy density ℰ(t) per unit volume and its
/// first three derivatives in the density t.
class XcFunctional {
public:
  XcFunctional() = default;

  static XcFunctional none() { return XcFunctional(XcKind::none, 0.0); }
  static XcFunctional dirac() { return XcFunctional(XcKind::dirac_exchange, 0.0); }
  /// Slater Xα: (3α/2) times Dirac exchange; α = 2/3 recovers Dirac.
  static XcFunctional xalpha(double alpha_x);
  static XcFunctional lda_pz81() { return XcFunctional(XcKind::dirac_plus_pz81, 0.0); }
  static XcFunctional from_name(const std::string &name, double alpha_x = 2.0 / 3.0);

  XcKind kind() const noexcept { return kind_; }
  double alpha_x() const noexcept { return alpha_x_; }
  bool active() const noexcept { return kind_ != XcKind::none; }
  std::string name() const;
  /// Hölder exponent α of ℰ″ (1/3 for every LDA kind here).
  double holder_exponent() const noexcept { return 1.0 / 3.0; }

  double energy_density(double t) const;  ///< ℰ(t)
  double potential(double t) const;       ///< ℰ′(t)
  double second(double t) const;          ///< ℰ″(t), t floored at kRhoFloor
  double third(double t) const;           ///< ℰ‴(t), t floored at kRhoFloor

private:
  XcFunctional(XcKind kind, double alpha_x) : kind_(kind), alpha_x_(alpha_x) {}
  double exchange_scale() const noexcept;

  XcKind kind_ = XcKind::none;
  double alpha_x_ = 0.0;
};

double xc_energy_density(const XcFunctional &f, double t);
double xc_potential(const XcFunctional &f, double t);

/// PZ81 correlation per unit volume, t ε_c(r_s(t)), and its t-derivatives.
double pz81_energy(double t);
double pz81_potential(double t);
double pz81_second(double t);

} // namespace ksfem::physics
