#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ksfem {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Point = std::array<double, 3>;

/// Iterative method ran out of iterations. Carries the last residual so
/// callers can report how far off the solve was.
class NonConvergence : public std::runtime_error {
public:
  NonConvergence(const std::string &what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

private:
  double residual_;
  int iterations_;
};

inline double distance(const Point &a, const Point &b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double norm(const Point &a) {
  return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
}

} // namespace ksfem
