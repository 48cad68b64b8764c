#include "ksfem/cli/oracles.hpp"

#include "ksfem/fem/assembly.hpp"
#include "ksfem/ksdft/scf.hpp"
#include "ksfem/physics/hartree.hpp"
#include "ksfem/physics/system.hpp"
#include "ksfem/physics/xc.hpp"

#include <fmt/format.h>

#include <numbers>

namespace ksfem::cli {

namespace {

std::shared_ptr<const fem::FeSpace> make_space(double half_width, int n, int degree) {
  return std::make_shared<const fem::FeSpace>(
      std::make_shared<const mesh::Mesh>(mesh::Mesh::build_uniform(half_width, n)), degree);
}

} // namespace

std::vector<OracleResult> hartree_gaussian_oracle() {
  std::vector<OracleResult> out;
  const double exact_v2 = std::erf(2.0) / 2.0;
  const double exact_energy = 0.5 * std::sqrt(2.0 / std::numbers::pi);
  double prev_v2 = 0.0, energy_err = 0.0;
  double worst_bdry = 0.0;
  for (int n : {8, 16}) {
    const auto space = make_space(8.0, n, 2);
    const auto rho = fem::sample(*space, [](const Point &x) {
      return std::pow(std::numbers::pi, -1.5) * std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
    });
    const physics::HartreeSolver solver(space);
    const auto sol = solver.solve(rho);
    const double mass = fem::integrate(*space, rho);
    for (int b = 0; b < space->n_boundary(); ++b) {
      const Point &x = space->node_coords()[static_cast<std::size_t>(space->boundary_nodes()[static_cast<std::size_t>(b)])];
      const double r = norm(x), want = mass * std::erf(r) / r;
      worst_bdry = std::max(worst_bdry, std::abs(sol.boundary_values[b] - want) / want);
    }
    const double v2 = std::abs(fem::point_value(*space, sol.potential.coeffs, {2.0, 0.0, 0.0}) - exact_v2);
    if (n == 16) {
      out.push_back({"hartree: V(2,0,0) error decreases under refinement", v2 < prev_v2, v2, prev_v2,
                     fmt::format("n=8: {:.3e}, n=16: {:.3e}", prev_v2, v2)});
      out.push_back({"hartree: V(2,0,0) matches erf(r)/r", v2 < 5e-3, v2, 5e-3, "P2, n=16"});
    }
    prev_v2 = v2;
    energy_err = std::abs(sol.energy - exact_energy) / exact_energy;
  }
  out.insert(out.begin(), {"hartree: boundary data equals mass erf(r)/r", worst_bdry < 1e-4, worst_bdry, 1e-4,
                           "max relative deviation over boundary nodes"});
  out.push_back({"hartree: energy 1/2 sqrt(2/pi)", energy_err < 1e-2, energy_err, 1e-2, "relative error, P2, n=16"});
  return out;
}

std::vector<OracleResult> oscillator_oracle() {
  auto sys = physics::preset_system("harmonic");
  sys.half_width = 6.0;
  sys.n_electrons = 1;
  ksdft::ScfConfig cfg;
  std::array<double, 2> e1{}, e2{};
  for (int k = 0; k < 2; ++k) {
    const ksdft::KohnShamModel model(sys, make_space(6.0, k == 0 ? 8 : 16, 1));
    const auto gs = ksdft::scf_solve(model, cfg);
    e1[static_cast<std::size_t>(k)] = gs.eigenvalue(1) - 1.5;
    e2[static_cast<std::size_t>(k)] = gs.eigenvalue(2) - 2.5;
  }
  const double r1 = std::log2(e1[0] / e1[1]), r2 = std::log2(e2[0] / e2[1]);
  return {
      {"oscillator: eigenvalues lie above the exact spectrum", e1[0] > 0 && e1[1] > 0 && e2[0] > 0 && e2[1] > 0,
       std::min({e1[0], e1[1], e2[0], e2[1]}), 0.0, "P1 is a Ritz method"},
      {"oscillator: lambda_1 error rate", std::abs(r1 - 2.0) <= 0.3, r1, 0.3,
       fmt::format("errors {:.3e} -> {:.3e}, expected rate 2", e1[0], e1[1])},
      {"oscillator: lambda_2 error rate", std::abs(r2 - 2.0) <= 0.3, r2, 0.3,
       fmt::format("errors {:.3e} -> {:.3e}, expected rate 2", e2[0], e2[1])},
  };
}

std::vector<OracleResult> xc_fd_oracle() {
  std::vector<OracleResult> out;
  for (const auto &f : {physics::XcFunctional::dirac(), physics::XcFunctional::xalpha(0.7),
                        physics::XcFunctional::lda_pz81()}) {
    double worst1 = 0.0, worst2 = 0.0;
    for (double t : {0.01, 0.1, 0.5, 1.0, 2.0, 10.0}) {
      const double h = 1e-4 * t;
      const double d1 = (f.energy_density(t + h) - f.energy_density(t - h)) / (2.0 * h);
      const double d2 = (f.potential(t + h) - f.potential(t - h)) / (2.0 * h);
      worst1 = std::max(worst1, std::abs(d1 - f.potential(t)) / std::max(1.0, std::abs(f.potential(t))));
      worst2 = std::max(worst2, std::abs(d2 - f.second(t)) / std::max(1.0, std::abs(f.second(t))));
    }
    out.push_back({"xc " + f.name() + ": E' against differences of E", worst1 <= 1e-6, worst1, 1e-6, ""});
    out.push_back({"xc " + f.name() + ": E'' against differences of E'", worst2 <= 1e-6, worst2, 1e-6, ""});
  }
  return out;
}

} // namespace ksfem::cli
