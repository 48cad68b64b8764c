// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is nonzero when any criterion fails.

#include "ksfem/analysis/alignment.hpp"
#include "ksfem/analysis/hessian.hpp"
#include "ksfem/analysis/study.hpp"
#include "ksfem/cli/app.hpp"
#include "ksfem/cli/oracles.hpp"
#include "ksfem/fem/assembly.hpp"
#include "ksfem/ksdft/scf.hpp"
#include "ksfem/physics/hartree.hpp"
#include "ksfem/physics/system.hpp"

#include <Eigen/QR>
#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

using namespace ksfem;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string &what) {
    pass = pass && ok;
    notes.push_back((ok ? "" : "FAILED ") + what);
  }
};

int failures = 0;

void report(int id, const std::string &title, const Outcome &o, double seconds) {
  if (!o.pass) ++failures;
  std::string detail;
  for (const auto &n : o.notes) detail += (detail.empty() ? "" : "; ") + n;
  std::cout << fmt::format("{} criterion {}: {} [{:.1f} s] ({})", o.pass ? "PASS" : "FAIL", id, title, seconds, detail)
            << std::endl;
}

template <typename F> void run_criterion(int id, const std::string &title, F &&body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    body(o);
  } catch (const std::exception &e) {
    o.check(false, std::string("exception: ") + e.what());
  }
  report(id, title, o, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

bool within(double value, double target, double tol) { return std::isfinite(value) && std::abs(value - target) <= tol; }

std::shared_ptr<const fem::FeSpace> make_space(double half_width, int n, int degree) {
  return std::make_shared<const fem::FeSpace>(std::make_shared<const mesh::Mesh>(mesh::Mesh::build_uniform(half_width, n)),
                                              degree);
}

ksdft::ScfConfig scf_config() {
  ksdft::ScfConfig cfg;
  cfg.mixing = {ksdft::MixingKind::anderson, 0.5, 5};
  cfg.density_tol = 1e-9;
  return cfg;
}

Matrix random_block(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 &rng) {
  std::normal_distribution<double> nd;
  Matrix a(rows, cols);
  for (auto &v : a.reshaped()) v = nd(rng);
  return a;
}

Matrix random_orthogonal(int n, std::mt19937_64 &rng) {
  Eigen::HouseholderQR<Matrix> qr(random_block(n, n, rng));
  Matrix q = qr.householderQ();
  if (rng() & 1) q.col(0) *= -1.0;
  return q;
}

double frob_m(const sparse::CsrMatrix &m, const Matrix &x) { return std::sqrt((x.array() * m.multiply(x).array()).sum()); }

std::string slopes_text(const analysis::RateReport &r) {
  std::string s;
  for (std::size_t c = 0; c < analysis::kErrorColumns.size(); ++c)
    s += fmt::format("{}{}={:.3f}{}", s.empty() ? "" : ", ", analysis::kErrorColumns[c], r.slopes[c].slope,
                     r.slopes[c].coarsest_excluded ? "*" : "");
  return s;
}

analysis::RateReport diatomic_study(int degree) {
  std::vector<analysis::LevelSpec> levels;
  for (int n : degree == 1 ? std::vector<int>{6, 8, 12, 16} : std::vector<int>{4, 6, 8, 12}) levels.push_back({n, degree});
  analysis::StudyOptions opt;
  opt.scf = scf_config();
  opt.reference = {degree == 1 ? 32 : 16, degree};
  opt.infsup_dim = 2;
  return analysis::convergence_study(physics::preset_system("diatomic"), levels, opt);
}

} // namespace

int main() {
  using analysis::RateReport;
  const auto t_start = std::chrono::steady_clock::now();

  run_criterion(1, "harmonic oscillator, P1 lambda_1 error slope 2 +- 0.3", [](Outcome &o) {
    const auto sys = physics::preset_system("harmonic");
    analysis::StudyOptions opt;
    opt.scf = scf_config();
    opt.analytic_reference = true;
    const auto r = analysis::convergence_study(sys, {{8, 1}, {12, 1}, {16, 1}, {24, 1}}, opt);
    std::string errs;
    for (const auto &row : r.rows) errs += fmt::format("{}{:.3e}", errs.empty() ? "" : " ", row.errors[1]);
    o.check(!r.aborted, "all levels converged");
    o.check(within(r.slopes[1].slope, 2.0, 0.3), fmt::format("slope {:.3f}, errors {}", r.slopes[1].slope, errs));
    const auto n = r.rows.size();
    if (n >= 2)
      o.notes.push_back(fmt::format("finest-pair slope {:.3f}",
                                    std::log(r.rows[n - 2].errors[1] / r.rows[n - 1].errors[1]) /
                                        std::log(r.rows[n - 2].h / r.rows[n - 1].h)));
  });

  std::optional<RateReport> p1, p2;
  run_criterion(2, "diatomic energy slopes: P1 2 +- 0.3, P2 4 +- 0.6", [&](Outcome &o) {
    p1 = diatomic_study(1);
    p2 = diatomic_study(2);
    o.check(!p1->aborted && !p2->aborted, "all levels and references converged");
    o.check(within(p1->slopes[0].slope, 2.0, 0.3), fmt::format("P1 energy slope {:.3f}", p1->slopes[0].slope));
    o.check(within(p2->slopes[0].slope, 4.0, 0.6), fmt::format("P2 energy slope {:.3f}", p2->slopes[0].slope));
    o.notes.push_back("P1: " + slopes_text(*p1));
    o.notes.push_back("P2: " + slopes_text(*p2));
  });

  run_criterion(3, "eigenvalue slopes: P1 2 +- 0.3, P2 4 +- 0.6", [&](Outcome &o) {
    if (!p1 || !p2) throw std::runtime_error("criterion 2 study unavailable");
    for (int c : {1, 2}) {
      o.check(within(p1->slopes[c].slope, 2.0, 0.3), fmt::format("P1 lambda_{} {:.3f}", c, p1->slopes[c].slope));
      o.check(within(p2->slopes[c].slope, 4.0, 0.6), fmt::format("P2 lambda_{} {:.3f}", c, p2->slopes[c].slope));
    }
  });

  run_criterion(4, "orbital slopes: P1 H1 1 +- 0.25, P1 L2 2 +- 0.4, P2 H1 2 +- 0.4", [&](Outcome &o) {
    if (!p1 || !p2) throw std::runtime_error("criterion 2 study unavailable");
    o.check(within(p1->slopes[3].slope, 1.0, 0.25), fmt::format("P1 H1 {:.3f}", p1->slopes[3].slope));
    o.check(within(p1->slopes[4].slope, 2.0, 0.4), fmt::format("P1 L2 {:.3f}", p1->slopes[4].slope));
    o.check(within(p2->slopes[3].slope, 2.0, 0.4), fmt::format("P2 H1 {:.3f}", p2->slopes[3].slope));
  });

  run_criterion(5, "slope(E) - 2 slope(H1) in [-0.5, 0.5]", [&](Outcome &o) {
    if (!p1 || !p2) throw std::runtime_error("criterion 2 study unavailable");
    for (const auto *r : {&*p1, &*p2}) {
      const double d = r->slopes[0].slope - 2.0 * r->slopes[3].slope;
      o.check(std::isfinite(d) && std::abs(d) <= 0.5, fmt::format("P{}: {:.3f}", r->degree, d));
    }
  });

  run_criterion(6, "property suite", [](Outcome &o) {
    std::mt19937_64 rng(20240601);
    const auto dia = physics::preset_system("diatomic");
    const ksdft::KohnShamModel model(dia, make_space(dia.half_width, 6, 1));
    const auto gs = ksdft::scf_solve(model, scf_config());
    o.check(gs.converged, "diatomic n=6 converged");
    const Matrix &phi = gs.orbitals.coeffs;

    // unitary invariance
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
      const double e = model.energy(phi), eu = model.energy(phi * random_orthogonal(2, rng));
      worst = std::max(worst, std::abs(eu - e) / std::abs(e));
    }
    o.check(worst <= 1e-12, fmt::format("unitary invariance {:.1e}", worst));

    // Λ symmetry at converged ground states
    double asym = 0.0;
    for (const std::string name : {"diatomic", "tetrahedral"}) {
      const auto sys = physics::preset_system(name);
      const ksdft::KohnShamModel m(sys, make_space(sys.half_width, 8, 1));
      const auto g = ksdft::scf_solve(m, scf_config());
      const Matrix l = m.lagrange_multipliers(g.orbitals.coeffs);
      asym = std::max(asym, (l - l.transpose()).cwiseAbs().maxCoeff());
    }
    o.check(asym <= 1e-9, fmt::format("Lambda symmetry {:.1e}", asym));

    // variational monotonicity over nested refinements
    bool mono = true;
    std::string energies;
    for (int degree : {1, 2}) {
      double prev = std::numeric_limits<double>::infinity();
      for (int n : degree == 1 ? std::vector<int>{4, 8, 16} : std::vector<int>{2, 4, 8}) {
        const ksdft::KohnShamModel m(dia, make_space(dia.half_width, n, degree));
        const auto g = ksdft::scf_solve(m, scf_config());
        mono = mono && g.converged && g.total_energy <= prev + 1e-10;
        energies += fmt::format("{}{:.6f}", energies.empty() ? "" : " ", g.total_energy);
        prev = g.total_energy;
      }
    }
    o.check(mono, "nested monotonicity (" + energies + ")");

    // D(f, f) >= 0
    double min_d = std::numeric_limits<double>::infinity();
    const auto s4 = make_space(4.0, 4, 1);
    for (auto rule : {physics::BoundaryRule::multipole2, physics::BoundaryRule::direct}) {
      const physics::HartreeSolver solver(s4, rule);
      for (int t = 0; t < 5; ++t) {
        fem::DensityField f{random_block(static_cast<Eigen::Index>(s4->n_quad_points()), 1, rng).col(0)};
        const double d = fem::integrate_product(*s4, f, solver.variational_potential(f));
        min_d = std::min(min_d, d / std::max(1.0, f.values.squaredNorm()));
        min_d = std::min(min_d, physics::coulomb_D(*s4, f, f));
      }
    }
    o.check(min_d >= 0.0, fmt::format("D(f,f) >= 0 (min {:.2e})", min_d));

    for (const auto &r : cli::hartree_gaussian_oracle()) o.check(r.passed, fmt::format("{} {:.2e}", r.name, r.value));
    double xc_worst = 0.0;
    bool xc_ok = true;
    for (const auto &r : cli::xc_fd_oracle()) {
      xc_ok = xc_ok && r.passed;
      xc_worst = std::max(xc_worst, r.value);
    }
    o.check(xc_ok, fmt::format("XC finite differences {:.1e}", xc_worst));

    // |S(W)| <= ||W||^2 on aligned nearby orbitals
    bool bound_holds = true;
    double ratio = 0.0;
    std::uniform_real_distribution<double> size(0.01, 0.45);
    for (int t = 0; t < 20; ++t) {
      Matrix d = random_block(phi.rows(), 2, rng);
      d -= phi * (phi.transpose() * model.mass().multiply(d));
      d *= size(rng) / frob_m(model.mass(), d);
      const Matrix raw = ksdft::orthonormalize_block(model.mass(), phi + d);
      const Matrix psi = raw * analysis::procrustes_align({model.space_ptr(), phi}, {model.space_ptr(), raw}).U;
      const auto split = analysis::tangent_split(model.mass(), phi, psi);
      const double w2 = split.w_norm_L2 * split.w_norm_L2;
      bound_holds = bound_holds && split.S.norm() <= w2 + 1e-10;
      ratio = std::max(ratio, split.S.norm() / w2);
    }
    o.check(bound_holds, fmt::format("|S| <= ||W||^2 (max ratio {:.3f})", ratio));

    // second-order operator: symmetry and finite differences
    const analysis::SecondOrderOperator op(model, phi);
    double sym = 0.0, fd = 0.0;
    for (int t = 0; t < 5; ++t) {
      Matrix a = op.project(random_block(phi.rows(), 2, rng)), b = op.project(random_block(phi.rows(), 2, rng));
      a /= frob_m(model.mass(), a);
      b /= frob_m(model.mass(), b);
      sym = std::max(sym, std::abs(op.form(a, b) - op.form(b, a)));
      const Matrix h = analysis::hessian_apply(model, gs, a);
      const Matrix f = analysis::hessian_apply_fd(model, gs, a, 1e-4);
      fd = std::max(fd, frob_m(model.mass(), h - f) / frob_m(model.mass(), h));
    }
    o.check(sym <= 1e-9, fmt::format("Hessian symmetry {:.1e}", sym));
    o.check(fd <= 1e-5, fmt::format("Hessian finite difference {:.1e}", fd));

    // Procrustes against sampled rotations and reflections
    double margin = std::numeric_limits<double>::infinity();
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    for (int t = 0; t < 3; ++t) {
      const Matrix psi = ksdft::orthonormalize_block(
          model.mass(), phi * random_orthogonal(2, rng) + 0.2 * random_block(phi.rows(), 2, rng) / std::sqrt(phi.rows()));
      const auto al = analysis::procrustes_align({model.space_ptr(), phi}, {model.space_ptr(), psi});
      for (int k = 0; k < 10000; ++k) {
        const double th = angle(rng), r = (k % 2 == 0) ? 1.0 : -1.0;
        Matrix u(2, 2);
        u << std::cos(th), -r * std::sin(th), std::sin(th), r * std::cos(th);
        margin = std::min(margin, frob_m(model.mass(), psi * u - phi) - al.aligned_distance_L2);
      }
    }
    o.check(margin >= -1e-8, fmt::format("Procrustes vs 10^4 samples, margin {:.2e}", margin));
  });

  run_criterion(7, "SCF and direct minimization agree to 1e-7 (diatomic, n=8)", [](Outcome &o) {
    const auto sys = physics::preset_system("diatomic");
    const ksdft::KohnShamModel model(sys, make_space(sys.half_width, 8, 1));
    auto cfg = scf_config();
    cfg.density_tol = 1e-10;
    const auto scf = ksdft::scf_solve(model, cfg);
    const auto direct = ksdft::direct_minimize(model, ksdft::atomic_guess(model, 2));
    o.check(scf.converged && direct.converged, fmt::format("converged: scf {}, direct {} ({} iterations)", scf.converged,
                                                           direct.converged, direct.iterations));
    const double rel = std::abs(scf.total_energy - direct.total_energy) / std::abs(scf.total_energy);
    o.check(rel <= 1e-7, fmt::format("E_scf {:.12f}, E_direct {:.12f}, relative {:.1e}", scf.total_energy,
                                     direct.total_energy, rel));
  });

  run_criterion(8, "inf-sup estimate positive at every ground state of the criterion 2 study", [&](Outcome &o) {
    if (!p1 || !p2) throw std::runtime_error("criterion 2 study unavailable");
    for (const auto *r : {&*p1, &*p2}) {
      double lo = std::numeric_limits<double>::infinity();
      int count = 0;
      bool all = true;
      for (const auto &row : r->rows) {
        all = all && row.infsup_gamma.has_value();
        if (row.infsup_gamma) lo = std::min(lo, *row.infsup_gamma), ++count;
      }
      all = all && r->reference.infsup_gamma.has_value();
      if (r->reference.infsup_gamma) lo = std::min(lo, *r->reference.infsup_gamma), ++count;
      o.check(all && lo > 0.0, fmt::format("P{}: {} states, min gamma {:.4f}", r->degree, count, lo));
    }
  });

  run_criterion(9, "repeated study runs give byte-identical CSV", [](Outcome &o) {
    const auto dir = fs::temp_directory_path() / fmt::format("ksfem-acceptance-{}", std::random_device{}());
    fs::create_directories(dir);
    ::setenv("KSFEM_CACHE_DIR", (dir / "cache").string().c_str(), 1);
    std::ofstream(dir / "study.json") << R"({"system": "diatomic", "seed": 7,
      "study": {"degree": 1, "levels": [4, 6, 8], "reference": {"n": 12}},
      "scf": {"initial_guess": "random"}})";
    std::vector<std::string> csv;
    for (int run = 0; run < 3; ++run) {
      // the first run fills the reference cache, the third starts from an empty one again
      if (run == 2) fs::remove_all(dir / "cache");
      const auto out = dir / fmt::format("run{}", run);
      const int code = cli::run({"ksfem", "study", (dir / "study.json").string(), "--set", "output_dir=" + out.string()});
      o.check(code == cli::kExitOk, fmt::format("run {} exit {}", run, code));
      std::ifstream is(out / "rates.csv", std::ios::binary);
      std::stringstream ss;
      ss << is.rdbuf();
      csv.push_back(ss.str());
    }
    o.check(!csv[0].empty() && csv[0] == csv[1] && csv[1] == csv[2], fmt::format("{} bytes, identical across 3 runs", csv[0].size()));
    ::unsetenv("KSFEM_CACHE_DIR");
    fs::remove_all(dir);
  });

  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  std::cout << fmt::format("{} of 9 criteria passed in {:.0f} s", 9 - failures, total) << std::endl;
  return failures == 0 ? 0 : 1;
}
