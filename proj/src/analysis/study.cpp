#include "ksfem/analysis/study.hpp"

#include "ksfem/analysis/alignment.hpp"
#include "ksfem/analysis/cross_mesh.hpp"
#include "ksfem/analysis/hessian.hpp"
#include "ksfem/log.hpp"
#include "ksfem/mesh/quadrature.hpp"

#include <fmt/format.h>

#include <chrono>
#include <limits>
#include <numbers>

namespace ksfem::analysis {

std::optional<AnalyticSolution> analytic_solution(const physics::ModelSystem &system) {
  if (!system.is_linear() || system.n_electrons != 1 || !system.pseudo.nuclei.empty() ||
      !system.pseudo.projectors.empty())
    return std::nullopt;
  AnalyticSolution s;
  const double w = system.pseudo.harmonic_omega;
  if (w > 0.0) {
    const double c = std::pow(w / std::numbers::pi, 0.75);
    s.energy = s.ev1 = 1.5 * w;
    s.ev2 = 2.5 * w;
    s.value = [=](const Point &x) { return c * std::exp(-0.5 * w * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])); };
    s.gradient = [=](const Point &x) {
      const double v = c * std::exp(-0.5 * w * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
      return Point{-w * x[0] * v, -w * x[1] * v, -w * x[2] * v};
    };
    return s;
  }
  const double l = system.half_width;
  const double k = std::numbers::pi / (2.0 * l);
  const double c = std::pow(l, -1.5);
  s.energy = s.ev1 = 1.5 * k * k;
  s.ev2 = 3.0 * k * k;
  s.value = [=](const Point &x) { return c * std::cos(k * x[0]) * std::cos(k * x[1]) * std::cos(k * x[2]); };
  s.gradient = [=](const Point &x) {
    const double cx = std::cos(k * x[0]), cy = std::cos(k * x[1]), cz = std::cos(k * x[2]);
    return Point{-c * k * std::sin(k * x[0]) * cy * cz, -c * k * cx * std::sin(k * x[1]) * cz,
                 -c * k * cx * cy * std::sin(k * x[2])};
  };
  return s;
}

fem::ErrorNorms analytic_error(const fem::FeSpace &space, const Vector &u, const AnalyticSolution &exact) {
  const auto rule = mesh::quadrature_rule(6);
  const auto &m = space.mesh();
  const Matrix coeffs = u;
  Vector val;
  Matrix grad;
  // sign fixed by the overlap with the exact orbital
  std::vector<Point> pts;
  std::vector<double> wts, uv, ev;
  std::vector<Point> ug, eg;
  for (std::size_t t = 0; t < space.n_tets(); ++t) {
    const auto &tet = m.tets()[t];
    const double vol = space.volume(t);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      Point x{0.0, 0.0, 0.0};
      for (int a = 0; a < 4; ++a)
        for (int c = 0; c < 3; ++c)
          x[c] += rule.points[q][static_cast<std::size_t>(a)] * m.vertices()[static_cast<std::size_t>(tet[a])][c];
      evaluate_block_at(space, t, x, coeffs, val, grad);
      wts.push_back(vol * rule.weights[q]);
      uv.push_back(val[0]);
      ug.push_back({grad(0, 0), grad(0, 1), grad(0, 2)});
      ev.push_back(exact.value(x));
      eg.push_back(exact.gradient(x));
    }
  }
  double overlap = 0.0;
  for (std::size_t p = 0; p < wts.size(); ++p) overlap += wts[p] * uv[p] * ev[p];
  const double sign = overlap < 0.0 ? -1.0 : 1.0;
  double l2 = 0.0, semi = 0.0;
  for (std::size_t p = 0; p < wts.size(); ++p) {
    const double d = sign * uv[p] - ev[p];
    l2 += wts[p] * d * d;
    for (int c = 0; c < 3; ++c) {
      const double g = sign * ug[p][c] - eg[p][c];
      semi += wts[p] * g * g;
    }
  }
  return {std::sqrt(l2), std::sqrt(l2 + semi)};
}

double fit_loglog_slope(const std::vector<double> &h, const std::vector<double> &err) {
  if (h.size() != err.size()) throw std::invalid_argument("fit_loglog_slope: size mismatch");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < h.size(); ++i)
    if (err[i] > 0.0 && h[i] > 0.0 && std::isfinite(err[i])) {
      x.push_back(std::log(h[i]));
      y.push_back(std::log(err[i]));
    }
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

std::array<SlopeFit, 5> fit_slopes(const std::vector<RateRow> &rows, double h_ref) {
  std::array<SlopeFit, 5> out{};
  std::vector<double> h;
  for (const auto &r : rows) h.push_back(r.h);
  for (std::size_t c = 0; c < kErrorColumns.size(); ++c) {
    std::vector<double> e;
    for (const auto &r : rows) e.push_back(r.errors[c]);
    auto &fit = out[c];
    fit.slope = fit_loglog_slope(h, e);
    fit.points = static_cast<int>(rows.size());
    if (h_ref <= 0.0 || rows.size() < 3 || !std::isfinite(fit.slope) || fit.slope <= 0.0) continue;
    const double self_error = e.back() * std::pow(h_ref / h.back(), fit.slope);
    if (e.front() < 10.0 * self_error) {
      fit.slope = fit_loglog_slope(std::vector<double>(h.begin() + 1, h.end()), std::vector<double>(e.begin() + 1, e.end()));
      fit.coarsest_excluded = true;
      fit.points -= 1;
    }
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::shared_ptr<const fem::FeSpace> make_space(double half_width, const LevelSpec &level) {
  auto m = std::make_shared<const mesh::Mesh>(mesh::Mesh::build_uniform(half_width, level.n));
  return std::make_shared<const fem::FeSpace>(m, level.degree);
}

} // namespace

RateReport convergence_study(const physics::ModelSystem &system, const std::vector<LevelSpec> &levels,
                             const StudyOptions &options) {
  if (levels.empty()) throw std::invalid_argument("convergence_study: no levels");
  options.scf.validate();
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i].n < 2 || (levels[i].degree != 1 && levels[i].degree != 2))
      throw std::invalid_argument("convergence_study: invalid level");
    if (levels[i].degree != levels.front().degree)
      throw std::invalid_argument("convergence_study: levels must share one degree");
    if (i > 0 && levels[i].n <= levels[i - 1].n)
      throw std::invalid_argument("convergence_study: levels must be ordered coarse to fine");
  }
  const double l = system.half_width;
  RateReport report;
  report.system = system.name;
  report.degree = levels.front().degree;

  std::optional<AnalyticSolution> exact;
  std::shared_ptr<const fem::FeSpace> ref_space;
  ksdft::GroundState ref_gs;
  if (options.analytic_reference) {
    exact = analytic_solution(system);
    if (!exact) throw std::invalid_argument("convergence_study: system '" + system.name + "' has no analytic solution");
    report.reference.analytic = true;
    report.reference.energy = exact->energy;
    report.reference.ev1 = exact->ev1;
    report.reference.ev2 = exact->ev2;
  } else {
    const auto &ref = options.reference;
    if (ref.degree != 1 && ref.degree != 2) throw std::invalid_argument("convergence_study: invalid reference degree");
    for (const auto &lv : levels) {
      // strictly finer: more cells per axis, or the same cells with a higher degree
      if (ref.n < lv.n || (ref.n == lv.n && ref.degree <= lv.degree))
        throw std::invalid_argument("convergence_study: reference must be finer than every level");
    }
    const auto t0 = Clock::now();
    ref_space = make_space(l, ref);
    const ksdft::KohnShamModel model(system, ref_space);
    ref_gs = options.reference_solver ? options.reference_solver(model) : ksdft::scf_solve(model, options.scf);
    report.reference.level = ref;
    report.reference.h = ref_space->mesh().cell_size();
    report.reference.dofs = ref_space->n_dofs();
    report.reference.energy = ref_gs.total_energy;
    report.reference.ev1 = ref_gs.eigenvalue(1);
    report.reference.ev2 = ref_gs.eigenvalue(2);
    report.reference.converged = ref_gs.converged;
    if (options.infsup_dim > 0 && ref_gs.converged)
      report.reference.infsup_gamma = infsup_audit(model, ref_gs, options.infsup_dim).gamma;
    report.reference.seconds = seconds_since(t0);
    if (!ref_gs.converged) {
      report.aborted = true;
      report.abort_reason = fmt::format("reference n={} P{} did not converge", ref.n, ref.degree);
      return report;
    }
    log_info("reference n={} P{}: E = {:.12f} ({:.1f} s)", ref.n, ref.degree, ref_gs.total_energy,
              report.reference.seconds);
  }

  for (const auto &lv : levels) {
    const auto t0 = Clock::now();
    auto space = make_space(l, lv);
    const ksdft::KohnShamModel model(system, space);
    const auto gs = ksdft::scf_solve(model, options.scf);
    RateRow row;
    row.h = space->mesh().cell_size();
    row.dofs = space->n_dofs();
    row.iterations = gs.iterations;
    row.converged = gs.converged;
    row.energy = gs.total_energy;
    if (!gs.converged) {
      report.aborted = true;
      report.abort_reason = fmt::format("level n={} P{} did not converge", lv.n, lv.degree);
      log_warn("{}", report.abort_reason);
      break;
    }
    row.errors[0] = std::abs(gs.total_energy - report.reference.energy);
    row.errors[1] = std::abs(gs.eigenvalue(1) - report.reference.ev1);
    row.errors[2] = std::abs(gs.eigenvalue(2) - report.reference.ev2);
    if (exact) {
      const auto e = analytic_error(*space, gs.orbitals.coeffs.col(0), *exact);
      row.errors[3] = e.h1;
      row.errors[4] = e.l2;
    } else {
      const CrossQuadrature cross(space, ref_space);
      const auto a = procrustes_align(cross, ref_gs.orbitals.coeffs, gs.orbitals.coeffs);
      row.errors[3] = a.aligned_distance_H1;
      row.errors[4] = a.aligned_distance_L2;
    }
    if (options.infsup_dim > 0) row.infsup_gamma = infsup_audit(model, gs, options.infsup_dim).gamma;
    row.seconds = seconds_since(t0);
    log_info("level n={} P{}: E = {:.12f}, errors {:.3e} {:.3e} {:.3e} {:.3e} {:.3e} ({:.1f} s)", lv.n, lv.degree,
              gs.total_energy, row.errors[0], row.errors[1], row.errors[2], row.errors[3], row.errors[4], row.seconds);
    report.rows.push_back(row);
    if (options.on_level) options.on_level(row);
  }
  report.slopes = fit_slopes(report.rows, report.reference.analytic ? 0.0 : report.reference.h);
  return report;
}

void write_rates_csv(std::ostream &os, const RateReport &report) {
  os << "h,dofs";
  for (const char *c : kErrorColumns) os << ',' << c;
  os << '\n';
  for (const auto &r : report.rows) {
    os << fmt::format("{:.10e},{}", r.h, r.dofs);
    for (double e : r.errors) os << fmt::format(",{:.10e}", e);
    os << '\n';
  }
  for (std::size_t c = 0; c < kErrorColumns.size(); ++c)
    os << fmt::format("# slope_{}={:.6f}\n", kErrorColumns[c], report.slopes[c].slope);
  if (report.aborted) os << "# aborted=" << report.abort_reason << '\n';
}

void write_gnuplot_script(std::ostream &os, const std::string &csv_name, const std::string &png_name) {
  os << "set datafile separator ','\n"
     << "set datafile commentschars '#'\n"
     << "set key autotitle columnhead\n"
     << "set logscale xy\n"
     << "set xlabel 'h'\n"
     << "set ylabel 'error'\n"
     << "set terminal pngcairo size 900,650\n"
     << "set output '" << png_name << "'\n"
     << "plot ";
  for (std::size_t c = 0; c < kErrorColumns.size(); ++c) {
    if (c > 0) os << ", \\\n     ";
    os << "'" << csv_name << "' using 1:" << c + 3 << " with linespoints";
  }
  os << '\n';
}

} // namespace ksfem::analysis
