#pragma once

#include "ksfem/fem/assembly.hpp"
#include "ksfem/ksdft/scf.hpp"

#include <array>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ksfem::analysis {

struct LevelSpec {
  int n = 0;       ///< cells per axis
  int degree = 1;  ///< 1 or 2
};

/// Closed-form ground state of a linear single-electron system.
struct AnalyticSolution {
  double energy = 0.0;
  double ev1 = 0.0;
  double ev2 = 0.0;
  std::function<double(const Point &)> value;
  std::function<Point(const Point &)> gradient;
};

/// Available for N = 1 linear systems without nuclei or projectors: the
/// harmonic oscillator (on a box large enough that truncation is negligible)
/// and the particle in the box.
std::optional<AnalyticSolution> analytic_solution(const physics::ModelSystem &system);

/// ‖u − φ‖₀ and ‖u − φ‖₁ for the FE function u after fixing the sign of u,
/// with an order-6 rule on every element.
fem::ErrorNorms analytic_error(const fem::FeSpace &space, const Vector &u, const AnalyticSolution &exact);

inline constexpr std::array<const char *, 5> kErrorColumns = {"energy_err", "ev1_err", "ev2_err", "h1_err", "l2_err"};

struct RateRow {
  double h = 0.0;
  int dofs = 0;
  std::array<double, 5> errors{};  ///< in kErrorColumns order
  int iterations = 0;
  bool converged = false;
  double energy = 0.0;
  double seconds = 0.0;
  std::optional<double> infsup_gamma;
};

struct ReferenceInfo {
  bool analytic = false;
  LevelSpec level;
  double h = 0.0;
  int dofs = 0;
  double energy = 0.0;
  double ev1 = 0.0;
  double ev2 = 0.0;
  bool converged = true;
  double seconds = 0.0;
  std::optional<double> infsup_gamma;
};

struct SlopeFit {
  double slope = 0.0;
  bool coarsest_excluded = false;
  int points = 0;
};

struct RateReport {
  std::string system;
  int degree = 1;
  std::vector<RateRow> rows;
  std::array<SlopeFit, 5> slopes{};
  ReferenceInfo reference;
  /// Set when an unconverged level stopped the study; rows hold the levels
  /// completed before it.
  bool aborted = false;
  std::string abort_reason;
};

/// Least-squares slope of log(err) against log(h). Non-positive errors are
/// skipped; NaN when fewer than two points remain.
double fit_loglog_slope(const std::vector<double> &h, const std::vector<double> &err);

/// Fits each column. With a computed reference (h_ref > 0) the coarsest level
/// is dropped when its error is within 10× of the reference's own error,
/// estimated by extrapolating the finest level's error to h_ref with a
/// preliminary slope.
std::array<SlopeFit, 5> fit_slopes(const std::vector<RateRow> &rows, double h_ref);

struct StudyOptions {
  ksdft::ScfConfig scf;
  /// Compare against analytic_solution instead of a computed reference.
  bool analytic_reference = false;
  LevelSpec reference;
  /// Run infsup_audit with this subspace dimension at every ground state (0: off).
  int infsup_dim = 0;
  /// Produces the reference ground state; defaults to scf_solve. Lets callers
  /// cache it.
  std::function<ksdft::GroundState(const ksdft::KohnShamModel &)> reference_solver;
  /// Called once per solved level, in order.
  std::function<void(const RateRow &)> on_level;
};

/// Levels must share one degree and be listed coarse to fine; the reference
/// must be strictly finer than every level.
RateReport convergence_study(const physics::ModelSystem &system, const std::vector<LevelSpec> &levels,
                             const StudyOptions &options);

/// Header, one row per level, `# slope_<col>=<value>` footers, and
/// `# aborted=...` when the study stopped early.
void write_rates_csv(std::ostream &os, const RateReport &report);
/// gnuplot script plotting every error column of `csv_name` on log-log axes.
void write_gnuplot_script(std::ostream &os, const std::string &csv_name, const std::string &png_name);

} // namespace ksfem::analysis
