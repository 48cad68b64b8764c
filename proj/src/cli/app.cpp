#include "ksfem/cli/app.hpp"

#include "ksfem/analysis/hessian.hpp"
#include "ksfem/analysis/study.hpp"
#include "ksfem/cli/config.hpp"
#include "ksfem/cli/oracles.hpp"
#include "ksfem/ksdft/io.hpp"
#include "ksfem/log.hpp"
#include "ksfem/physics/xc.hpp"

#include "CLI11.hpp"
#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#ifndef KSFEM_BUILD_ID
#define KSFEM_BUILD_ID "unknown"
#endif

namespace ksfem::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string build_id() { return KSFEM_BUILD_ID; }

fs::path cache_directory() {
  if (const char *d = std::getenv("KSFEM_CACHE_DIR"); d && *d) return d;
  if (const char *x = std::getenv("XDG_CACHE_HOME"); x && *x) return fs::path(x) / "ksfem";
  if (const char *h = std::getenv("HOME"); h && *h) return fs::path(h) / ".cache" / "ksfem";
  return fs::temp_directory_path() / "ksfem-cache";
}

int thread_count() {
  const char *t = std::getenv("KSFEM_THREADS");
  long v = 0;
  if (t && *t) {
    char *end = nullptr;
    v = std::strtol(t, &end, 10);
    if (*end != '\0' || v < 0) throw std::invalid_argument(fmt::format("KSFEM_THREADS='{}' is not a non-negative integer", t));
  }
  if (v == 0) v = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<int>(v);
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Collects everything that goes into report.json.
struct Report {
  json doc;
  json phases = json::object();
  json outputs = json::array();

  void phase(const std::string &name, double seconds) { phases[name] = seconds; }
  void output(const fs::path &p) { outputs.push_back(p.string()); }
};

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

std::shared_ptr<const fem::FeSpace> make_space(double half_width, const analysis::LevelSpec &level) {
  return std::make_shared<const fem::FeSpace>(
      std::make_shared<const mesh::Mesh>(mesh::Mesh::build_uniform(half_width, level.n)), level.degree);
}

json ground_state_summary(const ksdft::GroundState &gs) {
  return {{"method", gs.method},
          {"converged", gs.converged},
          {"aufbau", gs.aufbau},
          {"iterations", gs.iterations},
          {"total_energy", gs.total_energy},
          {"eigenvalues", std::vector<double>(gs.eigenvalues.data(), gs.eigenvalues.data() + gs.eigenvalues.size())}};
}

ksdft::GroundState solve_ground_state(const RunConfig &cfg, const ksdft::KohnShamModel &model) {
  if (cfg.method == "direct") {
    ksdft::DirectMinConfig dm;
    const Matrix phi0 = cfg.scf.initial_guess == ksdft::GuessKind::random
                            ? ksdft::random_guess(model, model.n_electrons(), cfg.seed)
                            : ksdft::atomic_guess(model, model.n_electrons());
    return ksdft::direct_minimize(model, phi0, dm);
  }
  return ksdft::scf_solve(model, cfg.scf);
}

int run_solve(const RunConfig &cfg, const fs::path &out, Report &rep) {
  auto t0 = Clock::now();
  const ksdft::KohnShamModel model(cfg.system, make_space(cfg.system.half_width, cfg.mesh));
  rep.phase("setup", since(t0));
  t0 = Clock::now();
  const auto gs = solve_ground_state(cfg, model);
  rep.phase("solve", since(t0));
  t0 = Clock::now();
  const auto path = out / "ground_state.json";
  ksdft::save_ground_state(path, gs, cfg.system.name);
  rep.output(path);
  rep.phase("write", since(t0));
  rep.doc["dofs"] = model.space().n_dofs();
  rep.doc["converged"] = {{"ground_state", gs.converged}};
  rep.doc["result"] = ground_state_summary(gs);
  return gs.converged ? kExitOk : kExitUnconverged;
}

int run_infsup(const RunConfig &cfg, const fs::path &out, Report &rep) {
  auto t0 = Clock::now();
  const ksdft::KohnShamModel model(cfg.system, make_space(cfg.system.half_width, cfg.mesh));
  rep.phase("setup", since(t0));
  t0 = Clock::now();
  const auto gs = solve_ground_state(cfg, model);
  rep.phase("solve", since(t0));
  rep.doc["converged"] = {{"ground_state", gs.converged}};
  rep.doc["result"] = ground_state_summary(gs);
  if (!gs.converged) {
    log_warn("ground state did not converge; the inf-sup audit needs a converged state and was skipped");
    return kExitUnconverged;
  }
  t0 = Clock::now();
  const auto r = analysis::infsup_audit(model, gs, cfg.subspace_dim);
  rep.phase("audit", since(t0));
  json j = {{"gamma", r.gamma},
            {"positive", r.positive},
            {"dimension", r.dimension},
            {"subspace_dim", cfg.subspace_dim},
            {"smallest_eigenvalues", r.smallest_eigenvalues},
            {"total_energy", gs.total_energy}};
  const auto path = out / "infsup.json";
  write_text(path, j.dump(2) + "\n");
  rep.output(path);
  rep.doc["infsup"] = j;
  if (!r.positive) log_warn("inf-sup estimate is not positive: gamma = {:.3e}", r.gamma);
  return kExitOk;
}

int run_study(const RunConfig &cfg, const fs::path &out, Report &rep) {
  const auto &st = cfg.study;
  std::vector<analysis::LevelSpec> levels;
  for (int n : st.levels) levels.push_back({n, st.degree});
  analysis::StudyOptions opt;
  opt.scf = cfg.scf;
  opt.analytic_reference = st.analytic_reference;
  opt.reference = st.reference;
  opt.infsup_dim = st.infsup_dim;

  json cache = json::object();
  double reference_solve = 0.0;
  if (!st.analytic_reference) {
    const auto dir = cache_directory();
    const auto key = reference_cache_key(cfg.system, st.reference, cfg.scf);
    const auto path = dir / fmt::format("reference-{}.json", key);
    cache = {{"directory", dir.string()}, {"key", key}, {"path", path.string()}, {"hit", false}};
    opt.reference_solver = [&, path](const ksdft::KohnShamModel &model) {
      if (fs::exists(path)) {
        try {
          auto gs = ksdft::load_ground_state(path, model.space_ptr());
          if (!gs.converged) throw ksdft::GroundStateFormatError("stored reference is not converged");
          cache["hit"] = true;
          return gs;
        } catch (const ksdft::GroundStateFormatError &e) {
          log_warn("cache entry {} is unusable ({}); recomputing", path.string(), e.what());
          cache["recovered_from_corruption"] = true;
        }
      }
      const auto t0 = Clock::now();
      auto gs = ksdft::scf_solve(model, cfg.scf);
      reference_solve = since(t0);
      if (gs.converged) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        try {
          ksdft::save_ground_state(path, gs, cfg.system.name);
        } catch (const std::exception &e) {
          log_warn("could not store reference in cache: {}", e.what());
        }
      }
      return gs;
    };
  }

  const auto t0 = Clock::now();
  const auto report = analysis::convergence_study(cfg.system, levels, opt);
  const double total = since(t0);

  std::ostringstream csv;
  analysis::write_rates_csv(csv, report);
  const auto csv_path = out / "rates.csv";
  write_text(csv_path, csv.str());
  rep.output(csv_path);
  std::ostringstream gp;
  analysis::write_gnuplot_script(gp, "rates.csv", "rates.png");
  const auto gp_path = out / "rates.gp";
  write_text(gp_path, gp.str());
  rep.output(gp_path);

  double levels_time = 0.0;
  json rows = json::array();
  json conv = {{"aborted", report.aborted}};
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto &r = report.rows[i];
    levels_time += r.seconds;
    json row = {{"n", st.levels[i]},
                {"h", r.h},
                {"dofs", r.dofs},
                {"energy", r.energy},
                {"iterations", r.iterations},
                {"converged", r.converged},
                {"seconds", r.seconds}};
    for (std::size_t c = 0; c < analysis::kErrorColumns.size(); ++c) row[analysis::kErrorColumns[c]] = r.errors[c];
    if (r.infsup_gamma) row["infsup_gamma"] = *r.infsup_gamma;
    rows.push_back(row);
  }
  json slopes = json::object();
  for (std::size_t c = 0; c < analysis::kErrorColumns.size(); ++c) {
    const auto &f = report.slopes[c];
    slopes[analysis::kErrorColumns[c]] = {{"slope", std::isfinite(f.slope) ? json(f.slope) : json(nullptr)},
                                          {"coarsest_excluded", f.coarsest_excluded},
                                          {"points", f.points}};
  }
  const auto &ref = report.reference;
  json rj = {{"analytic", ref.analytic}, {"energy", ref.energy}, {"ev1", ref.ev1}, {"ev2", ref.ev2}};
  if (!ref.analytic) {
    rj["n"] = ref.level.n;
    rj["degree"] = ref.level.degree;
    rj["h"] = ref.h;
    rj["dofs"] = ref.dofs;
    rj["converged"] = ref.converged;
    if (ref.infsup_gamma) rj["infsup_gamma"] = *ref.infsup_gamma;
  }
  conv["reference"] = ref.converged;
  conv["levels"] = json::array();
  for (const auto &r : report.rows) conv["levels"].push_back(r.converged);
  if (report.aborted) conv["abort_reason"] = report.abort_reason;

  rep.phase("reference_solve", reference_solve);
  rep.phase("levels", levels_time);
  rep.phase("study", total);
  rep.doc["cache"] = cache;
  rep.doc["converged"] = conv;
  rep.doc["study"] = {{"rows", rows}, {"slopes", slopes}, {"reference", rj}};
  return report.aborted ? kExitUnconverged : kExitOk;
}

int run_oracles(Report &rep) {
  std::vector<OracleResult> all;
  const auto time = [&](const char *name, auto fn) {
    const auto t0 = Clock::now();
    const auto r = fn();
    rep.phase(name, since(t0));
    all.insert(all.end(), r.begin(), r.end());
  };
  time("xc_fd", xc_fd_oracle);
  time("oscillator", oscillator_oracle);
  time("hartree_gaussian", hartree_gaussian_oracle);
  bool ok = true;
  json results = json::array();
  for (const auto &r : all) {
    ok = ok && r.passed;
    std::cout << fmt::format("{} {} (value {:.3e}, tolerance {:.1e}){}\n", r.passed ? "PASS" : "FAIL", r.name, r.value,
                             r.tolerance, r.detail.empty() ? "" : "  " + r.detail);
    results.push_back({{"name", r.name}, {"passed", r.passed}, {"value", r.value}, {"tolerance", r.tolerance},
                       {"detail", r.detail}});
  }
  rep.doc["oracles"] = results;
  rep.doc["converged"] = {{"oracles_passed", ok}};
  return ok ? kExitOk : kExitError;
}

} // namespace

int run(const std::vector<std::string> &args) {
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, const char *const *argv) {
  CLI::App app{"Finite-element Kohn-Sham solver and convergence-rate harness", "ksfem"};
  app.require_subcommand(1);
  std::string config_path, log_level = "warn";
  std::vector<std::string> overrides;
  app.add_option("--log-level", log_level, "debug, info, warn, error or off")
      ->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}));
  for (const char *name : kCommands) {
    const std::string desc = std::string(name) == "oracle-check" ? "run the physics oracles" : std::string("run ") + name;
    auto *sub = app.add_subcommand(name, desc);
    auto *opt = sub->add_option("config", config_path, "JSON configuration file");
    if (std::string(name) != "oracle-check") opt->required();
    sub->add_option("--set", overrides, "override a config value: key.path=value")->expected(1)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  const std::map<std::string, LogLevel> levels = {{"debug", LogLevel::debug},
                                                  {"info", LogLevel::info},
                                                  {"warn", LogLevel::warn},
                                                  {"error", LogLevel::error},
                                                  {"off", LogLevel::off}};
  set_log_level(levels.at(log_level));

  RunConfig cfg;
  int threads = 1;
  try {
    json raw = json::object();
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw ConfigError({config_path + ": cannot open"});
      try {
        raw = json::parse(is);
      } catch (const json::parse_error &e) {
        throw ConfigError({config_path + ": " + e.what()});
      }
    }
    for (const auto &o : overrides) apply_override(raw, o);
    cfg = parse_config(raw, command);
    threads = thread_count();
  } catch (const ConfigError &e) {
    for (const auto &i : e.issues()) std::cerr << "config error: " << i << '\n';
    return kExitError;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }

  const fs::path out = cfg.output_dir;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    std::cerr << "error: cannot create " << out << ": " << ec.message() << '\n';
    return kExitError;
  }

  Report rep;
  rep.doc["command"] = command;
  rep.doc["build_id"] = build_id();
  rep.doc["config"] = cfg.echo;
  rep.doc["threads"] = threads;
  rep.doc["rho_floor"] = physics::kRhoFloor;
  int code = kExitError;
  const auto t0 = Clock::now();
  try {
    if (command == "solve") code = run_solve(cfg, out, rep);
    else if (command == "study") code = run_study(cfg, out, rep);
    else if (command == "infsup") code = run_infsup(cfg, out, rep);
    else code = run_oracles(rep);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    rep.doc["error"] = e.what();
    code = kExitError;
  }
  rep.phase("total", since(t0));
  const auto report_path = out / "report.json";
  rep.output(report_path);
  rep.doc["phases"] = rep.phases;
  rep.doc["outputs"] = rep.outputs;
  rep.doc["status"] = code == kExitOk ? "ok" : code == kExitUnconverged ? "unconverged" : "error";
  rep.doc["exit_code"] = code;
  try {
    write_text(report_path, rep.doc.dump(2) + "\n");
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  if (code == kExitUnconverged) std::cerr << "warning: completed with unconverged sub-runs; see " << report_path << '\n';
  return code;
}

} // namespace ksfem::cli
