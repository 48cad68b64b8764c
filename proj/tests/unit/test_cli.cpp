#include "catch_amalgamated.hpp"

#include "ksfem/cli/app.hpp"
#include "ksfem/cli/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ksfem;
using namespace ksfem::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string &tag) {
    path = fs::temp_directory_path() / ("ksfem-test-" + tag + "-" + std::to_string(std::rand()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path &p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path &dir, const json &j) {
  const auto p = dir / "config.json";
  std::ofstream(p) << j.dump();
  return p;
}

std::vector<std::string> issues_of(const json &j, const std::string &command) {
  try {
    parse_config(j, command);
  } catch (const ConfigError &e) {
    return e.issues();
  }
  return {};
}

bool has_issue(const std::vector<std::string> &issues, const std::string &prefix) {
  for (const auto &i : issues)
    if (i.rfind(prefix, 0) == 0) return true;
  return false;
}

} // namespace

TEST_CASE("config: defaults and echo") {
  const auto cfg = parse_config(json{{"system", "diatomic"}}, "solve");
  CHECK(cfg.system.name == "diatomic");
  CHECK(cfg.mesh.n == 8);
  CHECK(cfg.mesh.degree == 1);
  CHECK(cfg.scf.mixing.kind == ksdft::MixingKind::anderson);
  CHECK(cfg.echo.at("scf").at("density_tol") == 1e-8);
  CHECK(cfg.echo.at("system").at("nuclei").size() == 2);
  // the echoed system parses back to itself
  const auto again = parse_config(json{{"system", cfg.echo.at("system")}}, "solve");
  CHECK(system_to_json(again.system) == cfg.echo.at("system"));
}

TEST_CASE("config: schema violations carry JSON pointers") {
  const json bad = {{"system", {{"preset", "diatomic"}, {"nuclei", {{{"charge", -1.0}, {"radius", 1.0}}}}}},
                    {"mesh", {{"n", "eight"}}},
                    {"scf", {{"density_tol", -1e-8}, {"beta", 1.5}, {"mixing", "broyden"}}},
                    {"colour", "blue"}};
  const auto issues = issues_of(bad, "solve");
  CHECK(has_issue(issues, "/colour: unknown key"));
  CHECK(has_issue(issues, "/system/nuclei/0/radius: unknown key"));
  CHECK(has_issue(issues, "/system/nuclei/0/charge"));
  CHECK(has_issue(issues, "/mesh/n: expected an integer"));
  CHECK(has_issue(issues, "/scf/density_tol"));
  CHECK(has_issue(issues, "/scf/beta"));
  CHECK(has_issue(issues, "/scf/mixing"));
  CHECK(has_issue(issues_of(json::object(), "solve"), "/system: required"));
  CHECK(has_issue(issues_of(json{{"system", "nope"}}, "solve"), "/system: unknown preset"));
  CHECK(has_issue(issues_of(json{{"system", "diatomic"}}, "study"), "/study: required"));
  CHECK(has_issue(issues_of(json{{"system", "diatomic"}, {"command", "study"}}, "solve"), "/command"));
  CHECK(has_issue(issues_of(json{{"system", "diatomic"}, {"study", {{"levels", {8, 6}}, {"reference", {{"n", 16}}}}}}, "study"),
                  "/study/levels/1: levels must increase"));
  CHECK(has_issue(issues_of(json{{"system", "diatomic"}, {"study", {{"levels", {8, 16}}, {"reference", {{"n", 16}}}}}}, "study"),
                  "/study/reference: must be finer"));
  CHECK(issues_of(json{{"system", "diatomic"}, {"study", {{"levels", {8}}, {"reference", {{"n", 8}, {"degree", 2}}}}}}, "study")
            .empty());
}

TEST_CASE("config: --set overrides") {
  json j = {{"system", "diatomic"}};
  apply_override(j, "scf.density_tol=1e-6");
  apply_override(j, "mesh.n=12");
  apply_override(j, "study.levels=[4,8]");
  apply_override(j, "output_dir=runs/a");
  apply_override(j, "scf.mixing=linear");
  CHECK(j["scf"]["density_tol"] == 1e-6);
  CHECK(j["mesh"]["n"] == 12);
  CHECK(j["study"]["levels"] == json::array({4, 8}));
  CHECK(j["output_dir"] == "runs/a");
  CHECK(j["scf"]["mixing"] == "linear");
  CHECK_THROWS_AS(apply_override(j, "novalue"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "a..b=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "mesh.n.x=1"), ConfigError);
}

TEST_CASE("cache keys follow the system, level and tolerances") {
  const auto sys = physics::preset_system("diatomic");
  ksdft::ScfConfig scf;
  const auto k = reference_cache_key(sys, {8, 1}, scf);
  CHECK(k.size() == 16);
  CHECK(k == reference_cache_key(sys, {8, 1}, scf));
  CHECK(k != reference_cache_key(sys, {8, 2}, scf));
  CHECK(k != reference_cache_key(sys, {16, 1}, scf));
  auto tighter = scf;
  tighter.density_tol = 1e-10;
  CHECK(k != reference_cache_key(sys, {8, 1}, tighter));
  auto other = sys;
  other.pseudo.nuclei[0].charge = 2.5;
  CHECK(k != reference_cache_key(other, {8, 1}, scf));
}

TEST_CASE("cli: solve writes the ground state and a report") {
  TempDir tmp("solve");
  const auto out = tmp.path / "out";
  const auto cfg = write_config(tmp.path, {{"system", "diatomic"}, {"mesh", {{"n", 8}, {"degree", 1}}}, {"output_dir", out.string()}});
  CHECK(run({"ksfem", "solve", cfg.string()}) == kExitOk);
  REQUIRE(fs::exists(out / "ground_state.json"));
  const auto report = json::parse(slurp(out / "report.json"));
  CHECK(report["status"] == "ok");
  CHECK(report["converged"]["ground_state"] == true);
  CHECK(report["config"]["mesh"]["n"] == 8);
  CHECK(report["phases"].contains("solve"));
  CHECK(report["outputs"].size() == 2);
  CHECK(report["build_id"].is_string());

  SECTION("unconverged runs exit with 2") {
    CHECK(run({"ksfem", "solve", cfg.string(), "--set", "scf.max_iter=1"}) == kExitUnconverged);
    CHECK(json::parse(slurp(out / "report.json"))["status"] == "unconverged");
  }
  SECTION("malformed configs exit with 1 and write nothing") {
    const auto bad_out = tmp.path / "bad";
    CHECK(run({"ksfem", "solve", cfg.string(), "--set", "scf.density_tol=-1", "--set", "output_dir=" + bad_out.string()}) ==
          kExitError);
    CHECK_FALSE(fs::exists(bad_out));
    CHECK(run({"ksfem", "solve", (tmp.path / "missing.json").string()}) == kExitError);
    CHECK(run({"ksfem", "bogus"}) == kExitError);
  }
  SECTION("direct minimization") {
    CHECK(run({"ksfem", "solve", cfg.string(), "--set", "method=direct"}) == kExitOk);
    CHECK(json::parse(slurp(out / "report.json"))["result"]["method"] == "direct");
  }
}

TEST_CASE("cli: study of a linear system reports second-order slopes") {
  TempDir tmp("study");
  const auto out = tmp.path / "out";
  const auto cfg = write_config(tmp.path, {{"system", "free_box"},
                                           {"study", {{"degree", 1}, {"levels", {4, 8, 16}}, {"reference", "analytic"}}},
                                           {"output_dir", out.string()}});
  CHECK(run({"ksfem", "study", cfg.string()}) == kExitOk);
  const auto csv = slurp(out / "rates.csv");
  CHECK(csv.rfind("h,dofs,energy_err,ev1_err,ev2_err,h1_err,l2_err\n", 0) == 0);
  const auto pos = csv.find("# slope_ev1_err=");
  REQUIRE(pos != std::string::npos);
  CHECK(std::abs(std::stod(csv.substr(pos + 16)) - 2.0) < 0.1);
  CHECK(fs::exists(out / "rates.gp"));
}

TEST_CASE("cli: reference cache") {
  TempDir tmp("cache");
  const auto cache = tmp.path / "cache";
  ::setenv("KSFEM_CACHE_DIR", cache.string().c_str(), 1);
  const auto out = tmp.path / "out";
  const auto cfg = write_config(tmp.path, {{"system", "diatomic"},
                                           {"study", {{"degree", 1}, {"levels", {4, 6}}, {"reference", {{"n", 8}}}}},
                                           {"output_dir", out.string()}});
  const auto study = [&] {
    REQUIRE(run({"ksfem", "study", cfg.string()}) == kExitOk);
    return std::make_pair(slurp(out / "rates.csv"), json::parse(slurp(out / "report.json")));
  };
  const auto [csv1, rep1] = study();
  CHECK(rep1["cache"]["hit"] == false);
  CHECK(rep1["phases"]["reference_solve"].get<double>() > 0.0);

  const auto [csv2, rep2] = study();
  CHECK(rep2["cache"]["hit"] == true);
  CHECK(rep2["phases"]["reference_solve"].get<double>() == 0.0);
  CHECK(csv1 == csv2);

  const fs::path entry = rep2["cache"]["path"].get<std::string>();
  std::ofstream(entry) << "{\"format\": 1, \"orbitals\": [";
  const auto [csv3, rep3] = study();
  CHECK(rep3["cache"]["hit"] == false);
  CHECK(rep3["cache"]["recovered_from_corruption"] == true);
  CHECK(csv3 == csv1);

  fs::remove_all(cache);
  const auto [csv4, rep4] = study();
  CHECK(rep4["cache"]["hit"] == false);
  CHECK(csv4 == csv1);

  CHECK(run({"ksfem", "study", cfg.string(), "--set", "scf.density_tol=1e-9"}) == kExitOk);
  CHECK(json::parse(slurp(out / "report.json"))["cache"]["hit"] == false);
  ::unsetenv("KSFEM_CACHE_DIR");
}

TEST_CASE("cli: infsup and oracle-check") {
  TempDir tmp("audit");
  const auto out = tmp.path / "out";
  const auto cfg = write_config(tmp.path, {{"system", "diatomic"}, {"mesh", {{"n", 6}}}, {"output_dir", out.string()}});
  CHECK(run({"ksfem", "infsup", cfg.string(), "--set", "infsup.subspace_dim=2"}) == kExitOk);
  const auto audit = json::parse(slurp(out / "infsup.json"));
  CHECK(audit["positive"] == true);
  CHECK(audit["dimension"] == 4);

  const auto ocfg = write_config(tmp.path, {{"output_dir", (tmp.path / "oracles").string()}});
  CHECK(run({"ksfem", "oracle-check", ocfg.string()}) == kExitOk);
  const auto report = json::parse(slurp(tmp.path / "oracles" / "report.json"));
  CHECK(report["oracles"].size() >= 10);
}

TEST_CASE("cli: KSFEM_THREADS is validated") {
  ::setenv("KSFEM_THREADS", "0", 1);
  CHECK(thread_count() >= 1);
  ::setenv("KSFEM_THREADS", "3", 1);
  CHECK(thread_count() == 3);
  ::setenv("KSFEM_THREADS", "-2", 1);
  CHECK_THROWS_AS(thread_count(), std::invalid_argument);
  TempDir tmp("threads");
  const auto cfg = write_config(tmp.path, {{"system", "diatomic"}, {"output_dir", (tmp.path / "o").string()}});
  CHECK(run({"ksfem", "solve", cfg.string()}) == kExitError);
  CHECK_FALSE(fs::exists(tmp.path / "o"));
  ::unsetenv("KSFEM_THREADS");
}
