#include "ksfem/cli/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <initializer_list>
#include <set>

namespace ksfem::cli {

using nlohmann::json;

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::runtime_error([&] {
        std::string s = "invalid configuration";
        for (const auto &i : issues) s += "\n  " + i;
        return s;
      }()),
      issues_(std::move(issues)) {}

void apply_override(json &config, const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError({"--set " + assignment + ": expected key=value"});
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error &) {
    value = text;
  }
  json *node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError({"--set " + assignment + ": empty path component"});
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError({"--set " + assignment + ": '" + part + "' is below a non-object"});
      *node = json::object();
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

namespace {

std::string escape(const std::string &key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

class Checker {
public:
  void fail(const std::string &ptr, const std::string &msg) { issues_.push_back((ptr.empty() ? "/" : ptr) + ": " + msg); }
  const std::vector<std::string> &issues() const { return issues_; }

  bool object(const json &j, const std::string &ptr, std::initializer_list<const char *> allowed) {
    if (!j.is_object()) {
      fail(ptr, "expected an object");
      return false;
    }
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto &[k, v] : j.items())
      if (!ok.count(k)) fail(ptr + "/" + escape(k), "unknown key");
    return true;
  }

  double number(const json &j, const char *key, const std::string &ptr, double fallback, double lo, bool lo_open,
                double hi = std::numeric_limits<double>::infinity()) {
    if (!j.contains(key)) return fallback;
    const auto &v = j.at(key);
    const std::string p = ptr + "/" + key;
    if (!v.is_number()) {
      fail(p, "expected a number");
      return fallback;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x) || (lo_open ? x <= lo : x < lo) || x > hi) {
      if (std::isinf(hi)) fail(p, fmt::format("must be {} {}", lo_open ? ">" : ">=", lo));
      else fail(p, fmt::format("must lie in {}{}, {}]", lo_open ? "(" : "[", lo, hi));
      return fallback;
    }
    return x;
  }

  long long integer(const json &j, const char *key, const std::string &ptr, long long fallback, long long lo,
                    long long hi = std::numeric_limits<int>::max()) {
    if (!j.contains(key)) return fallback;
    return integer_value(j.at(key), ptr + "/" + key, fallback, lo, hi);
  }

  long long integer_value(const json &v, const std::string &p, long long fallback, long long lo,
                          long long hi = std::numeric_limits<int>::max()) {
    if (!v.is_number_integer()) {
      fail(p, "expected an integer");
      return fallback;
    }
    const auto x = v.get<long long>();
    if (x < lo || x > hi) {
      fail(p, fmt::format("must lie in [{}, {}]", lo, hi));
      return fallback;
    }
    return x;
  }

  bool boolean(const json &j, const char *key, const std::string &ptr, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) {
      fail(ptr + "/" + key, "expected true or false");
      return fallback;
    }
    return j.at(key).get<bool>();
  }

  std::string choice(const json &j, const char *key, const std::string &ptr, const std::string &fallback,
                     std::initializer_list<const char *> options) {
    if (!j.contains(key)) return fallback;
    const std::string p = ptr + "/" + key;
    if (!j.at(key).is_string()) {
      fail(p, "expected a string");
      return fallback;
    }
    const auto s = j.at(key).get<std::string>();
    for (const char *o : options)
      if (s == o) return s;
    std::string list;
    for (const char *o : options) list += (list.empty() ? "" : ", ") + std::string(o);
    fail(p, "must be one of " + list);
    return fallback;
  }

  Point point(const json &j, const char *key, const std::string &ptr, const Point &fallback) {
    if (!j.contains(key)) return fallback;
    const auto &v = j.at(key);
    const std::string p = ptr + "/" + key;
    if (!v.is_array() || v.size() != 3 || !std::all_of(v.begin(), v.end(), [](const json &x) { return x.is_number(); })) {
      fail(p, "expected an array of three numbers");
      return fallback;
    }
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
  }

private:
  std::vector<std::string> issues_;
};

physics::ModelSystem parse_system(Checker &c, const json &j, const std::string &ptr) {
  if (j.is_string()) {
    try {
      return physics::preset_system(j.get<std::string>());
    } catch (const std::invalid_argument &) {
      c.fail(ptr, "unknown preset '" + j.get<std::string>() + "'");
      return {};
    }
  }
  if (!c.object(j, ptr,
                {"preset", "name", "half_width", "n_electrons", "xc", "alpha_x", "hartree", "hartree_rule",
                 "harmonic_omega", "nuclei", "projectors"}))
    return {};
  physics::ModelSystem s;
  if (j.contains("preset")) s = parse_system(c, j.at("preset"), ptr + "/preset");
  if (j.contains("name")) {
    if (j.at("name").is_string()) s.name = j.at("name").get<std::string>();
    else c.fail(ptr + "/name", "expected a string");
  }
  s.half_width = c.number(j, "half_width", ptr, s.half_width, 0.0, true);
  s.n_electrons = static_cast<int>(c.integer(j, "n_electrons", ptr, s.n_electrons, 1));
  const double alpha = c.number(j, "alpha_x", ptr, s.xc.kind() == physics::XcKind::xalpha ? s.xc.alpha_x() : 2.0 / 3.0,
                                0.0, true);
  if (j.contains("xc") || j.contains("alpha_x")) {
    const auto name = c.choice(j, "xc", ptr, s.xc.name(), {"none", "dirac", "xalpha", "lda_pz81"});
    s.xc = physics::XcFunctional::from_name(name, alpha);
  }
  s.hartree = c.boolean(j, "hartree", ptr, s.hartree);
  s.hartree_rule = physics::boundary_rule_from_string(
      c.choice(j, "hartree_rule", ptr, physics::to_string(s.hartree_rule), {"multipole2", "direct"}));
  s.pseudo.harmonic_omega = c.number(j, "harmonic_omega", ptr, s.pseudo.harmonic_omega, 0.0, false);
  if (j.contains("nuclei")) {
    const auto &arr = j.at("nuclei");
    s.pseudo.nuclei.clear();
    if (!arr.is_array()) c.fail(ptr + "/nuclei", "expected an array");
    else
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = ptr + "/nuclei/" + std::to_string(i);
        if (!c.object(arr[i], p, {"position", "charge", "core_radius"})) continue;
        physics::Nucleus n;
        n.position = c.point(arr[i], "position", p, n.position);
        n.charge = c.number(arr[i], "charge", p, n.charge, 0.0, false);
        n.core_radius = c.number(arr[i], "core_radius", p, n.core_radius, 0.0, true);
        s.pseudo.nuclei.push_back(n);
      }
  }
  if (j.contains("projectors")) {
    const auto &arr = j.at("projectors");
    s.pseudo.projectors.clear();
    if (!arr.is_array()) c.fail(ptr + "/projectors", "expected an array");
    else
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = ptr + "/projectors/" + std::to_string(i);
        if (!c.object(arr[i], p, {"center", "width", "strength", "kind"})) continue;
        physics::Projector q;
        q.center = c.point(arr[i], "center", p, q.center);
        q.width = c.number(arr[i], "width", p, q.width, 0.0, true);
        q.strength = c.number(arr[i], "strength", p, q.strength, 0.0, false);
        q.kind = physics::projector_kind_from_string(c.choice(arr[i], "kind", p, "s", {"s", "px", "py", "pz"}));
        s.pseudo.projectors.push_back(q);
      }
  }
  return s;
}

ksdft::ScfConfig parse_scf(Checker &c, const json &j, const std::string &ptr) {
  ksdft::ScfConfig s;
  s.mixing.kind = ksdft::MixingKind::anderson;
  s.mixing.beta = 0.5;
  if (!c.object(j, ptr, {"mixing", "beta", "depth", "density_tol", "max_iter", "eig_tol", "initial_guess"})) return s;
  s.mixing.kind = c.choice(j, "mixing", ptr, "anderson", {"linear", "anderson"}) == "linear" ? ksdft::MixingKind::linear
                                                                                                : ksdft::MixingKind::anderson;
  s.mixing.beta = c.number(j, "beta", ptr, s.mixing.beta, 0.0, true, 1.0);
  s.mixing.depth = static_cast<int>(c.integer(j, "depth", ptr, s.mixing.depth, 1, 50));
  s.density_tol = c.number(j, "density_tol", ptr, s.density_tol, 0.0, true);
  s.max_iter = static_cast<int>(c.integer(j, "max_iter", ptr, s.max_iter, 1));
  s.eig_tol = c.number(j, "eig_tol", ptr, s.eig_tol, 0.0, true);
  s.initial_guess = c.choice(j, "initial_guess", ptr, "atomic_gaussian", {"atomic_gaussian", "random"}) == "random"
                        ? ksdft::GuessKind::random
                        : ksdft::GuessKind::atomic_gaussian;
  return s;
}

analysis::LevelSpec parse_level(Checker &c, const json &j, const std::string &ptr, analysis::LevelSpec fallback) {
  if (!c.object(j, ptr, {"n", "degree"})) return fallback;
  fallback.n = static_cast<int>(c.integer(j, "n", ptr, fallback.n, 1, 512));
  fallback.degree = static_cast<int>(c.integer(j, "degree", ptr, fallback.degree, 1, 2));
  return fallback;
}

StudySettings parse_study(Checker &c, const json &j, const std::string &ptr) {
  StudySettings s;
  if (!c.object(j, ptr, {"degree", "levels", "reference", "infsup_dim"})) return s;
  s.degree = static_cast<int>(c.integer(j, "degree", ptr, 1, 1, 2));
  s.infsup_dim = static_cast<int>(c.integer(j, "infsup_dim", ptr, 0, 0, 64));
  if (!j.contains("levels")) c.fail(ptr + "/levels", "required");
  else if (!j.at("levels").is_array() || j.at("levels").empty()) c.fail(ptr + "/levels", "expected a non-empty array");
  else {
    const auto &arr = j.at("levels");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto n = c.integer_value(arr[i], ptr + "/levels/" + std::to_string(i), -1, 2, 512);
      if (n < 0) continue;
      if (!s.levels.empty() && n <= s.levels.back()) c.fail(ptr + "/levels/" + std::to_string(i), "levels must increase");
      s.levels.push_back(static_cast<int>(n));
    }
  }
  if (!j.contains("reference")) c.fail(ptr + "/reference", "required (an {n, degree} object or \"analytic\")");
  else if (j.at("reference").is_string()) {
    if (j.at("reference").get<std::string>() == "analytic") s.analytic_reference = true;
    else c.fail(ptr + "/reference", "expected \"analytic\" or an {n, degree} object");
  } else {
    s.reference = parse_level(c, j.at("reference"), ptr + "/reference", {0, s.degree});
    if (s.reference.n == 0) c.fail(ptr + "/reference/n", "required");
    for (int n : s.levels)
      if (s.reference.n < n || (s.reference.n == n && s.reference.degree <= s.degree)) {
        c.fail(ptr + "/reference", "must be finer than every level");
        break;
      }
  }
  return s;
}

std::string guess_name(ksdft::GuessKind g) { return g == ksdft::GuessKind::random ? "random" : "atomic_gaussian"; }

} // namespace

json system_to_json(const physics::ModelSystem &s) {
  json j;
  j["name"] = s.name;
  j["half_width"] = s.half_width;
  j["n_electrons"] = s.n_electrons;
  j["xc"] = s.xc.name();
  if (s.xc.kind() == physics::XcKind::xalpha) j["alpha_x"] = s.xc.alpha_x();
  j["hartree"] = s.hartree;
  j["hartree_rule"] = physics::to_string(s.hartree_rule);
  j["harmonic_omega"] = s.pseudo.harmonic_omega;
  j["nuclei"] = json::array();
  for (const auto &n : s.pseudo.nuclei)
    j["nuclei"].push_back({{"position", n.position}, {"charge", n.charge}, {"core_radius", n.core_radius}});
  j["projectors"] = json::array();
  for (const auto &p : s.pseudo.projectors)
    j["projectors"].push_back(
        {{"center", p.center}, {"width", p.width}, {"strength", p.strength}, {"kind", physics::to_string(p.kind)}});
  return j;
}

json scf_to_json(const ksdft::ScfConfig &s) {
  return {{"mixing", s.mixing.kind == ksdft::MixingKind::linear ? "linear" : "anderson"},
          {"beta", s.mixing.beta},
          {"depth", s.mixing.depth},
          {"density_tol", s.density_tol},
          {"max_iter", s.max_iter},
          {"eig_tol", s.eig_tol},
          {"initial_guess", guess_name(s.initial_guess)}};
}

RunConfig parse_config(const json &config, const std::string &command) {
  Checker c;
  RunConfig rc;
  rc.command = command;
  if (std::none_of(std::begin(kCommands), std::end(kCommands), [&](const char *k) { return command == k; }))
    throw ConfigError({"command: unknown command '" + command + "'"});
  if (!c.object(config, "", {"command", "system", "mesh", "method", "scf", "study", "infsup", "output_dir", "seed"}))
    throw ConfigError(c.issues());

  if (config.contains("command") && (!config.at("command").is_string() || config.at("command").get<std::string>() != command))
    c.fail("/command", "does not match the requested command '" + command + "'");
  if (config.contains("system")) rc.system = parse_system(c, config.at("system"), "/system");
  else if (command != "oracle-check") c.fail("/system", "required");
  if (config.contains("mesh")) rc.mesh = parse_level(c, config.at("mesh"), "/mesh", rc.mesh);
  rc.method = c.choice(config, "method", "", "scf", {"scf", "direct"});
  rc.scf = parse_scf(c, config.contains("scf") ? config.at("scf") : json::object(), "/scf");
  if (command == "study") {
    if (config.contains("study")) rc.study = parse_study(c, config.at("study"), "/study");
    else c.fail("/study", "required for the study command");
  } else if (config.contains("study")) {
    parse_study(c, config.at("study"), "/study");
  }
  if (config.contains("infsup")) {
    const auto &j = config.at("infsup");
    if (c.object(j, "/infsup", {"subspace_dim"})) rc.subspace_dim = static_cast<int>(c.integer(j, "subspace_dim", "/infsup", 2, 1, 64));
  }
  if (config.contains("output_dir")) {
    if (!config.at("output_dir").is_string() || config.at("output_dir").get<std::string>().empty())
      c.fail("/output_dir", "expected a non-empty string");
    else rc.output_dir = config.at("output_dir").get<std::string>();
  }
  rc.seed = static_cast<std::uint64_t>(c.integer(config, "seed", "", 1, 0, std::numeric_limits<long long>::max()));
  rc.scf.seed = rc.seed;

  if (c.issues().empty() && config.contains("system")) {
    try {
      rc.system.validate();
    } catch (const std::invalid_argument &e) {
      c.fail("/system", e.what());
    }
  }
  if (c.issues().empty()) {
    try {
      rc.scf.validate();
    } catch (const std::invalid_argument &e) {
      c.fail("/scf", e.what());
    }
  }
  if (!c.issues().empty()) throw ConfigError(c.issues());

  json echo;
  echo["command"] = command;
  if (config.contains("system")) echo["system"] = system_to_json(rc.system);
  echo["mesh"] = {{"n", rc.mesh.n}, {"degree", rc.mesh.degree}};
  echo["method"] = rc.method;
  echo["scf"] = scf_to_json(rc.scf);
  if (command == "study") {
    json st;
    st["degree"] = rc.study.degree;
    st["levels"] = rc.study.levels;
    if (rc.study.analytic_reference) st["reference"] = "analytic";
    else st["reference"] = {{"n", rc.study.reference.n}, {"degree", rc.study.reference.degree}};
    st["infsup_dim"] = rc.study.infsup_dim;
    echo["study"] = st;
  }
  echo["infsup"] = {{"subspace_dim", rc.subspace_dim}};
  echo["output_dir"] = rc.output_dir;
  echo["seed"] = rc.seed;
  rc.echo = echo;
  return rc;
}

std::string reference_cache_key(const physics::ModelSystem &system, const analysis::LevelSpec &level,
                                const ksdft::ScfConfig &scf) {
  json key;
  key["system"] = system_to_json(system);
  key["n"] = level.n;
  key["degree"] = level.degree;
  key["scf"] = scf_to_json(scf);
  key["seed"] = scf.seed;
  const std::string text = key.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

} // namespace ksfem::cli
