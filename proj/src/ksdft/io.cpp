#include "ksfem/ksdft/io.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace ksfem::ksdft {

using nlohmann::json;

namespace {

json vector_json(const Vector &v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Column-major: one array per column.
json matrix_json(const Matrix &m) {
  json cols = json::array();
  for (Eigen::Index j = 0; j < m.cols(); ++j) cols.push_back(vector_json(m.col(j)));
  return cols;
}

Vector vector_from(const json &j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix matrix_from(const json &j, Eigen::Index rows) {
  Matrix m(rows, static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const Vector col = vector_from(j.at(static_cast<std::size_t>(c)));
    if (col.size() != rows) throw GroundStateFormatError("ground state: column length mismatch");
    m.col(c) = col;
  }
  return m;
}

json parse(const std::string &text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception &e) {
    throw GroundStateFormatError(std::string("ground state: malformed JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", -1) != kGroundStateFormat)
    throw GroundStateFormatError("ground state: unsupported format version");
  return j;
}

} // namespace

std::string ground_state_to_json(const GroundState &gs, const std::string &system_name) {
  if (!gs.orbitals.space) throw std::invalid_argument("ground_state_to_json: orbitals have no space");
  const auto &space = *gs.orbitals.space;
  json j;
  j["format"] = kGroundStateFormat;
  j["system"] = system_name;
  j["discretization"] = {{"half_width", space.mesh().half_width()},
                         {"cells", space.mesh().cells_per_axis()},
                         {"degree", space.degree()},
                         {"n_dofs", space.n_dofs()}};
  j["method"] = gs.method;
  j["converged"] = gs.converged;
  j["aufbau"] = gs.aufbau;
  j["iterations"] = gs.iterations;
  j["total_energy"] = gs.total_energy;
  j["terms"] = {{"kinetic", gs.terms.kinetic},
                {"local", gs.terms.local},
                {"nonlocal", gs.terms.nonlocal},
                {"hartree", gs.terms.hartree},
                {"xc", gs.terms.xc}};
  j["eigenvalues"] = vector_json(gs.eigenvalues);
  j["hamiltonian_eigenvalues"] = vector_json(gs.hamiltonian_eigenvalues);
  j["multipliers"] = matrix_json(gs.multipliers);
  json hist = json::array();
  for (const auto &r : gs.history) hist.push_back({r.iteration, r.density_residual, r.energy});
  j["history"] = hist;
  j["orbitals"] = matrix_json(gs.orbitals.coeffs);
  return j.dump();
}

StoredDiscretization stored_discretization(const std::string &text) {
  const json j = parse(text);
  try {
    const auto &d = j.at("discretization");
    return {d.at("half_width").get<double>(), d.at("cells").get<int>(), d.at("degree").get<int>(),
            d.at("n_dofs").get<int>()};
  } catch (const json::exception &e) {
    throw GroundStateFormatError(std::string("ground state: ") + e.what());
  }
}

GroundState ground_state_from_json(const std::string &text, std::shared_ptr<const fem::FeSpace> space) {
  if (!space) throw std::invalid_argument("ground_state_from_json: null space");
  const json j = parse(text);
  const auto d = stored_discretization(text);
  if (d.cells != space->mesh().cells_per_axis() || d.degree != space->degree() || d.n_dofs != space->n_dofs() ||
      d.half_width != space->mesh().half_width())
    throw GroundStateFormatError("ground state: stored discretization does not match the space");
  try {
    GroundState gs;
    gs.method = j.at("method").get<std::string>();
    gs.converged = j.at("converged").get<bool>();
    gs.aufbau = j.at("aufbau").get<bool>();
    gs.iterations = j.at("iterations").get<int>();
    gs.total_energy = j.at("total_energy").get<double>();
    const auto &t = j.at("terms");
    gs.terms = {t.at("kinetic").get<double>(), t.at("local").get<double>(), t.at("nonlocal").get<double>(),
                t.at("hartree").get<double>(), t.at("xc").get<double>()};
    gs.eigenvalues = vector_from(j.at("eigenvalues"));
    gs.hamiltonian_eigenvalues = vector_from(j.at("hamiltonian_eigenvalues"));
    const auto &orb = j.at("orbitals");
    gs.multipliers = matrix_from(j.at("multipliers"), static_cast<Eigen::Index>(orb.size()));
    for (const auto &r : j.at("history"))
      gs.history.push_back({r.at(0).get<int>(), r.at(1).get<double>(), r.at(2).get<double>()});
    gs.orbitals = {std::move(space), matrix_from(orb, d.n_dofs)};
    return gs;
  } catch (const json::exception &e) {
    throw GroundStateFormatError(std::string("ground state: ") + e.what());
  }
}

void save_ground_state(const std::filesystem::path &path, const GroundState &gs, const std::string &system_name) {
  const std::string text = ground_state_to_json(gs, system_name);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + tmp);
    os << text;
    if (!os) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

GroundState load_ground_state(const std::filesystem::path &path, std::shared_ptr<const fem::FeSpace> space) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw GroundStateFormatError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ground_state_from_json(ss.str(), std::move(space));
}

} // namespace ksfem::ksdft
