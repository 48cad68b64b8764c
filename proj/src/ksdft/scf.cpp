#include "ksfem/ksdft/scf.hpp"

#include "ksfem/fem/assembly.hpp"
#include "ksfem/log.hpp"
#include "ksfem/sparse/cg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <numbers>
#include <random>

namespace ksfem::ksdft {

void ScfConfig::validate() const {
  if (!(mixing.beta > 0.0 && mixing.beta <= 1.0)) throw std::invalid_argument("scf: mixing beta must lie in (0, 1]");
  if (mixing.depth < 1) throw std::invalid_argument("scf: Anderson depth must be at least 1");
  if (!(density_tol > 0.0)) throw std::invalid_argument("scf: density_tol must be positive");
  if (!(eig_tol > 0.0)) throw std::invalid_argument("scf: eig_tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("scf: max_iter must be at least 1");
}

double GroundState::eigenvalue(int i) const {
  if (i < 1) throw std::out_of_range("eigenvalue index starts at 1");
  if (i <= eigenvalues.size()) return eigenvalues[i - 1];
  if (i <= hamiltonian_eigenvalues.size()) return hamiltonian_eigenvalues[i - 1];
  throw std::out_of_range(fmt::format("eigenvalue {} not available", i));
}

namespace {

Vector quadrature_weights(const fem::FeSpace &space) {
  const std::size_t nq = space.qp_per_element();
  Vector w(static_cast<Eigen::Index>(space.n_quad_points()));
  for (std::size_t t = 0; t < space.n_tets(); ++t)
    for (std::size_t q = 0; q < nq; ++q) w[static_cast<Eigen::Index>(t * nq + q)] = space.quad_weight(t, q);
  return w;
}

Vector sorted_eigenvalues(const Matrix &lambda) {
  const Matrix sym = 0.5 * (lambda + lambda.transpose());
  return Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly).eigenvalues();
}

void check_fermi_gap(const Vector &ev, int n) {
  if (ev.size() <= n) return;
  const double gap = ev[n] - ev[n - 1];
  if (gap < 1e-6 * std::max(1.0, std::abs(ev[n - 1])))
    throw DegenerateFermiLevel(fmt::format("degenerate Fermi level: lambda_{} = {:.10f}, lambda_{} = {:.10f}; "
                                           "integer occupation is ill-defined",
                                           n, ev[n - 1], n + 1, ev[n]));
}

// Pulay/Anderson extrapolation on the density residual.
class AndersonMixer {
public:
  AndersonMixer(int depth, double beta, Vector weights) : depth_(depth), beta_(beta), w_(std::move(weights)) {}

  Vector next(const Vector &rho_in, const Vector &rho_out) {
    inputs_.push_back(rho_in);
    residuals_.push_back(rho_out - rho_in);
    if (static_cast<int>(inputs_.size()) > depth_) {
      inputs_.erase(inputs_.begin());
      residuals_.erase(residuals_.begin());
    }
    const auto m = static_cast<Eigen::Index>(inputs_.size());
    Matrix sys = Matrix::Zero(m + 1, m + 1);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j <= i; ++j)
        sys(i, j) = sys(j, i) = (residuals_[i].array() * residuals_[j].array() * w_.array()).sum();
    const double scale = sys.topLeftCorner(m, m).trace() / static_cast<double>(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      sys(i, i) += 1e-12 * scale;
      sys(i, m) = sys(m, i) = 1.0;
    }
    Vector rhs = Vector::Zero(m + 1);
    rhs[m] = 1.0;
    const Vector c = sys.fullPivLu().solve(rhs);
    Vector mixed = Vector::Zero(rho_in.size());
    for (Eigen::Index i = 0; i < m; ++i) mixed += c[i] * (inputs_[i] + beta_ * residuals_[i]);
    return mixed.cwiseMax(0.0);
  }

private:
  int depth_;
  double beta_;
  Vector w_;
  std::vector<Vector> inputs_, residuals_;
};

} // namespace

Matrix atomic_guess(const KohnShamModel &model, int count) {
  const auto &pseudo = model.system().pseudo;
  std::vector<std::pair<Point, double>> centres;
  for (const auto &n : pseudo.nuclei) centres.emplace_back(n.position, std::max(1.0, n.core_radius));
  if (centres.empty()) centres.emplace_back(Point{0.0, 0.0, 0.0}, 1.0);

  // s functions first, then p_x, p_y, p_z moments on every centre
  std::vector<std::function<double(const Point &)>> shapes;
  for (int moment = -1; moment < 3; ++moment)
    for (const auto &[c, w] : centres)
      shapes.emplace_back([c = c, w = w, moment](const Point &x) {
        const Point d{x[0] - c[0], x[1] - c[1], x[2] - c[2]};
        const double g = std::exp(-(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (2.0 * w * w));
        return moment < 0 ? g : d[static_cast<std::size_t>(moment)] / w * g;
      });

  const auto space = model.space_ptr();
  Matrix block(space->n_dofs(), count);
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal;
  for (int j = 0; j < count; ++j) {
    if (j < static_cast<int>(shapes.size()))
      block.col(j) = fem::project_function(space, shapes[static_cast<std::size_t>(j)]).coeffs;
    else
      for (Eigen::Index i = 0; i < block.rows(); ++i) block(i, j) = normal(rng);
  }
  try {
    return orthonormalize_block(model.mass(), block);
  } catch (const std::runtime_error &) {
    log_warn("atomic guess is linearly dependent; falling back to random start");
    return random_guess(model, count, 0x5eedULL);
  }
}

Matrix random_guess(const KohnShamModel &model, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix block(model.space().n_dofs(), count);
  for (Eigen::Index j = 0; j < block.cols(); ++j)
    for (Eigen::Index i = 0; i < block.rows(); ++i) block(i, j) = normal(rng);
  return orthonormalize_block(model.mass(), block);
}

GroundState scf_solve(const KohnShamModel &model, const ScfConfig &config, const Matrix *initial) {
  config.validate();
  const int n = model.n_electrons();
  const int nev = std::min(n + 2, model.space().n_dofs());
  const auto &space = model.space();

  Matrix phi;
  if (initial) {
    if (initial->rows() != space.n_dofs() || initial->cols() != n)
      throw std::invalid_argument("scf_solve: initial orbitals have the wrong shape");
    phi = orthonormalize_block(model.mass(), *initial);
  } else {
    phi = config.initial_guess == GuessKind::random ? random_guess(model, n, config.seed) : atomic_guess(model, n);
  }

  Vector qw;
  std::unique_ptr<AndersonMixer> anderson;
  if (!model.is_linear()) {
    qw = quadrature_weights(space);
    if (config.mixing.kind == MixingKind::anderson)
      anderson = std::make_unique<AndersonMixer>(config.mixing.depth, config.mixing.beta, qw);
  }

  GroundState gs;
  fem::DensityField rho_in = model.density(phi);
  Matrix x0 = phi;
  sparse::EigenResult eig;
  fem::DensityField rho_out;
  for (int it = 1; it <= config.max_iter; ++it) {
    const auto pot = model.potentials(rho_in);
    const auto a = model.hamiltonian(pot.effective);
    eig = sparse::lowest_eigenpairs(a, model.mass(), nev, x0,
                                    {config.eig_tol, 5000, config.seed + static_cast<std::uint64_t>(it)});
    x0 = eig.vectors;
    check_fermi_gap(eig.eigenvalues, n);
    phi = eig.vectors.leftCols(n);
    rho_out = model.density(phi);

    double residual = 0.0;
    if (!model.is_linear()) {
      const Vector d = rho_out.values - rho_in.values;
      residual = std::sqrt((d.array() * d.array() * qw.array()).sum());
    }
    const double energy = model.energy(phi);
    gs.history.push_back({it, residual, energy});
    gs.iterations = it;
    log_debug("scf {:3d}  residual {:.3e}  energy {:.12f}", it, residual, energy);

    if (model.is_linear() || residual <= config.density_tol) {
      gs.converged = true;
      break;
    }
    if (anderson)
      rho_in.values = anderson->next(rho_in.values, rho_out.values);
    else
      rho_in.values = (1.0 - config.mixing.beta) * rho_in.values + config.mixing.beta * rho_out.values;
  }
  if (!gs.converged)
    log_warn("scf: not converged after {} iterations (density residual {:.3e})", config.max_iter,
             gs.history.back().density_residual);

  gs.orbitals = {model.space_ptr(), phi};
  gs.terms = model.energy_terms(phi);
  gs.total_energy = gs.terms.total();
  gs.multipliers = model.lagrange_multipliers(phi);
  gs.eigenvalues = sorted_eigenvalues(gs.multipliers);
  if (model.is_linear()) {
    gs.hamiltonian_eigenvalues = eig.eigenvalues;
  } else {
    const auto a = model.hamiltonian_for_density(rho_out);
    gs.hamiltonian_eigenvalues =
        sparse::lowest_eigenpairs(a, model.mass(), nev, x0, {config.eig_tol, 5000, config.seed}).eigenvalues;
  }
  gs.aufbau = nev <= n || gs.eigenvalues.maxCoeff() < gs.hamiltonian_eigenvalues[n];
  return gs;
}

double projected_gradient_norm(const KohnShamModel &model, const Matrix &phi) {
  const Matrix aphi = model.apply_hamiltonian(phi);
  const Matrix lambda = phi.transpose() * aphi;
  const Matrix r = aphi - model.mass().multiply(phi) * lambda;
  double s = 0.0;
  for (Eigen::Index j = 0; j < r.cols(); ++j) {
    const Vector rj = r.col(j);
    const Vector y = sparse::cg_solve(model.mass(), rj, {1e-12, 5000, sparse::Preconditioner::jacobi});
    s += rj.dot(y);
  }
  return 2.0 * std::sqrt(std::max(0.0, s));
}

GroundState direct_minimize(const KohnShamModel &model, const Matrix &phi0, const DirectMinConfig &config) {
  const int n = model.n_electrons();
  if (phi0.rows() != model.space().n_dofs() || phi0.cols() != n)
    throw std::invalid_argument("direct_minimize: initial orbitals have the wrong shape");
  const auto &m = model.mass();
  const auto precond = model.stiffness().scaled(0.5).added(m, config.shift);
  const sparse::CgOptions inner{1e-10, 5000, sparse::Preconditioner::jacobi};

  Matrix phi = orthonormalize_block(m, phi0);
  double energy = model.energy(phi);
  double step = config.initial_step;
  GroundState gs;
  gs.method = "direct";
  for (int it = 0;; ++it) {
    const Matrix aphi = model.apply_hamiltonian(phi);
    const Matrix lambda = phi.transpose() * aphi;
    const Matrix r = aphi - m.multiply(phi) * lambda;
    Matrix d(r.rows(), r.cols());
    double gsq = 0.0;
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
      const Vector rj = r.col(j);
      gsq += rj.dot(sparse::cg_solve(m, rj, {1e-12, 5000, sparse::Preconditioner::jacobi}));
      d.col(j) = -sparse::cg_solve(precond, rj, inner);
    }
    const double gnorm = 2.0 * std::sqrt(std::max(0.0, gsq));
    gs.history.push_back({it, gnorm, energy});
    gs.iterations = it;
    log_debug("direct {:4d}  |grad| {:.3e}  energy {:.14f}", it, gnorm, energy);
    if (gnorm <= config.tol) {
      gs.converged = true;
      break;
    }
    if (it >= config.max_iter) break;

    d -= phi * (phi.transpose() * m.multiply(d));
    const double slope = 2.0 * (r.array() * d.array()).sum();
    if (!(slope < 0.0)) throw std::runtime_error("direct_minimize: search direction is not a descent direction");

    bool accepted = false;
    for (int k = 0; k <= config.max_halvings; ++k) {
      const Matrix trial = orthonormalize_block(m, phi + step * d);
      const double e = model.energy(trial);
      // the slack absorbs round-off once the decrease reaches machine precision
      if (e <= energy + config.armijo_c * step * slope + 1e-14 * std::abs(energy)) {
        phi = trial;
        energy = e;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted)
      throw std::runtime_error(fmt::format("direct_minimize: line search failed after {} halvings", config.max_halvings));
    step = std::min(2.0 * step, 4.0 * config.initial_step);
  }

  gs.orbitals = {model.space_ptr(), phi};
  gs.terms = model.energy_terms(phi);
  gs.total_energy = gs.terms.total();
  gs.multipliers = model.lagrange_multipliers(phi);
  gs.eigenvalues = sorted_eigenvalues(gs.multipliers);
  const int nev = std::min(n + 2, model.space().n_dofs());
  gs.hamiltonian_eigenvalues =
      sparse::lowest_eigenpairs(model.hamiltonian_for_density(model.density(phi)), m, nev, phi).eigenvalues;
  gs.aufbau = nev <= n || gs.eigenvalues.maxCoeff() < gs.hamiltonian_eigenvalues[n];
  return gs;
}

} // namespace ksfem::ksdft
