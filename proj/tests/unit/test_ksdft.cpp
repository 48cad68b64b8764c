#include "catch_amalgamated.hpp"

#include "ksfem/fem/assembly.hpp"
#include "ksfem/ksdft/io.hpp"
#include "ksfem/ksdft/model.hpp"
#include "ksfem/ksdft/scf.hpp"

#include <Eigen/QR>

#include <filesystem>
#include <numbers>
#include <random>

using namespace ksfem;
using namespace ksfem::ksdft;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::shared_ptr<const fem::FeSpace> make_space(double L, int n, int degree) {
  return std::make_shared<fem::FeSpace>(std::make_shared<mesh::Mesh>(mesh::build_uniform_mesh(L, n)), degree);
}

KohnShamModel make_model(const std::string &preset, int n, int degree) {
  const auto sys = physics::preset_system(preset);
  return KohnShamModel(sys, make_space(sys.half_width, n, degree));
}

Matrix random_orthogonal(int n, std::mt19937_64 &rng) {
  std::normal_distribution<double> nd;
  Matrix a(n, n);
  for (auto &v : a.reshaped()) v = nd(rng);
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ();
  if (rng() & 1) q.col(0) *= -1.0;  // include reflections
  return q;
}

Matrix random_block(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 &rng) {
  std::normal_distribution<double> nd;
  Matrix a(rows, cols);
  for (auto &v : a.reshaped()) v = nd(rng);
  return a;
}

ScfConfig anderson_config() {
  ScfConfig cfg;
  cfg.mixing = {MixingKind::anderson, 0.5, 5};
  cfg.density_tol = 1e-9;
  return cfg;
}

physics::ModelSystem oscillator(double half_width) {
  auto sys = physics::preset_system("harmonic");
  sys.half_width = half_width;
  return sys;
}

} // namespace

TEST_CASE("Hamiltonian is symmetric and drops density terms at zero density") {
  const auto model = make_model("diatomic", 4, 2);
  const auto &s = model.space();
  std::mt19937_64 rng(1);
  const fem::DensityField zero{Vector::Zero(static_cast<Eigen::Index>(s.n_quad_points()))};

  // without exchange-correlation the Hartree part vanishes at ρ = 0
  auto sys = model.system();
  sys.xc = physics::XcFunctional::none();
  const KohnShamModel bare(sys, model.space_ptr());
  const auto a = bare.hamiltonian_for_density(zero);
  const auto manual = bare.stiffness().scaled(0.5).added(fem::assemble_weighted_mass(s, bare.local_potential()), 1.0);
  const Matrix x = random_block(s.n_dofs(), 2, rng);
  const Matrix expect = manual.multiply(x) + physics::apply_nonlocal(bare.projector_loads(), x);
  CHECK((a.apply(x) - expect).norm() <= 1e-13 * expect.norm());

  const auto full = model.hamiltonian_for_density(model.density(orthonormalize_block(model.mass(), x)));
  const Vector u = x.col(0), v = x.col(1);
  const double uv = u.dot(full.apply(v).col(0)), vu = v.dot(full.apply(u).col(0));
  CHECK_THAT(uv, WithinAbs(vu, 1e-12 * (std::abs(uv) + 1.0)));
}

TEST_CASE("orthonormalize: Gram matrix, idempotence, scaling, rank deficiency") {
  const auto s = make_space(3.0, 3, 2);
  const auto m = fem::assemble_mass(*s);
  std::mt19937_64 rng(2);
  const Matrix block = random_block(s->n_dofs(), 4, rng);
  const auto q = orthonormalize(s, m, block);
  CHECK(q.count() == 4);
  const Matrix g = q.coeffs.transpose() * m.multiply(q.coeffs);
  CHECK((g - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);

  const Matrix again = orthonormalize_block(m, q.coeffs);
  CHECK((again - q.coeffs).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix scaled = orthonormalize_block(m, 7.0 * block);
  CHECK((scaled - q.coeffs).cwiseAbs().maxCoeff() < 1e-12);

  // span preserved: block = Q R with R upper triangular
  const Matrix r = q.coeffs.transpose() * m.multiply(block);
  CHECK((q.coeffs * r - block).norm() < 1e-10 * block.norm());
  CHECK(r.triangularView<Eigen::StrictlyLower>().toDenseMatrix().cwiseAbs().maxCoeff() < 1e-10 * r.norm());

  Matrix dependent = block;
  dependent.col(3) = 2.0 * block.col(0) - block.col(2);
  CHECK_THROWS_AS(orthonormalize_block(m, dependent), std::runtime_error);
  Matrix zero_col = block;
  zero_col.col(1).setZero();
  CHECK_THROWS_AS(orthonormalize_block(m, zero_col), std::runtime_error);
}

TEST_CASE("energy is invariant under orthogonal transforms of the orbitals") {
  std::mt19937_64 rng(3);
  for (const auto &[preset, n] : {std::pair{"diatomic", 4}, std::pair{"tetrahedral", 4}}) {
    INFO(preset);
    const auto model = make_model(preset, n, 1);
    const int ne = model.n_electrons();
    const Matrix phi = random_guess(model, ne, 17);
    const double e = model.energy(phi);
    const Matrix lambda = model.lagrange_multipliers(phi);
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix u = random_orthogonal(ne, rng);
      CHECK_THAT(model.energy(phi * u), WithinRel(e, 1e-12));
      const Matrix lu = model.lagrange_multipliers(phi * u);
      CHECK((lu - u.transpose() * lambda * u).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + lambda.norm()));
      CHECK_THAT(lu.trace(), WithinRel(lambda.trace(), 1e-12));
    }
    CHECK((lambda - lambda.transpose()).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + lambda.norm()));
  }
}

TEST_CASE("Lagrange multipliers are diagonal in an eigenbasis") {
  const auto sys = oscillator(6.0);
  const KohnShamModel model(sys, make_space(6.0, 6, 1));
  const auto a = model.hamiltonian_for_density(model.density(atomic_guess(model, 1)));
  const auto eig = sparse::lowest_eigenpairs(a, model.mass(), 3, Matrix());
  const Matrix lambda = eig.vectors.transpose() * a.apply(eig.vectors);
  CHECK((lambda - Matrix(eig.eigenvalues.asDiagonal())).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("linear systems converge in one SCF iteration") {
  const auto sys = oscillator(6.0);
  const KohnShamModel model(sys, make_space(6.0, 8, 1));
  const auto gs = scf_solve(model, ScfConfig{});
  CHECK(gs.converged);
  CHECK(gs.iterations == 1);
  CHECK(gs.history.size() == 1);
  CHECK(gs.history[0].density_residual == 0.0);
  const auto eig = sparse::lowest_eigenpairs(model.hamiltonian(model.local_potential()), model.mass(), 3, Matrix());
  CHECK_THAT(gs.total_energy, WithinRel(eig.eigenvalues[0], 1e-10));
  CHECK_THAT(gs.eigenvalue(1), WithinRel(eig.eigenvalues[0], 1e-10));
  CHECK_THAT(gs.eigenvalue(2), WithinRel(eig.eigenvalues[1], 1e-8));
  CHECK(gs.aufbau);
}

TEST_CASE("oscillator and free-box ground states converge at second order") {
  SECTION("harmonic oscillator, λ₁ = 3/2") {
    std::vector<double> err;
    for (int n : {8, 16}) {
      const KohnShamModel model(oscillator(6.0), make_space(6.0, n, 1));
      err.push_back(scf_solve(model, ScfConfig{}).total_energy - 1.5);
    }
    CHECK(err[0] > err[1]);
    CHECK(err[1] > 0.0);
    CHECK_THAT(std::log2(err[0] / err[1]), WithinAbs(2.0, 0.3));
    const KohnShamModel p2(oscillator(6.0), make_space(6.0, 8, 2));
    const double p2_err = scf_solve(p2, ScfConfig{}).total_energy - 1.5;
    CHECK(p2_err > 0.0);
    CHECK(p2_err < err[1]);
  }
  SECTION("free box on [-π/2, π/2]³, E = 3/2") {
    std::vector<double> err;
    for (int n : {4, 8, 16}) {
      const auto model = make_model("free_box", n, 1);
      err.push_back(scf_solve(model, ScfConfig{}).total_energy - 1.5);
    }
    CHECK(err[2] > 0.0);
    CHECK_THAT(std::log2(err[1] / err[2]), WithinAbs(2.0, 0.2));
    const auto p2 = make_model("free_box", 4, 2);
    const double p2_err = scf_solve(p2, ScfConfig{}).total_energy - 1.5;
    CHECK(p2_err > 0.0);
    CHECK(p2_err < err[1]);
  }
}

TEST_CASE("degenerate Fermi level is reported") {
  // the cube's second Dirichlet mode is threefold degenerate
  auto sys = physics::preset_system("free_box");
  sys.n_electrons = 2;
  const KohnShamModel model(sys, make_space(sys.half_width, 4, 1));
  CHECK_THROWS_AS(scf_solve(model, ScfConfig{}), DegenerateFermiLevel);
}

TEST_CASE("SCF config validation") {
  ScfConfig cfg;
  cfg.mixing.beta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.density_tol = -1e-8;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.max_iter = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_NOTHROW(ScfConfig{}.validate());
}

TEST_CASE("diatomic SCF: convergence, symmetry, energy identity, fixed point") {
  const auto model = make_model("diatomic", 8, 1);
  const auto gs = scf_solve(model, anderson_config());
  REQUIRE(gs.converged);
  CHECK(gs.history.back().density_residual < 1e-7);
  CHECK(gs.aufbau);
  // regression snapshot recorded when the preset was fixed
  CHECK_THAT(gs.total_energy, WithinAbs(-1.475850912, 1e-8));
  CHECK_THAT(gs.eigenvalues[0], WithinAbs(-0.5318253756, 1e-8));
  CHECK((gs.multipliers - gs.multipliers.transpose()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK_THAT(model.energy(gs.orbitals.coeffs), WithinRel(gs.total_energy, 1e-12));
  CHECK(model.orthonormality_defect(gs.orbitals.coeffs) < 1e-10);
  CHECK(gs.eigenvalues[0] <= gs.eigenvalues[1]);
  // Λ's spectrum coincides with the occupied Hamiltonian eigenvalues at self-consistency
  CHECK_THAT(gs.eigenvalues[1], WithinAbs(gs.hamiltonian_eigenvalues[1], 1e-6));

  SECTION("restart from the converged orbitals") {
    const auto again = scf_solve(model, anderson_config(), &gs.orbitals.coeffs);
    CHECK(again.iterations == 1);
    CHECK_THAT(again.total_energy, WithinAbs(gs.total_energy, 1e-12));
  }
  SECTION("rotated initial guess gives the same density") {
    std::mt19937_64 rng(4);
    const Matrix start = atomic_guess(model, 2) * random_orthogonal(2, rng);
    const auto rotated = scf_solve(model, anderson_config(), &start);
    const Vector d = model.density(rotated.orbitals.coeffs).values - model.density(gs.orbitals.coeffs).values;
    const auto w = fem::integrate_product(model.space(), fem::QuadField{d}, fem::QuadField{d});
    CHECK(std::sqrt(w) < 1e-7);
    CHECK_THAT(rotated.total_energy, WithinRel(gs.total_energy, 1e-10));
  }
  SECTION("linear mixing reaches the same state") {
    ScfConfig cfg;
    cfg.density_tol = 1e-9;
    const auto lin = scf_solve(model, cfg);
    CHECK(lin.converged);
    CHECK_THAT(lin.total_energy, WithinRel(gs.total_energy, 1e-10));
  }
}

TEST_CASE("SCF that runs out of iterations returns a flagged state") {
  const auto model = make_model("diatomic", 4, 1);
  ScfConfig cfg;
  cfg.max_iter = 2;
  cfg.density_tol = 1e-14;
  const auto gs = scf_solve(model, cfg);
  CHECK_FALSE(gs.converged);
  CHECK(gs.iterations == 2);
  CHECK(gs.history.size() == 2);
}

TEST_CASE("direct minimization agrees with SCF") {
  SECTION("linear problem from a random start") {
    const KohnShamModel model(oscillator(6.0), make_space(6.0, 6, 1));
    const auto eig = sparse::lowest_eigenpairs(model.hamiltonian(model.local_potential()), model.mass(), 1, Matrix());
    const auto gs = direct_minimize(model, random_guess(model, 1, 5), {1e-6});
    CHECK(gs.converged);
    CHECK_THAT(gs.total_energy, WithinAbs(eig.eigenvalues[0], 1e-8));
  }
  SECTION("diatomic preset") {
    const auto model = make_model("diatomic", 4, 1);
    const auto scf = scf_solve(model, anderson_config());
    REQUIRE(scf.converged);
    const auto dm = direct_minimize(model, atomic_guess(model, 2));
    CHECK(dm.converged);
    CHECK(dm.method == "direct");
    CHECK(std::abs(dm.total_energy - scf.total_energy) / std::abs(scf.total_energy) < 1e-7);
    for (std::size_t i = 1; i < dm.history.size(); ++i)
      CHECK(dm.history[i].energy <= dm.history[i - 1].energy + 1e-14 * std::abs(dm.history[i - 1].energy));
    CHECK(projected_gradient_norm(model, scf.orbitals.coeffs) < 1e-6);

    const auto from_scf = direct_minimize(model, scf.orbitals.coeffs, {1e-5});
    CHECK(from_scf.iterations == 0);
  }
}

TEST_CASE("energies decrease under nested refinement") {
  for (const char *preset : {"diatomic", "harmonic"}) {
    INFO(preset);
    double previous = 1e300;
    for (int n : {4, 8, 16}) {
      const auto model = make_model(preset, n, 1);
      const auto gs = scf_solve(model, anderson_config());
      REQUIRE(gs.converged);
      CHECK(gs.total_energy <= previous + 1e-10);
      previous = gs.total_energy;
    }
  }
}

TEST_CASE("coercivity: E(Ψ) ≥ ‖Ψ‖₁²/C − b on random constraint-set members") {
  // fit b with C = 4 on smooth samples, then check rougher ones
  const auto model = make_model("diatomic", 4, 1);
  const auto &k = model.stiffness();
  const auto &m = model.mass();
  std::mt19937_64 rng(6);
  const Matrix smooth = atomic_guess(model, 2);
  auto sample = [&](double roughness) {
    const Matrix psi = orthonormalize_block(m, smooth + roughness * random_block(smooth.rows(), 2, rng));
    const double h1sq = (psi.array() * (k.multiply(psi) + m.multiply(psi)).array()).sum();
    return std::pair{h1sq, model.energy(psi)};
  };
  constexpr double c = 4.0;
  double b = -1e300;
  for (int i = 0; i < 50; ++i) {
    const auto [h1sq, e] = sample(0.01 * i);
    b = std::max(b, h1sq / c - e);
  }
  for (int i = 0; i < 50; ++i) {
    const auto [h1sq, e] = sample(0.05 * std::pow(1.15, i));
    CHECK(e >= h1sq / c - b);
  }
  CHECK(std::isfinite(b));
}

TEST_CASE("ground state JSON round trip") {
  const auto model = make_model("diatomic", 4, 1);
  const auto gs = scf_solve(model, anderson_config());
  const auto text = ground_state_to_json(gs, "diatomic");
  const auto back = ground_state_from_json(text, model.space_ptr());
  CHECK(back.orbitals.coeffs == gs.orbitals.coeffs);
  CHECK(back.multipliers == gs.multipliers);
  CHECK(back.eigenvalues == gs.eigenvalues);
  CHECK(back.hamiltonian_eigenvalues == gs.hamiltonian_eigenvalues);
  CHECK(back.total_energy == gs.total_energy);
  CHECK(back.terms.xc == gs.terms.xc);
  CHECK(back.history.size() == gs.history.size());
  CHECK(back.history.back().energy == gs.history.back().energy);
  CHECK(back.converged == gs.converged);
  CHECK(ground_state_to_json(back, "diatomic") == text);

  const auto d = stored_discretization(text);
  CHECK(d.cells == 4);
  CHECK(d.degree == 1);

  const auto path = std::filesystem::temp_directory_path() / "ksfem_test_gs.json";
  save_ground_state(path, gs, "diatomic");
  CHECK(load_ground_state(path, model.space_ptr()).total_energy == gs.total_energy);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(ground_state_from_json(text, make_space(model.system().half_width, 5, 1)), GroundStateFormatError);
  CHECK_THROWS_AS(ground_state_from_json(text.substr(0, text.size() / 2), model.space_ptr()), GroundStateFormatError);
  CHECK_THROWS_AS(ground_state_from_json("{\"format\": 99}", model.space_ptr()), GroundStateFormatError);
  CHECK_THROWS_AS(load_ground_state("/nonexistent/ksfem.json", model.space_ptr()), GroundStateFormatError);
}
