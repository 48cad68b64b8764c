#include "catch_amalgamated.hpp"

#include "ksfem/fem/assembly.hpp"
#include "ksfem/sparse/cg.hpp"
#include "ksfem/sparse/eigen_solvers.hpp"

#include <Eigen/QR>

#include <random>

using namespace ksfem;
using namespace ksfem::sparse;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Vector random_vector(int n, std::mt19937_64 &rng) {
  std::normal_distribution<double> g;
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

CsrMatrix random_symmetric(int n, int per_row, std::mt19937_64 &rng) {
  std::uniform_int_distribution<int> col(0, n - 1);
  std::normal_distribution<double> g;
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i) {
    t.push_back({i, i, 4.0 + std::abs(g(rng))});
    for (int k = 0; k < per_row; ++k) {
      const int j = col(rng);
      const double v = 0.3 * g(rng);
      t.push_back({i, j, v});
      t.push_back({j, i, v});
    }
  }
  return CsrMatrix::from_triplets(n, n, std::move(t));
}

std::shared_ptr<const fem::FeSpace> space_on(double L, int n, int degree) {
  return std::make_shared<fem::FeSpace>(std::make_shared<mesh::Mesh>(mesh::build_uniform_mesh(L, n)), degree);
}

} // namespace

TEST_CASE("csr construction sums duplicates and validates columns") {
  const auto a = CsrMatrix::from_triplets(2, 3, {{0, 2, 1.0}, {0, 0, 2.0}, {0, 2, 0.5}, {1, 1, -1.0}});
  CHECK(a.nnz() == 3);
  CHECK(a.coeff(0, 2) == 1.5);
  CHECK(a.coeff(0, 1) == 0.0);
  CHECK(a.find(0, 1) == -1);
  CHECK_THROWS(CsrMatrix(1, 2, {0, 2}, {1, 0}, {1.0, 1.0}));
  CHECK_THROWS(CsrMatrix(1, 2, {0, 1}, {2}, {1.0}));
}

TEST_CASE("matvec is linear and symmetric for symmetric matrices") {
  std::mt19937_64 rng(11);
  const auto a = random_symmetric(300, 5, rng);
  CHECK(a.asymmetry() == 0.0);
  for (int s = 0; s < 10; ++s) {
    const Vector x = random_vector(300, rng), y = random_vector(300, rng);
    const double xay = x.dot(a.multiply(y)), yax = y.dot(a.multiply(x));
    CHECK_THAT(xay, WithinAbs(yax, 1e-12 * (std::abs(xay) + 1.0)));
    const Vector lin = a.multiply(Vector(2.0 * x - 3.0 * y));
    CHECK((lin - (2.0 * a.multiply(x) - 3.0 * a.multiply(y))).norm() <= 1e-12 * lin.norm());
  }
  const Matrix blk = Matrix::Random(300, 3);
  CHECK((a.multiply(blk) - a.to_dense() * blk).norm() < 1e-11);
}

TEST_CASE("cg on the identity returns the right-hand side") {
  std::mt19937_64 rng(1);
  const Vector b = random_vector(50, rng);
  CgStats st;
  const Vector x = cg_solve(CsrMatrix::identity(50), b, {1e-12, 100, Preconditioner::none}, nullptr, &st);
  CHECK(st.iterations <= 1);
  CHECK((x - b).norm() <= 1e-12 * b.norm());
}

TEST_CASE("cg with jacobi solves a diagonal system in one step") {
  Vector d(40);
  for (int i = 0; i < 40; ++i) d[i] = 1.0 + i;
  const Vector b = Vector::LinSpaced(40, -1.0, 2.0);
  CgStats st;
  const Vector x = cg_solve(CsrMatrix::diagonal(d), b, {1e-12, 100, Preconditioner::jacobi}, nullptr, &st);
  CHECK(st.iterations <= 1);
  CHECK((x - b.cwiseQuotient(d)).norm() < 1e-12);
}

TEST_CASE("cg solves a P1 Poisson system to tolerance") {
  const auto space = space_on(1.0, 8, 1);
  const auto k = fem::assemble_stiffness(*space);
  const Vector b = fem::load_vector(*space, fem::sample(*space, [](const Point &) { return 1.0; }));
  const CgOptions opt{1e-10, 1000, Preconditioner::jacobi};
  const Vector x = cg_solve(k, b, opt);
  CHECK((k.multiply(x) - b).norm() <= 1e-10 * b.norm());
  CHECK_THROWS_AS(cg_solve(k, b, {1e-14, 2, Preconditioner::none}), NonConvergence);
  try {
    cg_solve(k, b, {1e-14, 2, Preconditioner::none});
  } catch (const NonConvergence &e) {
    CHECK(e.residual() > 0.0);
    CHECK(e.iterations() == 2);
  }
}

TEST_CASE("dense_eig on small pencils") {
  Matrix a(2, 2), m = Matrix::Identity(2, 2);
  a << 2, 0, 0, 3;
  const auto r = dense_eig(a, m, 2);
  CHECK_THAT(r.eigenvalues[0], WithinAbs(2.0, 1e-14));
  CHECK_THAT(r.eigenvalues[1], WithinAbs(3.0, 1e-14));

  std::mt19937_64 rng(5);
  const int n = 30;
  Matrix g = Matrix::Random(n, n), h = Matrix::Random(n, n);
  Matrix as = g + g.transpose();
  Matrix ms = h * h.transpose() + n * Matrix::Identity(n, n);
  const auto rr = dense_eig(as, ms, n);
  CHECK((as * rr.vectors - ms * rr.vectors * rr.eigenvalues.asDiagonal()).norm() < 1e-9);
  CHECK((rr.vectors.transpose() * ms * rr.vectors - Matrix::Identity(n, n)).norm() < 1e-10);
  for (int i = 1; i < n; ++i) CHECK(rr.eigenvalues[i] >= rr.eigenvalues[i - 1]);

  const double sigma = 0.75;
  const auto shifted = dense_eig(as + sigma * ms, ms, 5);
  for (int i = 0; i < 5; ++i) CHECK_THAT(shifted.eigenvalues[i], WithinAbs(rr.eigenvalues[i] + sigma, 1e-10));

  Matrix bad = Matrix::Identity(3, 3);
  bad(2, 2) = -1.0;
  CHECK_THROWS_AS(dense_eig(Matrix::Identity(3, 3), bad, 1), EigenSolverError);
}

TEST_CASE("lobpcg finds the lowest entries of a diagonal matrix") {
  const int n = 200;
  Vector d(n);
  for (int i = 0; i < n; ++i) d[i] = 1.0 + i;
  const SymmetricOperator a(CsrMatrix::diagonal(d));
  const auto r = lobpcg(a, CsrMatrix::identity(n), 3, Matrix(), {1e-10, 500, 3});
  REQUIRE(r.converged);
  for (int i = 0; i < 3; ++i) CHECK_THAT(r.eigenvalues[i], WithinAbs(1.0 + i, 1e-9));
  CHECK((r.vectors.transpose() * r.vectors - Matrix::Identity(3, 3)).norm() < 1e-10);
}

TEST_CASE("lobpcg agrees with the dense solver on a harmonic-trap mesh problem") {
  const auto space = space_on(10.0, 6, 1);
  const auto k = fem::assemble_stiffness(*space);
  const auto m = fem::assemble_mass(*space);
  const auto w = fem::assemble_weighted_mass(
      *space, fem::sample(*space, [](const Point &x) { return 0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }));
  const auto h = k.scaled(0.5).added(w, 1.0);
  const SymmetricOperator a(h);
  const auto dense = dense_eig(h.to_dense(), m.to_dense(), 4);
  const auto it = lobpcg(a, m, 4, Matrix(), {1e-10, 2000, 9});
  REQUIRE(it.converged);
  for (int i = 0; i < 4; ++i) CHECK_THAT(it.eigenvalues[i], WithinAbs(dense.eigenvalues[i], 1e-9));

  // Rayleigh-quotient trace never increases
  for (std::size_t i = 1; i < it.trace_history.size(); ++i)
    CHECK(it.trace_history[i] <= it.trace_history[i - 1] + 1e-12 * std::abs(it.trace_history[i - 1]));
  const Matrix gram = it.vectors.transpose() * m.multiply(it.vectors);
  CHECK((gram - Matrix::Identity(4, 4)).norm() < 1e-10);
}

TEST_CASE("lobpcg handles a low-rank correction and is deterministic") {
  std::mt19937_64 rng(21);
  const auto s = random_symmetric(400, 4, rng);
  Matrix z = Matrix::Zero(400, 2);
  z.col(0) = random_vector(400, rng) * 0.2;
  z.col(1) = random_vector(400, rng) * 0.2;
  const SymmetricOperator a(s, z);
  const auto m = CsrMatrix::identity(400);
  const Matrix x0 = Matrix::Random(400, 5);
  const auto r1 = lobpcg(a, m, 5, x0, {1e-10, 2000, 1});
  const auto r2 = lobpcg(a, m, 5, x0, {1e-10, 2000, 1});
  CHECK(r1.eigenvalues == r2.eigenvalues);
  const auto dense = dense_eig(a.to_dense(), Matrix::Identity(400, 400), 5);
  for (int i = 0; i < 5; ++i) CHECK_THAT(r1.eigenvalues[i], WithinAbs(dense.eigenvalues[i], 1e-9));
  const Matrix res = a.apply(r1.vectors) - r1.vectors * r1.eigenvalues.asDiagonal();
  for (int i = 0; i < 5; ++i) CHECK(res.col(i).norm() <= 1e-10 * (a.norm_bound() + std::abs(r1.eigenvalues[i])));
}

TEST_CASE("eigensolver argument checks") {
  const SymmetricOperator a(CsrMatrix::identity(10));
  CHECK_THROWS_AS(lobpcg(a, CsrMatrix::identity(10), 0, Matrix()), std::invalid_argument);
  CHECK_THROWS_AS(lobpcg(a, CsrMatrix::identity(10), 11, Matrix()), std::invalid_argument);
  CHECK_THROWS_AS(lobpcg(a, CsrMatrix::identity(9), 1, Matrix()), std::invalid_argument);
  const SymmetricOperator d(CsrMatrix::diagonal(Vector::LinSpaced(10, 1.0, 10.0)));
  CHECK_THROWS_AS(lobpcg(d, CsrMatrix::identity(10), 2, Matrix::Zero(10, 2), {1e-10, 0, 1}), EigenSolverError);
}
