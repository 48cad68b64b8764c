#include "ksfem/analysis/alignment.hpp"

#include "ksfem/fem/assembly.hpp"

#include <Eigen/SVD>

#include <stdexcept>

namespace ksfem::analysis {

Matrix procrustes_rotation(const Matrix &overlap, bool *degenerate) {
  if (overlap.rows() != overlap.cols()) throw std::invalid_argument("procrustes: overlap must be square");
  Eigen::JacobiSVD<Matrix> svd(overlap, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector &s = svd.singularValues();
  if (degenerate) *degenerate = s.size() > 0 && s[s.size() - 1] < 1e-8 * std::max(1.0, s[0]);
  return svd.matrixU() * svd.matrixV().transpose();
}

namespace {

double frobenius_m(const sparse::CsrMatrix &m, const Matrix &x) {
  return std::sqrt(std::max(0.0, (x.array() * m.multiply(x).array()).sum()));
}

} // namespace

Alignment procrustes_align(const ksdft::OrbitalSet &phi, const ksdft::OrbitalSet &psi) {
  if (!phi.space || phi.space != psi.space) throw std::invalid_argument("procrustes_align: orbitals live on different spaces");
  if (phi.count() != psi.count()) throw std::invalid_argument("procrustes_align: orbital counts differ");
  const auto m = fem::assemble_mass(*phi.space);
  const auto k = fem::assemble_stiffness(*phi.space);
  Alignment out;
  out.U = procrustes_rotation(psi.coeffs.transpose() * m.multiply(phi.coeffs), &out.degenerate);
  const Matrix d = psi.coeffs * out.U - phi.coeffs;
  const double l2 = frobenius_m(m, d), grad = frobenius_m(k, d);
  out.aligned_distance_L2 = l2;
  out.aligned_distance_H1 = std::sqrt(l2 * l2 + grad * grad);
  out.unaligned_distance_L2 = frobenius_m(m, psi.coeffs - phi.coeffs);
  return out;
}

Alignment procrustes_align(const CrossQuadrature &cross, const Matrix &phi_fine, const Matrix &psi_coarse) {
  if (phi_fine.cols() != psi_coarse.cols()) throw std::invalid_argument("procrustes_align: orbital counts differ");
  Alignment out;
  out.U = procrustes_rotation(cross.overlap(psi_coarse, phi_fine), &out.degenerate);
  const auto aligned = cross.difference(psi_coarse * out.U, phi_fine);
  out.aligned_distance_L2 = aligned.l2;
  out.aligned_distance_H1 = aligned.h1;
  out.unaligned_distance_L2 = cross.difference(psi_coarse, phi_fine).l2;
  return out;
}

TangentSplit tangent_split(const sparse::CsrMatrix &mass, const Matrix &phi, const Matrix &psi) {
  if (phi.rows() != psi.rows() || phi.cols() != psi.cols())
    throw std::invalid_argument("tangent_split: blocks differ in shape");
  if (frobenius_m(mass, psi - phi) >= 1.0)
    throw std::domain_error("tangent_split: ‖Ψ − Φ‖₀ ≥ 1, outside the range of the local representation");
  const Matrix p = phi.transpose() * mass.multiply(psi);
  TangentSplit out;
  out.W = psi - phi * p;
  out.S = 0.5 * (p + p.transpose()) - Matrix::Identity(p.rows(), p.cols());
  out.reconstruction_residual = frobenius_m(mass, psi - phi - phi * out.S - out.W);
  out.w_norm_L2 = frobenius_m(mass, out.W);
  return out;
}

} // namespace ksfem::analysis
