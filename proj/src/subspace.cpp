#include "h2ad/subspace.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "h2ad/errors.hpp"

namespace h2ad {

NoiseSubspace noise_subspace(const Eigen::MatrixXcd& covariance) {
  const auto k = covariance.rows();
  if (k < 2 || covariance.cols() != k) throw ShapeMismatch("covariance must be square, K >= 2");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> evd(covariance);
  if (evd.info() != Eigen::Success) throw DegenerateSpectrum("eigendecomposition failed");

  // Eigen returns ascending order.
  NoiseSubspace ns;
  ns.eigenvalues = evd.eigenvalues().reverse();
  ns.leading_eigenvalue = ns.eigenvalues[0];
  if (!(ns.eigenvalues[0] - ns.eigenvalues[1] > 1e-9 * std::abs(ns.eigenvalues[0]))) {
    throw DegenerateSpectrum("leading eigenvalue not separated from the second");
  }
  ns.basis = evd.eigenvectors().leftCols(k - 1).rowwise().reverse();
  ns.noise_floor = ns.eigenvalues.tail(k - 1).mean();
  return ns;
}

Eigen::VectorXcd root_music_polynomial(const Eigen::MatrixXcd& projector) {
  const auto k = projector.rows();
  Eigen::VectorXcd coeffs = Eigen::VectorXcd::Zero(2 * k - 1);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) coeffs[j - i + k - 1] += projector(i, j);
  }
  return coeffs;
}

std::vector<std::complex<double>> polynomial_roots(const Eigen::VectorXcd& coeffs) {
  const double scale = coeffs.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) throw NoRootFound("polynomial is identically zero");
  Eigen::Index degree = coeffs.size() - 1;
  while (degree > 0 && std::abs(coeffs[degree]) <= 1e-14 * scale) --degree;
  if (degree == 0) return {};

  // Eigenvalues of the companion matrix of the monic polynomial. Eigenvectors
  // are not needed and would double the cost.
  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(degree, degree);
  companion.diagonal(-1).setOnes();
  companion.col(degree - 1) = -coeffs.head(degree) / coeffs[degree];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
  if (solver.info() != Eigen::Success) throw NoRootFound("companion eigenvalue iteration did not converge");
  const auto& r = solver.eigenvalues();
  return {r.data(), r.data() + r.size()};
}

double root_music_phase(const NoiseSubspace& ns, const GroupGeometry& geom) {
  if (ns.basis.rows() != geom.subarrays) throw ShapeMismatch("noise subspace size != K_q");
  const Eigen::MatrixXcd projector = ns.basis * ns.basis.adjoint();
  const auto roots = polynomial_roots(root_music_polynomial(projector));

  // Roots come in pairs (z, 1/conj z). Folding each into the closed unit disk
  // keeps the pair's phase and survives a double root split just outside.
  bool found = false;
  std::complex<double> best{};
  for (auto z : roots) {
    const double mod = std::abs(z);
    if (!std::isfinite(mod) || mod == 0.0) continue;
    if (mod > 1.0) z = 1.0 / std::conj(z);
    if (!found) {
      best = z;
      found = true;
      continue;
    }
    const double diff = std::abs(z) - std::abs(best);
    if (diff > 1e-12 || (std::abs(diff) <= 1e-12 && std::arg(z) < std::arg(best))) best = z;
  }
  if (!found) throw NoRootFound("all polynomial roots at the origin");
  return wrap_phase(std::arg(best));
}

CandidateSet enumerate_candidates(double phase, const GroupGeometry& geom) {
  const double scale = geom.phase_scale();
  const double two_pi = 2.0 * kPi;
  constexpr double kEdge = 1e-12;

  std::vector<double> sines;
  const auto j_lo = static_cast<long>(std::ceil((-scale - phase) / two_pi)) - 1;
  const auto j_hi = static_cast<long>(std::floor((scale - phase) / two_pi)) + 1;
  for (long j = j_lo; j <= j_hi; ++j) {
    const double s = (phase + two_pi * double(j)) / scale;
    if (std::abs(s) <= 1.0 + kEdge) sines.push_back(std::clamp(s, -1.0, 1.0));
  }
  if (static_cast<int>(sines.size()) == geom.antennas + 1) {
    // Both ends of [-1, 1] hit: drop the outermost, the upper one on a tie.
    if (std::abs(sines.front()) > std::abs(sines.back())) {
      sines.erase(sines.begin());
    } else {
      sines.pop_back();
    }
  }

  CandidateSet set{geom.index, phase, {}};
  set.angles.reserve(sines.size());
  for (double s : sines) set.angles.push_back(std::asin(s));
  return set;
}

std::vector<double> music_pseudospectrum(const NoiseSubspace& ns, const GroupGeometry& geom,
                                         std::span<const double> theta_grid) {
  std::vector<double> out;
  out.reserve(theta_grid.size());
  for (double theta : theta_grid) {
    const double proj = (ns.basis.adjoint() * virtual_steering(geom, theta)).squaredNorm();
    out.push_back(1.0 / (std::norm(gain_coefficient(geom, theta)) * proj));
  }
  return out;
}

CandidateSet group_candidates(const Eigen::MatrixXcd& covariance, const GroupGeometry& geom) {
  const NoiseSubspace ns = noise_subspace(covariance);
  return enumerate_candidates(root_music_phase(ns, geom), geom);
}

}  // namespace h2ad
