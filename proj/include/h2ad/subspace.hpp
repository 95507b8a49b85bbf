#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "h2ad/array_model.hpp"

namespace h2ad {

/// Trailing K-1 eigenvectors of a single-source covariance.
struct NoiseSubspace {
  Eigen::MatrixXcd basis;        // K x (K-1), orthonormal columns
  Eigen::VectorXd eigenvalues;   // all K, descending
  double leading_eigenvalue = 0.0;
  double noise_floor = 0.0;      // mean of the trailing eigenvalues
};

/// Ambiguous angle estimates of one group, ascending, radians.
struct CandidateSet {
  int group_index = 0;
  double phase = 0.0;  // root-MUSIC phase in (-pi, pi]
  std::vector<double> angles;
};

/// Throws DegenerateSpectrum if the top two eigenvalues agree to 1e-9
/// relative, since then no signal direction is identifiable.
NoiseSubspace noise_subspace(const Eigen::MatrixXcd& covariance);

/// Coefficients (lowest degree first) of z^(K-1) * a(z)^H F a(z), where
/// F = Un Un^H: entry l + K - 1 is the sum of F's l-th diagonal.
Eigen::VectorXcd root_music_polynomial(const Eigen::MatrixXcd& projector);

/// All roots of a polynomial given lowest-degree-first; high-order
/// coefficients that are zero relative to the largest are trimmed first.
std::vector<std::complex<double>> polynomial_roots(const Eigen::VectorXcd& coeffs);

/// Virtual-array phase of the emitter: arg of the root nearest the unit
/// circle from inside. Throws NoRootFound on a vanishing polynomial.
double root_music_phase(const NoiseSubspace& ns, const GroupGeometry& geom);

/// Every arcsine-feasible phase unwrap phase + 2*pi*j. For d = lambda/2
/// this is exactly M_q angles after dropping the outermost one in the
/// boundary case where both ends of [-1, 1] are hit.
CandidateSet enumerate_candidates(double phase, const GroupGeometry& geom);

/// P(theta) = 1 / (|e_q(theta)|^2 ||Un^H a_J(theta)||^2). Diagnostics only.
std::vector<double> music_pseudospectrum(const NoiseSubspace& ns, const GroupGeometry& geom,
                                         std::span<const double> theta_grid);

/// covariance -> noise subspace -> root-MUSIC -> candidate angles.
CandidateSet group_candidates(const Eigen::MatrixXcd& covariance, const GroupGeometry& geom);

}  // namespace h2ad
