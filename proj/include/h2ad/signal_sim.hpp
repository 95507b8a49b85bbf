#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "h2ad/array_model.hpp"

namespace h2ad {

/// Single far-field narrowband emitter observed by every group.
/// snr_db is per element before analog combining (sigma_x^2 = 1), and
/// snr_db = +inf means noiseless.
struct SimScenario {
  ArrayConfig cfg;
  double theta0 = 0.0;  // radians
  double snr_db = 0.0;
  int snapshots = 200;
  std::uint64_t seed = 0;
  double signal_amplitude = 1.0;  // 0 gives a noise-only scenario

  double noise_variance() const;
};

/// Throws ConfigError when the scenario is out of domain.
void validate_scenario(const SimScenario& sc);

struct GroupSnapshots {
  int group_index = 0;
  Eigen::MatrixXcd data;  // K_q x T
};

/// s(n) = e_q(theta0) a_J(theta0) x(n) / sqrt(M_q) + w(n). All combiners are
/// the uniform 1/sqrt(M_q) vector. Deterministic in (seed, q).
GroupSnapshots simulate_group(const SimScenario& sc, int q);

/// R = (1/T) sum_n s(n) s(n)^H, Hermitian by construction.
Eigen::MatrixXcd sample_covariance(const GroupSnapshots& gs);

/// Closed-form covariance: sigma_x^2 |e_q|^2 / M_q a_J a_J^H + sigma_v^2 I.
Eigen::MatrixXcd exact_covariance(const SimScenario& sc, int q);

// Binary snapshot file: "H2AD-SNAP", u16 version, u32 q, u32 K, u32 T, then
// K*T row-major (re, im) float64 pairs. Little-endian.
inline constexpr std::uint16_t kSnapshotFileVersion = 1;
void write_snapshots(const std::string& path, const GroupSnapshots& gs);
GroupSnapshots read_snapshots(const std::string& path);

}  // namespace h2ad
