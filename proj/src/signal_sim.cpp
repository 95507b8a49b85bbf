#include "h2ad/signal_sim.hpp"

#include <cmath>

#include <fmt/format.h>

#include "h2ad/errors.hpp"
#include "h2ad/rng.hpp"

namespace h2ad {
namespace {

// Substream tags keep the emitter waveform and the per-group noise apart.
constexpr std::uint64_t kSourceStream = 0x534f55524345ULL;
constexpr std::uint64_t kNoiseStream = 0x4e4f495345ULL;

}  // namespace

double SimScenario::noise_variance() const { return std::pow(10.0, -snr_db / 10.0); }

void validate_scenario(const SimScenario& sc) {
  if (sc.snapshots < 1) throw ConfigError("snapshots must be >= 1");
  if (!(std::abs(sc.theta0) <= kPi / 2)) {
    throw ConfigError(fmt::format("theta0 = {} rad outside [-pi/2, pi/2]", sc.theta0));
  }
  if (std::isnan(sc.snr_db) || sc.snr_db == -HUGE_VAL) throw ConfigError("snr_db must be > -inf");
}

GroupSnapshots simulate_group(const SimScenario& sc, int q) {
  validate_scenario(sc);
  const GroupGeometry geom = sc.cfg.group(q);
  const int k_count = geom.subarrays;
  const int t_count = sc.snapshots;

  const std::complex<double> gain =
      sc.signal_amplitude * gain_coefficient(geom, sc.theta0) / std::sqrt(double(geom.antennas));
  const Eigen::VectorXcd response = gain * virtual_steering(geom, sc.theta0);
  const double noise_std = std::sqrt(sc.noise_variance());

  GroupSnapshots gs{q, Eigen::MatrixXcd(k_count, t_count)};
  for (int n = 0; n < t_count; ++n) {
    StreamRng source_rng(derive_seed({sc.seed, kSourceStream, std::uint64_t(n)}));
    const std::complex<double> x = complex_gaussian(source_rng);
    StreamRng noise_rng(derive_seed({sc.seed, kNoiseStream, std::uint64_t(q), std::uint64_t(n)}));
    for (int k = 0; k < k_count; ++k) {
      // Always draw so the noise stream is independent of the SNR value.
      const std::complex<double> w = complex_gaussian(noise_rng);
      gs.data(k, n) = response[k] * x + (noise_std > 0.0 ? noise_std * w : 0.0);
    }
  }
  return gs;
}

Eigen::MatrixXcd sample_covariance(const GroupSnapshots& gs) {
  const auto t_count = gs.data.cols();
  Eigen::MatrixXcd r = gs.data * gs.data.adjoint() / double(t_count);
  return (r + r.adjoint()) * 0.5;
}

Eigen::MatrixXcd exact_covariance(const SimScenario& sc, int q) {
  const GroupGeometry geom = sc.cfg.group(q);
  const Eigen::VectorXcd a = virtual_steering(geom, sc.theta0);
  const double power = sc.signal_amplitude * sc.signal_amplitude *
                       std::norm(gain_coefficient(geom, sc.theta0)) / geom.antennas;
  Eigen::MatrixXcd r = power * (a * a.adjoint());
  r.diagonal().array() += sc.noise_variance();
  return r;
}

}  // namespace h2ad
