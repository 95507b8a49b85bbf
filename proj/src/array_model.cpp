#include "h2ad/array_model.hpp"

#include <cmath>
#include <numeric>

#include "h2ad/errors.hpp"

namespace h2ad {

double GroupGeometry::phase_scale() const { return 2.0 * kPi / wavelength * antennas * spacing; }

int ArrayConfig::total_antennas() const {
  int n = 0;
  for (int q = 0; q < num_groups; ++q) n += antennas_per_subarray[q] * subarrays_per_group[q];
  return n;
}

int ArrayConfig::total_candidates() const {
  return std::accumulate(antennas_per_subarray.begin(), antennas_per_subarray.end(), 0);
}

GroupGeometry ArrayConfig::group(int q) const {
  return GroupGeometry{q, antennas_per_subarray.at(q), subarrays_per_group.at(q), spacing(),
                       wavelength};
}

ArrayConfig table1_config() {
  ArrayConfig cfg;
  cfg.num_groups = 3;
  cfg.antennas_per_subarray = {7, 11, 13};
  cfg.subarrays_per_group = {16, 16, 16};
  return cfg;
}

ArrayConfig validate_config(ArrayConfig cfg) {
  if (cfg.num_groups < 1) throw ConfigError("groups must be positive");
  if (static_cast<int>(cfg.antennas_per_subarray.size()) != cfg.num_groups ||
      static_cast<int>(cfg.subarrays_per_group.size()) != cfg.num_groups) {
    throw ConfigError("M and K must each list exactly `groups` entries");
  }
  if (!(cfg.d_over_lambda > 0.0) || !(cfg.wavelength > 0.0) || !std::isfinite(cfg.d_over_lambda) ||
      !std::isfinite(cfg.wavelength)) {
    throw ConfigError("d_over_lambda and lambda_m must be positive and finite");
  }
  for (int q = 0; q < cfg.num_groups; ++q) {
    if (cfg.antennas_per_subarray[q] < 2 || cfg.subarrays_per_group[q] < 2) throw TooSmallError(q);
  }
  for (int q = 0; q < cfg.num_groups; ++q) {
    for (int k = q + 1; k < cfg.num_groups; ++k) {
      if (std::gcd(cfg.antennas_per_subarray[q], cfg.antennas_per_subarray[k]) != 1) {
        throw NonCoprimeError(q, k);
      }
    }
  }
  return cfg;
}

double wrap_phase(double phase) {
  double r = std::remainder(phase, 2.0 * kPi);  // [-pi, pi]
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

Eigen::VectorXcd steering_from_phase(int length, double phase) {
  const double wrapped = wrap_phase(phase);
  Eigen::VectorXcd v(length);
  for (int k = 0; k < length; ++k) v[k] = std::polar(1.0, wrapped * k);
  return v;
}

Eigen::VectorXcd virtual_steering(const GroupGeometry& geom, double theta) {
  return steering_from_phase(geom.subarrays, geom.phase_scale() * std::sin(theta));
}

Eigen::VectorXcd element_steering(const ArrayConfig& cfg, int q, double theta) {
  const int m = cfg.antennas_per_subarray.at(q);
  return steering_from_phase(m, 2.0 * kPi / cfg.wavelength * cfg.spacing() * std::sin(theta));
}

std::complex<double> gain_coefficient(const GroupGeometry& geom, double theta) {
  const double step = 2.0 * kPi / geom.wavelength * geom.spacing * std::sin(theta);
  std::complex<double> sum{0.0, 0.0};
  for (int m = 0; m < geom.antennas; ++m) sum += std::polar(1.0, step * m);
  return sum;
}

}  // namespace h2ad
