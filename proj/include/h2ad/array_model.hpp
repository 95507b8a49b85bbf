#pragma once

#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace h2ad {

inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// One subarray group seen as a K-element virtual ULA whose elements are
/// subarrays of M antennas.
struct GroupGeometry {
  int index = 0;
  int antennas = 0;    // M_q
  int subarrays = 0;   // K_q
  double spacing = 0.5;     // d, meters
  double wavelength = 1.0;  // lambda, meters

  double virtual_spacing() const { return antennas * spacing; }
  /// 2*pi/lambda * M_q * d: maps sin(theta) to the virtual-array phase.
  double phase_scale() const;
};

/// Heterogeneous hybrid analog-digital array: Q groups, group q holds K_q
/// subarrays of M_q antennas. Subarray sizes must be pairwise coprime.
struct ArrayConfig {
  int num_groups = 0;
  std::vector<int> antennas_per_subarray;  // M
  std::vector<int> subarrays_per_group;    // K
  double d_over_lambda = 0.5;
  double wavelength = 1.0;

  double spacing() const { return d_over_lambda * wavelength; }
  int total_antennas() const;
  int total_candidates() const;  // sum of M_q
  GroupGeometry group(int q) const;

  bool operator==(const ArrayConfig&) const = default;
};

/// Reference setup: M = (7, 11, 13), K = 16 each.
ArrayConfig table1_config();

/// Checks size bounds and pairwise coprimality; returns the config unchanged.
/// Throws TooSmallError or NonCoprimeError.
ArrayConfig validate_config(ArrayConfig cfg);

/// exp(j * phase * k) for k = 0..K-1 with the phase first wrapped to
/// (-pi, pi], so phases differing by whole turns give the same vector.
Eigen::VectorXcd steering_from_phase(int length, double phase);

/// K_q-element steering vector of the virtual array (subarray centers).
Eigen::VectorXcd virtual_steering(const GroupGeometry& geom, double theta);

/// M_q-element steering vector of one subarray (element spacing d).
Eigen::VectorXcd element_steering(const ArrayConfig& cfg, int q, double theta);

/// e_q(theta) = sum_{m=0}^{M_q-1} exp(j 2pi/lambda m d sin theta), summed
/// directly so theta = 0 needs no special case.
std::complex<double> gain_coefficient(const GroupGeometry& geom, double theta);

/// Wraps an angle to (-pi, pi].
double wrap_phase(double phase);

// Config file: `key = value` lines, '#' comments. Keys: groups, M, K,
// d_over_lambda, lambda_m. Lists are comma separated.
ArrayConfig parse_config(std::string_view text);
ArrayConfig load_config(const std::string& path);
std::string format_config(const ArrayConfig& cfg);

}  // namespace h2ad
