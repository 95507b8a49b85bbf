#include "h2ad/fusion.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "h2ad/errors.hpp"

namespace h2ad {

std::string_view to_string(WeightMethod m) {
  return m == WeightMethod::exact_crlb ? "exact_crlb" : "crlb_ratio";
}

WeightMethod parse_weight_method(std::string_view name) {
  if (name == "exact_crlb") return WeightMethod::exact_crlb;
  if (name == "crlb_ratio") return WeightMethod::crlb_ratio;
  throw ConfigError(fmt::format("unknown weighting method '{}'", name));
}

TrueTuple select_true_tuple(std::span<const CandidateSet> sets) {
  const std::size_t q_count = sets.size();
  if (q_count == 0) throw ShapeMismatch("no candidate sets");
  for (const auto& s : sets) {
    if (s.angles.empty()) throw ShapeMismatch("empty candidate set");
  }

  std::vector<int> idx(q_count, 0);
  TrueTuple best;
  best.dispersion = std::numeric_limits<double>::infinity();
  std::vector<double> angles(q_count);
  while (true) {
    for (std::size_t q = 0; q < q_count; ++q) angles[q] = sets[q].angles[idx[q]];
    const double mean = std::accumulate(angles.begin(), angles.end(), 0.0) / double(q_count);
    double disp = 0.0;
    for (double a : angles) disp += (a - mean) * (a - mean);
    // Odometer runs in lexicographic order, so strict < keeps the first tie.
    if (disp < best.dispersion) {
      best.dispersion = disp;
      best.angles = angles;
      best.member_indices = idx;
    }
    std::size_t q = q_count;
    while (q > 0) {
      --q;
      if (++idx[q] < static_cast<int>(sets[q].angles.size())) break;
      idx[q] = 0;
      if (q == 0) return best;
    }
  }
}

namespace {

void check_guard(double theta0) {
  if (!(std::abs(theta0) < kCrlbAngleGuard)) {
    throw AngleOutOfGuard(fmt::format("|theta0| = {:.3f} deg is not below the 70 deg guard",
                                      rad_to_deg(std::abs(theta0))));
  }
}

double crlb_prefactor(const ArrayConfig& cfg, double theta0, double snr_db, int snapshots) {
  check_guard(theta0);
  if (snapshots < 1) throw ConfigError("snapshots must be >= 1");
  const double snr = std::pow(10.0, snr_db / 10.0);
  const double c = std::cos(theta0);
  return 8.0 * snapshots * kPi * kPi * snr * c * c / (cfg.wavelength * cfg.wavelength);
}

}  // namespace

double crlb_group_exact(const ArrayConfig& cfg, int q, double theta0, double snr_db, int snapshots) {
  const double pre = crlb_prefactor(cfg, theta0, snr_db, snapshots);
  const GroupGeometry g = cfg.group(q);
  const double m = g.antennas;
  const double k = g.subarrays;
  const double d = g.spacing;

  const std::complex<double> e = gain_coefficient(g, theta0);
  const double step = 2.0 * kPi / g.wavelength * d * std::sin(theta0);
  std::complex<double> vartheta{0.0, 0.0};
  for (int i = 0; i < g.antennas; ++i) vartheta += double(i) * d * std::polar(1.0, -step * i);

  const double e2 = std::norm(e);
  const double upsilon = m + k * m * e2;
  const double denom = e2 * e2 * m * m * k * k * (k * k - 1.0) * d * d / 12.0 +
                       m * k / upsilon * (std::norm(e * vartheta) + k * (e * e * vartheta).real());
  return m * upsilon / (pre * denom);
}

double crlb_group_approx(const ArrayConfig& cfg, int q, double theta0, double snr_db, int snapshots) {
  const double pre = crlb_prefactor(cfg, theta0, snr_db, snapshots);
  const GroupGeometry g = cfg.group(q);
  const double m = g.antennas;
  const double k = g.subarrays;
  const double d = g.spacing;
  return 12.0 / (pre * k * (k * k - 1.0) * d * d * m * m);
}

WeightVector weights_exact(std::span<const double> crlbs) {
  WeightVector out{{}, WeightMethod::exact_crlb};
  double total = 0.0;
  for (double c : crlbs) {
    if (!(c > 0.0) || !std::isfinite(c)) throw NonPositiveCrlb(fmt::format("CRLB value {}", c));
    total += 1.0 / c;
  }
  for (double c : crlbs) out.w.push_back((1.0 / c) / total);
  return out;
}

WeightVector weights_crlb_ratio(std::span<const int> antennas) {
  WeightVector out{{}, WeightMethod::crlb_ratio};
  double total = 0.0;
  for (int m : antennas) total += double(m) * m;
  for (int m : antennas) out.w.push_back(double(m) * m / total);
  return out;
}

double fuse(const TrueTuple& tuple, const WeightVector& weights) {
  if (tuple.angles.size() != weights.w.size()) throw ShapeMismatch("tuple and weights differ in size");
  double theta = 0.0;
  for (std::size_t q = 0; q < weights.w.size(); ++q) theta += weights.w[q] * tuple.angles[q];
  return theta;
}

CrlbReport fused_crlb(const ArrayConfig& cfg, double theta0, double snr_db, int snapshots) {
  CrlbReport report{{}, 0.0, theta0, snr_db, snapshots};
  double info = 0.0;
  for (int q = 0; q < cfg.num_groups; ++q) {
    const double c = crlb_group_exact(cfg, q, theta0, snr_db, snapshots);
    report.per_group.push_back(c);
    info += 1.0 / c;
  }
  report.fused_bound = 1.0 / info;
  return report;
}

std::vector<CandidateSet> scenario_candidates(const SimScenario& sc) {
  validate_scenario(sc);
  std::vector<CandidateSet> sets;
  sets.reserve(sc.cfg.num_groups);
  for (int q = 0; q < sc.cfg.num_groups; ++q) {
    try {
      const GroupSnapshots gs = simulate_group(sc, q);
      sets.push_back(group_candidates(sample_covariance(gs), sc.cfg.group(q)));
    } catch (const DegenerateSpectrum& e) {
      throw GroupFailure(q, e.what());
    } catch (const NoRootFound& e) {
      throw GroupFailure(q, e.what());
    }
  }
  return sets;
}

FusedEstimate fuse_candidates(const ArrayConfig& cfg, std::vector<CandidateSet> candidates,
                              WeightMethod method, double snr_db, int snapshots) {
  FusedEstimate est;
  est.candidates = std::move(candidates);
  est.tuple = select_true_tuple(est.candidates);
  if (method == WeightMethod::crlb_ratio) {
    est.weights = weights_crlb_ratio(cfg.antennas_per_subarray);
  } else {
    const double plug_in = std::accumulate(est.tuple.angles.begin(), est.tuple.angles.end(), 0.0) /
                           double(est.tuple.angles.size());
    // 1/(T SNR) is common to every group and cancels in the weights, so a
    // noiseless scenario is weighted as if at 0 dB.
    const double weight_snr = std::isfinite(snr_db) ? snr_db : 0.0;
    std::vector<double> crlbs;
    for (int q = 0; q < cfg.num_groups; ++q) {
      crlbs.push_back(crlb_group_exact(cfg, q, plug_in, weight_snr, snapshots));
    }
    est.weights = weights_exact(crlbs);
  }
  est.angle = fuse(est.tuple, est.weights);
  return est;
}

FusedEstimate estimate_doa(const SimScenario& sc, WeightMethod method) {
  return fuse_candidates(sc.cfg, scenario_candidates(sc), method, sc.snr_db, sc.snapshots);
}

}  // namespace h2ad
