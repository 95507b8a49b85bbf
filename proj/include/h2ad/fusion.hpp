#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "h2ad/array_model.hpp"
#include "h2ad/signal_sim.hpp"
#include "h2ad/subspace.hpp"

namespace h2ad {

/// One candidate per group, the minimum-dispersion choice across groups.
struct TrueTuple {
  std::vector<double> angles;        // radians, one per group
  std::vector<int> member_indices;   // index into each CandidateSet
  double dispersion = 0.0;           // sum of squared deviations from the mean, rad^2
};

enum class WeightMethod { exact_crlb, crlb_ratio };

std::string_view to_string(WeightMethod m);
WeightMethod parse_weight_method(std::string_view name);

struct WeightVector {
  std::vector<double> w;
  WeightMethod method = WeightMethod::crlb_ratio;
};

struct CrlbReport {
  std::vector<double> per_group;  // rad^2
  double fused_bound = 0.0;       // (sum 1/CRLB_q)^-1, rad^2
  double theta0 = 0.0;
  double snr_db = 0.0;
  int snapshots = 0;
};

struct FusedEstimate {
  double angle = 0.0;  // radians
  std::vector<CandidateSet> candidates;
  TrueTuple tuple;
  WeightVector weights;
};

/// Exhaustive search over all prod(M_q) tuples. Ties go to the
/// lexicographically smallest member_indices.
TrueTuple select_true_tuple(std::span<const CandidateSet> sets);

/// Largest |theta0| at which the CRLB functions will evaluate.
inline constexpr double kCrlbAngleGuard = deg_to_rad(70.0);

/// Per-group CRLB (rad^2) of the hybrid group, with L = T snapshots
/// and SNR = 10^(snr_db/10). Throws AngleOutOfGuard for |theta0| >= 70 deg.
double crlb_group_exact(const ArrayConfig& cfg, int q, double theta0, double snr_db, int snapshots);

/// Large-M simplification, |e_q|^2 ~ M_q^2 and Upsilon_q ~ K M_q^3:
/// 12 lambda^2 / (8 T pi^2 SNR cos^2 theta0 K (K^2 - 1) d^2 M_q^2).
double crlb_group_approx(const ArrayConfig& cfg, int q, double theta0, double snr_db, int snapshots);

/// w_q = CRLB_q^-1 / sum_k CRLB_k^-1. Throws NonPositiveCrlb.
WeightVector weights_exact(std::span<const double> crlbs);

/// w_q = M_q^2 / sum_k M_k^2. Needs only the subarray sizes.
WeightVector weights_crlb_ratio(std::span<const int> antennas);

double fuse(const TrueTuple& tuple, const WeightVector& weights);

CrlbReport fused_crlb(const ArrayConfig& cfg, double theta0, double snr_db, int snapshots);

/// Simulate every group and run it through root-MUSIC. Per-group failures
/// are rethrown as GroupFailure(q).
std::vector<CandidateSet> scenario_candidates(const SimScenario& sc);

/// Tuple selection, weighting and fusion on already computed candidates.
/// exact_crlb plugs the tuple mean in for theta0 and uses the nominal SNR.
FusedEstimate fuse_candidates(const ArrayConfig& cfg, std::vector<CandidateSet> candidates,
                              WeightMethod method, double snr_db, int snapshots);

/// The full estimator: candidates, true tuple, weights, fused angle.
FusedEstimate estimate_doa(const SimScenario& sc, WeightMethod method);

}  // namespace h2ad
