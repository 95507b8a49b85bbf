#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "h2ad/array_model.hpp"
#include "h2ad/subspace.hpp"

namespace h2ad {

// Multi-branch regression network over the candidate angles of all groups.
//
//   branch q : M_q -> 4 M_q -> 2 M_q -> M_q, ReLU after every layer
//   joint    : sum M_q -> ceil(sum M_q / 2), ReLU
//   head     : -> Q per-group true-angle predictions, linear
//   fusion   : Q -> 1 final angle, linear
//
// Everything is float64 and in degrees.

struct MlpSpec {
  std::vector<int> group_sizes;  // M_q

  int num_groups() const { return static_cast<int>(group_sizes.size()); }
  int merge_in() const;
  int merge_out() const;
  std::array<int, 4> branch_dims(int q) const;

  bool operator==(const MlpSpec&) const = default;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;

  bool operator==(const DenseLayer& o) const {
    return weight.rows() == o.weight.rows() && weight.cols() == o.weight.cols() &&
           bias.size() == o.bias.size() && weight == o.weight && bias == o.bias;
  }
};

struct TrainingInfo {
  std::uint64_t seed = 0;
  std::uint32_t epochs = 0;
  std::array<double, 3> final_losses{};  // L_MB_FCNN, L_FusionNet, L_MBNN

  bool operator==(const TrainingInfo&) const = default;
};

struct MlpModel {
  MlpSpec spec;
  std::vector<std::array<DenseLayer, 3>> branches;
  DenseLayer joint;
  DenseLayer head;
  DenseLayer fusion;
  TrainingInfo info;

  /// Layers in declaration order: branch 0 (3 layers), ..., joint, head, fusion.
  std::vector<DenseLayer*> layers();
  std::vector<const DenseLayer*> layers() const;
  std::size_t parameter_count() const;

  bool operator==(const MlpModel&) const = default;
};

/// Zero-filled model with the MlpSpec shapes.
MlpModel zero_model(const MlpSpec& spec);

/// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
MlpModel init_model(const MlpSpec& spec, std::uint64_t seed);

/// Throws ShapeMismatch if any tensor disagrees with the MlpSpec or is non-finite.
void check_model(const MlpModel& model);

struct ForwardResult {
  std::vector<Eigen::VectorXd> branch_outputs;  // h_q
  Eigen::VectorXd merged;                       // z
  Eigen::VectorXd head;                         // per-group predictions
  double fused = 0.0;                           // final angle
};

ForwardResult forward(const MlpModel& model, std::span<const double> features);

// ---- batched training math ----

/// Column-per-sample training batch.
struct Batch {
  Eigen::MatrixXd features;      // sum M_q x N
  Eigen::MatrixXd label_tuple;   // Q x N
  Eigen::RowVectorXd label_theta;  // 1 x N
};

enum class LossKind { mb_fcnn, fusion_net, mbnn };

std::string_view to_string(LossKind k);

/// Batched forward state kept for backpropagation.
struct ForwardCache {
  std::vector<std::array<Eigen::MatrixXd, 3>> branch_pre;
  std::vector<std::array<Eigen::MatrixXd, 3>> branch_act;
  Eigen::MatrixXd merged_in;  // concatenated branch outputs
  Eigen::MatrixXd joint_pre;
  Eigen::MatrixXd joint_act;
  Eigen::MatrixXd head;       // Q x N
  Eigen::RowVectorXd fused;   // 1 x N
};

ForwardCache forward_batch(const MlpModel& model, const Eigen::MatrixXd& features);

/// (1/(Q N)) sum (label - pred)^2.
double loss_mb_fcnn(const Eigen::MatrixXd& pred_tuples, const Eigen::MatrixXd& label_tuples);
/// (1/N) sum (label - pred)^2.
double loss_fusion(const Eigen::RowVectorXd& pred_theta, const Eigen::RowVectorXd& label_theta);
/// (1/(Q N)) sum_q (head_q - fused)^2.
double loss_mbnn(const Eigen::MatrixXd& pred_tuples, const Eigen::RowVectorXd& pred_theta);

double evaluate_loss(const MlpModel& model, const Batch& batch, LossKind kind);

/// Loss value and its gradient, written into `grad` (same shapes as model).
/// With backbone=false only the fusion layer gradient is formed.
double loss_and_gradient(const MlpModel& model, const Batch& batch, LossKind kind, MlpModel& grad,
                         bool backbone = true);

struct GradCheckResult {
  double max_relative_error = 0.0;
  int checked = 0;
  int excluded = 0;  // parameters whose perturbation crosses a ReLU kink
};

/// Central differences (step 1e-6, evaluated in long double) against backprop
/// on `count` randomly chosen parameters. Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult grad_check(const MlpModel& model, const Batch& batch, LossKind kind, int count = 200,
                           std::uint64_t seed = 1, double step = 1e-6);

// ---- dataset ----

struct DatasetSample {
  std::vector<double> features;     // sum M_q, degrees, ascending per group block
  std::vector<double> label_tuple;  // Q, degrees, nearest candidate to the truth per group
  double label_theta = 0.0;         // degrees
  double snr_db = 0.0;
};

struct Dataset {
  std::vector<int> group_sizes;
  std::vector<DatasetSample> samples;
  std::size_t skipped = 0;  // cells lost to degenerate spectra

  Batch to_batch() const;
  Batch to_batch(std::span<const std::size_t> rows) const;
};

/// Assembles the canonical feature vector: per group, ascending candidate
/// angles in degrees, concatenated in group order.
std::vector<double> candidate_features(std::span<const CandidateSet> sets);

/// Per (theta, snr, trial): simulate, run root-MUSIC per group, record the
/// sorted candidates and the nearest-to-truth label per group. Deterministic
/// in `seed`. Cells where any group fails are skipped and counted.
Dataset generate_dataset(const ArrayConfig& cfg, std::span<const double> thetas_deg,
                         std::span<const double> snrs_db, int trials_per_cell, int snapshots,
                         std::uint64_t seed);

void write_dataset_csv(const std::string& path, const Dataset& ds);
Dataset read_dataset_csv(const std::string& path, std::span<const int> group_sizes);

// ---- training ----

enum class TrainStage { mb_fcnn, fusion_net, joint };

std::string_view to_string(TrainStage s);
TrainStage parse_train_stage(std::string_view name);

struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs = 100;
  int batch_size = 256;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  TrainStage stage = TrainStage::mb_fcnn;
};

struct TrainHistory {
  std::vector<double> epoch_loss;  // sample-weighted mean of batch losses
};

/// Adam on the stage's loss:
///   mb_fcnn    L_MB_FCNN over branches, joint and head
///   fusion_net L_FusionNet over the fusion layer only
///   joint      L_MBNN over every parameter
/// Shuffle order is fixed by the seed. Throws NonFiniteLoss.
TrainHistory train(MlpModel& model, const Dataset& dataset, const TrainConfig& cfg);

/// Final angle in degrees for one scenario's candidate sets.
double predict_doa(const MlpModel& model, std::span<const CandidateSet> sets);

// ---- persistence ----
//
// "MBDNN1", u32 Q, Q x u32 M_q, u64 seed, u32 epochs, 3 x f64 final losses,
// u64 payload bytes, then every weight (row-major) and bias in layer order
// as f64. Little-endian.

void save_model(const std::string& path, const MlpModel& model);
MlpModel load_model(const std::string& path);

}  // namespace h2ad
