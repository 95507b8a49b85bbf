#include "h2ad/mbdnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "h2ad/errors.hpp"
#include "h2ad/rng.hpp"

namespace h2ad {

int MlpSpec::merge_in() const { return std::accumulate(group_sizes.begin(), group_sizes.end(), 0); }

int MlpSpec::merge_out() const { return (merge_in() + 1) / 2; }

std::array<int, 4> MlpSpec::branch_dims(int q) const {
  const int m = group_sizes.at(q);
  return {m, 4 * m, 2 * m, m};
}

std::vector<DenseLayer*> MlpModel::layers() {
  std::vector<DenseLayer*> out;
  for (auto& b : branches) {
    for (auto& l : b) out.push_back(&l);
  }
  out.insert(out.end(), {&joint, &head, &fusion});
  return out;
}

std::vector<const DenseLayer*> MlpModel::layers() const {
  std::vector<const DenseLayer*> out;
  for (const auto& b : branches) {
    for (const auto& l : b) out.push_back(&l);
  }
  out.insert(out.end(), {&joint, &head, &fusion});
  return out;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto* l : layers()) n += l->weight.size() + l->bias.size();
  return n;
}

namespace {

DenseLayer zero_layer(int in, int out) {
  return {Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)};
}

std::vector<std::pair<int, int>> layer_shapes(const MlpSpec& spec) {
  std::vector<std::pair<int, int>> shapes;  // (in, out)
  for (int q = 0; q < spec.num_groups(); ++q) {
    const auto d = spec.branch_dims(q);
    for (int i = 0; i < 3; ++i) shapes.emplace_back(d[i], d[i + 1]);
  }
  shapes.emplace_back(spec.merge_in(), spec.merge_out());
  shapes.emplace_back(spec.merge_out(), spec.num_groups());
  shapes.emplace_back(spec.num_groups(), 1);
  return shapes;
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& pre) {
  return (pre.array() > 0.0).cast<double>().matrix();
}

Eigen::MatrixXd affine(const DenseLayer& l, const Eigen::MatrixXd& x) {
  return (l.weight * x).colwise() + l.bias;
}

void accumulate_layer(DenseLayer& g, const Eigen::MatrixXd& delta, const Eigen::MatrixXd& input) {
  g.weight.noalias() = delta * input.transpose();
  g.bias = delta.rowwise().sum();
}

}  // namespace

MlpModel zero_model(const MlpSpec& spec) {
  if (spec.group_sizes.empty()) throw ShapeMismatch("model needs at least one group");
  for (int m : spec.group_sizes) {
    if (m < 1) throw ShapeMismatch("group sizes must be positive");
  }
  MlpModel model;
  model.spec = spec;
  const auto shapes = layer_shapes(spec);
  std::size_t i = 0;
  model.branches.resize(spec.num_groups());
  for (auto& b : model.branches) {
    for (auto& l : b) {
      l = zero_layer(shapes[i].first, shapes[i].second);
      ++i;
    }
  }
  model.joint = zero_layer(shapes[i].first, shapes[i].second);
  model.head = zero_layer(shapes[i + 1].first, shapes[i + 1].second);
  model.fusion = zero_layer(shapes[i + 2].first, shapes[i + 2].second);
  return model;
}

MlpModel init_model(const MlpSpec& spec, std::uint64_t seed) {
  MlpModel model = zero_model(spec);
  model.info.seed = seed;
  std::mt19937_64 gen(derive_seed({seed, 0x494e4954ULL}));
  for (auto* l : model.layers()) {
    const double limit = std::sqrt(6.0 / double(l->weight.rows() + l->weight.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index r = 0; r < l->weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l->weight.cols(); ++c) l->weight(r, c) = dist(gen);
    }
  }
  return model;
}

void check_model(const MlpModel& model) {
  const auto shapes = layer_shapes(model.spec);
  if (static_cast<int>(model.branches.size()) != model.spec.num_groups()) {
    throw ShapeMismatch("branch count does not match the layer spec");
  }
  const auto layers = model.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = *layers[i];
    if (l.weight.cols() != shapes[i].first || l.weight.rows() != shapes[i].second ||
        l.bias.size() != shapes[i].second) {
      throw ShapeMismatch(fmt::format("layer {} has shape {}x{}, expected {}x{}", i,
                                      l.weight.rows(), l.weight.cols(), shapes[i].second,
                                      shapes[i].first));
    }
    if (!l.weight.allFinite() || !l.bias.allFinite()) {
      throw ShapeMismatch(fmt::format("layer {} holds non-finite values", i));
    }
  }
}

ForwardCache forward_batch(const MlpModel& model, const Eigen::MatrixXd& features) {
  const auto& spec = model.spec;
  if (features.rows() != spec.merge_in()) {
    throw ShapeMismatch(fmt::format("feature length {} != {}", features.rows(), spec.merge_in()));
  }
  const Eigen::Index n = features.cols();
  ForwardCache c;
  c.branch_pre.resize(spec.num_groups());
  c.branch_act.resize(spec.num_groups());
  c.merged_in.resize(spec.merge_in(), n);
  int offset = 0;
  for (int q = 0; q < spec.num_groups(); ++q) {
    const int m = spec.group_sizes[q];
    Eigen::MatrixXd x = features.middleRows(offset, m);
    for (int i = 0; i < 3; ++i) {
      c.branch_pre[q][i] = affine(model.branches[q][i], x);
      c.branch_act[q][i] = relu(c.branch_pre[q][i]);
      x = c.branch_act[q][i];
    }
    c.merged_in.middleRows(offset, m) = x;
    offset += m;
  }
  c.joint_pre = affine(model.joint, c.merged_in);
  c.joint_act = relu(c.joint_pre);
  c.head = affine(model.head, c.joint_act);
  c.fused = affine(model.fusion, c.head);
  return c;
}

ForwardResult forward(const MlpModel& model, std::span<const double> features) {
  const Eigen::Map<const Eigen::VectorXd> x(features.data(), Eigen::Index(features.size()));
  const ForwardCache c = forward_batch(model, x);
  ForwardResult r;
  for (const auto& act : c.branch_act) r.branch_outputs.push_back(act[2].col(0));
  r.merged = c.joint_act.col(0);
  r.head = c.head.col(0);
  r.fused = c.fused(0);
  return r;
}

std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::mb_fcnn: return "mb_fcnn";
    case LossKind::fusion_net: return "fusion_net";
    case LossKind::mbnn: return "mbnn";
  }
  return "?";
}

double loss_mb_fcnn(const Eigen::MatrixXd& pred_tuples, const Eigen::MatrixXd& label_tuples) {
  if (pred_tuples.rows() != label_tuples.rows() || pred_tuples.cols() != label_tuples.cols()) {
    throw ShapeMismatch("prediction and label batches differ in shape");
  }
  return (pred_tuples - label_tuples).squaredNorm() / double(pred_tuples.size());
}

double loss_fusion(const Eigen::RowVectorXd& pred_theta, const Eigen::RowVectorXd& label_theta) {
  if (pred_theta.size() != label_theta.size()) throw ShapeMismatch("batch sizes differ");
  return (pred_theta - label_theta).squaredNorm() / double(pred_theta.size());
}

double loss_mbnn(const Eigen::MatrixXd& pred_tuples, const Eigen::RowVectorXd& pred_theta) {
  if (pred_tuples.cols() != pred_theta.size()) throw ShapeMismatch("batch sizes differ");
  return (pred_tuples.rowwise() - pred_theta).squaredNorm() / double(pred_tuples.size());
}

namespace {

double loss_from_cache(const ForwardCache& c, const Batch& batch, LossKind kind) {
  switch (kind) {
    case LossKind::mb_fcnn: return loss_mb_fcnn(c.head, batch.label_tuple);
    case LossKind::fusion_net: return loss_fusion(c.fused, batch.label_theta);
    case LossKind::mbnn: return loss_mbnn(c.head, c.fused);
  }
  return 0.0;
}

}  // namespace

double evaluate_loss(const MlpModel& model, const Batch& batch, LossKind kind) {
  return loss_from_cache(forward_batch(model, batch.features), batch, kind);
}

double loss_and_gradient(const MlpModel& model, const Batch& batch, LossKind kind, MlpModel& grad,
                         bool backbone) {
  const auto& spec = model.spec;
  const ForwardCache c = forward_batch(model, batch.features);
  const double loss = loss_from_cache(c, batch, kind);
  if (!(grad.spec == spec) || grad.branches.size() != model.branches.size()) grad = zero_model(spec);

  const double q_count = spec.num_groups();
  const double n = double(batch.features.cols());

  // Upstream derivatives at the two network outputs.
  Eigen::MatrixXd d_head = Eigen::MatrixXd::Zero(c.head.rows(), c.head.cols());
  Eigen::RowVectorXd d_fused = Eigen::RowVectorXd::Zero(c.fused.size());
  switch (kind) {
    case LossKind::mb_fcnn:
      d_head = 2.0 * (c.head - batch.label_tuple) / (q_count * n);
      break;
    case LossKind::fusion_net:
      d_fused = 2.0 * (c.fused - batch.label_theta) / n;
      break;
    case LossKind::mbnn: {
      const Eigen::MatrixXd r = c.head.rowwise() - c.fused;
      d_head = 2.0 * r / (q_count * n);
      d_fused = -d_head.colwise().sum();
      break;
    }
  }

  accumulate_layer(grad.fusion, d_fused, c.head);
  if (!backbone) return loss;

  d_head += model.fusion.weight.transpose() * d_fused;
  accumulate_layer(grad.head, d_head, c.joint_act);
  const Eigen::MatrixXd d_joint =
      (model.head.weight.transpose() * d_head).cwiseProduct(relu_mask(c.joint_pre));
  accumulate_layer(grad.joint, d_joint, c.merged_in);
  const Eigen::MatrixXd d_merged = model.joint.weight.transpose() * d_joint;

  int offset = 0;
  for (int q = 0; q < spec.num_groups(); ++q) {
    const int m = spec.group_sizes[q];
    Eigen::MatrixXd delta = d_merged.middleRows(offset, m);
    for (int i = 2; i >= 0; --i) {
      delta = delta.cwiseProduct(relu_mask(c.branch_pre[q][i]));
      const Eigen::MatrixXd input =
          i == 0 ? Eigen::MatrixXd(batch.features.middleRows(offset, m)) : c.branch_act[q][i - 1];
      accumulate_layer(grad.branches[q][i], delta, input);
      if (i > 0) delta = model.branches[q][i].weight.transpose() * delta;
    }
    offset += m;
  }
  return loss;
}

namespace {

using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

struct ReferenceEval {
  long double loss = 0.0L;
  std::vector<bool> pattern;  // sign of every ReLU pre-activation
};

// Forward pass and loss in long double with parameter `index` (flat order:
// weights then bias, layer by layer) shifted by `delta`. Keeps finite-difference
// roundoff well below the double-precision backprop it is checked against.
ReferenceEval reference_eval(const MlpModel& model, const Batch& batch, LossKind kind, std::size_t index,
                             long double delta) {
  std::vector<std::pair<MatrixXld, MatrixXld>> params;
  std::size_t remaining = index;
  bool placed = false;
  for (const auto* l : model.layers()) {
    MatrixXld w = l->weight.cast<long double>();
    MatrixXld b = MatrixXld(l->bias.cast<long double>());
    if (!placed) {
      if (remaining < std::size_t(w.size())) {
        w.data()[remaining] += delta;
        placed = true;
      } else if ((remaining -= std::size_t(w.size())) < std::size_t(b.size())) {
        b.data()[remaining] += delta;
        placed = true;
      } else {
        remaining -= std::size_t(b.size());
      }
    }
    params.emplace_back(std::move(w), std::move(b));
  }
  if (!placed) throw ShapeMismatch("parameter index out of range");

  ReferenceEval r;
  auto dense = [&](std::size_t li, const MatrixXld& x, bool activate) {
    MatrixXld y = (params[li].first * x).colwise() + params[li].second.col(0);
    if (activate) {
      for (Eigen::Index i = 0; i < y.size(); ++i) r.pattern.push_back(y.data()[i] > 0.0L);
      y = y.cwiseMax(0.0L);
    }
    return y;
  };

  const auto& spec = model.spec;
  const MatrixXld features = batch.features.cast<long double>();
  MatrixXld merged(spec.merge_in(), features.cols());
  std::size_t li = 0;
  int offset = 0;
  for (int q = 0; q < spec.num_groups(); ++q) {
    MatrixXld x = features.middleRows(offset, spec.group_sizes[q]);
    for (int i = 0; i < 3; ++i) x = dense(li++, x, true);
    merged.middleRows(offset, spec.group_sizes[q]) = x;
    offset += spec.group_sizes[q];
  }
  const MatrixXld joint = dense(li++, merged, true);
  const MatrixXld head = dense(li++, joint, false);
  const MatrixXld fused = dense(li++, head, false);

  const long double n = features.cols();
  switch (kind) {
    case LossKind::mb_fcnn:
      r.loss = (head - batch.label_tuple.cast<long double>()).squaredNorm() / (n * head.rows());
      break;
    case LossKind::fusion_net:
      r.loss = (fused - MatrixXld(batch.label_theta.cast<long double>())).squaredNorm() / n;
      break;
    case LossKind::mbnn:
      r.loss = (head.rowwise() - fused.row(0)).squaredNorm() / (n * head.rows());
      break;
  }
  return r;
}

// Flat view of parameter `index`, walking weights then biases per layer.
double parameter_at(const MlpModel& model, std::size_t index) {
  for (const auto* l : model.layers()) {
    const auto w = std::size_t(l->weight.size());
    if (index < w) return l->weight.data()[index];
    index -= w;
    const auto b = std::size_t(l->bias.size());
    if (index < b) return l->bias.data()[index];
    index -= b;
  }
  throw ShapeMismatch("parameter index out of range");
}

}  // namespace

GradCheckResult grad_check(const MlpModel& model, const Batch& batch, LossKind kind, int count,
                           std::uint64_t seed, double step) {
  MlpModel grad = zero_model(model.spec);
  loss_and_gradient(model, batch, kind, grad);
  const auto base_pattern = reference_eval(model, batch, kind, 0, 0.0L).pattern;

  const std::size_t total = model.parameter_count();
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);

  GradCheckResult result;
  for (int i = 0; i < count; ++i) {
    const std::size_t index = pick(gen);
    const auto plus = reference_eval(model, batch, kind, index, step);
    const auto minus = reference_eval(model, batch, kind, index, -step);
    if (plus.pattern != base_pattern || minus.pattern != base_pattern) {
      ++result.excluded;
      continue;
    }
    const double numeric = double((plus.loss - minus.loss) / (2.0L * step));
    const double analytic = parameter_at(grad, index);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic - numeric) / denom);
    ++result.checked;
  }
  return result;
}

std::string_view to_string(TrainStage s) {
  switch (s) {
    case TrainStage::mb_fcnn: return "mb_fcnn";
    case TrainStage::fusion_net: return "fusion_net";
    case TrainStage::joint: return "joint";
  }
  return "?";
}

TrainStage parse_train_stage(std::string_view name) {
  if (name == "mb_fcnn") return TrainStage::mb_fcnn;
  if (name == "fusion_net") return TrainStage::fusion_net;
  if (name == "joint") return TrainStage::joint;
  throw ConfigError(fmt::format("unknown training stage '{}'", name));
}

TrainHistory train(MlpModel& model, const Dataset& dataset, const TrainConfig& cfg) {
  if (dataset.samples.empty()) throw ConfigError("training dataset is empty");
  if (!(cfg.learning_rate >= 0.0) || cfg.epochs < 1 || cfg.batch_size < 1) {
    throw ConfigError("learning_rate must be >= 0, epochs and batch_size >= 1");
  }
  if (dataset.group_sizes != model.spec.group_sizes) {
    throw ShapeMismatch("dataset group sizes do not match the model");
  }
  check_model(model);

  const LossKind kind = cfg.stage == TrainStage::mb_fcnn      ? LossKind::mb_fcnn
                        : cfg.stage == TrainStage::fusion_net ? LossKind::fusion_net
                                                              : LossKind::mbnn;
  const bool backbone = cfg.stage != TrainStage::fusion_net;

  MlpModel grad = zero_model(model.spec);
  MlpModel first_moment = zero_model(model.spec);
  MlpModel second_moment = zero_model(model.spec);
  auto params = model.layers();
  auto grads = grad.layers();
  auto m1 = first_moment.layers();
  auto m2 = second_moment.layers();
  // The fusion layer is last; mb_fcnn leaves it alone, fusion_net trains only it.
  const std::size_t first_layer = cfg.stage == TrainStage::fusion_net ? params.size() - 1 : 0;
  const std::size_t end_layer = cfg.stage == TrainStage::mb_fcnn ? params.size() - 1 : params.size();

  std::vector<std::size_t> order(dataset.samples.size());
  std::iota(order.begin(), order.end(), 0);

  TrainHistory history;
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::mt19937_64 shuffle_gen(derive_seed({cfg.seed, 0x53485546ULL, std::uint64_t(epoch)}));
    std::shuffle(order.begin(), order.end(), shuffle_gen);

    double weighted = 0.0;
    for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + std::size_t(cfg.batch_size));
      const Batch batch = dataset.to_batch(std::span(order).subspan(start, stop - start));
      const double loss = loss_and_gradient(model, batch, kind, grad, backbone);
      if (!std::isfinite(loss)) throw NonFiniteLoss(epoch);
      weighted += loss * double(stop - start);

      ++step;
      const double bias1 = 1.0 - std::pow(cfg.beta1, double(step));
      const double bias2 = 1.0 - std::pow(cfg.beta2, double(step));
      for (std::size_t li = first_layer; li < end_layer; ++li) {
        auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
          m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
          v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseAbs2();
          p.array() -= cfg.learning_rate * (m.array() / bias1) /
                       ((v.array() / bias2).sqrt() + cfg.epsilon);
        };
        update(params[li]->weight, grads[li]->weight, m1[li]->weight, m2[li]->weight);
        update(params[li]->bias, grads[li]->bias, m1[li]->bias, m2[li]->bias);
      }
    }
    const double epoch_loss = weighted / double(order.size());
    if (!std::isfinite(epoch_loss)) throw NonFiniteLoss(epoch);
    history.epoch_loss.push_back(epoch_loss);
  }

  const Batch all = dataset.to_batch();
  const ForwardCache c = forward_batch(model, all.features);
  model.info.seed = cfg.seed;
  model.info.epochs += std::uint32_t(cfg.epochs);
  model.info.final_losses = {loss_mb_fcnn(c.head, all.label_tuple), loss_fusion(c.fused, all.label_theta),
                             loss_mbnn(c.head, c.fused)};
  return history;
}

double predict_doa(const MlpModel& model, std::span<const CandidateSet> sets) {
  if (static_cast<int>(sets.size()) != model.spec.num_groups()) {
    throw ShapeMismatch("candidate set count does not match the model");
  }
  for (std::size_t q = 0; q < sets.size(); ++q) {
    if (static_cast<int>(sets[q].angles.size()) != model.spec.group_sizes[q]) {
      throw ShapeMismatch(fmt::format("group {} has {} candidates, model expects {}", q,
                                      sets[q].angles.size(), model.spec.group_sizes[q]));
    }
  }
  const std::vector<double> features = candidate_features(sets);
  return forward(model, features).fused;
}

}  // namespace h2ad
