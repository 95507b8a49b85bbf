#include <array>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "h2ad/errors.hpp"
#include "h2ad/mbdnn.hpp"

namespace h2ad {
namespace {

constexpr std::array<char, 6> kMagic{'M', 'B', 'D', 'N', 'N', '1'};

template <class T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::ifstream& in, const std::string& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw TruncatedFile(fmt::format("{}: file ends inside the header or payload", path));
  }
  return value;
}

std::uint64_t payload_bytes(const MlpModel& m) { return m.parameter_count() * sizeof(double); }

}  // namespace

void save_model(const std::string& path, const MlpModel& model) {
  check_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path));
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, std::uint32_t(model.spec.num_groups()));
  for (int m : model.spec.group_sizes) put<std::uint32_t>(out, std::uint32_t(m));
  put<std::uint64_t>(out, model.info.seed);
  put<std::uint32_t>(out, model.info.epochs);
  for (double l : model.info.final_losses) put<double>(out, l);
  put<std::uint64_t>(out, payload_bytes(model));
  for (const auto* l : model.layers()) {
    for (Eigen::Index r = 0; r < l->weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l->weight.cols(); ++c) put<double>(out, l->weight(r, c));
    }
    for (Eigen::Index r = 0; r < l->bias.size(); ++r) put<double>(out, l->bias[r]);
  }
  if (!out) throw IoError(fmt::format("write to '{}' failed", path));
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open model '{}'", path));
  std::array<char, 6> magic{};
  if (!in.read(magic.data(), magic.size())) throw TruncatedFile(fmt::format("{}: no header", path));
  if (magic != kMagic) throw BadMagic(fmt::format("{}: not an MBDNN1 model file", path));

  const auto q_count = get<std::uint32_t>(in, path);
  if (q_count == 0 || q_count > 64) throw DimMismatch(fmt::format("{}: implausible group count {}", path, q_count));
  MlpSpec spec;
  for (std::uint32_t q = 0; q < q_count; ++q) {
    const auto m = get<std::uint32_t>(in, path);
    if (m == 0 || m > 4096) throw DimMismatch(fmt::format("{}: implausible group size {}", path, m));
    spec.group_sizes.push_back(int(m));
  }
  MlpModel model = zero_model(spec);
  model.info.seed = get<std::uint64_t>(in, path);
  model.info.epochs = get<std::uint32_t>(in, path);
  for (double& l : model.info.final_losses) l = get<double>(in, path);
  const auto declared = get<std::uint64_t>(in, path);
  if (declared != payload_bytes(model)) {
    throw DimMismatch(fmt::format("{}: header dims imply {} payload bytes, file declares {}", path,
                                  payload_bytes(model), declared));
  }
  for (auto* l : model.layers()) {
    for (Eigen::Index r = 0; r < l->weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l->weight.cols(); ++c) l->weight(r, c) = get<double>(in, path);
    }
    for (Eigen::Index r = 0; r < l->bias.size(); ++r) l->bias[r] = get<double>(in, path);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DimMismatch(fmt::format("{}: trailing bytes after the payload", path));
  }
  return model;
}

}  // namespace h2ad
