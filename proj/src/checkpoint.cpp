#include "igsd/checkpoint.hpp"

#include <cstdint>
#include <fstream>
#include <vector>

namespace igsd {

namespace {

constexpr char kMagic[8] = {'I', 'G', 'S', 'D', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw FormatError(path + ": truncated checkpoint");
  return v;
}

}  // namespace

void save_params(const std::string& path, const ParamMap& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IOError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, tensor] : params) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<std::uint32_t>(tensor.rows()));
    write_u32(out, static_cast<std::uint32_t>(tensor.cols()));
    const Mat& m = tensor.value();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      out.write(reinterpret_cast<const char*>(m.row(r).eval().data()),
                static_cast<std::streamsize>(sizeof(double) * m.cols()));
  }
  if (!out) throw IOError("failed while writing checkpoint: " + path);
}

ParamMap load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::string(magic, 8) != std::string(kMagic, 8))
    throw FormatError(path + ": not an IGSD checkpoint");
  const std::uint32_t version = read_u32(in, path);
  if (version != kVersion)
    throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t count = read_u32(in, path);
  ParamMap params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = read_u32(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t rows = read_u32(in, path);
    const std::uint32_t cols = read_u32(in, path);
    Mat m(rows, cols);
    std::vector<double> row(cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
      in.read(reinterpret_cast<char*>(row.data()),
              static_cast<std::streamsize>(sizeof(double) * cols));
      for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = row[c];
    }
    if (!in) throw FormatError(path + ": truncated checkpoint");
    params.emplace(std::move(name), Tensor::leaf(std::move(m), true));
  }
  return params;
}

namespace {

Tensor meta_scalar(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return Tensor::leaf(std::move(m), false);
}

double require_meta(const ParamMap& params, const std::string& key, const std::string& path) {
  auto it = params.find(key);
  if (it == params.end()) throw FormatError(path + ": checkpoint is missing " + key);
  return it->second.value()(0, 0);
}

}  // namespace

void save_model_state(const std::string& path, const ModelState& state) {
  ParamMap flat;
  flat.emplace("meta.encoder_kind", meta_scalar(state.encoder.kind == EncoderKind::GCN ? 0 : 1));
  flat.emplace("meta.layer_count", meta_scalar(state.encoder.layer_count));
  flat.emplace("meta.hidden_dim", meta_scalar(state.encoder.hidden_dim));
  flat.emplace("meta.embedding_dim", meta_scalar(state.encoder.embedding_dim));
  flat.emplace("meta.projector_hidden", meta_scalar(state.heads.projector_hidden));
  flat.emplace("meta.projection_dim", meta_scalar(state.heads.projection_dim));
  flat.emplace("meta.predictor_hidden", meta_scalar(state.heads.predictor_hidden));
  flat.emplace("meta.feature_dim", meta_scalar(state.feature_dim));
  flat.emplace("meta.num_classes", meta_scalar(state.num_classes));
  flat.emplace("meta.ema_decay", meta_scalar(state.ema_decay));
  flat.emplace("meta.student_steps", meta_scalar(static_cast<double>(state.student_steps)));
  flat.emplace("meta.ema_steps", meta_scalar(static_cast<double>(state.ema_steps)));
  for (const auto& [name, t] : state.student) flat.emplace("student." + name, t);
  for (const auto& [name, t] : state.teacher) flat.emplace("teacher." + name, t);
  save_params(path, flat);
}

ModelState load_model_state(const std::string& path) {
  const ParamMap flat = load_params(path);
  ModelState state;
  state.encoder.kind =
      require_meta(flat, "meta.encoder_kind", path) == 0 ? EncoderKind::GCN : EncoderKind::GIN;
  state.encoder.layer_count = static_cast<int>(require_meta(flat, "meta.layer_count", path));
  state.encoder.hidden_dim = static_cast<int>(require_meta(flat, "meta.hidden_dim", path));
  state.encoder.embedding_dim = static_cast<int>(require_meta(flat, "meta.embedding_dim", path));
  state.heads.projector_hidden = static_cast<int>(require_meta(flat, "meta.projector_hidden", path));
  state.heads.projection_dim = static_cast<int>(require_meta(flat, "meta.projection_dim", path));
  state.heads.predictor_hidden = static_cast<int>(require_meta(flat, "meta.predictor_hidden", path));
  state.feature_dim = static_cast<int>(require_meta(flat, "meta.feature_dim", path));
  state.num_classes = static_cast<int>(require_meta(flat, "meta.num_classes", path));
  state.ema_decay = require_meta(flat, "meta.ema_decay", path);
  state.student_steps = static_cast<std::int64_t>(require_meta(flat, "meta.student_steps", path));
  state.ema_steps = static_cast<std::int64_t>(require_meta(flat, "meta.ema_steps", path));
  for (const auto& [name, t] : flat) {
    if (name.rfind("student.", 0) == 0)
      state.student.emplace(name.substr(8), Tensor::leaf(t.value(), true));
    else if (name.rfind("teacher.", 0) == 0)
      state.teacher.emplace(name.substr(8), Tensor::leaf(t.value(), false));
  }
  if (state.student.empty()) throw FormatError(path + ": checkpoint has no student parameters");
  return state;
}

}  // namespace igsd
