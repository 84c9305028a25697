#include "igsd/distill.hpp"

#include "igsd/rng.hpp"

namespace igsd {

ModelState ModelState::init(const EncoderConfig& encoder, const HeadConfig& heads, int feature_dim,
                            int num_classes, double ema_decay, std::uint64_t seed) {
  if (ema_decay < 0.0 || ema_decay > 1.0) throw ConfigError("ModelState: ema_decay must lie in [0, 1]");
  if (feature_dim < 1) throw ConfigError("ModelState: feature_dim must be >= 1");
  ModelState state;
  state.encoder = encoder;
  state.heads = heads;
  state.feature_dim = feature_dim;
  state.num_classes = num_classes;
  state.ema_decay = ema_decay;

  auto rng = make_rng(seed, {0x1217u});
  add_encoder(state.student, "enc", encoder, feature_dim, rng);
  add_projector(state.student, "proj", heads, encoder.embedding_dim, rng);
  add_predictor(state.student, "pred", heads, rng);
  if (num_classes > 0) add_classifier(state.student, "cls", encoder.embedding_dim, num_classes, rng);

  for (const auto& [name, tensor] : state.student)
    if (name.rfind("enc.", 0) == 0 || name.rfind("proj.", 0) == 0)
      state.teacher.emplace(name, Tensor::leaf(tensor.value(), false));
  return state;
}

PairLatents forward_pair(const View& v, const View& vp, const ModelState& state) {
  PairLatents out;
  // Student path: on the tape.
  out.pred_v = l2_normalize_rows(
      predict(project(encode(v, state.student, state.encoder), state.student), state.student));
  out.pred_vp = l2_normalize_rows(
      predict(project(encode(vp, state.student, state.encoder), state.student), state.student));
  // Teacher path: no predictor, excluded from the tape.
  {
    NoGrad guard;
    out.teach_v = l2_normalize_rows(
                      project(encode(v, state.teacher, state.encoder), state.teacher))
                      .value();
    out.teach_vp = l2_normalize_rows(
                       project(encode(vp, state.teacher, state.encoder), state.teacher))
                       .value();
  }
  return out;
}

PairLatents forward_pair(const Graph& g, const View& view, const ModelState& state) {
  return forward_pair(identity_view(g, view.origin_index), view, state);
}

Tensor consistency_loss(const PairLatents& a, const PairLatents& b) {
  if (a.pred_v.cols() != b.teach_vp.cols() || a.pred_vp.cols() != b.teach_v.cols())
    throw ShapeError("consistency_loss: projection dims differ");
  Tensor d1 = sub(a.pred_v, Tensor::constant(b.teach_vp));
  Tensor d2 = sub(a.pred_vp, Tensor::constant(b.teach_v));
  return add(sum_all(mul(d1, d1)), sum_all(mul(d2, d2)));
}

void ema_update(ModelState& state) {
  if (state.student_steps != state.ema_steps + 1)
    throw StateError("ema_update: teacher must update exactly once after each student step");
  const double tau = state.ema_decay;
  for (auto& [name, teacher_param] : state.teacher) {
    auto it = state.student.find(name);
    if (it == state.student.end())
      throw StateError("ema_update: student is missing parameter " + name);
    const Mat& student_value = it->second.value();
    Mat& teacher_value = teacher_param.value();
    if (teacher_value.rows() != student_value.rows() || teacher_value.cols() != student_value.cols())
      throw StateError("ema_update: shape mismatch for parameter " + name);
    teacher_value = tau * teacher_value + (1.0 - tau) * student_value;
  }
  ++state.ema_steps;
}

}  // namespace igsd
