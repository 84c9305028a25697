#pragma once

#include <cstdint>

#include "igsd/gnn.hpp"

namespace igsd {

/// Teacher-student parameter pair. The student trains by gradient descent;
/// the teacher (encoder + projector only, no predictor) changes exclusively
/// through ema_update.
struct ModelState {
  EncoderConfig encoder;
  HeadConfig heads;
  int feature_dim = 0;
  int num_classes = 0;
  ParamMap student;   // enc.*, proj.*, pred.*, cls.*
  ParamMap teacher;   // enc.*, proj.*
  double ema_decay = 0.99;
  std::int64_t student_steps = 0;  // optimizer steps applied to the student
  std::int64_t ema_steps = 0;      // ema updates applied to the teacher

  /// Seeded Xavier initialization; the teacher starts as an exact copy of the
  /// student's encoder and projector.
  static ModelState init(const EncoderConfig& encoder, const HeadConfig& heads, int feature_dim,
                         int num_classes, double ema_decay, std::uint64_t seed);

  std::vector<Tensor> trainable() const { return param_values(student); }
};

/// Latents of one (graph, augmented view) pair, all L2-normalized:
/// student predictions stay on the tape, teacher projections are constants.
struct PairLatents {
  Tensor pred_v;    // student h(g(f(v)))   [1 x projection_dim]
  Tensor pred_vp;   // student h(g(f(v')))
  Mat teach_v;      // teacher g'(f'(v))
  Mat teach_vp;     // teacher g'(f'(v'))
};

/// Encode both views through both networks. The teacher pass runs outside the
/// gradient tape, so no gradient ever reaches teacher parameters.
PairLatents forward_pair(const Graph& g, const View& view, const ModelState& state);
PairLatents forward_pair(const View& v, const View& vp, const ModelState& state);

/// Symmetric consistency loss between two graphs' latents:
/// || n(h(z_a)) - n(z'_b) ||^2 + || n(h(z'_a)) - n(z_b) ||^2.
/// Bounded in [0, 8]; gradients flow only through the student terms.
Tensor consistency_loss(const PairLatents& a, const PairLatents& b);

/// theta' <- tau * theta' + (1 - tau) * theta for every teacher parameter.
/// Must run after the corresponding optimizer step (asserted via counters).
void ema_update(ModelState& state);

}  // namespace igsd
