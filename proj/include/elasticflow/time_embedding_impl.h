#pragma once

#include "elasticflow/time_encoding.h"

namespace elasticflow {

// MLP([FF(t), FF(t − r)]) on [B,1] columns for any value layer. The Δt branch
// is formed as t − r, so a tangent on t also moves Δt.
template <class Layer>
typename Layer::Value time_embedding(Layer& layer, const TimeEncoder& encoder,
                                     const typename Layer::Value& r,
                                     const typename Layer::Value& t) {
  using V = typename Layer::Value;
  V span = sub(t, r);
  V features = concat_cols(fourier_features(t, encoder.bank_t), fourier_features(span, encoder.bank_dt));
  V hidden = silu(affine(features, layer.param("time.w1"), layer.param("time.b1")));
  return affine(hidden, layer.param("time.w2"), layer.param("time.b2"));
}

}  // namespace elasticflow
