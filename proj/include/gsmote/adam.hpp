#pragma once

#include <span>
#include <vector>

#include "gsmote/autodiff.hpp"

namespace gsmote {

struct AdamState {
  long step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 0.001;
  double weight_decay = 5e-4;
};

/// One Adam update with decoupled weight decay, then clears every gradient.
///
/// Moments are matched to parameters by position, so a state must always be
/// stepped with the same parameter list. Throws std::logic_error if a
/// parameter has no gradient.
void adam_step(std::span<ad::Var> params, AdamState& state);

}  // namespace gsmote
