#include "gsmote/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gsmote {

void adam_step(std::span<ad::Var> params, AdamState& state) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) {
      throw std::logic_error("adam_step: parameter " + std::to_string(i) + " has no gradient");
    }
  }
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
      state.second_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw std::logic_error("adam_step: parameter list changed between steps");
  }

  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Var& p = params[i];
    const Matrix& g = p.grad();
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    if (m.rows() != p.rows() || m.cols() != p.cols()) {
      throw std::logic_error("adam_step: moment shape differs from parameter");
    }
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    Matrix& x = p.mutable_data();
    x *= 1.0 - state.learning_rate * state.weight_decay;
    x.array() -= state.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
    p.zero_grad();
  }
}

}  // namespace gsmote
