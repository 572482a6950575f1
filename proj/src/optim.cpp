#include "pathovox/optim.hpp"

#include <algorithm>
#include <cmath>

namespace pathovox {

namespace {
constexpr double kLogClip = 1e-12;
}

double cross_entropy(std::span<const double> probabilities, std::span<const double> one_hot) {
  if (probabilities.size() != one_hot.size())
    throw ShapeMismatch("cross entropy: probability and target sizes differ");
  double sum = 0.0, loss = 0.0;
  for (std::size_t k = 0; k < probabilities.size(); ++k) {
    sum += probabilities[k];
    if (one_hot[k] != 0.0)
      loss -= one_hot[k] * std::log(std::clamp(probabilities[k], kLogClip, 1.0));
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw ShapeMismatch("cross entropy: probabilities do not sum to 1");
  return loss;
}

std::vector<double> softmax_cross_entropy_grad(std::span<const double> probabilities,
                                               std::span<const double> one_hot) {
  if (probabilities.size() != one_hot.size())
    throw ShapeMismatch("cross entropy grad: probability and target sizes differ");
  std::vector<double> grad(probabilities.size());
  for (std::size_t k = 0; k < grad.size(); ++k) grad[k] = probabilities[k] - one_hot[k];
  return grad;
}

AdamState AdamState::for_parameters(const std::vector<Tensor*>& params, double learning_rate) {
  AdamState state;
  state.learning_rate = learning_rate;
  for (const Tensor* p : params) {
    state.m.push_back(Tensor::zeros(p->shape));
    state.v.push_back(Tensor::zeros(p->shape));
  }
  return state;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads,
               AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ShapeMismatch("adam: parameter, gradient and moment counts differ");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& theta = *params[i];
    const Tensor& g = *grads[i];
    if (theta.shape != g.shape) throw ShapeMismatch("adam: gradient shape mismatch");
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double gj = g[j];
      if (!std::isfinite(gj)) throw NonFiniteGradient("adam: non-finite gradient");
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * gj;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * gj * gj;
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      theta[j] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

double plateau_update(ScheduleState& state, double epoch_val_accuracy, double current_lr) {
  if (epoch_val_accuracy > state.best_val_accuracy) {
    state.best_val_accuracy = epoch_val_accuracy;
    state.epochs_since_acc_improvement = 0;
    return current_lr;
  }
  state.epochs_since_acc_improvement += 1;
  if (state.epochs_since_acc_improvement >= state.lr_patience) {
    state.epochs_since_acc_improvement = 0;
    return std::max(current_lr * state.lr_factor, state.min_lr);
  }
  return current_lr;
}

bool early_stop_update(ScheduleState& state, double epoch_val_loss) {
  if (epoch_val_loss < state.best_val_loss) {
    state.best_val_loss = epoch_val_loss;
    state.epochs_since_loss_improvement = 0;
    return false;
  }
  state.epochs_since_loss_improvement += 1;
  return state.epochs_since_loss_improvement >= state.stop_patience;
}

}  // namespace pathovox
