#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "pathovox/tensor.hpp"

namespace pathovox {

/// -sum y_k ln(clip(p_k, 1e-12, 1)). Probabilities must sum to 1 within
/// a loose tolerance; the target is one-hot.
double cross_entropy(std::span<const double> probabilities, std::span<const double> one_hot);

/// Gradient of cross_entropy(softmax(z), y) w.r.t. the logits z: p - y.
std::vector<double> softmax_cross_entropy_grad(std::span<const double> probabilities,
                                               std::span<const double> one_hot);

/// Adam moments for one parameter set. beta1/beta2/epsilon follow the
/// original algorithm's defaults.
struct AdamState {
  double learning_rate = 6e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long long step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  static AdamState for_parameters(const std::vector<Tensor*>& params, double learning_rate);
};

/// One Adam update: m <- b1 m + (1-b1) g; v <- b2 v + (1-b2) g^2; both
/// bias-corrected; theta <- theta - lr * m_hat / (sqrt(v_hat) + eps).
/// Throws NonFiniteGradient on NaN/Inf gradients.
void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads,
               AdamState& state);

/// Plateau learning-rate decay and early-stopping bookkeeping. The two
/// monitors are distinct: the decay watches validation accuracy, the
/// stop decision watches validation loss. Improvement is strict.
struct ScheduleState {
  double best_val_accuracy = -1.0;
  int epochs_since_acc_improvement = 0;
  int lr_patience = 8;
  double lr_factor = 0.5;
  double min_lr = 1e-7;

  double best_val_loss = std::numeric_limits<double>::infinity();
  int epochs_since_loss_improvement = 0;
  int stop_patience = 20;
};

/// Folds one epoch's validation accuracy into the schedule; returns the
/// learning rate for subsequent epochs (halved and clamped to min_lr
/// after lr_patience non-improving epochs).
double plateau_update(ScheduleState& state, double epoch_val_accuracy, double current_lr);

/// Returns true when training should stop: stop_patience consecutive
/// epochs without a strict validation-loss improvement.
bool early_stop_update(ScheduleState& state, double epoch_val_loss);

}  // namespace pathovox
