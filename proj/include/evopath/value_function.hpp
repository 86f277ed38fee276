#pragma once

#include <vector>

#include "evopath/mlp.hpp"
#include "evopath/types.hpp"

namespace evopath {

struct ValueFitStats {
  double loss_before = 0.0;
  double loss_after = 0.0;
  std::vector<double> epoch_losses;  // loss after each inner epoch
};

struct ValueFitOptions {
  int epochs = 8;
  double learning_rate = 3e-3;
};

// State-value baseline V(features) with an MLP [in, 32, 32, 1]. Fitting is
// full-batch Adam where a step is only kept if it lowers the batch loss, so
// the loss never increases across inner epochs.
class ValueFunction {
 public:
  ValueFunction() = default;
  ValueFunction(int input_dim, std::vector<int> hidden = {32, 32});

  void initialize(Rng& rng);

  int input_dim() const { return net_.input_dim(); }
  Vec predict(const Mat& features) const;
  double loss(const Mat& features, const Vec& targets) const;
  ValueFitStats fit(const Mat& features, const Vec& targets, const ValueFitOptions& opts = {});

  double last_loss() const { return last_loss_; }
  const Mlp<double>& net() const { return net_; }
  Mlp<double>& net() { return net_; }

 private:
  Mlp<double> net_;
  double last_loss_ = 0.0;
};

}  // namespace evopath
