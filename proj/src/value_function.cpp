#include "evopath/value_function.hpp"

#include <cmath>

namespace evopath {

ValueFunction::ValueFunction(int input_dim, std::vector<int> hidden) {
  std::vector<int> sizes{input_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  net_ = Mlp<double>(std::move(sizes));
}

void ValueFunction::initialize(Rng& rng) { net_.initialize(rng, 1.0); }

Vec ValueFunction::predict(const Mat& features) const {
  return net_.forward(features).row(0).transpose();
}

double ValueFunction::loss(const Mat& features, const Vec& targets) const {
  return (predict(features) - targets).squaredNorm() / static_cast<double>(targets.size());
}

ValueFitStats ValueFunction::fit(const Mat& features, const Vec& targets, const ValueFitOptions& opts) {
  if (features.cols() == 0 || features.cols() != targets.size()) {
    throw PreconditionError("value fit: need a nonempty batch with one target per sample");
  }
  const double n = static_cast<double>(targets.size());
  ValueFitStats stats;

  Mlp<double>::Activations cache;
  auto loss_and_grad = [&](Vec* grad) {
    const Mat out = net_.forward(features, &cache);
    const Mat resid = out - targets.transpose();
    if (grad) *grad = net_.summed_gradient(cache, resid * (2.0 / n));
    return resid.squaredNorm() / n;
  };

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  Vec params = net_.flat_params();
  Vec m = Vec::Zero(params.size());
  Vec v = Vec::Zero(params.size());
  Vec grad;
  double current = loss_and_grad(&grad);
  stats.loss_before = current;
  double lr = opts.learning_rate;

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    m = kBeta1 * m + (1.0 - kBeta1) * grad;
    v = kBeta2 * v + (1.0 - kBeta2) * grad.cwiseAbs2();
    const Vec m_hat = m / (1.0 - std::pow(kBeta1, epoch));
    const Vec v_hat = v / (1.0 - std::pow(kBeta2, epoch));
    const Vec step = (m_hat.array() / (v_hat.array().sqrt() + kEps)).matrix();

    bool accepted = false;
    for (int tries = 0; tries < 6 && !accepted; ++tries) {
      net_.set_flat_params(params - lr * step);
      Vec trial_grad;
      const double trial = loss_and_grad(&trial_grad);
      if (std::isfinite(trial) && trial <= current) {
        params = net_.flat_params();
        current = trial;
        grad = std::move(trial_grad);
        accepted = true;
      } else {
        lr *= 0.5;
      }
    }
    if (!accepted) net_.set_flat_params(params);
    stats.epoch_losses.push_back(current);
  }
  stats.loss_after = current;
  last_loss_ = current;
  return stats;
}

}  // namespace evopath
