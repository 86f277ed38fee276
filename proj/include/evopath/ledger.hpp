#pragma once

#include <string_view>

namespace evopath {

enum class EpochPurpose { kJacobian, kTraining, kEvaluation };

constexpr std::string_view purpose_name(EpochPurpose p) {
  switch (p) {
    case EpochPurpose::kJacobian: return "jacobian";
    case EpochPurpose::kTraining: return "training";
    case EpochPurpose::kEvaluation: return "evaluation";
  }
  return "unknown";
}

// Exact counters of simulated episodes (by purpose) and policy updates.
struct Ledger {
  long jacobian_epochs = 0;
  long training_epochs = 0;
  long evaluation_epochs = 0;
  long train_iters = 0;

  long sim_epochs() const { return jacobian_epochs + training_epochs + evaluation_epochs; }

  void add_epochs(EpochPurpose purpose, long n) {
    switch (purpose) {
      case EpochPurpose::kJacobian: jacobian_epochs += n; break;
      case EpochPurpose::kTraining: training_epochs += n; break;
      case EpochPurpose::kEvaluation: evaluation_epochs += n; break;
    }
  }

  Ledger& operator+=(const Ledger& o) {
    jacobian_epochs += o.jacobian_epochs;
    training_epochs += o.training_epochs;
    evaluation_epochs += o.evaluation_epochs;
    train_iters += o.train_iters;
    return *this;
  }

  friend Ledger operator-(Ledger a, const Ledger& b) {
    a.jacobian_epochs -= b.jacobian_epochs;
    a.training_epochs -= b.training_epochs;
    a.evaluation_epochs -= b.evaluation_epochs;
    a.train_iters -= b.train_iters;
    return a;
  }

  friend bool operator==(const Ledger&, const Ledger&) = default;
};

}  // namespace evopath
