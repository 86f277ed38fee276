#pragma once

// Diagonal-Gaussian MLP policy: the object transferred along the evolution path.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "evopath/mlp.hpp"
#include "evopath/random.hpp"
#include "evopath/types.hpp"

namespace evopath {

inline constexpr int kPolicyFormatVersion = 1;

struct ActionSample {
  Vec action;
  double log_prob = 0.0;
};

class GaussianMlpPolicy {
 public:
  GaussianMlpPolicy() = default;
  GaussianMlpPolicy(int obs_dim, int act_dim, std::vector<int> hidden = {32, 32});

  // Hidden weights ~ N(0, 1/fan_in), output layer scaled by 0.01, log_std = 0.
  void initialize(Rng& rng);

  int obs_dim() const { return net_.input_dim(); }
  int act_dim() const { return net_.output_dim(); }
  int num_params() const { return net_.num_params() + act_dim(); }

  // Flat vector: network parameters followed by log_std.
  Vec params() const;
  void set_params(const Vec& params);

  Mlp<double>& net() { return net_; }
  const Mlp<double>& net() const { return net_; }
  const Vec& log_std() const { return log_std_; }
  void set_log_std(const Vec& log_std);

  // Frozen observation normalization: (obs - shift) ./ scale.
  const Vec& obs_shift() const { return obs_shift_; }
  const Vec& obs_scale() const { return obs_scale_; }
  void set_normalization(Vec shift, Vec scale);
  Vec normalize(const Vec& obs) const;
  Mat normalize(const Mat& obs) const;

  const std::string& env_id() const { return env_id_; }
  void set_env_id(std::string id) { env_id_ = std::move(id); }

  // Throws PreconditionError on non-finite observations.
  Vec mean(const Vec& obs) const;
  Mat mean(const Mat& obs) const;
  ActionSample sample(const Vec& obs, Rng& rng) const;
  double log_prob(const Vec& obs, const Vec& action) const;
  // d log pi(action | obs) / d params
  Vec log_prob_grad(const Vec& obs, const Vec& action) const;
  // Per-sample score vectors as columns of a (num_params x N) matrix.
  Mat score_matrix(const Mat& obs, const Mat& actions) const;
  // Mean of KL(this || other) over the observation columns.
  double mean_kl(const GaussianMlpPolicy& other, const Mat& obs) const;

  nlohmann::json to_json() const;
  static GaussianMlpPolicy from_json(const nlohmann::json& doc);
  // Loaders validating the document against an expected shape.
  static GaussianMlpPolicy from_json(const nlohmann::json& doc, int obs_dim, int act_dim);

  void save(const std::filesystem::path& path) const;
  static GaussianMlpPolicy load(const std::filesystem::path& path);

 private:
  Mlp<double> net_;
  Vec log_std_;
  Vec obs_shift_;
  Vec obs_scale_;
  std::string env_id_;
};

// Density of a diagonal Gaussian evaluated in closed form.
double diag_gaussian_log_density(const Vec& x, const Vec& mean, const Vec& log_std);

}  // namespace evopath
