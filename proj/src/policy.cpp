#include "evopath/policy.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace evopath {

namespace {

void require_finite(const Eigen::Ref<const Mat>& obs) {
  if (!obs.allFinite()) throw PreconditionError("policy: non-finite observation");
}

}  // namespace

double diag_gaussian_log_density(const Vec& x, const Vec& mean, const Vec& log_std) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double z = (x[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - half_log_2pi;
  }
  return lp;
}

GaussianMlpPolicy::GaussianMlpPolicy(int obs_dim, int act_dim, std::vector<int> hidden)
    : log_std_(Vec::Zero(act_dim)),
      obs_shift_(Vec::Zero(obs_dim)),
      obs_scale_(Vec::Ones(obs_dim)) {
  std::vector<int> sizes{obs_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(act_dim);
  net_ = Mlp<double>(std::move(sizes));
}

void GaussianMlpPolicy::initialize(Rng& rng) {
  net_.initialize(rng, 0.01);
  log_std_.setZero();
}

Vec GaussianMlpPolicy::params() const {
  Vec out(num_params());
  out.head(net_.num_params()) = net_.flat_params();
  out.tail(act_dim()) = log_std_;
  return out;
}

void GaussianMlpPolicy::set_params(const Vec& params) {
  if (params.size() != num_params()) throw DimensionError("policy: parameter length mismatch");
  if (!params.allFinite()) throw PreconditionError("policy: non-finite parameters");
  net_.set_flat_params(params.head(net_.num_params()));
  log_std_ = params.tail(act_dim());
}

void GaussianMlpPolicy::set_log_std(const Vec& log_std) {
  if (log_std.size() != act_dim()) throw DimensionError("policy: log_std length mismatch");
  log_std_ = log_std;
}

void GaussianMlpPolicy::set_normalization(Vec shift, Vec scale) {
  if (shift.size() != obs_dim() || scale.size() != obs_dim()) {
    throw DimensionError("policy: normalization length mismatch");
  }
  if (!((scale.array() > 0.0).all())) throw PreconditionError("policy: normalization scale must be > 0");
  obs_shift_ = std::move(shift);
  obs_scale_ = std::move(scale);
}

Vec GaussianMlpPolicy::normalize(const Vec& obs) const {
  return ((obs - obs_shift_).array() / obs_scale_.array()).matrix();
}

Mat GaussianMlpPolicy::normalize(const Mat& obs) const {
  return ((obs.colwise() - obs_shift_).array().colwise() / obs_scale_.array()).matrix();
}

Vec GaussianMlpPolicy::mean(const Vec& obs) const {
  if (obs.size() != obs_dim()) throw DimensionError("policy: observation length mismatch");
  require_finite(obs);
  return net_.forward_one(normalize(obs));
}

Mat GaussianMlpPolicy::mean(const Mat& obs) const {
  if (obs.rows() != obs_dim()) throw DimensionError("policy: observation length mismatch");
  require_finite(obs);
  return net_.forward(normalize(obs));
}

ActionSample GaussianMlpPolicy::sample(const Vec& obs, Rng& rng) const {
  ActionSample out;
  const Vec mu = mean(obs);
  Vec noise(act_dim());
  for (int i = 0; i < act_dim(); ++i) noise[i] = rng.normal();
  out.action = mu + (log_std_.array().exp() * noise.array()).matrix();
  // log density of the drawn noise, written in terms of the standard draw
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  out.log_prob = -0.5 * noise.squaredNorm() - log_std_.sum() - act_dim() * half_log_2pi;
  return out;
}

double GaussianMlpPolicy::log_prob(const Vec& obs, const Vec& action) const {
  return diag_gaussian_log_density(action, mean(obs), log_std_);
}

Vec GaussianMlpPolicy::log_prob_grad(const Vec& obs, const Vec& action) const {
  Mat o = obs;
  Mat a = action;
  return score_matrix(o, a).col(0);
}

Mat GaussianMlpPolicy::score_matrix(const Mat& obs, const Mat& actions) const {
  if (obs.cols() != actions.cols()) throw DimensionError("policy: obs/action batch size mismatch");
  if (actions.rows() != act_dim()) throw DimensionError("policy: action length mismatch");
  require_finite(obs);
  Mlp<double>::Activations cache;
  const Mat mu = net_.forward(normalize(obs), &cache);
  const Vec inv_var = (-2.0 * log_std_).array().exp();
  const Mat diff = actions - mu;
  // d log pi / d mu = (a - mu) / sigma^2
  const Mat mean_grad = inv_var.asDiagonal() * diff;
  Mat scores(num_params(), obs.cols());
  net_.per_sample_gradients(cache, mean_grad,
                            scores.topRows(net_.num_params()));
  // d log pi / d log_std = (a - mu)^2 / sigma^2 - 1
  scores.bottomRows(act_dim()) =
      ((inv_var.asDiagonal() * diff.cwiseAbs2()).array() - 1.0).matrix();
  return scores;
}

double GaussianMlpPolicy::mean_kl(const GaussianMlpPolicy& other, const Mat& obs) const {
  const Mat mu_p = mean(obs);
  const Mat mu_q = other.mean(obs);
  const Vec var_p = (2.0 * log_std_).array().exp();
  const Vec var_q = (2.0 * other.log_std_).array().exp();
  const double const_part =
      (other.log_std_ - log_std_).sum() +
      0.5 * ((var_p.array() / var_q.array()).sum() - static_cast<double>(act_dim()));
  const Mat diff = mu_p - mu_q;
  const double quad = 0.5 * (var_q.cwiseInverse().asDiagonal() * diff.cwiseAbs2()).sum();
  return const_part + quad / static_cast<double>(obs.cols());
}

nlohmann::json GaussianMlpPolicy::to_json() const {
  using nlohmann::json;
  auto vec = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json doc;
  doc["format"] = "evopath-policy";
  doc["format_version"] = kPolicyFormatVersion;
  doc["env_id"] = env_id_;
  doc["obs_dim"] = obs_dim();
  doc["act_dim"] = act_dim();
  doc["layer_sizes"] = net_.sizes();
  doc["activation"] = "tanh";
  json layers = json::array();
  for (const auto& layer : net_.layers()) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) rows.push_back(vec(layer.weight.row(r).transpose()));
    layers.push_back({{"weight", rows}, {"bias", vec(layer.bias)}});
  }
  doc["layers"] = layers;
  doc["log_std"] = vec(log_std_);
  doc["obs_shift"] = vec(obs_shift_);
  doc["obs_scale"] = vec(obs_scale_);
  return doc;
}

GaussianMlpPolicy GaussianMlpPolicy::from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("format", "") != "evopath-policy") throw FormatError("policy: not a policy document");
    const int version = doc.at("format_version").get<int>();
    if (version != kPolicyFormatVersion) {
      throw FormatError("policy: unsupported format_version " + std::to_string(version) +
                        " (expected " + std::to_string(kPolicyFormatVersion) + ")");
    }
    const auto sizes = doc.at("layer_sizes").get<std::vector<int>>();
    const int obs_dim = doc.at("obs_dim").get<int>();
    const int act_dim = doc.at("act_dim").get<int>();
    if (sizes.size() < 2 || sizes.front() != obs_dim || sizes.back() != act_dim) {
      throw FormatError("policy: layer_sizes disagree with obs_dim/act_dim");
    }
    if (doc.value("activation", "tanh") != "tanh") throw FormatError("policy: unsupported activation");
    GaussianMlpPolicy p(obs_dim, act_dim,
                        std::vector<int>(sizes.begin() + 1, sizes.end() - 1));
    const auto& layers = doc.at("layers");
    if (layers.size() != p.net_.layers().size()) throw FormatError("policy: layer count mismatch");
    auto to_vec = [](const nlohmann::json& arr, Eigen::Index n, const char* what) {
      auto v = arr.get<std::vector<double>>();
      if (static_cast<Eigen::Index>(v.size()) != n) {
        throw FormatError(std::string("policy: wrong length for ") + what);
      }
      return Vec(Eigen::Map<const Vec>(v.data(), n));
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& layer = p.net_.layers()[l];
      const auto& rows = layers[l].at("weight");
      if (static_cast<Eigen::Index>(rows.size()) != layer.weight.rows()) {
        throw FormatError("policy: weight row count mismatch in layer " + std::to_string(l));
      }
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        layer.weight.row(r) = to_vec(rows[r], layer.weight.cols(), "weight row").transpose();
      }
      layer.bias = to_vec(layers[l].at("bias"), layer.bias.size(), "bias");
    }
    p.log_std_ = to_vec(doc.at("log_std"), act_dim, "log_std");
    p.set_normalization(to_vec(doc.at("obs_shift"), obs_dim, "obs_shift"),
                        to_vec(doc.at("obs_scale"), obs_dim, "obs_scale"));
    p.env_id_ = doc.value("env_id", "");
    if (!p.params().allFinite()) throw FormatError("policy: non-finite parameter values");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("policy: malformed document: ") + e.what());
  }
}

GaussianMlpPolicy GaussianMlpPolicy::from_json(const nlohmann::json& doc, int obs_dim, int act_dim) {
  GaussianMlpPolicy p = from_json(doc);
  if (p.obs_dim() != obs_dim || p.act_dim() != act_dim) {
    throw FormatError("policy: document has obs/act dims " + std::to_string(p.obs_dim()) + "/" +
                      std::to_string(p.act_dim()) + ", expected " + std::to_string(obs_dim) + "/" +
                      std::to_string(act_dim));
  }
  return p;
}

void GaussianMlpPolicy::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write policy file " + path.string());
  out << to_json().dump(1) << '\n';
}

GaussianMlpPolicy GaussianMlpPolicy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read policy file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return from_json(doc);
}

}  // namespace evopath
