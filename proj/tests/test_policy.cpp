#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "evopath/expert.hpp"
#include "evopath/policy.hpp"
#include "evopath/value_function.hpp"

using namespace evopath;

namespace {

GaussianMlpPolicy random_policy(Rng& rng, int obs = 6, int act = 2) {
  GaussianMlpPolicy p(obs, act);
  p.initialize(rng);
  // move away from the tiny-output init so every path carries gradient
  Vec w = p.params();
  for (int i = 0; i < w.size(); ++i) w[i] += 0.3 * rng.normal();
  p.set_params(w);
  return p;
}

Vec random_vec(Rng& rng, int n, double scale = 1.0) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

// Independent density: product of 1-D normal densities.
double reference_log_density(const Vec& x, const Vec& mean, const Vec& log_std) {
  double logp = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    const double s = std::exp(log_std[i]);
    const double z = (x[i] - mean[i]) / s;
    logp += std::log(std::exp(-0.5 * z * z) / (s * std::sqrt(2 * M_PI)));
  }
  return logp;
}

}  // namespace

TEST_CASE("parameter count and default shape") {
  GaussianMlpPolicy p(6, 2);
  CHECK(p.net().sizes() == std::vector<int>{6, 32, 32, 2});
  CHECK(p.num_params() == (6 * 32 + 32) + (32 * 32 + 32) + (32 * 2 + 2) + 2);
  CHECK(p.params().size() == p.num_params());
}

TEST_CASE("zero weights give the output bias as mean") {
  GaussianMlpPolicy p(3, 2);
  Vec w = Vec::Zero(p.num_params());
  p.set_params(w);
  CHECK(p.mean(Vec(Vec::Ones(3))).isZero());
  // output bias sits right before log_std
  w[p.net().num_params() - 2] = 0.5;
  w[p.net().num_params() - 1] = -0.25;
  p.set_params(w);
  CHECK(p.mean(Vec(Vec::Ones(3)))[0] == 0.5);
  CHECK(p.mean(Vec(Vec::Ones(3)))[1] == -0.25);
}

TEST_CASE("permuting hidden units leaves the output unchanged") {
  Rng rng(3);
  GaussianMlpPolicy p = random_policy(rng);
  GaussianMlpPolicy q = p;
  auto& l0 = q.net().layers()[0];
  auto& l1 = q.net().layers()[1];
  l0.weight.row(3).swap(l0.weight.row(17));
  std::swap(l0.bias[3], l0.bias[17]);
  l1.weight.col(3).swap(l1.weight.col(17));
  const Vec obs = random_vec(rng, 6);
  CHECK((p.mean(obs) - q.mean(obs)).norm() < 1e-12);
}

TEST_CASE("non-finite observations are rejected") {
  GaussianMlpPolicy p(2, 1);
  Vec obs(2);
  obs << 1.0, std::nan("");
  CHECK_THROWS_AS(p.mean(obs), PreconditionError);
  obs << 1.0, INFINITY;
  CHECK_THROWS_AS(p.mean(obs), PreconditionError);
  CHECK_THROWS_AS(p.mean(Vec(Vec::Zero(3))), DimensionError);
}

TEST_CASE("sample log_prob equals an independent density") {
  Rng rng(4);
  GaussianMlpPolicy p = random_policy(rng);
  p.set_log_std(random_vec(rng, 2, 0.5));
  for (int i = 0; i < 50; ++i) {
    const Vec obs = random_vec(rng, 6);
    ActionSample s = p.sample(obs, rng);
    CHECK(std::abs(s.log_prob - reference_log_density(s.action, p.mean(obs), p.log_std())) < 1e-12);
    CHECK(std::abs(p.log_prob(obs, s.action) - s.log_prob) < 1e-12);
  }
}

TEST_CASE("density at the mode") {
  Rng rng(5);
  GaussianMlpPolicy p = random_policy(rng);
  Vec ls(2);
  ls << -0.3, 0.4;
  p.set_log_std(ls);
  const Vec obs = random_vec(rng, 6);
  CHECK(p.log_prob(obs, p.mean(obs)) == doctest::Approx(-ls.sum() - std::log(2 * M_PI)).epsilon(1e-12));
}

TEST_CASE("sampling is deterministic for equal streams and collapses to the mean") {
  Rng rng(6);
  GaussianMlpPolicy p = random_policy(rng);
  const Vec obs = random_vec(rng, 6);
  Rng a(10), b(10);
  CHECK((p.sample(obs, a).action.array() == p.sample(obs, b).action.array()).all());
  p.set_log_std(Vec::Constant(2, -40.0));
  CHECK((p.sample(obs, a).action - p.mean(obs)).norm() < 1e-15);
}

TEST_CASE("log_prob_grad matches central finite differences") {
  Rng rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    GaussianMlpPolicy p = random_policy(rng);
    p.set_log_std(random_vec(rng, 2, 0.3));
    const Vec obs = random_vec(rng, 6);
    const Vec act = p.mean(obs) + random_vec(rng, 2);
    const Vec g = p.log_prob_grad(obs, act);
    const Vec w = p.params();
    Vec fd(w.size());
    GaussianMlpPolicy q = p;
    for (int i = 0; i < w.size(); ++i) {
      Vec wp = w, wm = w;
      wp[i] += 1e-5;
      wm[i] -= 1e-5;
      q.set_params(wp);
      const double lp = q.log_prob(obs, act);
      q.set_params(wm);
      fd[i] = (lp - q.log_prob(obs, act)) / 2e-5;
    }
    const double rel = (g - fd).norm() / std::max(fd.norm(), 1e-12);
    worst = std::max(worst, rel);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("log_std gradient closed form and zero mean-path score at the mode") {
  Rng rng(8);
  GaussianMlpPolicy p = random_policy(rng);
  p.set_log_std(random_vec(rng, 2, 0.3));
  const Vec obs = random_vec(rng, 6);
  const Vec mu = p.mean(obs);
  const Vec act = mu + random_vec(rng, 2);
  const Vec g = p.log_prob_grad(obs, act);
  const int base = p.net().num_params();
  for (int i = 0; i < 2; ++i) {
    const double expect = (act[i] - mu[i]) * (act[i] - mu[i]) * std::exp(-2 * p.log_std()[i]) - 1;
    CHECK(g[base + i] == doctest::Approx(expect).epsilon(1e-12));
  }
  const Vec g0 = p.log_prob_grad(obs, mu);
  CHECK(g0.head(base).norm() == 0.0);
}

TEST_CASE("score matrix columns are per-sample gradients") {
  Rng rng(9);
  GaussianMlpPolicy p = random_policy(rng);
  Mat obs(6, 5), act(2, 5);
  for (int c = 0; c < 5; ++c) {
    obs.col(c) = random_vec(rng, 6);
    act.col(c) = random_vec(rng, 2);
  }
  const Mat s = p.score_matrix(obs, act);
  CHECK(s.rows() == p.num_params());
  for (int c = 0; c < 5; ++c) CHECK((s.col(c) - p.log_prob_grad(obs.col(c), act.col(c))).norm() < 1e-10);
}

TEST_CASE("kl divergence") {
  Rng rng(10);
  GaussianMlpPolicy p = random_policy(rng);
  Mat obs(6, 4);
  for (int c = 0; c < 4; ++c) obs.col(c) = random_vec(rng, 6);
  CHECK(p.mean_kl(p, obs) == doctest::Approx(0.0));
  GaussianMlpPolicy q = p;
  q.set_log_std(p.log_std().array() + 0.1);
  // same means: KL = sum(log s_q/s_p + s_p^2 / (2 s_q^2) - 1/2)
  const double expect = 2 * (0.1 + 0.5 * std::exp(-0.2) - 0.5);
  CHECK(p.mean_kl(q, obs) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("policy document round trip is exact") {
  Rng rng(11);
  GaussianMlpPolicy p = random_policy(rng);
  p.set_log_std(random_vec(rng, 2));
  p.set_normalization(random_vec(rng, 6), random_vec(rng, 6).cwiseAbs().array() + 0.1);
  p.set_env_id("grasp-reacher");
  const auto path = std::filesystem::temp_directory_path() / "evopath_policy_roundtrip.json";
  p.save(path);
  GaussianMlpPolicy q = GaussianMlpPolicy::load(path);
  CHECK((q.params().array() == p.params().array()).all());
  CHECK((q.obs_shift().array() == p.obs_shift().array()).all());
  CHECK((q.obs_scale().array() == p.obs_scale().array()).all());
  CHECK(q.env_id() == "grasp-reacher");
  CHECK(q.net().sizes() == p.net().sizes());
  std::filesystem::remove(path);
}

TEST_CASE("policy document errors") {
  Rng rng(12);
  GaussianMlpPolicy p = random_policy(rng);
  const nlohmann::json doc = p.to_json();
  CHECK_THROWS_AS(GaussianMlpPolicy::from_json(doc, 6, 3), FormatError);
  CHECK_THROWS_AS(GaussianMlpPolicy::from_json(doc, 5, 2), FormatError);
  nlohmann::json bumped = doc;
  bumped["format_version"] = kPolicyFormatVersion + 1;
  CHECK_THROWS_AS(GaussianMlpPolicy::from_json(bumped), FormatError);
  nlohmann::json wrong = doc;
  wrong["format"] = "something-else";
  CHECK_THROWS_AS(GaussianMlpPolicy::from_json(wrong), FormatError);
  nlohmann::json missing = doc;
  missing.erase("log_std");
  CHECK_THROWS_AS(GaussianMlpPolicy::from_json(missing), FormatError);
  nlohmann::json bad_rows = doc;
  bad_rows["layers"][0]["weight"].erase(0);
  CHECK_THROWS_AS(GaussianMlpPolicy::from_json(bad_rows), FormatError);
  nlohmann::json bad_act = doc;
  bad_act["act_dim"] = 3;
  CHECK_THROWS_AS(GaussianMlpPolicy::from_json(bad_act), FormatError);
  CHECK_THROWS(GaussianMlpPolicy::load("/nonexistent/dir/policy.json"));
  const auto path = std::filesystem::temp_directory_path() / "evopath_policy_garbage.json";
  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(GaussianMlpPolicy::load(path), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("folding normalization keeps the policy function") {
  Rng rng(13);
  GaussianMlpPolicy p = random_policy(rng);
  GaussianMlpPolicy q = p;
  fold_normalization(q, random_vec(rng, 6), random_vec(rng, 6).cwiseAbs().array() + 0.2);
  for (int i = 0; i < 20; ++i) {
    const Vec obs = random_vec(rng, 6, 2.0);
    CHECK((p.mean(obs) - q.mean(obs)).norm() < 1e-10);
  }
  CHECK((p.log_std().array() == q.log_std().array()).all());
}

TEST_CASE("value function regression to a constant") {
  ValueFunction v(3);
  Rng rng(14);
  v.initialize(rng);
  Mat x(3, 200);
  for (int c = 0; c < 200; ++c) x.col(c) = random_vec(rng, 3);
  const Vec y = Vec::Constant(200, 0.7);
  ValueFitOptions opts;
  opts.epochs = 2000;
  opts.learning_rate = 1e-2;
  ValueFitStats st = v.fit(x, y, opts);
  CHECK(st.loss_after <= st.loss_before);
  CHECK(v.loss(x, y) < 1e-3);
  for (std::size_t i = 1; i < st.epoch_losses.size(); ++i) CHECK(st.epoch_losses[i] <= st.epoch_losses[i - 1]);
}

TEST_CASE("mlp per-sample gradients match finite differences") {
  Rng rng(15);
  Mlp<double> net({4, 5, 3, 2});
  net.initialize(rng, 1.0);
  Mat x(4, 3), og(2, 3);
  for (int c = 0; c < 3; ++c) {
    x.col(c) = random_vec(rng, 4);
    og.col(c) = random_vec(rng, 2);
  }
  Mlp<double>::Activations cache;
  net.forward(x, &cache);
  Mat grads(net.num_params(), 3);
  net.per_sample_gradients(cache, og, grads);
  const Vec w = net.flat_params();
  for (int i = 0; i < w.size(); ++i) {
    Vec wp = w, wm = w;
    wp[i] += 1e-6;
    wm[i] -= 1e-6;
    Mlp<double> a = net, b = net;
    a.set_flat_params(wp);
    b.set_flat_params(wm);
    for (int c = 0; c < 3; ++c) {
      const double fd = (og.col(c).dot(a.forward_one(x.col(c))) - og.col(c).dot(b.forward_one(x.col(c)))) / 2e-6;
      CHECK(grads(i, c) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}
