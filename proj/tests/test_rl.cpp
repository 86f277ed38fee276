#include <doctest.h>

#include <cmath>

#include "evopath/reacher.hpp"
#include "evopath/rl.hpp"

using namespace evopath;

namespace {

Vec random_vec(Rng& rng, int n, double scale = 1.0) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

Trajectory synthetic_trajectory(Rng& rng, int obs_dim, int act_dim, int len, double reward_prob) {
  Trajectory t;
  t.observations.resize(obs_dim, len);
  t.actions.resize(act_dim, len);
  t.rewards = Vec::Zero(len);
  t.log_probs = Vec::Zero(len);
  t.horizon = 200;
  for (int c = 0; c < len; ++c) {
    t.observations.col(c) = random_vec(rng, obs_dim);
    t.actions.col(c) = random_vec(rng, act_dim);
    if (rng.uniform() < reward_prob) t.rewards[c] = 1.0;
  }
  return t;
}

EpisodeFactory reacher_factory(const GraspReacherFamily& fam, double a) {
  return [&fam, a](int, Rng&) { return EpisodeSetup{fam.make(EvolutionParameter::uniform(8, a)), std::nullopt}; };
}

}  // namespace

TEST_CASE("discounted returns") {
  Vec r(4);
  r << 1, 0, 2, 3;
  const double g = 0.9;
  Vec ret = discounted_returns(r, g);
  CHECK(ret[3] == doctest::Approx(3));
  CHECK(ret[2] == doctest::Approx(2 + 0.9 * 3));
  CHECK(ret[0] == doctest::Approx(1 + 0.9 * 0 + 0.81 * 2 + 0.729 * 3));
  Trajectory t;
  t.rewards = r;
  CHECK(std::abs(t.discounted_return(g) - ret[0]) < 1e-12);
}

TEST_CASE("gae identities") {
  Rng rng(1);
  Trajectory t = synthetic_trajectory(rng, 3, 1, 25, 0.3);
  const Vec v = random_vec(rng, 25);
  const double g = 0.995;
  const Vec a0 = compute_gae(t, v, g, 0.0);
  for (int i = 0; i < 25; ++i) {
    const double next = i + 1 < 25 ? v[i + 1] : 0.0;
    CHECK(a0[i] == doctest::Approx(t.rewards[i] + g * next - v[i]).epsilon(1e-12));
  }
  const Vec a1 = compute_gae(t, v, g, 1.0);
  const Vec ret = discounted_returns(t.rewards, g);
  for (int i = 0; i < 25; ++i) CHECK(a1[i] == doctest::Approx(ret[i] - v[i]).epsilon(1e-10));
  Trajectory one = synthetic_trajectory(rng, 3, 1, 1, 1.0);
  Vec v1(1);
  v1 << 0.25;
  CHECK(compute_gae(one, v1, g, 0.97)[0] == doctest::Approx(1.0 - 0.25));
}

TEST_CASE("advantage normalization") {
  Rng rng(2);
  const Vec a = random_vec(rng, 100, 3.0).array() + 2.0;
  const Vec n = normalize_advantages(a);
  CHECK(std::abs(n.mean()) < 1e-10);
  const double sd = std::sqrt((n.array() - n.mean()).square().sum() / n.size());
  CHECK(std::abs(sd - 1.0) < 1e-6);
  const Vec flat = normalize_advantages(Vec::Constant(5, 3.0));
  CHECK(flat.allFinite());
  CHECK(std::abs(flat.mean()) < 1e-12);
}

TEST_CASE("fisher vector product is symmetric positive definite") {
  Rng rng(3);
  Mat s(20, 50);
  for (int c = 0; c < 50; ++c) s.col(c) = random_vec(rng, 20);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec u = random_vec(rng, 20), v = random_vec(rng, 20);
    CHECK(std::abs(v.dot(fisher_vector_product(s, u, 1e-4)) - u.dot(fisher_vector_product(s, v, 1e-4))) < 1e-8);
    CHECK(v.dot(fisher_vector_product(s, v, 1e-4)) > 0);
  }
  const Vec v = random_vec(rng, 20);
  const Vec fv = fisher_vector_product(s, v, 0.0);
  CHECK((fv - s * (s.transpose() * v) / 50.0).norm() < 1e-12);
}

TEST_CASE("conjugate gradient solves spd systems") {
  Rng rng(4);
  Mat m(12, 12);
  for (int c = 0; c < 12; ++c) m.col(c) = random_vec(rng, 12);
  const Mat a = m * m.transpose() + Mat::Identity(12, 12);
  const Vec b = random_vec(rng, 12);
  CgResult r = conjugate_gradient([&](const Vec& x) { return Vec(a * x); }, b, 50);
  CHECK((a * r.x - b).norm() <= 1e-6 * b.norm());
  CHECK(r.residual_norm <= 1e-6 * b.norm());
  CgResult capped = conjugate_gradient([&](const Vec& x) { return Vec(a * x); }, b, 2);
  CHECK(capped.iterations == 2);
}

TEST_CASE("npg step degenerates to the vanilla gradient under heavy damping") {
  Rng rng(5);
  Mat s(6, 40);
  for (int c = 0; c < 40; ++c) s.col(c) = random_vec(rng, 6);
  const Vec adv = random_vec(rng, 40);
  NpgStep st = compute_npg_step(s, adv, 0.01, 10, 1e8);
  CHECK(st.applied);
  const Vec g = s * adv / 40.0;
  CHECK((st.gradient - g).norm() < 1e-12);
  CHECK(std::abs(st.delta.normalized().dot(g.normalized()) - 1.0) < 1e-8);
  // quadratic model: 0.5 delta^T (F + damping I) delta = step * gTx / (gTx + 1e-10)
  const Vec fd = fisher_vector_product(s, st.delta, 1e8);
  CHECK(0.5 * st.delta.dot(fd) == doctest::Approx(0.01 * st.gTx / (st.gTx + 1e-10)).epsilon(1e-6));
  NpgStep mild = compute_npg_step(s, adv, 0.01, 50, 1e-4);
  CHECK(0.5 * mild.delta.dot(fisher_vector_product(s, mild.delta, 1e-4)) == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("npg skips zero and non-finite gradients") {
  Mat s = Mat::Zero(4, 10);
  NpgStep zero = compute_npg_step(s, Vec::Ones(10), 0.01, 10, 1e-4);
  CHECK_FALSE(zero.applied);
  CHECK(zero.delta.isZero());
  Mat bad = Mat::Ones(4, 10);
  bad(0, 0) = std::nan("");
  CHECK_FALSE(compute_npg_step(bad, Vec::Ones(10), 0.01, 10, 1e-4).applied);
}

TEST_CASE("npg solves a two-parameter gaussian bandit") {
  // pi = N(mu, exp(log_s)^2), reward -(a - 3)^2: expected reward -(mu - 3)^2 - s^2,
  // maximized by mu = 3 with s shrinking.
  Rng rng(6);
  double mu = 0.0, log_s = 0.0;
  const int n = 256;
  for (int it = 0; it < 200; ++it) {
    const double s = std::exp(log_s);
    Mat scores(2, n);
    Vec rewards(n);
    for (int i = 0; i < n; ++i) {
      const double a = mu + s * rng.normal();
      scores(0, i) = (a - mu) / (s * s);
      scores(1, i) = (a - mu) * (a - mu) / (s * s) - 1.0;
      rewards[i] = -(a - 3.0) * (a - 3.0);
    }
    NpgStep st = compute_npg_step(scores, normalize_advantages(rewards), 0.01, 10, 1e-4);
    if (!st.applied) continue;
    mu += st.delta[0];
    log_s += st.delta[1];
  }
  CHECK(std::abs(mu - 3.0) < 0.05);
  CHECK(std::exp(log_s) < 0.5);
}

TEST_CASE("npg update keeps the batch kl near the step size") {
  Rng rng(7);
  for (double delta : {1e-4, 1e-2}) {
    GaussianMlpPolicy p(6, 2);
    p.initialize(rng);
    std::vector<Trajectory> batch;
    int total = 0;
    for (int k = 0; k < 12; ++k) {
      batch.push_back(synthetic_trajectory(rng, 6, 2, 30, 0.1));
      total += 30;
    }
    const Vec adv = normalize_advantages(random_vec(rng, total));
    RlConfig cfg;
    cfg.npg_step = delta;
    Ledger ledger;
    NpgDiagnostics d = npg_update(p, batch, adv, cfg, ledger);
    CHECK(d.applied);
    CHECK(d.kl <= 2 * delta * 1.5);
    CHECK(d.kl > 0.0);
    CHECK(ledger.train_iters == 1);
  }
}

TEST_CASE("zero-reward batch is skipped but counted") {
  Rng rng(8);
  GaussianMlpPolicy p(6, 2);
  p.initialize(rng);
  std::vector<Trajectory> batch{synthetic_trajectory(rng, 6, 2, 10, 0.0), synthetic_trajectory(rng, 6, 2, 10, 0.0)};
  const Vec before = p.params();
  Ledger ledger;
  NpgDiagnostics d = npg_update(p, batch, random_vec(rng, 20), RlConfig{}, ledger);
  CHECK_FALSE(d.applied);
  CHECK(d.skip_reason == "zero-reward batch");
  CHECK(ledger.train_iters == 1);
  CHECK((p.params().array() == before.array()).all());
}

TEST_CASE("rollouts are counted and independent of worker count") {
  GraspReacherFamily fam;
  GaussianMlpPolicy p(6, 2);
  Rng init(9);
  p.initialize(init);
  Ledger l1, l8;
  auto a = collect_rollouts(p, reacher_factory(fam, 0.3), 12, Rng(77), l1, EpochPurpose::kTraining,
                            ActionMode::kStochastic, 1);
  auto b = collect_rollouts(p, reacher_factory(fam, 0.3), 12, Rng(77), l8, EpochPurpose::kTraining,
                            ActionMode::kStochastic, 8);
  CHECK(a.size() == 12);
  CHECK(l1.training_epochs == 12);
  CHECK(l1 == l8);
  for (int j = 0; j < 12; ++j) {
    CHECK(a[j].length() <= 200);
    CHECK(a[j].length() == b[j].length());
    CHECK((a[j].actions.array() == b[j].actions.array()).all());
    CHECK((a[j].observations.array() == b[j].observations.array()).all());
    CHECK(a[j].observations.cols() == a[j].length());
    CHECK(a[j].log_probs.size() == a[j].length());
  }
  Ledger ev;
  collect_rollouts(p, reacher_factory(fam, 0.3), 5, Rng(1), ev, EpochPurpose::kEvaluation);
  CHECK(ev.evaluation_epochs == 5);
  CHECK(ev.training_epochs == 0);
}

TEST_CASE("train iteration ledger and value fit") {
  GraspReacherFamily fam;
  Rng rng(10);
  Learner learner = Learner::fresh(6, 2, rng);
  RlConfig cfg;
  Ledger ledger;
  for (int it = 0; it < 3; ++it) {
    IterationStats st = train_iteration(learner, reacher_factory(fam, 0.0), cfg, Rng(10).derive("iter", it), ledger);
    CHECK(st.value.loss_after <= st.value.loss_before);
  }
  CHECK(ledger.train_iters == 3);
  CHECK(ledger.training_epochs == 36);
  CHECK(ledger.jacobian_epochs == 0);
}

TEST_CASE("rl config validation") {
  RlConfig cfg;
  cfg.batch = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = RlConfig{};
  cfg.gamma = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = RlConfig{};
  cfg.npg_step = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
