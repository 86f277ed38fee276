#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "evopath/expert.hpp"
#include "evopath/landscape.hpp"
#include "evopath/reacher.hpp"

using namespace evopath;

TEST_CASE("demo replay from the final stored state succeeds") {
  GraspReacherFamily fam;
  Rng rng(1);
  DemoTrajectory demo = make_demo_trajectory(fam, rng);
  auto env = fam.make_reacher(EvolutionParameter::zeros(8));
  for (std::size_t i = 0; i < demo.states.size(); i += 7) {
    const Vec obs = env->reset_to_state(demo.states[i]);
    CHECK((obs.array() == demo.observations[i].array()).all());
    CHECK((env->reset_to_state(demo.states[i]).array() == obs.array()).all());
  }
  env->reset_to_state(demo.states.back());
  int steps = 0;
  Rng noise(2);
  while (!env->done() && steps <= 11) {
    env->step(Vec::Zero(2), noise);
    ++steps;
  }
  CHECK(env->success());
  CHECK(steps <= 11);
}

TEST_CASE("reverse curriculum needs reset-to-state and a demo") {
  LandscapeFamily land(LandscapeConfig{});
  GaussianMlpPolicy p(1, 1);
  CHECK_THROWS_AS(reverse_curriculum_train(land, {Vec::Zero(1)}, p, ReverseCurriculumConfig{}, 1), UnsupportedError);
  GraspReacherFamily fam;
  GaussianMlpPolicy q(6, 2);
  CHECK_THROWS_AS(reverse_curriculum_train(fam, {}, q, ReverseCurriculumConfig{}, 1), PreconditionError);
  CHECK_THROWS_AS(reverse_curriculum_train(fam, {Vec::Zero(3)}, q, ReverseCurriculumConfig{}, 1), DimensionError);
  ReverseCurriculumConfig bad;
  bad.stride = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ReverseCurriculumConfig{};
  bad.promote_threshold = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("reverse curriculum trains a source expert") {
  GraspReacherFamily fam;
  Rng rng(3);
  DemoTrajectory demo = make_demo_trajectory(fam, rng);
  GaussianMlpPolicy init(6, 2);
  Rng prng(4);
  init.initialize(prng);
  ExpertResult res = reverse_curriculum_train(fam, demo.states, init, ReverseCurriculumConfig{}, 5);
  const ExpertTrainingLog& log = res.log;
  REQUIRE(log.success);
  REQUIRE(!log.stages.empty());
  CHECK(log.stages.front().index == static_cast<int>(demo.states.size()) - 5);
  CHECK(log.stages.front().iterations <= 100);
  long iters = 0;
  for (std::size_t i = 0; i < log.stages.size(); ++i) {
    iters += log.stages[i].iterations;
    if (i > 0) CHECK(log.stages[i].index <= log.stages[i - 1].index);
  }
  CHECK(log.stages.back().index == 0);
  CHECK(iters == log.ledger.train_iters);
  CHECK(log.final_success >= 0.8);
  CHECK(log.ledger.train_iters <= 2000);

  // independent check on fresh episodes
  Ledger ledger;
  EvalResult ev = evaluate_success(res.policy, fam, EvolutionParameter::zeros(8), 100, Rng(999), ledger, 0.995,
                                   ActionMode::kStochastic);
  CHECK(ev.success_rate >= 0.667);
  CHECK(res.policy.obs_scale().minCoeff() > 0.0);

  const nlohmann::json doc = log.to_json();
  CHECK(doc["success"] == true);
  CHECK(doc["stages"].size() == log.stages.size());
}

TEST_CASE("demo document round trip and errors") {
  GraspReacherFamily fam;
  Rng rng(6);
  DemoTrajectory demo = make_demo_trajectory(fam, rng);
  const auto path = std::filesystem::temp_directory_path() / "evopath_demo.json";
  save_demo(path, fam.id(), demo.states);
  const auto back = load_demo(path, kReacherStateDim);
  REQUIRE(back.size() == demo.states.size());
  for (std::size_t i = 0; i < back.size(); ++i) CHECK((back[i].array() == demo.states[i].array()).all());
  CHECK_THROWS(load_demo(path, 4));
  nlohmann::json doc = demo_to_json(fam.id(), demo.states);
  doc["format"] = "nope";
  CHECK_THROWS_AS(demo_from_json(doc, kReacherStateDim), FormatError);
  doc = demo_to_json(fam.id(), demo.states);
  doc["states"][2].erase(0);
  CHECK_THROWS(demo_from_json(doc, kReacherStateDim));
  std::filesystem::remove(path);
}

TEST_CASE("running statistics match a direct computation") {
  Rng rng(7);
  Mat x(3, 50);
  for (int c = 0; c < 50; ++c)
    for (int r = 0; r < 3; ++r) x(r, c) = 2.0 * rng.normal() + r;
  RunningStats st(3);
  st.push(x.leftCols(20));
  st.push(x.rightCols(30));
  const Vec mean = x.rowwise().mean();
  CHECK((st.mean() - mean).norm() < 1e-12);
  const Vec var = (x.colwise() - mean).array().square().rowwise().sum() / 49.0;
  CHECK((st.stddev(0.0) - var.cwiseSqrt()).norm() < 1e-12);
  CHECK(st.count() == 50);
  CHECK(st.stddev(100.0).minCoeff() == 100.0);
}
