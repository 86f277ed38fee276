#include <doctest.h>

#include <cmath>

#include "evopath/evolution.hpp"

using namespace evopath;

TEST_CASE("interpolate is the componentwise convex combination") {
  Vec s(3), t(3), a(3);
  s << 0, 2, -1;
  t << 2, 4, 1;
  a << 0.5, 0.25, 1;
  Vec theta = interpolate(s, t, a);
  CHECK(theta[0] == doctest::Approx(1.0));
  CHECK(theta[1] == doctest::Approx(2.5));
  CHECK(theta[2] == doctest::Approx(1.0));
}

TEST_CASE("interpolate endpoints are exact") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 9;
    Vec s(d), t(d);
    for (int i = 0; i < d; ++i) {
      s[i] = 100 * rng.normal();
      t[i] = 100 * rng.normal();
    }
    ParamSpace space(s, t);
    CHECK((interpolate(space, EvolutionParameter::zeros(d)).array() == s.array()).all());
    CHECK((interpolate(space, EvolutionParameter::ones(d)).array() == t.array()).all());
  }
}

TEST_CASE("interpolate works for float scalars") {
  Eigen::VectorXf s = Eigen::VectorXf::Zero(2), t = Eigen::VectorXf::Ones(2) * 4.0f;
  Eigen::VectorXf a(2);
  a << 0.25f, 0.5f;
  Eigen::VectorXf theta = interpolate(s, t, a);
  CHECK(theta[0] == doctest::Approx(1.0f));
  CHECK(theta[1] == doctest::Approx(2.0f));
}

TEST_CASE("interpolate is monotone where source <= target") {
  Vec s = Vec::Constant(2, -1.0), t = Vec::Constant(2, 3.0);
  double prev = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 20; ++k) {
    const double v = interpolate(s, t, Vec::Constant(2, k / 20.0).eval())[0];
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("dimension mismatches are errors") {
  CHECK_THROWS_AS(interpolate(Vec::Zero(2), Vec::Zero(2), Vec::Zero(3)), DimensionError);
  CHECK_THROWS_AS(ParamSpace(Vec::Zero(2), Vec::Zero(3)), DimensionError);
  ParamSpace space(Vec::Zero(2), Vec::Ones(2), {"a", "b"});
  CHECK_THROWS_AS(interpolate(space, EvolutionParameter::zeros(3)), DimensionError);
  CHECK(space.index_of("b") == 1);
}

TEST_CASE("param space labels must be unique") {
  CHECK_THROWS(ParamSpace(Vec::Zero(2), Vec::Ones(2), {"a", "a"}));
  CHECK_THROWS(ParamSpace(Vec::Zero(2), Vec::Ones(2), {"a"}));
}

TEST_CASE("evolution parameter must lie in the cube") {
  CHECK_THROWS(EvolutionParameter(Vec::Constant(2, 1.5)));
  CHECK_THROWS(EvolutionParameter(Vec::Constant(2, -0.01)));
  CHECK_THROWS(EvolutionParameter(Vec::Constant(2, std::nan(""))));
  CHECK_THROWS(EvolutionParameter(Vec()));
  CHECK(EvolutionParameter::ones(3).at_target());
  CHECK_FALSE(EvolutionParameter::uniform(3, 0.999999).at_target());
}

TEST_CASE("sphere samples have norm xi") {
  Rng rng(7);
  SphereSample s = sample_sphere(rng, 8, 0.03, 72);
  CHECK(s.count() == 72);
  CHECK(s.dim() == 8);
  for (int i = 0; i < s.count(); ++i) CHECK(std::abs(s.deltas.row(i).norm() - 0.03) <= 1e-9 * 0.03);
}

TEST_CASE("one-dimensional sphere has two points") {
  Rng rng(11);
  SphereSample s = sample_sphere(rng, 1, 0.03, 200);
  int plus = 0;
  for (int i = 0; i < s.count(); ++i) {
    CHECK(std::abs(std::abs(s.deltas(i, 0)) - 0.03) < 1e-15);
    plus += s.deltas(i, 0) > 0;
  }
  CHECK(plus > 60);
  CHECK(plus < 140);
}

TEST_CASE("sphere sample mean and covariance match the uniform law") {
  const int n = 100000;
  const double xi = 0.03;
  Rng rng(5);
  SphereSample s = sample_sphere(rng, 3, xi, n);
  const Vec mean = s.deltas.colwise().mean().transpose();
  // E|mean|^2 = xi^2 / n for unit-free uniform draws; allow 5 standard errors
  CHECK(mean.norm() < 5 * xi / std::sqrt(double(n)));
  const Mat cov = s.deltas.transpose() * s.deltas / n;
  // each entry of delta delta^T has std <= xi^2, so 5 standard errors:
  const double tol = 5 * xi * xi / std::sqrt(double(n));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(std::abs(cov(i, j) - (i == j ? xi * xi / 3 : 0.0)) < tol);
}

TEST_CASE("sphere sampling rejects bad arguments") {
  Rng rng(1);
  CHECK_THROWS(sample_sphere(rng, 3, 0.03, 0));
  CHECK_THROWS(sample_sphere(rng, 3, 0.0, 5));
  CHECK_THROWS(sample_sphere(rng, 3, -1.0, 5));
  CHECK_THROWS(sample_sphere(rng, 0, 0.03, 5));
}

TEST_CASE("clamp examples") {
  Vec a(3);
  a << 1.2, -0.1, 0.5;
  Vec c = clamp_box(a).values();
  CHECK(c[0] == 1.0);
  CHECK(c[1] == 0.0);
  CHECK(c[2] == 0.5);
  Vec b(2);
  b << 0.3, 0.7;
  CHECK((clamp_box(b).values().array() == b.array()).all());
  CHECK(clamp_box(Vec::Constant(4, 0.99) + Vec::Constant(4, 0.03)).at_target());
}

TEST_CASE("clamp is an idempotent nonexpansive projection") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    Vec x(5), y(5);
    for (int i = 0; i < 5; ++i) {
      x[i] = rng.uniform(-1, 2);
      y[i] = rng.uniform(-1, 2);
    }
    const Vec cx = clamp_box(x).values();
    CHECK((clamp_box(cx).values().array() == cx.array()).all());
    const Vec cy = clamp_box(y).values();
    CHECK((cx - cy).lpNorm<Eigen::Infinity>() <= (x - y).lpNorm<Eigen::Infinity>() + 1e-15);
  }
}

TEST_CASE("distance to target") {
  CHECK(distance_to_target(EvolutionParameter::ones(3)) == 0.0);
  CHECK(distance_to_target(EvolutionParameter::zeros(4)) == doctest::Approx(2.0));
  CHECK(distance_to_target(EvolutionParameter::uniform(2, 0.5)) == doctest::Approx(0.70711).epsilon(1e-5));
}

TEST_CASE("derived random streams are reproducible and distinct") {
  Rng root(42);
  Rng a = root.derive("probe", 3), b = root.derive("probe", 3), c = root.derive("probe", 4);
  Rng d = root.derive("gate", 3);
  const double va = a.normal();
  CHECK(va == b.normal());
  CHECK(va != c.normal());
  CHECK(va != d.normal());
}
