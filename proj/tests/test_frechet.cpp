#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>

#include "hycon/frechet.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace hycon;
using hycon::testing::random_point;

TEST(FrechetMean, SinglePoint) {
  const LorentzPoint p = lift(Vector::Constant(3, 0.7), Curvature{});
  const auto r = frechet_mean(std::vector<LorentzPoint>{p}, FrechetConfig{});
  EXPECT_LE(r.iterations, 1);
  EXPECT_LE(geodesic_distance(r.mean, p), 1e-12);
  EXPECT_TRUE(r.converged);
}

TEST(FrechetMean, TwoPointsGiveGoldenSectionMidpoint) {
  hycon::testing::Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = random_point(rng, 3, Curvature{}, 1.5);
    const auto b = random_point(rng, 3, Curvature{}, 1.5);
    const TangentVector ab = log_map(a, b);
    const double t = hycon::testing::golden_section(
        [&](double s) {
          const LorentzPoint y = exp_map(ab.scaled(s));
          const double da = geodesic_distance(y, a), db = geodesic_distance(y, b);
          return da * da + db * db;
        },
        0.0, 1.0);
    const auto r = frechet_mean(std::vector<LorentzPoint>{a, b}, FrechetConfig{});
    EXPECT_LE(geodesic_distance(r.mean, exp_map(ab.scaled(t))), 1e-6);
    EXPECT_LE(geodesic_distance(r.mean, exp_map(ab.scaled(0.5))), 1e-6);
  }
}

TEST(FrechetMean, FivePointsMatchGridOracle) {
  hycon::testing::Rng rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<LorentzPoint> pts;
    for (int i = 0; i < 5; ++i) pts.push_back(random_point(rng, 2, Curvature{}, 1.0));
    const auto r = frechet_mean(pts, FrechetConfig{});
    EXPECT_LE(geodesic_distance(r.mean, hycon::testing::grid_frechet_oracle(pts)), 1e-4);
    EXPECT_LE(r.final_gradient_norm, 1e-6);
  }
}

TEST(FrechetMean, ObjectiveMonotone) {
  hycon::testing::Rng rng(8);
  std::vector<LorentzPoint> pts;
  for (int i = 0; i < 12; ++i) pts.push_back(random_point(rng, 4, Curvature{2.0}, 2.0));
  FrechetConfig cfg;
  cfg.init = FrechetInit::first_point;
  const auto r = frechet_mean(pts, cfg);
  ASSERT_GE(r.objective_trace.size(), 2u);
  for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
    EXPECT_LE(r.objective_trace[i], r.objective_trace[i - 1]);
  }
  EXPECT_TRUE(r.converged);
}

TEST(FrechetMean, PermutationInvariant) {
  hycon::testing::Rng rng(10);
  std::vector<LorentzPoint> pts;
  for (int i = 0; i < 9; ++i) pts.push_back(random_point(rng, 3, Curvature{}));
  const auto a = frechet_mean(pts, FrechetConfig{});
  std::shuffle(pts.begin(), pts.end(), rng);
  const auto b = frechet_mean(pts, FrechetConfig{});
  EXPECT_LE(geodesic_distance(a.mean, b.mean), 1e-9);
}

TEST(FrechetMean, RotationEquivariant) {
  hycon::testing::Rng rng(12);
  std::vector<LorentzPoint> pts, rotated;
  const double th = 0.83;
  Eigen::Matrix2d rot;
  rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  for (int i = 0; i < 6; ++i) {
    pts.push_back(random_point(rng, 2, Curvature{}));
    rotated.push_back(lift(Vector(rot * pts.back().spatial()), Curvature{}));
  }
  const auto a = frechet_mean(pts, FrechetConfig{});
  const auto b = frechet_mean(rotated, FrechetConfig{});
  EXPECT_LE(geodesic_distance(lift(Vector(rot * a.mean.spatial()), Curvature{}), b.mean), 1e-8);
}

TEST(FrechetMean, DeterministicAcrossThreadCounts) {
  hycon::testing::Rng rng(14);
  std::vector<LorentzPoint> pts;
  for (int i = 0; i < 257; ++i) pts.push_back(random_point(rng, 5, Curvature{}));
  FrechetConfig one, four;
  four.threads = 4;
  EXPECT_EQ(frechet_mean(pts, one).mean, frechet_mean(pts, four).mean);
}

TEST(FrechetMean, WeightsPullTowardHeavyPoint) {
  const Curvature c;
  Vector s(2);
  s << 1.0, 0.0;
  const std::vector<LorentzPoint> pts{lift(s, c), lift(Vector(-s), c)};
  const std::vector<double> w{3.0, 1.0};
  const auto r = frechet_mean(pts, w);
  EXPECT_GT(r.mean.spatial()(0), 0.0);
  EXPECT_THROW(frechet_mean(pts, std::vector<double>{1.0}), ConfigError);
  EXPECT_THROW(frechet_mean(pts, std::vector<double>{0.0, 0.0}), ConfigError);
  EXPECT_THROW(frechet_mean(pts, std::vector<double>{-1.0, 2.0}), ConfigError);
}

TEST(FrechetMean, Errors) {
  EXPECT_THROW(frechet_mean(std::vector<LorentzPoint>{}, FrechetConfig{}), EmptySetError);
  const std::vector<LorentzPoint> mixed{origin(2, Curvature{}), origin(2, Curvature{2.0})};
  EXPECT_THROW(frechet_mean(mixed, FrechetConfig{}), ConfigError);
  FrechetConfig bad;
  bad.max_iters = 0;
  EXPECT_THROW(frechet_mean(std::vector<LorentzPoint>{origin(2, Curvature{})}, bad), ConfigError);
  bad = FrechetConfig{};
  bad.tol = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = FrechetConfig{};
  bad.step_size = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(FrechetMean, NonConvergenceIsReported) {
  hycon::testing::Rng rng(16);
  std::vector<LorentzPoint> pts;
  for (int i = 0; i < 6; ++i) pts.push_back(random_point(rng, 3, Curvature{}, 2.0));
  FrechetConfig cfg;
  cfg.max_iters = 1;
  cfg.init = FrechetInit::first_point;
  const auto r = frechet_mean(pts, cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 1);
}

TEST(RiemannianGradNorm, Examples) {
  const Curvature c;
  const LorentzPoint p = lift(Vector::Constant(2, 0.4), c);
  EXPECT_EQ(riemannian_grad_norm(p, std::vector<LorentzPoint>{p}), 0.0);

  Vector s(2);
  s << std::sinh(1.0), 0.0;
  const std::vector<LorentzPoint> pair{lift(s, c), lift(Vector(-s), c)};
  EXPECT_LE(riemannian_grad_norm(origin(2, c), pair), 1e-9);

  // endpoints at distance 2: mean of {0, log} has norm 1
  const std::vector<LorentzPoint> far{origin(2, c), exp_map(origin(2, c), Vector((Vector(3) << 0, 2, 0).finished()))};
  EXPECT_NEAR(riemannian_grad_norm(far[0], far), 1.0, 1e-12);
}

TEST(FrechetMean, StopsAtRoundingFloor) {
  hycon::testing::Rng rng(2024);
  for (int inst = 0; inst < 20; ++inst) {
    std::vector<LorentzPoint> pts;
    for (int i = 0; i < 5; ++i) pts.push_back(hycon::testing::random_point(rng, 2, Curvature(1.0)));
    const FrechetResult r = frechet_mean(pts);
    EXPECT_TRUE(r.converged) << "instance " << inst;
    EXPECT_LT(r.iterations, 1000);
    EXPECT_LE(r.final_gradient_norm, 1e-6);
  }
}
