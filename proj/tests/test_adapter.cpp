#include <gtest/gtest.h>

#include "hycon/adapter.hpp"
#include "support.hpp"

using namespace hycon;

namespace {

struct Planted {
  EmbeddingSet source;
  EmbeddingSet target;
  Eigen::MatrixXd weight;
  Vector bias;
};

Planted planted(std::uint64_t seed, int rows, int n, int m, double sigma) {
  hycon::testing::Rng rng(seed);
  const Curvature c(0.7);
  std::vector<LorentzPoint> pts;
  for (int i = 0; i < rows; ++i) pts.push_back(hycon::testing::random_point(rng, n, c));
  Eigen::MatrixXd w(m, n);
  for (int i = 0; i < m; ++i) w.row(i) = hycon::testing::gaussian(rng, n).transpose();
  const Vector b = hycon::testing::gaussian(rng, m);
  EmbeddingSet::Matrix y(rows, m);
  for (int i = 0; i < rows; ++i) {
    Vector t = w * log_at_origin(pts[static_cast<std::size_t>(i)]) + b;
    if (sigma > 0.0) t += hycon::testing::gaussian(rng, m, sigma);
    y.row(i) = t.transpose();
  }
  std::vector<std::string> labels(static_cast<std::size_t>(rows), "r");
  std::vector<TagSet> tags(static_cast<std::size_t>(rows));
  return {EmbeddingSet::from_points(pts, labels, tags),
          EmbeddingSet(Space::euclidean, std::move(y), std::nullopt, labels, tags), w, b};
}

}  // namespace

TEST(Adapter, RecoversNoiselessMap) {
  const Planted p = planted(1, 60, 5, 3, 0.0);
  const AdapterFit fit = fit_adapter(p.source, p.target, 0.0);
  EXPECT_LE(fit.max_abs_residual, 1e-8);
  EXPECT_LE((fit.adapter.weight - p.weight).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((fit.adapter.bias - p.bias).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Adapter, IdentitySpaces) {
  const Planted p = planted(2, 40, 4, 4, 0.0);
  EmbeddingSet::Matrix logs(40, 4);
  for (std::size_t i = 0; i < 40; ++i) logs.row(static_cast<Eigen::Index>(i)) = log_at_origin(p.source.point(i)).transpose();
  const EmbeddingSet target(Space::euclidean, logs, std::nullopt, p.source.labels(), p.source.tags());
  const AdapterFit fit = fit_adapter(p.source, target);
  EXPECT_LE((fit.adapter.weight - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_LE(fit.adapter.bias.cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Adapter, HeldOutErrorWithinTwoSigma) {
  const double sigma = 0.05;
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const Planted p = planted(seed, 300, 6, 4, sigma);
    const auto train = [](std::size_t i) { return i < 200; };
    const EmbeddingSet src = p.source.filter(train), tgt = p.target.filter(train);
    const AdapterFit fit = fit_adapter(src, tgt, 1e-6);
    Vector sq = Vector::Zero(4);
    for (std::size_t i = 200; i < 300; ++i) {
      const Vector e = apply_adapter(fit.adapter, p.source.point(i)) - p.target.vector(i);
      sq += e.cwiseAbs2();
    }
    const Vector rms = (sq / 100.0).cwiseSqrt();
    EXPECT_LE(rms.maxCoeff(), 2.0 * sigma) << "seed " << seed;
  }
}

TEST(Adapter, ObjectiveBoundsAndRidgePath) {
  const Planted p = planted(3, 50, 5, 3, 0.2);
  double prev = -1.0;
  for (double ridge : {0.0, 1e-4, 1e-2, 1.0, 100.0}) {
    const AdapterFit fit = fit_adapter(p.source, p.target, ridge);
    EXPECT_LE(fit.objective, fit.zero_map_objective);
    EXPECT_NEAR(adapter_objective(fit.adapter, p.source, p.target), fit.objective, 1e-9 * fit.zero_map_objective);
    const double data_term = fit.objective - ridge * fit.adapter.weight.squaredNorm();
    EXPECT_GE(data_term, prev - 1e-9);
    prev = data_term;
  }
}

TEST(Adapter, ApplyMatchesReportedResidual) {
  const Planted p = planted(4, 30, 3, 2, 0.1);
  const AdapterFit fit = fit_adapter(p.source, p.target);
  double sq = 0.0;
  for (std::size_t i = 0; i < p.source.size(); ++i) {
    sq += (apply_adapter(fit.adapter, p.source.point(i)) - p.target.vector(i)).squaredNorm();
  }
  EXPECT_NEAR(std::sqrt(sq / (30.0 * 2.0)), fit.rms_residual, 1e-10);
}

TEST(Adapter, ApplyExamples) {
  LinearAdapter a;
  a.weight = Eigen::MatrixXd::Zero(2, 3);
  a.bias = Eigen::Vector2d(1.5, -2);
  hycon::testing::Rng rng(5);
  EXPECT_EQ(apply_adapter(a, hycon::testing::random_point(rng, 3, Curvature{})), a.bias);
  a.weight.setRandom();
  EXPECT_EQ(apply_adapter(a, origin(3, Curvature{})), a.bias);
  EXPECT_THROW(apply_adapter(a, origin(2, Curvature{})), DimensionError);
}

TEST(Adapter, Errors) {
  const Planted p = planted(6, 4, 5, 2, 0.0);
  EXPECT_THROW(fit_adapter(p.source, p.target, 0.0), RankDeficiencyError);
  EXPECT_NO_THROW(fit_adapter(p.source, p.target, 1e-3));
  EXPECT_THROW(fit_adapter(p.source, p.target, -1.0), ConfigError);
  EXPECT_THROW(fit_adapter(p.source, p.target.filter([](std::size_t i) { return i > 0; })), ConfigError);
  EXPECT_THROW(fit_adapter(p.source, p.source), ConfigError);
}
