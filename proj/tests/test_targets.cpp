#include "svmr/targets/bnn.hpp"
#include "svmr/targets/gaussian.hpp"
#include "svmr/targets/hlr.hpp"
#include "svmr/targets/logreg.hpp"
#include "svmr/targets/mixture.hpp"
#include "svmr/targets/synthetic2d.hpp"
#include "svmr/validate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>

using namespace svmr;

namespace {

Vector random_point(RngStream& rng, Index d, double spread) {
  Vector x(d);
  for (Index i = 0; i < d; ++i) x(i) = spread * rng.normal();
  return x;
}

void expect_fd_scores(const TargetModel& target, int points, double spread, double step,
                      double tol, std::uint64_t seed) {
  RngStream rng(seed);
  for (int rep = 0; rep < points; ++rep) {
    const Vector x = random_point(rng, target.dim(), spread);
    EXPECT_LT(score_fd_error(target, x, step), tol) << target.name() << " at rep " << rep;
  }
}

Dataset tiny_dataset(Index n, Index p, std::uint64_t seed, const Vector& w_true) {
  RngStream rng(seed);
  Dataset ds;
  ds.name = "tiny";
  ds.features = Matrix(n, p);
  ds.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    double z = 0.0;
    for (Index j = 0; j < p; ++j) {
      ds.features(i, j) = rng.normal();
      z += w_true(j) * ds.features(i, j);
    }
    ds.labels[i] = rng.uniform() < sigmoid(z) ? 1 : 0;
  }
  return ds;
}

Dataset empty_dataset(Index p) {
  Dataset ds;
  ds.features = Matrix::Zero(0, p);
  return ds;
}

}  // namespace

TEST(Gauss50, ScoreVanishesAtMean) {
  auto t = make_gauss50();
  EXPECT_EQ(t->dim(), 50);
  EXPECT_TRUE(t->score(t->reference_mean()).isZero(0.0));
}

TEST(Gauss50, GaussianQuadraticIdentity) {
  auto t = make_gauss50();
  const Vector mu = t->reference_mean();
  const Matrix cov = t->reference_cov();
  RngStream rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const Vector x = random_point(rng, 50, 1.5);
    double quad = 0.0;
    for (Index i = 0; i < 50; ++i) quad += (x(i) - mu(i)) * (x(i) - mu(i)) / cov(i, i);
    EXPECT_NEAR(t->log_density(mu) - t->log_density(x), 0.5 * quad, 1e-9 * (1.0 + quad));
  }
}

TEST(Gauss50, CovarianceSpreadMatchesConditionNumber) {
  auto t = make_gauss50(50, 100.0);
  const Matrix cov = t->reference_cov();
  EXPECT_NEAR(cov(0, 0), 0.1, 1e-12);
  EXPECT_NEAR(cov(49, 49), 10.0, 1e-12);
  EXPECT_THROW(make_gauss50(50, 0.5), ConfigError);
}

TEST(Gauss50, ScoreMatchesFiniteDifferences) {
  expect_fd_scores(*make_gauss50(), 20, 2.0, 1e-5, 1e-6, 101);
}

TEST(Synthetic2d, RingRadialScoreVanishesOnCircle) {
  auto ring = make_ring();
  RngStream rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const double angle = 2.0 * 3.14159265358979 * rng.uniform();
    Vector x(2);
    x << 3.0 * std::cos(angle), 3.0 * std::sin(angle);
    const Vector s = ring->score(x);
    EXPECT_NEAR(s.dot(x) / x.norm(), 0.0, 1e-10);
  }
}

TEST(Synthetic2d, TwoMoonsReflectionSymmetry) {
  auto tm = make_two_moons();
  RngStream rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    const Vector x = random_point(rng, 2, 2.0);
    EXPECT_NEAR(tm->log_density(x), tm->log_density(Vector(-x)), 1e-12);
  }
}

TEST(Synthetic2d, ScoresMatchFiniteDifferences) {
  for (const auto& name : {"banana", "ring", "squiggly", "two-moons", "funnel"})
    expect_fd_scores(*make_2d_target(name), 40, 1.5, 1e-6, 1e-5, 211);
}

TEST(Synthetic2d, UnknownNameRejected) {
  EXPECT_THROW(make_2d_target("donut"), ConfigError);
}

TEST(Mix8, ScoreVanishesAtCenterOfRing) {
  auto [t, spec] = make_mix8();
  EXPECT_LT(t->score(Vector::Zero(2)).norm(), 1e-12);
}

TEST(Mix8, RotationalSymmetryOfCenters) {
  auto [t, spec] = make_mix8();
  const double ref = t->log_density(spec.centers.row(0).transpose());
  for (Index k = 1; k < 8; ++k)
    EXPECT_NEAR(t->log_density(spec.centers.row(k).transpose()), ref, 1e-12);
}

TEST(Mix8, ScoreMatchesFiniteDifferences) {
  expect_fd_scores(*make_mix8().first, 100, 3.0, 1e-5, 1e-5, 307);
}

TEST(Mix8, OverflowSafeFarFromCenters) {
  auto [t, spec] = make_mix8();
  Vector x(2);
  x << 1000.0, -750.0;
  EXPECT_TRUE(std::isfinite(t->log_density(x)));
  EXPECT_TRUE(t->score(x).allFinite());
}

TEST(Logreg, ZeroWeightsPredictHalf) {
  const Vector w_true = Vector::Ones(3);
  auto target = make_logreg(tiny_dataset(40, 3, 11, w_true), tiny_dataset(20, 3, 12, w_true));
  const Vector w0 = Vector::Zero(target->dim());
  for (Index e = 0; e < target->num_examples(Split::test); ++e)
    EXPECT_DOUBLE_EQ(target->predict_proba(w0, Split::test, e), 0.5);
}

TEST(Logreg, ScoreMatchesFiniteDifferences) {
  const Vector w_true = Vector::Ones(4);
  auto target = make_logreg(tiny_dataset(60, 4, 13, w_true), tiny_dataset(20, 4, 14, w_true), 2.0);
  expect_fd_scores(*target, 30, 1.0, 1e-5, 1e-5, 401);
}

TEST(Logreg, PriorOnlyScoreWithoutData) {
  auto target = make_logreg(empty_dataset(3), empty_dataset(3), 2.0);
  RngStream rng(15);
  const Vector w = random_point(rng, target->dim(), 1.0);
  EXPECT_TRUE((target->score(w) + w / 2.0).isZero(1e-15));
}

TEST(Logreg, RejectsBadLabels) {
  Dataset ds = empty_dataset(2);
  ds.features = Matrix::Zero(1, 2);
  ds.labels = {2};
  EXPECT_THROW(LogisticRegressionTarget(ds, empty_dataset(2), empty_dataset(2), 1.0), DataError);
}

TEST(Bnn, ZeroParametersPredictHalf) {
  const Vector w_true = Vector::Ones(3);
  auto target = std::make_shared<BnnTarget>(tiny_dataset(30, 3, 21, w_true), empty_dataset(3),
                                            tiny_dataset(10, 3, 22, w_true), 8, 1.0);
  const Vector theta = Vector::Zero(target->dim());
  for (Index e = 0; e < target->num_examples(Split::test); ++e)
    EXPECT_DOUBLE_EQ(target->predict_proba(theta, Split::test, e), 0.5);
}

TEST(Bnn, ScoreMatchesFiniteDifferences) {
  const Vector w_true = Vector::Ones(4);
  auto target = std::make_shared<BnnTarget>(tiny_dataset(25, 4, 23, w_true), empty_dataset(4),
                                            tiny_dataset(10, 4, 24, w_true), 6, 1.5);
  expect_fd_scores(*target, 20, 0.5, 1e-4, 1e-4, 509);
}

TEST(Bnn, PriorOnlyScore) {
  auto target = std::make_shared<BnnTarget>(empty_dataset(3), empty_dataset(3), empty_dataset(3),
                                            4, 3.0);
  RngStream rng(25);
  const Vector theta = random_point(rng, target->dim(), 1.0);
  EXPECT_TRUE((target->score(theta) + theta / 3.0).isZero(1e-15));
}

TEST(HlrGenerate, ThetaDimension) {
  const HlrModel m = hlr_generate(500, 7, 12, "long-tail", 0.3, 42);
  EXPECT_EQ(m.theta_dim(), 7 + 1 + 12 + 1);
  EXPECT_EQ(static_cast<Index>(m.labels.size()), 500);
}

TEST(HlrGenerate, UniformGroupCountsConcentrate) {
  const Index n = 4000, g = 4;
  const HlrModel m = hlr_generate(n, 5, g, "uniform", 0.4, 7);
  std::map<std::int64_t, int> counts;
  for (auto gi : m.groups) counts[gi]++;
  const double expected = static_cast<double>(n) / g;
  const double bound = 3.0 * std::sqrt(n * (1.0 / g) * (1.0 - 1.0 / g));
  for (Index j = 0; j < g; ++j)
    EXPECT_LT(std::abs(counts[j] - expected), bound) << "group " << j;
}

TEST(HlrGenerate, LongTailBeatsUniformTopFrequency) {
  const Index n = 2000, g = 50;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::map<std::int64_t, int> lt_counts, u_counts;
    for (auto gi : hlr_generate(n, 5, g, "long-tail", 0.4, seed).groups) lt_counts[gi]++;
    for (auto gi : hlr_generate(n, 5, g, "uniform", 0.4, seed).groups) u_counts[gi]++;
    int lt_max = 0, u_max = 0;
    for (auto& [k, v] : lt_counts) lt_max = std::max(lt_max, v);
    for (auto& [k, v] : u_counts) u_max = std::max(u_max, v);
    EXPECT_GT(lt_max, u_max) << "seed " << seed;
  }
}

TEST(HlrGenerate, DeterministicGivenSeed) {
  const HlrModel a = hlr_generate(300, 6, 9, "long-tail", 0.25, 99);
  const HlrModel b = hlr_generate(300, 6, 9, "long-tail", 0.25, 99);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.groups, b.groups);
  EXPECT_EQ(a.features.val, b.features.val);
  EXPECT_TRUE(a.true_beta == b.true_beta);
}

TEST(HlrTarget, ScoreMatchesFiniteDifferencesOnTinyInstance) {
  auto target = make_hlr_target(hlr_generate(200, 5, 10, "long-tail", 0.4, 31));
  expect_fd_scores(*target, 25, 0.5, 1e-5, 1e-5, 601);
}

TEST(HlrTarget, ZeroGroupScalesReduceToLogisticRegression) {
  const HlrModel model = hlr_generate(150, 4, 6, "uniform", 0.5, 33);
  HlrTarget target(model);
  RngStream rng(35);
  Vector theta = Vector::Zero(model.theta_dim());
  for (Index j = 0; j < model.p; ++j) theta(j) = rng.normal();
  theta(model.p) = rng.normal();       // alpha
  theta(model.theta_dim() - 1) = 0.4;  // log tau; z stays 0 so group effects vanish

  // With u = tau * 0 = 0 only the (beta, alpha) terms can change between two
  // evaluations, so the log-density difference must equal the plain logistic
  // likelihood difference plus the beta prior difference.
  Vector theta2 = theta;
  theta2(0) += 0.3;
  const double got = target.log_density(theta2) - target.log_density(theta);
  double manual = 0.0;
  for (Index e = 0; e < target.num_examples(Split::train); ++e) {
    const double p1 = target.predict_proba(theta, Split::train, e);
    const double p2 = target.predict_proba(theta2, Split::train, e);
    const int y = target.labels(Split::train)[static_cast<std::size_t>(e)];
    manual += y == 1 ? std::log(p2) - std::log(p1) : std::log(1.0 - p2) - std::log(1.0 - p1);
  }
  manual += (theta(0) * theta(0) - theta2(0) * theta2(0)) /
            (2.0 * model.sigma_beta * model.sigma_beta);
  EXPECT_NEAR(got, manual, 1e-9 * (1.0 + std::abs(got)));
}

TEST(HlrTarget, LogPosteriorFiniteAtOrigin) {
  auto target = make_hlr_target(hlr_generate(100, 3, 5, "long-tail", 0.5, 37));
  EXPECT_TRUE(std::isfinite(target->log_density(Vector::Zero(target->dim()))));
}

TEST(Minibatch, FullBatchEqualsPlainScore) {
  const Vector w_true = Vector::Ones(3);
  auto logreg = make_logreg(tiny_dataset(30, 3, 41, w_true), tiny_dataset(10, 3, 42, w_true));
  auto hlr = make_hlr_target(hlr_generate(120, 4, 6, "uniform", 0.5, 43));
  for (const auto& target : {logreg, hlr}) {
    std::vector<Index> all(target->train_size());
    for (Index i = 0; i < target->train_size(); ++i) all[i] = i;
    RngStream rng(44);
    const Vector theta = random_point(rng, target->dim(), 0.5);
    EXPECT_TRUE(target->score_minibatch(theta, all) == target->score(theta));
  }
}

TEST(Minibatch, SubsampledScoreIsRescaled) {
  // One-row batches: likelihood term scaled by n, prior untouched. The mean
  // over all one-row batches must equal the full score.
  const Vector w_true = Vector::Ones(3);
  auto target = make_logreg(tiny_dataset(20, 3, 45, w_true), tiny_dataset(8, 3, 46, w_true), 2.0);
  RngStream rng(47);
  const Vector theta = random_point(rng, target->dim(), 0.7);
  Vector mean = Vector::Zero(target->dim());
  for (Index i = 0; i < target->train_size(); ++i)
    mean += target->score_minibatch(theta, {i});
  mean /= static_cast<double>(target->train_size());
  EXPECT_LT((mean - target->score(theta)).norm(), 1e-10 * (1.0 + target->score(theta).norm()));
}

TEST(Targets, PureEvaluation) {
  auto t = make_funnel();
  Vector x(2);
  x << 0.7, -1.2;
  EXPECT_EQ(t->log_density(x), t->log_density(x));
  EXPECT_TRUE(t->score(x) == t->score(x));
}
