#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "driftval/dataset.hpp"
#include "testutil.hpp"

using namespace driftval;

TEST(SampleDataset, SingleDrawFromPointDensity) {
  const DriftPath path = testutil::constant_fixture(8, 1);
  const Dataset d = sample_dataset(path, SamplingDensity::point(0.0), 1, 7);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.draws[0].time, 0.0);
  EXPECT_LT(d.draws[0].element, 8u);
}

TEST(SampleDataset, IdenticalOriginGivesIdenticalDraws) {
  const DriftPath path = testutil::linear_fixture(32, 2, 0.4);
  const auto density = SamplingDensity::uniform(0.0, 1.0);
  const Dataset a = sample_dataset(path, density, 500, 123);
  const Dataset b = sample_dataset(path, density, 500, 123);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.draws[i].element, b.draws[i].element);
    EXPECT_DOUBLE_EQ(a.draws[i].time, b.draws[i].time);
  }
  const Dataset c = sample_dataset(path, density, 500, 124);
  bool any_diff = false;
  for (std::size_t i = 0; i < c.size(); ++i) {
    any_diff |= c.draws[i].element != a.draws[i].element;
  }
  EXPECT_TRUE(any_diff);
}

TEST(SampleDataset, TimesStayInsideSupport) {
  const DriftPath path = testutil::linear_fixture(16, 3, 0.4);
  const auto density = SamplingDensity::piecewise({{0.2, 1.0}, {0.7, 2.0}});
  const Dataset d = sample_dataset(path, density, 2000, 5);
  for (const auto& draw : d.draws) {
    EXPECT_GE(draw.time, 0.2);
    EXPECT_LE(draw.time, 0.7);
  }
}

TEST(SampleDataset, FrequenciesMatchDistribution) {
  // chi-square goodness of fit on a constant path, any density
  const std::size_t dim = 32;
  const DriftPath path = testutil::constant_fixture(dim, 4);
  const auto expected = path.at(0.0);
  const std::size_t n = 100000;
  const Dataset d = sample_dataset(path, SamplingDensity::uniform(0.0, 1.0), n, 11);
  std::vector<std::size_t> counts(dim, 0);
  for (const auto& draw : d.draws) counts[draw.element]++;
  std::vector<double> probs(expected.probs().begin(), expected.probs().end());
  const double stat = testutil::chi2_statistic(counts, probs, n);
  // p > 0.001 <=> statistic below the 0.999 quantile (z = 3.0902)
  const double critical = testutil::chi2_critical(static_cast<double>(dim - 1), 3.090232);
  EXPECT_LT(stat, critical);
}

TEST(SampleDataset, FlowRateScaleDoesNotChangeDraws) {
  const DriftPath path = testutil::linear_fixture(32, 5, 0.4);
  const auto low = SamplingDensity::flow({{0.0, 1.0}, {0.5, 3.0}, {1.0, 0.0}});
  const auto high = SamplingDensity::flow({{0.0, 2.5}, {0.5, 7.5}, {1.0, 0.0}});
  const Dataset a = sample_dataset(path, low, 1000, 77);
  const Dataset b = sample_dataset(path, high, 1000, 77);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.draws[i].element, b.draws[i].element);
    EXPECT_DOUBLE_EQ(a.draws[i].time, b.draws[i].time);
  }
}

TEST(SampleDataset, RejectsBadArguments) {
  const DriftPath path = testutil::constant_fixture(8, 6);
  EXPECT_THROW(sample_dataset(path, SamplingDensity::point(0.0), 0, 1),
               std::invalid_argument);
  EXPECT_THROW(sample_dataset(path, SamplingDensity::uniform(0.5, 1.5), 10, 1),
               std::invalid_argument);
}

TEST(FitMle, ExactFrequenciesWithoutSmoothing) {
  Dataset d;
  d.draws = {{0, 0.0}, {0, 0.0}, {1, 0.0}, {1, 0.0}};
  const auto est = fit_mle(d, 2, 0.0);
  EXPECT_DOUBLE_EQ(est.probs[0], 0.5);
  EXPECT_DOUBLE_EQ(est.probs[1], 0.5);
  EXPECT_EQ(est.train_size, 4u);
}

TEST(FitMle, LaplaceSmoothingArithmetic) {
  Dataset d;
  d.draws = {{0, 0.0}};
  const auto est = fit_mle(d, 2, 1.0);
  EXPECT_NEAR(est.probs[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(est.probs[1], 1.0 / 3.0, 1e-15);
}

TEST(FitMle, ConvergesAtCltScale) {
  // every element within 3 * sqrt(p(1-p)/n) of the truth at n = 1e5
  const std::size_t dim = 16;
  const DriftPath path = testutil::constant_fixture(dim, 7);
  const auto p = path.at(0.0);
  const std::size_t n = 100000;
  const Dataset d = sample_dataset(path, SamplingDensity::point(0.0), n, 19);
  const auto est = fit_mle(d, dim, 0.0);
  double linf = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    const double bound = 3.0 * std::sqrt(p[k] * (1.0 - p[k]) / static_cast<double>(n));
    EXPECT_LE(std::abs(est.probs[k] - p[k]), bound) << "element " << k;
    linf = std::max(linf, std::abs(est.probs[k] - p[k]));
  }
  EXPECT_LT(linf, 0.01);
}

TEST(FitMle, KlToTruthShrinksWithN) {
  const std::size_t dim = 64;
  const DriftPath path = testutil::linear_fixture(dim, 8, 0.4);
  const auto p1 = path.at(1.0);
  double prev_median = 1e9;
  for (std::size_t n : {256u, 1024u, 4096u, 16384u}) {
    std::vector<double> kls;
    for (std::uint64_t r = 0; r < 15; ++r) {
      const Dataset d = sample_dataset(path, SamplingDensity::point(1.0), n,
                                       derive_stream(33, StreamTag::kSampleTimes, {n, r}));
      const auto est = fit_mle(d, dim);
      kls.push_back(kl_divergence(p1.probs(), est.probs));
    }
    const double med = median_of(kls);
    EXPECT_LT(med, prev_median);
    prev_median = med;
  }
}

TEST(EmpiricalLoss, MatchingPointModelApproachesZero) {
  // constant test set, model concentrated on the same element
  Dataset test;
  for (int i = 0; i < 100; ++i) test.draws.push_back({3, 0.0});
  CategoricalEstimator model;
  model.probs = {1e-9, 1e-9, 1e-9, 1.0 - 7e-9, 1e-9, 1e-9, 1e-9, 1e-9};
  model.train_size = 100;
  EXPECT_NEAR(empirical_loss(model, test), 0.0, 1e-8);
}

TEST(EmpiricalLoss, BalancedTestConvergesToCrossEntropy) {
  // model (0.9, 0.1) on a balanced test stream: loss -> -0.5*ln(0.09)
  const DriftPath path =
      DriftPath(DriftKind::kLinear,
                {{0.0, CategoricalDistribution::from_probs({0.5, 0.5})}}, 1.0);
  CategoricalEstimator model;
  model.probs = {0.9, 0.1};
  model.train_size = 1;
  const Dataset test = sample_dataset(path, SamplingDensity::point(0.0), 400000, 3);
  EXPECT_NEAR(empirical_loss(model, test), 1.2039728043259361, 5e-3);
}

TEST(EmpiricalLoss, VarianceScalesAsOneOverN) {
  // Var[empirical loss] = Var[-ln m(w)] / n: slope of log-var on log-n is -1
  const std::size_t dim = 64;
  const DriftPath path = testutil::constant_fixture(dim, 9);
  CategoricalEstimator model;
  model.probs = testutil::random_probs(dim, 10);
  model.train_size = 1;
  std::vector<double> log_n, log_var;
  for (std::size_t n : {100u, 1000u, 10000u}) {
    std::vector<double> losses;
    for (std::uint64_t r = 0; r < 64; ++r) {
      const Dataset test = sample_dataset(path, SamplingDensity::point(0.0), n,
                                          derive_stream(55, StreamTag::kSampleTimes, {n, r}));
      losses.push_back(empirical_loss(model, test));
    }
    log_n.push_back(std::log(static_cast<double>(n)));
    log_var.push_back(std::log(variance_of(losses)));
  }
  const auto fit = linear_regression(log_n, log_var);
  EXPECT_NEAR(fit.slope, -1.0, 0.3);
}

TEST(EmpiricalLoss, MeanMatchesShannonDecomposition) {
  // fixed model on fresh P_0 samples: mean loss within 4 SE of H + KL
  const std::size_t dim = 32;
  const DriftPath path = testutil::constant_fixture(dim, 12);
  const auto p0 = path.at(0.0);
  CategoricalEstimator model;
  model.probs = testutil::random_probs(dim, 13);
  model.train_size = 1;
  const double expected = entropy(p0) + kl_divergence(p0.probs(), model.probs);
  for (std::size_t n : {100u, 1000u, 10000u}) {
    std::vector<double> losses;
    for (std::uint64_t r = 0; r < 100; ++r) {
      const Dataset test = sample_dataset(path, SamplingDensity::point(0.0), n,
                                          derive_stream(77, StreamTag::kSampleElements, {n, r}));
      losses.push_back(empirical_loss(model, test));
    }
    const double mean = mean_of(losses);
    const double se = std_error_of(losses);
    EXPECT_LT(std::abs(mean - expected), 4.0 * se) << "n=" << n;
  }
}

TEST(EmpiricalLoss, ExactEstimatorReproducesPropositionOneLoss) {
  // with the estimator set to P_t analytically, the expected loss at time 0
  // is exactly H(P_0) + KL(P_0 || P_t)
  const DriftPath path = testutil::linear_fixture(64, 14, 0.5);
  const auto p0 = path.at(0.0);
  const auto pt = path.at(1.0);
  CategoricalEstimator exact;
  exact.probs.assign(pt.probs().begin(), pt.probs().end());
  exact.train_size = 0;
  const double loss = exact_loss(p0.probs(), exact);
  EXPECT_NEAR(loss, entropy(p0) + kl_divergence(p0, pt), 1e-12);
}

TEST(DatasetCsv, WritesSchema) {
  Dataset d;
  d.draws = {{2, 0.25}, {5, 0.75}};
  std::ostringstream os;
  write_dataset_csv(os, d);
  EXPECT_EQ(os.str(), "element_id,sample_time\n2,0.25\n5,0.75\n");
}
