#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "driftval/offload.hpp"
#include "testutil.hpp"

using namespace driftval;

namespace {

/// Test-side equivalent size under the shifted-curve model, written out
/// independently of the library call.
double oracle_equiv(double m, double kl, const LearningCurveFit& fit) {
  const double excess = kl + fit.alpha * std::pow(m, -fit.beta);
  return std::pow(excess / fit.alpha, -1.0 / fit.beta);
}

double oracle_state_equiv(const DriftPath& path, const SamplingDensity& density,
                          double window, double size, const LearningCurveFit& fit) {
  const auto p0 = path.at(0.0);
  const auto net = net_distribution(path, density, 0.0, window);
  return oracle_equiv(size, kl_divergence(p0, net), fit);
}

/// Brute-force scan over a truncation grid: does any cut strictly improve
/// the equivalent size of the current state?
bool oracle_improvement_exists(const DriftPath& path, const SamplingDensity& density,
                               double window, double size,
                               const LearningCurveFit& fit, int grid = 256) {
  const double current = oracle_state_equiv(path, density, window, size, fit);
  const auto p0 = path.at(0.0);
  for (int j = 1; j < grid; ++j) {
    const double cut = window * static_cast<double>(j) / grid;
    const double kept = density.integral(0.0, cut);
    if (!(kept > 1e-9)) continue;
    const auto net = net_distribution(path, density.restricted_to(cut), 0.0, cut);
    const double candidate = oracle_equiv(size * kept, kl_divergence(p0, net), fit);
    if (candidate > current * (1.0 + 1e-9)) return true;
  }
  return false;
}

}  // namespace

TEST(SequentialOffload, ZeroDriftRejectsImmediately) {
  const DriftPath path = testutil::constant_fixture(64, 201);
  const auto refpath = testutil::linear_fixture(64, 202, 0.3);
  const auto fit = testutil::fit_fixture_curve(refpath, 203);
  OffloadOptions opt;
  opt.n = 4096;
  opt.mode = OffloadMode::kExact;
  const auto trace =
      sequential_offload(path, SamplingDensity::uniform(0.0, 1.0), 1.0, fit, opt);
  EXPECT_EQ(trace.accepted_steps, 0);
  ASSERT_EQ(trace.steps.size(), 1u);
  EXPECT_FALSE(trace.steps[0].accepted);
  EXPECT_DOUBLE_EQ(trace.final_size, 4096.0);
  EXPECT_DOUBLE_EQ(trace.final_window_hi, 1.0);
}

TEST(SequentialOffload, PointDensityAtZeroTerminatesImmediately) {
  const DriftPath path = testutil::linear_fixture(64, 204, 0.4);
  const auto fit = testutil::fit_fixture_curve(path, 205);
  OffloadOptions opt;
  opt.n = 256;
  opt.mode = OffloadMode::kExact;
  const auto trace =
      sequential_offload(path, SamplingDensity::point(0.0), 0.0, fit, opt);
  EXPECT_EQ(trace.accepted_steps, 0);
  ASSERT_EQ(trace.steps.size(), 1u);
  EXPECT_FALSE(trace.steps[0].accepted);
  EXPECT_NEAR(trace.final_equivalent_time, 0.0, 1e-9);
}

TEST(SequentialOffload, TwoRegimeDecisionsMatchExhaustiveOracle) {
  const DriftPath path = testutil::two_regime_fixture(64, 206, 2.0);
  const auto fit = testutil::fit_fixture_curve(path, 207);
  const auto density = SamplingDensity::uniform(0.0, 1.0);
  OffloadOptions opt;
  opt.n = 4096;
  opt.mode = OffloadMode::kExact;
  const auto trace = sequential_offload(path, density, 1.0, fit, opt);

  ASSERT_GE(trace.steps.size(), 1u);
  EXPECT_GE(trace.accepted_steps, 1);

  // replay the greedy trajectory; at every state the accept/reject decision
  // must match the existence of an improving truncation on a 256-point grid
  SamplingDensity current = density;
  double window = 1.0;
  double size = opt.n;
  for (const auto& step : trace.steps) {
    const bool oracle_says =
        oracle_improvement_exists(path, current, window, size, fit);
    EXPECT_EQ(step.accepted, oracle_says)
        << "iteration " << step.iteration << " window " << window;
    if (!step.accepted) break;
    current = current.restricted_to(step.t_new);
    window = step.t_new;
    size = step.n_new;
  }
}

TEST(SequentialOffload, AcceptedStepsIncreaseEquivalentSize) {
  const DriftPath path = testutil::two_regime_fixture(64, 208, 1.5);
  const auto fit = testutil::fit_fixture_curve(path, 209);
  OffloadOptions opt;
  opt.n = 8192;
  opt.mode = OffloadMode::kExact;
  const auto trace =
      sequential_offload(path, SamplingDensity::uniform(0.0, 1.0), 1.0, fit, opt);
  EXPECT_GE(trace.accepted_steps, 1);
  for (const auto& step : trace.steps) {
    if (step.accepted) {
      EXPECT_GT(step.equiv_after, step.equiv_before);
      // recompute both sides independently
      EXPECT_NEAR(step.equiv_before,
                  oracle_state_equiv(path, SamplingDensity::uniform(0.0, 1.0)
                                               .restricted_to(step.t_prev),
                                     step.t_prev, step.n_prev, fit),
                  1e-6 * step.equiv_before);
    }
  }
}

TEST(SequentialOffload, TraceInvariants) {
  const DriftPath path = testutil::two_regime_fixture(64, 210, 2.5);
  const auto fit = testutil::fit_fixture_curve(path, 211);
  OffloadOptions opt;
  opt.n = 4096;
  opt.mode = OffloadMode::kExact;
  const auto trace =
      sequential_offload(path, SamplingDensity::uniform(0.0, 1.0), 1.0, fit, opt);
  ASSERT_LE(trace.steps.size(), 64u);
  EXPECT_FALSE(trace.steps.back().accepted);
  double prev_tstar = std::numeric_limits<double>::infinity();
  for (const auto& step : trace.steps) {
    EXPECT_NEAR(step.n_prev - step.n_deleted, step.n_new, 1e-9 * step.n_prev);
    EXPECT_EQ(step.accepted, step.gain_ratio > step.threshold);
    if (step.accepted) {
      EXPECT_LT(step.t_star, prev_tstar);
      prev_tstar = step.t_star;
    }
  }
  // deleted mass equals the density integral over the cut
  const auto& first = trace.steps.front();
  EXPECT_NEAR(first.n_deleted,
              first.n_prev * SamplingDensity::uniform(0.0, 1.0)
                                 .integral(first.t_new, first.t_prev),
              1e-9 * first.n_prev);
}

TEST(SequentialOffload, MonteCarloModeAgreesOnClearCases) {
  const DriftPath path = testutil::two_regime_fixture(64, 212, 2.0);
  const auto fit = testutil::fit_fixture_curve(path, 213);
  OffloadOptions opt;
  opt.n = 4096;
  opt.mode = OffloadMode::kMonteCarlo;
  opt.replicates = 12;
  opt.loss_mode = LossMode::kExact;
  const auto trace =
      sequential_offload(path, SamplingDensity::uniform(0.0, 1.0), 1.0, fit, opt, 5);
  // the stale half is severely drifted: the first cut is unambiguous
  EXPECT_GE(trace.accepted_steps, 1);
  EXPECT_LT(trace.final_window_hi, 1.0);
  EXPECT_LT(trace.final_size, 4096.0);

  const DriftPath flat = testutil::constant_fixture(64, 214);
  const auto flat_trace =
      sequential_offload(flat, SamplingDensity::uniform(0.0, 1.0), 1.0, fit, opt, 6);
  EXPECT_EQ(flat_trace.accepted_steps, 0);
}

TEST(SequentialOffload, ValidatesArguments) {
  const DriftPath path = testutil::linear_fixture(16, 215, 0.3);
  const auto fit = testutil::fit_fixture_curve(path, 216);
  OffloadOptions opt;
  opt.n = 1.0;
  EXPECT_THROW(sequential_offload(path, SamplingDensity::uniform(0.0, 1.0), 1.0,
                                  fit, opt),
               std::invalid_argument);
  opt.n = 64.0;
  // density not normalized over the window
  EXPECT_THROW(sequential_offload(path, SamplingDensity::uniform(0.0, 1.0), 0.5,
                                  fit, opt),
               std::invalid_argument);
}

TEST(OffloadTrace, ExportSchemas) {
  OffloadTrace trace;
  OffloadStep s;
  s.iteration = 1;
  s.t_prev = 1.0;
  s.t_new = 0.5;
  s.n_prev = 100.0;
  s.n_new = 50.0;
  s.n_deleted = 50.0;
  s.gain_ratio = 2.5;
  s.threshold = 2.0;
  s.accepted = true;
  trace.steps.push_back(s);
  trace.final_window_hi = 0.5;
  trace.final_size = 50.0;
  trace.accepted_steps = 1;

  std::ostringstream os;
  write_offload_trace_csv(os, trace);
  EXPECT_EQ(os.str(),
            "iteration,t_prev,t_new,n_prev,n_new,gain_ratio,threshold,accepted\n"
            "1,1,0.5,100,50,2.5,2,1\n");

  const auto j = offload_trace_json(trace);
  EXPECT_EQ(j.at("steps").size(), 1u);
  EXPECT_DOUBLE_EQ(j.at("steps")[0].at("gain_ratio").get<double>(), 2.5);
  EXPECT_TRUE(j.at("steps")[0].at("accepted").get<bool>());
  EXPECT_DOUBLE_EQ(j.at("final_size").get<double>(), 50.0);
}

TEST(FlowScaling, UnitMultiplierGivesIdenticalTraces) {
  const DriftPath path = testutil::two_regime_fixture(64, 217, 1.5);
  const auto fit = testutil::fit_fixture_curve(path, 218);
  FlowScenario scenario;
  scenario.base_rate = {{0.0, 4096.0}, {1.0, 0.0}};
  scenario.multiplier = 1.0;
  scenario.horizon = 1.0;
  OffloadOptions opt;
  opt.mode = OffloadMode::kExact;
  const auto cmp = flow_scaling_analysis(path, scenario, fit, opt, 3);
  ASSERT_EQ(cmp.low.steps.size(), cmp.high.steps.size());
  for (std::size_t i = 0; i < cmp.low.steps.size(); ++i) {
    EXPECT_DOUBLE_EQ(cmp.low.steps[i].gain_ratio, cmp.high.steps[i].gain_ratio);
    EXPECT_EQ(cmp.low.steps[i].accepted, cmp.high.steps[i].accepted);
  }
  EXPECT_DOUBLE_EQ(cmp.final_equivalent_time_low, cmp.final_equivalent_time_high);
}

TEST(FlowScaling, HigherFlowAcceptsMoreAndEndsCloser) {
  // alpha = 4 on a drifting fixture: every step accepted under the low rate
  // is accepted under the high rate, and the final equivalent time can only
  // move toward the prediction time
  const DriftPath path = testutil::linear_fixture(64, 219, 0.6);
  const auto fit = testutil::fit_fixture_curve(path, 220);
  FlowScenario scenario;
  scenario.base_rate = {{0.0, 512.0}, {0.5, 1536.0}, {1.0, 0.0}};
  scenario.multiplier = 4.0;
  scenario.horizon = 1.0;
  OffloadOptions opt;
  opt.mode = OffloadMode::kExact;
  const auto cmp = flow_scaling_analysis(path, scenario, fit, opt, 4);
  EXPECT_NEAR(cmp.n_high, 4.0 * cmp.n_low, 1e-9);
  EXPECT_TRUE(cmp.acceptance_subset);
  EXPECT_TRUE(cmp.final_time_weakly_closer);
  EXPECT_GE(cmp.high.accepted_steps, cmp.low.accepted_steps);
}

TEST(FlowScaling, RejectsBadMultiplier) {
  const DriftPath path = testutil::linear_fixture(16, 221, 0.3);
  const auto fit = testutil::fit_fixture_curve(path, 222);
  FlowScenario scenario;
  scenario.base_rate = {{0.0, 100.0}, {1.0, 0.0}};
  scenario.multiplier = 0.5;
  scenario.horizon = 1.0;
  EXPECT_THROW(flow_scaling_analysis(path, scenario, fit, {}), std::invalid_argument);
}
