#include <gtest/gtest.h>

#include <sstream>

#include "lsds/control/episode.hpp"
#include "lsds/control/pd.hpp"

using namespace lsds;

TEST(Pd, WorkedExample) {
  const PdStep s = pd_step({0.0, 100.0}, true, 2.56, PdGains{});
  EXPECT_NEAR(s.adjustment, 3.10 * 2.56 + 0.42 * 2.56, 1e-15);
  EXPECT_NEAR(s.p_new, 109.0112, 1e-12);
  EXPECT_EQ(s.state.e_previous, 2.56);
  EXPECT_EQ(s.state.p_current, s.p_new);
}

TEST(Pd, LiteralSignOpensTheGripper) {
  PdGains g;
  g.sign = PdSign::Literal;
  EXPECT_NEAR(pd_step({0.0, 100.0}, true, 2.56, g).p_new, 100.0 - 9.0112, 1e-12);
  EXPECT_EQ(parse_pd_sign("literal"), PdSign::Literal);
  EXPECT_EQ(parse_pd_sign("tighten"), PdSign::Tighten);
  EXPECT_FALSE(parse_pd_sign("loosen"));
}

TEST(Pd, ClampsToTheGripperRange) {
  EXPECT_EQ(pd_step({0.0, 222.0}, true, 2.56, PdGains{}).p_new, 225.0);
  PdGains g;
  g.sign = PdSign::Literal;
  EXPECT_EQ(pd_step({0.0, 3.0}, true, 2.56, g).p_new, 0.0);
}

TEST(Pd, NoSlipHoldsPositionAndMemory) {
  const PdStep s = pd_step({1.5, 100.0}, false, 5.0, PdGains{});
  EXPECT_EQ(s.p_new, 100.0);
  EXPECT_EQ(s.adjustment, 0.0);
  EXPECT_EQ(s.state.e_previous, 1.5);
}

TEST(Pd, DerivativeTermCanReduceTheCommand) {
  // Falling severity: Kp*e + Kd*(e - e_prev) < 0 when Kd dominates.
  const PdGains g{0.1, 1.0, PdSign::Tighten};
  const PdStep s = pd_step({5.0, 100.0}, true, 1.0, g);
  EXPECT_NEAR(s.p_new, 100.0 + 0.1 - 4.0, 1e-12);
}

TEST(Pd, RejectsNegativeSeverityAndGains) {
  EXPECT_THROW(pd_step({0.0, 100.0}, true, -0.1, PdGains{}), DomainError);
  const PdGains bad{-1.0, 0.0, PdSign::Tighten};
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Pd, PropertyMatchesFormulaAndStaysInRange) {
  Rng rng(17);
  for (int i = 0; i < 5000; ++i) {
    const PdState st{uniform(rng, 0, 8), uniform(rng, 0, 225)};
    const double e = uniform(rng, 0, 8);
    const PdGains g{uniform(rng, 0, 5), uniform(rng, 0, 5), uniform01(rng) < 0.5 ? PdSign::Tighten : PdSign::Literal};
    const PdStep s = pd_step(st, true, e, g);
    const double adj = g.kp * e + g.kd * (e - st.e_previous);
    const double raw = g.sign == PdSign::Tighten ? st.p_current + adj : st.p_current - adj;
    ASSERT_EQ(s.p_new, std::max(std::min(raw, 225.0), 0.0));
    ASSERT_GE(s.p_new, 0.0);
    ASSERT_LE(s.p_new, 225.0);
  }
}

// ---------------------------------------------------------------------------

TEST(Window, PadsWithTheFirstVector) {
  FeatureWindow w;
  w.push(from_array({1, 0, 0, 0, 0, 0, 0, 0, 0}));
  w.push(from_array({2, 0, 0, 0, 0, 0, 0, 0, 0}));
  const auto x = w.flatten(FeatureSet::Baseline);
  EXPECT_EQ(x, (std::vector<double>{1, 0, 1, 0, 1, 0, 1, 0, 2, 0}));
  EXPECT_EQ(w.latest().H, 2.0);
}

namespace {

TraceRow row(double v_true, double v_ref, double est, bool slip, double p) {
  TraceRow r;
  r.v_true = v_true;
  r.v_ref = v_ref;
  r.severity = est;
  r.slip = slip;
  r.p = p;
  return r;
}

}  // namespace

TEST(Report, HandComputedTrace) {
  EpisodeTrace t;
  t.rows = {row(0, 0, 0, false, 100), row(1.0, 0.3, 0.5, true, 100), row(2.0, 0.81, 1.0, true, 104),
            row(0, 0.567, 0.4, true, 110), row(0, 0.4, 0, false, 112), row(0, 0.28, 0, false, 112)};
  const EpisodeReport r = episode_report(t);
  EXPECT_EQ(r.ticks, 6u);
  EXPECT_EQ(r.settling_ticks, 3u);
  EXPECT_EQ(r.final_hold_ticks, 3u);
  EXPECT_EQ(r.slip_ticks, 2u);
  EXPECT_EQ(r.peak_true_severity, 2.0);
  EXPECT_EQ(r.misclassifications, 1u);
  EXPECT_EQ(r.severity_ticks, 3u);
  EXPECT_NEAR(r.severity.mae, (0.2 + 0.19 + 0.167) / 3.0, 1e-12);
  EXPECT_NEAR(r.severity_raw.mae, (0.5 + 1.0 + 0.4) / 3.0, 1e-12);
  EXPECT_EQ(r.p_min, 100.0);
  EXPECT_EQ(r.p_max, 112.0);
}

TEST(Report, EmptyTraceIsAnError) { EXPECT_THROW(episode_report(EpisodeTrace{}), DomainError); }

TEST(Report, CsvLayout) {
  EpisodeTrace t;
  t.rows = {row(1.0, 0.3, 0.5, true, 100)};
  std::ostringstream os;
  write_trace(os, t);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')),
            "timestamp,H,dH_dt,v_net,div,curl,d_div_dt,d_curl_dt,A_n,dA_n_dt,slip,severity,v_true,v_ref,p");
  std::ostringstream rep;
  write_episode_report(rep, episode_report(t));
  EXPECT_EQ(rep.str().rfind("ticks,1\nsettling_ticks,1\n", 0), 0u);
}

// ---------------------------------------------------------------------------

namespace {

// Stand-ins with the detector/estimator interface: the detector reports slip
// whenever v_net is large, the estimator returns a constant.
struct Detector {
  FeatureSet feature_set = FeatureSet::Combined;
};
ClassPrediction predict_class(const Detector&, const FeatureVector& v) { return {v.v_net > 5.0 ? 1 : 0, 0.0}; }

}  // namespace

TEST(Episode, GatesTheEstimatorOnDetectedSlip) {
  const auto ss = std::vector<SeveritySample>{{FeatureVector{}, 1.0, "o", 0}, {FeatureVector{}, 3.0, "o", 0}};
  TrainConfig c;
  c.epochs = 1;
  const MlpModel est = train_mlp(std::span<const SeveritySample>(ss), c);
  sim::VerticalSlideConfig cfg;
  sim::VerticalSlideEnv env(cfg);
  const EpisodeTrace t = run_episode(env, Detector{}, est, PdGains{}, 60);
  ASSERT_EQ(t.rows.size(), 60u);
  std::size_t flagged = 0;
  for (const auto& r : t.rows) {
    flagged += r.slip ? 1 : 0;
    if (!r.slip) {
      EXPECT_EQ(r.severity, 0.0);
    }
  }
  EXPECT_EQ(t.estimator_calls, flagged);
  EXPECT_GT(flagged, 0u);
  // Until the first detection the command never changes, so the fingers stay put.
  for (std::size_t i = 0; i < t.rows.size() && !t.rows[i].slip; ++i) EXPECT_NEAR(t.rows[i].p, cfg.initial_position(), 1e-9);
}

TEST(Episode, RejectsNonCombinedModels) {
  const auto ss = std::vector<SeveritySample>{{FeatureVector{}, 1.0, "o", 0}, {FeatureVector{}, 3.0, "o", 0}};
  TrainConfig c;
  c.epochs = 1;
  const MlpModel est = train_mlp(std::span<const SeveritySample>(ss), c, FeatureSet::Baseline);
  sim::VerticalSlideEnv env(sim::VerticalSlideConfig{});
  EXPECT_THROW(run_episode(env, Detector{}, est, PdGains{}, 5), ConfigError);
}

TEST(Report, DegenerateTraces) {
  EpisodeTrace still;
  still.rows = {row(0, 0, 0, false, 50), row(0, 0, 0, false, 50)};
  const EpisodeReport a = episode_report(still);
  EXPECT_EQ(a.settling_ticks, 0u);
  EXPECT_EQ(a.peak_true_severity, 0.0);
  EXPECT_EQ(a.severity_ticks, 0u);
  EpisodeTrace exact;
  exact.rows = {row(1.0, 1.0, 1.0, true, 50), row(2.0, 2.0, 2.0, true, 60)};
  EXPECT_EQ(episode_report(exact).severity.mae, 0.0);
}

// Closed loop with a perfect detector and estimator: the PD law alone must
// stop the slide for every shipped object.
TEST(Episode, IdealSensingSettlesEveryObject) {
  auto objects = sim::training_objects();
  for (const auto& o : sim::heldout_objects()) objects.push_back(o);
  objects.push_back(sim::pipe_object());
  std::size_t worst = 0;
  for (const auto& obj : objects) {
    sim::VerticalSlideConfig cfg;
    cfg.object = obj;
    sim::VerticalSlideEnv env(cfg);
    PdState pd{0.0, cfg.initial_position()};
    std::size_t last_slip = 0;
    bool slipped = false;
    for (std::size_t t = 0; t < 150; ++t) {
      const sim::SlideStep s = env.step(pd.p_current);
      const bool slip = s.v_slip_true > 0.0;
      if (slip) {
        last_slip = t + 1;
        slipped = true;
      }
      pd = pd_step(pd, slip, s.v_slip_true, PdGains{}).state;
    }
    EXPECT_TRUE(slipped) << obj.name;
    EXPECT_FALSE(env.dropped()) << obj.name;
    EXPECT_LE(last_slip, 50u) << obj.name;
    worst = std::max(worst, last_slip);
  }
  RecordProperty("worst_settling_ticks", static_cast<int>(worst));
}
