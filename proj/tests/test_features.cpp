#include <gtest/gtest.h>

#include <sstream>

#include "lsds/dataset.hpp"
#include "lsds/features.hpp"
#include "oracles.hpp"

using namespace lsds;

TEST(FeatureSets, SelectionOrderAndWidth) {
  const FeatureVector v = from_array({1, 2, 3, 4, 5, 6, 7, 8, 9});
  EXPECT_EQ(select_features(v, FeatureSet::Baseline), (std::vector<double>{1, 2}));
  EXPECT_EQ(select_features(v, FeatureSet::Proposed), (std::vector<double>{3, 4, 5, 6, 7, 8, 9}));
  EXPECT_EQ(select_features(v, FeatureSet::Combined).size(), 9u);
  for (auto s : {FeatureSet::Baseline, FeatureSet::Proposed, FeatureSet::Combined}) {
    EXPECT_EQ(select_features(v, s).size(), feature_count(s));
    EXPECT_EQ(parse_feature_set(to_string(s)), s);
  }
  EXPECT_FALSE(parse_feature_set("both"));
}

TEST(Extraction, FirstFrameHasZeroRates) {
  Rng rng(1);
  const MarkerField f = oracle::random_field(rng);
  DepthMap d = DepthMap::zeros();
  d.depth[10] = 2.0;
  FeatureExtractor ex;
  const FeatureVector v = ex(f, d);
  EXPECT_EQ(v.v_net, 0.0);
  EXPECT_EQ(v.dH_dt, 0.0);
  EXPECT_EQ(v.d_div_dt, 0.0);
  EXPECT_EQ(v.d_curl_dt, 0.0);
  EXPECT_EQ(v.dA_n_dt, 0.0);
  EXPECT_GT(v.A_n, 0.0);
}

TEST(Extraction, RatesAreForwardDifferencesOfTheStaticFeatures) {
  Rng rng(2);
  const MarkerField a = oracle::random_field(rng, 7, 9);
  MarkerField b = oracle::random_field(rng, 7, 9);
  b.ref_positions = a.ref_positions;
  DepthMap d0 = DepthMap::zeros(), d1 = DepthMap::zeros();
  for (std::size_t i = 0; i < 5000; ++i) d1.depth[i] = 1.5;
  FeatureExtractor ex;
  const FeatureVector v0 = ex(a, d0);
  const FeatureVector v1 = ex(b, d1, 0.05);
  EXPECT_DOUBLE_EQ(v1.dH_dt, (v1.H - v0.H) / 0.05);
  EXPECT_DOUBLE_EQ(v1.d_div_dt, (v1.div - v0.div) / 0.05);
  EXPECT_DOUBLE_EQ(v1.d_curl_dt, (v1.curl - v0.curl) / 0.05);
  EXPECT_DOUBLE_EQ(v1.dA_n_dt, (v1.A_n - v0.A_n) / 0.05);
  EXPECT_DOUBLE_EQ(v1.A_n, 5000.0 / 76800.0);
  const auto m = oracle::mean_velocity(a, b, 0.05);
  EXPECT_LE(oracle::rel_err(v1.v_net, m.net), 1e-12);
}

TEST(Extraction, ResetStartsAFreshStream) {
  Rng rng(3);
  const MarkerField a = oracle::random_field(rng);
  FeatureExtractor ex;
  ex(a, DepthMap::zeros());
  EXPECT_TRUE(ex.state().has_previous());
  ex.reset();
  EXPECT_FALSE(ex.state().has_previous());
  EXPECT_EQ(ex(a, DepthMap::zeros()).v_net, 0.0);
}

TEST(Extraction, PureFunctionalFormMatchesWrapper) {
  Rng rng(4);
  const MarkerField a = oracle::random_field(rng), b = [&] {
    MarkerField f = oracle::random_field(rng);
    f.ref_positions = a.ref_positions;
    return f;
  }();
  FeatureExtractor ex;
  ex(a, DepthMap::zeros());
  const FeatureVector w = ex(b, DepthMap::zeros());
  Extraction e = extract_features(make_stream_state(), a, DepthMap::zeros(), kTickSeconds);
  e = extract_features(std::move(e.state), b, DepthMap::zeros(), kTickSeconds);
  EXPECT_EQ(w, e.features);
}

TEST(Extraction, RejectsChangedLatticeAndBadDt) {
  FeatureExtractor ex;
  ex(MarkerField::standard(), DepthMap::zeros());
  EXPECT_THROW(ex(MarkerField::lattice(6, 9, 30, 30), DepthMap::zeros()), GeometryError);
  FeatureExtractor ex2;
  EXPECT_THROW(ex2(MarkerField::standard(), DepthMap::zeros(), 0.0), DomainError);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<DetectionSample> some_detection(std::size_t n) {
  Rng rng(8);
  std::vector<DetectionSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, kNumFeatures> a{};
    for (double& v : a) v = 100.0 * normal(rng);
    out.push_back({quantize(from_array(a, 0.04 * static_cast<double>(i))), static_cast<int>(i % 2),
                   i < n / 2 ? "mug" : "can", static_cast<Scenario>(i % 5), static_cast<std::uint32_t>(i / 7)});
  }
  return out;
}

}  // namespace

TEST(Dataset, DetectionRoundTripIsExact) {
  const auto rows = some_detection(300);
  std::stringstream buf;
  write_dataset(buf, std::span<const DetectionSample>(rows));
  const std::string text = buf.str();
  EXPECT_EQ(text.rfind("LSDS-DATA v1\nobject_id,scenario,sequence,time,H,dH_dt,v_net,div,curl,d_div_dt,d_curl_dt,A_n,dA_n_dt,label\n", 0), 0u);
  EXPECT_EQ(read_detection_dataset(buf), rows);
  std::stringstream again;
  write_dataset(again, std::span<const DetectionSample>(rows));
  EXPECT_EQ(again.str(), text);
}

TEST(Dataset, SeverityRoundTripIsExact) {
  std::vector<SeveritySample> rows;
  Rng rng(9);
  for (std::uint32_t i = 0; i < 100; ++i) {
    std::array<double, kNumFeatures> a{};
    for (double& v : a) v = normal(rng) * 1e-3;
    rows.push_back({quantize(from_array(a)), to_float32(uniform(rng, 0.0, 7.0)), "jar", i / 20});
  }
  std::stringstream buf;
  write_dataset(buf, std::span<const SeveritySample>(rows));
  EXPECT_EQ(read_severity_dataset(buf), rows);
}

TEST(Dataset, QuantizeIsIdempotent) {
  const FeatureVector v = from_array({0.1, 1.0 / 3.0, 2e-9, -7.25, 1e10, 5, 6, 7, 8}, 0.12);
  EXPECT_EQ(quantize(quantize(v)), quantize(v));
}

TEST(Dataset, ParseErrorsCarryLineNumbers) {
  auto expect_line = [](const std::string& text, std::size_t line) {
    std::istringstream is(text);
    try {
      read_detection_dataset(is);
      FAIL() << "no error for: " << text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), line) << e.what();
    }
  };
  const std::string head = "LSDS-DATA v1\nobject_id,scenario,sequence,time,H,dH_dt,v_net,div,curl,d_div_dt,d_curl_dt,A_n,dA_n_dt,label\n";
  expect_line("", 1);
  expect_line("LSDS-DATA v2\n", 1);
  expect_line("LSDS-DATA v1\nwrong,header\n", 2);
  expect_line(head + "mug,slip,0,0,1,2,3,4,5,6,7,8,9,1\nmug,slip,0,0,1,2,3\n", 4);
  expect_line(head + "mug,slip,0,0,1,2,3,4,5,6,7,8,x,1\n", 3);
  expect_line(head + "mug,slip,0,0,1,2,3,4,5,6,7,8,9,2\n", 3);
  expect_line(head + "mug,falling,0,0,1,2,3,4,5,6,7,8,9,1\n", 3);
}

TEST(Dataset, AcceptsCrlfLineEndings) {
  std::istringstream is(
      "LSDS-DATA v1\r\nobject_id,scenario,sequence,time,H,dH_dt,v_net,div,curl,d_div_dt,d_curl_dt,A_n,dA_n_dt,v_slip\r\n"
      "pipe,slide,3,0.04,1,2,3,4,5,6,7,8,9,2.5\r\n");
  const auto rows = read_severity_dataset(is);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].v_slip, 2.5);
  EXPECT_EQ(rows[0].sequence, 3u);
}

TEST(Dataset, RejectsNegativeSpeedAndWrongKind) {
  std::istringstream neg(
      "LSDS-DATA v1\nobject_id,scenario,sequence,time,H,dH_dt,v_net,div,curl,d_div_dt,d_curl_dt,A_n,dA_n_dt,v_slip\n"
      "pipe,slide,0,0,1,2,3,4,5,6,7,8,9,-1\n");
  EXPECT_THROW(read_severity_dataset(neg), ParseError);
  std::istringstream det(
      "LSDS-DATA v1\nobject_id,scenario,sequence,time,H,dH_dt,v_net,div,curl,d_div_dt,d_curl_dt,A_n,dA_n_dt,label\n");
  EXPECT_THROW(read_severity_dataset(det), ParseError);
}

TEST(Properties, CombinedIsBaselineThenProposed) {
  Rng rng(31);
  for (int i = 0; i < 100; ++i) {
    std::array<double, kNumFeatures> a{};
    for (double& v : a) v = normal(rng);
    const FeatureVector v = from_array(a);
    auto cat = select_features(v, FeatureSet::Baseline);
    const auto p = select_features(v, FeatureSet::Proposed);
    cat.insert(cat.end(), p.begin(), p.end());
    ASSERT_EQ(cat, select_features(v, FeatureSet::Combined));
  }
}

TEST(Properties, ExtractionIsDeterministic) {
  Rng rng(32);
  std::vector<MarkerField> frames;
  for (int i = 0; i < 10; ++i) {
    MarkerField f = oracle::random_field(rng);
    if (!frames.empty()) f.ref_positions = frames.front().ref_positions;
    frames.push_back(f);
  }
  FeatureExtractor a, b;
  for (const auto& f : frames) ASSERT_EQ(a(f, DepthMap::zeros()), b(f, DepthMap::zeros()));
}

TEST(Properties, RandomDatasetRoundTrips) {
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<DetectionSample> rows;
    const std::size_t n = uniform_index(rng, 50);
    for (std::size_t i = 0; i < n; ++i) {
      std::array<double, kNumFeatures> a{};
      for (double& v : a) v = std::ldexp(normal(rng), static_cast<int>(uniform_index(rng, 80)) - 40);
      rows.push_back({quantize(from_array(a, uniform(rng, 0, 100))), static_cast<int>(uniform_index(rng, 2)),
                      "obj" + std::to_string(uniform_index(rng, 4)), static_cast<Scenario>(uniform_index(rng, 5)),
                      static_cast<std::uint32_t>(uniform_index(rng, 1000))});
    }
    std::stringstream buf;
    write_dataset(buf, std::span<const DetectionSample>(rows));
    ASSERT_EQ(read_detection_dataset(buf), rows);
  }
}
