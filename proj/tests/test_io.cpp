#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include <gtest/gtest.h>

#include "rfs/io.hpp"

using namespace rfs;
using namespace rfs::io;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_vector(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (!same_bits(a(i), b(i))) return false;
    return true;
}

} // namespace

TEST(Numbers, ShortestTextReadsBackExactly) {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 5e-324, -0.0, 123456789.125, std::numeric_limits<double>::max()}) {
        std::string s;
        append_number(s, v);
        EXPECT_EQ(s.find(','), std::string::npos);
        EXPECT_TRUE(same_bits(parse_number<double>(s, "t"), v)) << s;
    }
    EXPECT_THROW((void)parse_number<double>("1.5x", "t"), IoError);
    EXPECT_THROW((void)parse_number<double>("", "t"), IoError);
    EXPECT_THROW((void)parse_number<std::size_t>("-1", "t"), IoError);
}

TEST(Detections, RoundTripKeepsEmptyFrames) {
    std::vector<MeasurementSet> frames(4);
    Vector z(2);
    z << 0.1, 229.99999999999997;
    frames[1].push_back(z);
    z << 3.0, 4.0;
    frames[1].push_back(z);
    frames[3].push_back(z);
    const auto back = parse_detections(format_detections(frames));
    ASSERT_EQ(back.size(), 4u);
    EXPECT_TRUE(back[0].empty());
    EXPECT_TRUE(back[2].empty());
    ASSERT_EQ(back[1].size(), 2u);
    EXPECT_TRUE(same_vector(back[1][0], frames[1][0]));
    EXPECT_TRUE(same_vector(back[3][0], frames[3][0]));
}

TEST(Detections, ZeroFrames) {
    EXPECT_TRUE(parse_detections(format_detections({})).empty());
    EXPECT_TRUE(parse_detections("").empty());
    EXPECT_TRUE(parse_detections("frame,x,y\n").empty());
}

TEST(Detections, WithoutFrameLineUsesLargestIndex) {
    const auto f = parse_detections("frame,x,y\n3,1,2\r\n");
    ASSERT_EQ(f.size(), 3u);
    EXPECT_EQ(f[2].size(), 1u);
}

TEST(Detections, MalformedInputsNameTheLine) {
    try {
        (void)parse_detections("frame,x,y\n1,2,3\n1,2\n", "d.csv");
        FAIL();
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("d.csv:3"), std::string::npos) << e.what();
    }
    EXPECT_THROW((void)parse_detections("frame,y,x\n1,2,3\n"), IoError);
    EXPECT_THROW((void)parse_detections("frame,x,y\n0,2,3\n"), IoError);
    EXPECT_THROW((void)parse_detections("# frames: 1\nframe,x,y\n2,2,3\n"), IoError);
    EXPECT_THROW((void)parse_detections("frame,x,y\n1,2,abc\n"), IoError);
}

TEST(Truth, SimulatedScenarioRoundTripsExactly) {
    auto cfg = sim::preset_scenario("ramp-clutter");
    cfg.seed = 12;
    const auto out = sim::simulate(cfg);
    const auto back = parse_truth(format_truth(out.truth, cfg.frames));
    EXPECT_EQ(back.frames, cfg.frames);
    ASSERT_EQ(back.truth.tracks.size(), out.truth.tracks.size());
    for (std::size_t i = 0; i < out.truth.tracks.size(); ++i) {
        const auto& a = out.truth.tracks[i];
        const auto& b = back.truth.tracks[i];
        EXPECT_EQ(a.label, b.label);
        EXPECT_EQ(a.birth_frame, b.birth_frame);
        EXPECT_EQ(a.death_frame, b.death_frame);
        EXPECT_EQ(a.models, b.models);
        ASSERT_EQ(a.states.size(), b.states.size());
        for (std::size_t k = 0; k < a.states.size(); ++k) EXPECT_TRUE(same_vector(a.states[k], b.states[k]));
    }
    const auto det = parse_detections(format_detections(out.measurement_sets()));
    const auto orig = out.measurement_sets();
    ASSERT_EQ(det.size(), orig.size());
    for (std::size_t k = 0; k < det.size(); ++k) {
        ASSERT_EQ(det[k].size(), orig[k].size());
        for (std::size_t i = 0; i < det[k].size(); ++i) EXPECT_TRUE(same_vector(det[k][i], orig[k][i]));
    }
}

TEST(Truth, GapInLabelRejected) {
    EXPECT_THROW((void)parse_truth("frame,label,x,y,vx,vy,model\n1,5,0,0,0,0,0\n3,5,0,0,0,0,0\n"), IoError);
}

TEST(Tracks, RoundTrip) {
    std::vector<FrameEstimate> est(3);
    Vector x(4);
    x << 1.5, 2.25, -0.125, 0.0625;
    est[0].tracks.push_back({7, x, 1});
    est[2].tracks.push_back({9, x * 3.0, 0});
    est[2].tracks.push_back({7, x, 1});
    const auto back = parse_tracks(format_tracks(est));
    ASSERT_EQ(back.size(), 3u);
    EXPECT_EQ(back[0].frame, 1u);
    EXPECT_TRUE(back[1].tracks.empty());
    ASSERT_EQ(back[2].tracks.size(), 2u);
    EXPECT_EQ(back[2].tracks[0].tag, 9u);
    EXPECT_EQ(back[2].tracks[1].model, 1u);
    EXPECT_TRUE(same_vector(back[2].tracks[0].state, x * 3.0));
}

TEST(Rates, TruthColumnsOptional) {
    std::vector<FrameEstimate> est(2);
    est[0].lambda_hat = 10.5;
    est[0].p_d_hat = 0.875;
    EXPECT_EQ(format_rates(est), "frame,lambda_hat,p_d_hat,lambda_true,p_d_true\n1,10.5,0.875,,\n2,0,0,,\n");
    EXPECT_EQ(format_rates(est, {20, 20}, {0.9, 0.9}),
              "frame,lambda_hat,p_d_hat,lambda_true,p_d_true\n1,10.5,0.875,20,0.9\n2,0,0,20,0.9\n");
}

TEST(Metrics, FileLayout) {
    metrics::OspaTResult t;
    t.per_frame = {{1, 0.5, 0.5}, {3, 2, 1}};
    t.average = {2, 1.25, 0.75};
    const auto text = format_metrics({{1, 0.5, 0.5}, {2, 1, 1}}, t);
    EXPECT_EQ(text,
              "frame,ospa,location,cardinality,ospa_t,ospa_t_location,ospa_t_cardinality\n"
              "1,1,0.5,0.5,1,0.5,0.5\n2,2,1,1,3,2,1\nmean,1.5,0.75,0.75,2,1.25,0.75\n");
}

TEST(Config, PresetByName) {
    const auto cfg = parse_config(R"({"schema_version": 1, "scenario": "step-clutter"})");
    EXPECT_EQ(cfg.scenario_name, "step-clutter");
    EXPECT_EQ(cfg.scenario.clutter.at(30, 60), 80.0);
    EXPECT_EQ(cfg.variants.size(), 1u);
    EXPECT_EQ(cfg.ell_or_c(), 10.0);
    EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, InlineScenarioAndSchedules) {
    const auto cfg = parse_config(R"({
        "schema_version": 1,
        "scenario": {"preset": "low-clutter", "frames": 30, "clutter": {"step": [5, 50, 10]},
                     "detection": {"piecewise": [[1, 0.9], [30, 0.6]]}, "region": [0, 100, 0, 50],
                     "measurement_sigma": 2},
        "variants": ["mm-cphd", "mm-lambda-cphd"],
        "tracker": {"lambda": 12, "p_d": 0.8, "max_components": 50},
        "estimator": {"target_birth_beta": [9, 1], "k_beta": 1.1},
        "metrics": {"c": 20, "ell": 5}, "runs": 4, "seed": 99})");
    EXPECT_EQ(cfg.scenario.frames, 30u);
    EXPECT_EQ(cfg.scenario.clutter.at(9, 30), 5.0);
    EXPECT_EQ(cfg.scenario.detection.at(30, 30), 0.6);
    EXPECT_EQ(cfg.scenario.region.width(), 100.0);
    EXPECT_EQ(cfg.scenario.measurement.noise(0, 0), 4.0);
    EXPECT_EQ(cfg.variants[0], Variant::mm_cphd);
    EXPECT_EQ(*cfg.tracker.fixed_lambda, 12.0);
    EXPECT_EQ(cfg.tracker.reduction.max_components, 50u);
    EXPECT_EQ(cfg.estimator.target_birth_beta.s, 9.0);
    EXPECT_EQ(cfg.ell_or_c(), 5.0);
    EXPECT_EQ(cfg.runs, 4u);
    EXPECT_EQ(cfg.seed, 99u);
    EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, SchemaErrors) {
    EXPECT_THROW((void)parse_config("{not json"), ConfigError);
    EXPECT_THROW((void)parse_config(R"({"scenario": "step-clutter"})"), ConfigError);
    EXPECT_THROW((void)parse_config(R"({"schema_version": 2})"), ConfigError);
    EXPECT_THROW((void)parse_config(R"({"schema_version": 1, "runz": 3})"), ConfigError);
    EXPECT_THROW((void)parse_config(R"({"schema_version": 1, "scenario": "nope"})"), ConfigError);
    EXPECT_THROW((void)parse_config(R"({"schema_version": 1, "variant": "kalman"})"), ConfigError);
    EXPECT_THROW((void)parse_config(R"({"schema_version": 1, "runs": "many"})"), ConfigError);
    EXPECT_THROW((void)parse_config(R"({"schema_version": 1, "scenario": {"clutter": {"ramp": [1]}}})"), ConfigError);
    EXPECT_THROW((void)parse_config(R"({"schema_version": 1, "scenario": {"region": "big"}})"), ConfigError);
}

TEST(Config, ValueInvariants) {
    EXPECT_THROW(parse_config(R"({"schema_version": 1, "variant": "mm-cphd"})").validate(), ConfigError);
    EXPECT_THROW(parse_config(R"({"schema_version": 1, "runs": 0})").validate(), ConfigError);
    EXPECT_THROW(parse_config(R"({"schema_version": 1, "metrics": {"c": 5, "ell": 6}})").validate(), ConfigError);
    EXPECT_THROW(parse_config(R"({"schema_version": 1, "scenario": {"detection": 1.2}})").validate(), ConfigError);
    EXPECT_NO_THROW(parse_config(R"({"schema_version": 1, "variant": "mm-cphd", "tracker": {"lambda": 0, "p_d": 1}})")
                        .validate());
}

TEST(Config, HashIgnoresFieldOrderAndTracksValues) {
    const auto a = parse_config(R"({"schema_version": 1, "runs": 3, "seed": 5, "scenario": "ramp-clutter"})");
    const auto b = parse_config(R"({"scenario": "ramp-clutter", "seed": 5, "schema_version": 1, "runs": 3})");
    const auto c = parse_config(R"({"schema_version": 1, "runs": 3, "seed": 6, "scenario": "ramp-clutter"})");
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_NE(config_hash(a), config_hash(c));
    EXPECT_EQ(config_hash(a).size(), 16u);
    // the canonical form is itself a valid config describing the same experiment
    EXPECT_EQ(config_hash(parse_config(canonical_json(a).dump())), config_hash(a));
}
