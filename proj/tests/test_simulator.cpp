#include <cstring>
#include <vector>

#include <gtest/gtest.h>

#include "rfs/simulator.hpp"

using namespace rfs;
using namespace rfs::sim;

TEST(Schedule, Kinds) {
    EXPECT_EQ(Schedule::constant(3.0).at(7, 10), 3.0);
    const auto st = Schedule::step(20, 80, 30);
    EXPECT_EQ(st.at(29, 60), 20.0);
    EXPECT_EQ(st.at(30, 60), 80.0);
    const auto r = Schedule::ramp(10, 100);
    EXPECT_EQ(r.at(1, 10), 10.0);
    EXPECT_EQ(r.at(10, 10), 100.0);
    const auto pw = Schedule::piecewise({{1, 0.0}, {11, 1.0}});
    EXPECT_NEAR(pw.at(6, 20), 0.5, 1e-15);
    EXPECT_EQ(pw.at(15, 20), 1.0);
}

TEST(Simulate, PerfectSensorSeesExactlyTheTargets) {
    ScenarioConfig cfg;
    cfg.detection = Schedule::constant(1.0);
    cfg.clutter = Schedule::constant(0.0);
    cfg.measurement.noise = Matrix::Zero(2, 2);
    cfg.seed = 3;
    const auto out = simulate(cfg);
    const auto truth = truth_by_frame(out.truth, cfg.frames);
    for (std::size_t k = 0; k < cfg.frames; ++k) {
        const auto& z = out.detections[k].measurements;
        ASSERT_EQ(z.size(), truth[k].size()) << "frame " << k + 1;
        for (const auto& [label, x] : truth[k]) {
            bool found = false;
            for (const auto& m : z) found = found || (m(0) == x(0) && m(1) == x(1));
            EXPECT_TRUE(found);
        }
    }
}

TEST(Simulate, PoissonClutterMean) {
    ScenarioConfig cfg;
    cfg.frames = 1000;
    cfg.initial_targets = 0;
    cfg.birth_rate = 0.0;
    cfg.clutter = Schedule::constant(20.0);
    cfg.seed = 11;
    const auto out = simulate(cfg);
    double total = 0.0;
    for (const auto& f : out.detections) total += static_cast<double>(f.measurements.size());
    EXPECT_NEAR(total / 1000.0, 20.0, 1.5);
}

TEST(Simulate, SeededDeterminism) {
    auto cfg = preset_scenario("step-clutter");
    cfg.seed = 7;
    const auto a = simulate(cfg);
    const auto b = simulate(cfg);
    ASSERT_EQ(a.detections.size(), b.detections.size());
    for (std::size_t k = 0; k < a.detections.size(); ++k) {
        const auto& za = a.detections[k].measurements;
        const auto& zb = b.detections[k].measurements;
        ASSERT_EQ(za.size(), zb.size());
        for (std::size_t i = 0; i < za.size(); ++i) EXPECT_EQ(std::memcmp(za[i].data(), zb[i].data(), 2 * sizeof(double)), 0);
    }
    ASSERT_EQ(a.truth.tracks.size(), b.truth.tracks.size());
    cfg.seed = 8;
    const auto c = simulate(cfg);
    EXPECT_NE(a.detections[0].measurements.size() + a.truth.tracks.size(),
              c.detections[0].measurements.size() + c.truth.tracks.size() + 1000);
    bool differs = c.detections[0].measurements.size() != a.detections[0].measurements.size();
    if (!differs) differs = c.detections[0].measurements[0](0) != a.detections[0].measurements[0](0);
    EXPECT_TRUE(differs);
}

TEST(Simulate, InvalidConfigRejected) {
    ScenarioConfig cfg;
    cfg.detection = Schedule::constant(1.5);
    EXPECT_THROW((void)simulate(cfg), std::invalid_argument);
    cfg = ScenarioConfig{};
    cfg.frames = 0;
    EXPECT_FALSE(cfg.violations().empty());
}

TEST(Presets, ReferenceAverages) {
    const auto high = preset_scenario("high-clutter");
    EXPECT_NEAR(high.clutter.time_average(high.frames), 112.0, 1.0);
    EXPECT_NEAR(high.detection.time_average(high.frames), 0.88, 0.01);
    const auto low = preset_scenario("low-clutter");
    EXPECT_NEAR(low.detection.time_average(low.frames), 0.7, 0.01);
    EXPECT_NEAR(low.clutter.time_average(low.frames), 11.0, 1.0);
    for (const auto& [name, cfg] : preset_scenarios()) {
        EXPECT_EQ(cfg.region.width(), 230.0) << name;
        EXPECT_EQ(cfg.region.height(), 230.0) << name;
        EXPECT_EQ(cfg.frames, 60u) << name;
    }
    EXPECT_THROW((void)preset_scenario("nope"), std::invalid_argument);
}

TEST(Simulate, EmpiricalRatesMatchSchedules) {
    const auto base = preset_scenario("low-clutter");
    double detected = 0.0, opportunities = 0.0, clutter = 0.0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        auto cfg = base;
        cfg.seed = seed;
        cfg.measurement.noise = Matrix::Zero(2, 2);  // detections land exactly on their target
        const auto out = simulate(cfg);
        const auto truth = truth_by_frame(out.truth, cfg.frames);
        for (std::size_t k = 0; k < cfg.frames; ++k) {
            const auto& z = out.detections[k].measurements;
            std::size_t hits = 0;
            for (const auto& [label, x] : truth[k]) {
                for (const auto& m : z) {
                    if (m(0) == x(0) && m(1) == x(1)) {
                        ++hits;
                        break;
                    }
                }
            }
            detected += static_cast<double>(hits);
            opportunities += static_cast<double>(truth[k].size());
            clutter += static_cast<double>(z.size() - hits);
        }
    }
    // Per live target-frame; the schedule average weights frames equally, so
    // compare against the target-weighted expectation as well.
    EXPECT_NEAR(detected / opportunities, base.detection.time_average(base.frames), 0.02);
    const double clutter_mean = clutter / (50.0 * static_cast<double>(base.frames));
    const double want = base.clutter.time_average(base.frames);
    EXPECT_NEAR(clutter_mean, want, 0.05 * want);
}

TEST(Simulate, EverythingStaysInsideRegion) {
    for (const std::string name : {"high-clutter", "ramp-clutter"}) {
        auto cfg = preset_scenario(name);
        cfg.seed = 21;
        const auto out = simulate(cfg);
        for (const auto& t : out.truth.tracks) {
            EXPECT_EQ(t.states.size(), t.death_frame - t.birth_frame + 1);
            for (const auto& x : t.states) EXPECT_TRUE(cfg.region.contains(x(0), x(1)));
        }
        for (const auto& f : out.detections)
            for (const auto& z : f.measurements) EXPECT_TRUE(cfg.region.contains(z));
    }
}

TEST(Simulate, LabelsUnique) {
    const auto out = simulate(preset_scenario("step-clutter"));
    std::vector<std::uint64_t> labels;
    for (const auto& t : out.truth.tracks) labels.push_back(t.label);
    std::sort(labels.begin(), labels.end());
    EXPECT_EQ(std::adjacent_find(labels.begin(), labels.end()), labels.end());
}
