#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "rfs/lambda_cphd.hpp"
#include "rfs/simulator.hpp"

using namespace rfs;
using namespace rfs::lambda_cphd;

namespace {

SystemModel plain_system() {
    SystemModel sys;
    sys.motion = default_model_set();
    sys.measurement = default_measurement_model(1.0);
    sys.clutter.region = {0, 100, 0, 100};
    sys.birth.cardinality = CardinalityDistribution::delta(0, 10);
    sys.rates.p_survival = 1.0;
    return sys;
}

EstimatorConfig no_birth_config() {
    EstimatorConfig cfg;
    cfg.clutter_birth_components = 0;
    cfg.clutter_birth_rate = 0.0;
    cfg.clutter_survival = 1.0;
    cfg.max_cardinality = 30;
    return cfg;
}

BetaGaussianComponent target(double w, BetaDensity b, double x, double y, Tag tag, std::size_t model = 0) {
    GaussianDensity g{Vector::Zero(4), Matrix::Identity(4, 4)};
    g.mean(0) = x;
    g.mean(1) = y;
    return {w, b, g, model, tag};
}

Vector point(double x, double y) {
    Vector z(2);
    z << x, y;
    return z;
}

} // namespace

TEST(BetaDilate, UnitFactorIsIdentity) {
    const BetaDensity b = beta_dilate({9.0, 1.0}, 1.0);
    EXPECT_EQ(b.s, 9.0);
    EXPECT_EQ(b.t, 1.0);
}

TEST(BetaDilate, PreservesMean) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> p(0.2, 40.0), k(1.0, 5.0);
    for (int i = 0; i < 1000; ++i) {
        const BetaDensity b{p(rng), p(rng)};
        EXPECT_NEAR(beta_mean(beta_dilate(b, k(rng))), beta_mean(b), 1e-12);
    }
}

TEST(BetaDilate, DoublesVariance) {
    const BetaDensity b{9.0, 1.0};
    const double before = 9.0 / (100.0 * 11.0);  // st / ((s+t)^2 (s+t+1))
    EXPECT_NEAR(beta_variance(beta_dilate(b, 2.0)), 2.0 * before, 1e-9);
}

TEST(BetaDilate, FloorKeepsParametersAboveMinimum) {
    const BetaDensity b = beta_dilate({0.5, 0.2}, 50.0);
    EXPECT_GE(b.s, kMinBetaParameter - 1e-15);
    EXPECT_GE(b.t, kMinBetaParameter - 1e-15);
    EXPECT_NEAR(beta_mean(b), 0.5 / 0.7, 1e-12);
}

TEST(PredictHybrid, NoBirthsFullSurvivalKeepsCardinality) {
    const auto sys = plain_system();
    auto cfg = no_birth_config();
    HybridState s = initial_state(cfg);
    s.target_components = {target(1.5, {9, 1}, 10, 10, 1)};
    s.clutter_components = {{2.5, {2, 3}}};
    std::vector<double> rho(31, 0.0);
    rho[3] = 0.3;
    rho[4] = 0.5;
    rho[5] = 0.2;
    s.hybrid_cardinality = CardinalityDistribution(rho);
    const auto out = predict_hybrid(s, sys, cfg);
    for (std::size_t n = 0; n <= 30; ++n) EXPECT_NEAR(out.hybrid_cardinality[n], rho[n], 1e-15);
    EXPECT_EQ(out.frame, 1u);
}

TEST(PredictHybrid, ClutterBirthOnly) {
    const auto sys = plain_system();
    EstimatorConfig cfg;
    cfg.clutter_birth_components = 1;
    cfg.clutter_birth_rate = 3.0;
    cfg.clutter_birth_beta = {2.0, 5.0};
    cfg.clutter_survival = 0.0;
    HybridState s = initial_state(cfg);
    s.clutter_components = {{4.0, {1, 1}}};
    const auto out = predict_hybrid(s, sys, cfg);
    ASSERT_EQ(out.clutter_components.size(), 1u);
    EXPECT_EQ(out.clutter_components[0].weight, 3.0);
    EXPECT_EQ(out.clutter_components[0].beta.s, 2.0);
    EXPECT_EQ(out.clutter_components[0].beta.t, 5.0);
    EXPECT_TRUE(out.target_components.empty());
}

TEST(PredictHybrid, TargetsSpawnPerModelWithDilatedBeta) {
    const auto sys = plain_system();
    auto cfg = no_birth_config();
    cfg.k_beta = 2.0;
    HybridState s = initial_state(cfg);
    s.target_components = {target(1.0, {9, 1}, 10, 10, 5, 1)};
    const auto out = predict_hybrid(s, sys, cfg);
    ASSERT_EQ(out.target_components.size(), 2u);
    EXPECT_NEAR(out.target_components[0].weight, 0.1, 1e-15);
    EXPECT_NEAR(out.target_components[1].weight, 0.9, 1e-15);
    EXPECT_NEAR(beta_variance(out.target_components[0].beta), 2.0 * beta_variance({9, 1}), 1e-9);
    EXPECT_EQ(out.target_components[0].tag, 5u);
}

TEST(UpdateHybrid, EmptyScanThinsByPhi) {
    const auto sys = plain_system();
    auto cfg = no_birth_config();
    HybridState s = initial_state(cfg);
    s.target_components = {target(1.0, {9, 1}, 10, 10, 1)};
    s.clutter_components = {{3.0, {1, 1}}};
    std::vector<double> rho(31, 0.0);
    rho[2] = 0.2;
    rho[4] = 0.5;
    rho[6] = 0.3;
    s.hybrid_cardinality = CardinalityDistribution(rho);
    const double phi = 1.0 - (0.9 + 1.5) / 4.0;
    const auto out = update_hybrid(s, std::vector<Vector>{}, sys, cfg);
    double norm = 0.0;
    for (std::size_t n = 0; n <= 30; ++n) norm += std::pow(phi, static_cast<double>(n)) * rho[n];
    for (std::size_t n = 0; n <= 30; ++n) {
        EXPECT_NEAR(out.hybrid_cardinality[n], std::pow(phi, static_cast<double>(n)) * rho[n] / norm, 1e-12);
    }
    for (const auto& c : out.target_components) {
        EXPECT_EQ(c.beta.s, 9.0);
        EXPECT_EQ(c.beta.t, 2.0);
    }
    for (const auto& c : out.clutter_components) {
        EXPECT_EQ(c.beta.s, 1.0);
        EXPECT_EQ(c.beta.t, 2.0);
    }
}

TEST(UpdateHybrid, ClutterOnlyDetectionsHandEvaluated) {
    const auto sys = plain_system();
    auto cfg = no_birth_config();
    HybridState s = initial_state(cfg);
    s.clutter_components = {{10.0, {1, 1}}};
    s.hybrid_cardinality = CardinalityDistribution::poisson(10.0, 30);
    double last = -1.0;
    for (std::size_t m : {0u, 2u, 5u}) {
        std::vector<Vector> z;
        for (std::size_t i = 0; i < m; ++i) z.push_back(point(10.0 + 10.0 * static_cast<double>(i), 50));
        const auto out = update_hybrid(s, z, sys, cfg);
        // One generator, uniform K: detection term collapses to exactly m.
        double det = 0.0;
        for (const auto& c : out.clutter_components)
            if (c.beta.s == 2.0) det = c.weight;
        EXPECT_NEAR(det, static_cast<double>(m), 1e-9);
        const double lambda_hat = estimate_rates(out).lambda_hat;
        EXPECT_GT(lambda_hat, last);
        last = lambda_hat;
    }
}

TEST(UpdateHybrid, CertainDetectionCollapsesOntoScanSize) {
    const auto sys = plain_system();
    auto cfg = no_birth_config();
    HybridState s = initial_state(cfg);
    s.clutter_components = {{4.0, {1.0, 1e-300}}};
    s.hybrid_cardinality = CardinalityDistribution::poisson(4.0, 30);
    const std::vector<Vector> z{point(1, 1), point(2, 2), point(3, 3)};
    const auto out = update_hybrid(s, z, sys, cfg);
    EXPECT_NEAR(out.hybrid_cardinality[3], 1.0, 1e-12);
}

TEST(UpdateHybrid, NoMassBelowScanSize) {
    const auto sys = plain_system();
    EstimatorConfig cfg;
    cfg.max_cardinality = 60;
    HybridState s = initial_state(cfg);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::poisson_distribution<int> count(12.0);
    for (int k = 0; k < 40; ++k) {
        std::vector<Vector> z;
        for (int i = count(rng); i > 0; --i) z.push_back(point(u(rng), u(rng)));
        const auto pred = predict_hybrid(s, sys, cfg);
        EXPECT_NEAR(pred.hybrid_cardinality.sum(), 1.0, 1e-9);
        const auto upd = update_hybrid(pred, z, sys, cfg);
        EXPECT_NEAR(upd.hybrid_cardinality.sum(), 1.0, 1e-9);
        for (std::size_t n = 0; n < z.size(); ++n) EXPECT_EQ(upd.hybrid_cardinality[n], 0.0);
        s = reduce_hybrid(upd, cfg);
    }
}

TEST(UpdateHybrid, ScanLargerThanSupportIsAnError) {
    const auto sys = plain_system();
    auto cfg = no_birth_config();
    cfg.max_cardinality = 5;
    HybridState s = initial_state(cfg);
    s.frame = 7;
    s.clutter_components = {{5.0, {1, 1}}};
    s.hybrid_cardinality = CardinalityDistribution::poisson(5.0, 5);
    std::vector<Vector> z;
    for (int i = 0; i < 9; ++i) z.push_back(point(5.0 + i, 5.0));
    Diagnostics diag;
    try {
        (void)update_hybrid(s, z, sys, cfg, &diag);
        FAIL() << "expected FilterError";
    } catch (const FilterError& e) {
        EXPECT_EQ(e.frame(), 7u);
    }
    EXPECT_FALSE(diag.messages.empty());
}

TEST(UpdateHybrid, BetaParametersStayAboveFloor) {
    const auto sys = plain_system();
    EstimatorConfig cfg;
    cfg.k_beta = 3.0;
    cfg.max_cardinality = 80;
    HybridState s = initial_state(cfg);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::poisson_distribution<int> count(6.0);
    for (int k = 0; k < 40; ++k) {
        std::vector<Vector> z;
        for (int i = count(rng); i > 0; --i) z.push_back(point(u(rng), u(rng)));
        s = reduce_hybrid(update_hybrid(predict_hybrid(s, sys, cfg), z, sys, cfg), cfg);
        for (const auto& c : s.clutter_components) {
            EXPECT_GE(c.beta.s, kMinBetaParameter - 1e-12);
            EXPECT_GE(c.beta.t, kMinBetaParameter - 1e-12);
        }
        for (const auto& c : s.target_components) {
            EXPECT_GE(c.beta.s, kMinBetaParameter - 1e-12);
            EXPECT_GE(c.beta.t, kMinBetaParameter - 1e-12);
        }
    }
}

TEST(EstimateRates, HandExamples) {
    HybridState s;
    s.clutter_components = {{5.0, {4, 1}}};
    EXPECT_NEAR(estimate_rates(s).lambda_hat, 4.0, 1e-15);
    s.clutter_components.clear();
    EXPECT_EQ(estimate_rates(s).lambda_hat, 0.0);
    s.target_components = {target(1.0, {9, 1}, 0, 0, 1)};
    EXPECT_NEAR(estimate_rates(s).p_d_hat, 0.9, 1e-15);
}

TEST(EstimateRates, DetectionProbabilityIsNormalized) {
    HybridState s;
    s.target_components = {target(3.0, {9, 1}, 0, 0, 1), target(2.0, {1, 1}, 5, 5, 2)};
    EXPECT_NEAR(estimate_rates(s).p_d_hat, (2.7 + 1.0) / 5.0, 1e-15);
}

TEST(EstimateTargetCount, SumsWeights) {
    HybridState s;
    EXPECT_EQ(estimate_target_count(s), 0.0);
    s.target_components = {target(0.9, {9, 1}, 0, 0, 1), target(0.8, {9, 1}, 10, 0, 2), target(0.3, {9, 1}, 20, 0, 3)};
    EXPECT_NEAR(estimate_target_count(s), 2.0, 1e-15);
    EXPECT_EQ(extract_tracks(s).size(), 2u);
}

TEST(ReduceHybrid, IdenticalTermsMerge) {
    EstimatorConfig cfg;
    HybridState s;
    s.target_components = {target(0.5, {3, 2}, 10, 10, 1), target(0.5, {3, 2}, 10, 10, 2)};
    s.clutter_components = {{1.0, {2, 2}}, {1.0, {2, 2}}};
    const auto out = reduce_hybrid(s, cfg);
    ASSERT_EQ(out.target_components.size(), 1u);
    EXPECT_NEAR(out.target_components[0].weight, 1.0, 1e-15);
    EXPECT_NEAR(out.target_components[0].beta.s, 3.0, 1e-9);
    EXPECT_NEAR(out.target_components[0].beta.t, 2.0, 1e-9);
    ASSERT_EQ(out.clutter_components.size(), 1u);
    EXPECT_NEAR(out.clutter_components[0].weight, 2.0, 1e-15);
    EXPECT_NEAR(out.clutter_components[0].beta.s, 2.0, 1e-9);
    EXPECT_NEAR(out.clutter_components[0].beta.t, 2.0, 1e-9);
}

TEST(ReduceHybrid, PrunesLightTerms) {
    EstimatorConfig cfg;
    HybridState s;
    s.target_components = {target(1e-9, {3, 2}, 10, 10, 1), target(0.7, {3, 2}, 60, 60, 2)};
    const auto out = reduce_hybrid(s, cfg);
    ASSERT_EQ(out.target_components.size(), 1u);
    EXPECT_EQ(out.target_components[0].tag, 2u);
}

TEST(LambdaEstimator, ClutterOnlyStreamHasFewTargets) {
    // Mean over seeds: single frames fluctuate with the clutter-born birth terms.
    double mean = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        sim::ScenarioConfig sc;
        sc.initial_targets = 0;
        sc.birth_rate = 0.0;
        sc.clutter = sim::Schedule::constant(20.0);
        sc.frames = 50;
        sc.seed = seed;
        const auto out = sim::simulate(sc);
        LambdaCphdEstimator est(sim::filter_system(sc, 0.5, 40), EstimatorConfig{});
        for (const auto& f : out.detections) est.step(f.measurements);
        mean += estimate_target_count(est.state()) / 10.0;
    }
    EXPECT_LE(mean, 0.5);
}

class LambdaTracking : public ::testing::TestWithParam<double> {};

TEST_P(LambdaTracking, FollowsConstantRates) {
    const double lambda = GetParam();
    sim::ScenarioConfig sc;
    sc.clutter = sim::Schedule::constant(lambda);
    sc.detection = sim::Schedule::constant(0.9);
    sc.seed = 17;
    const auto out = sim::simulate(sc);
    LambdaCphdEstimator est(sim::filter_system(sc, 0.5, 40), EstimatorConfig{});
    double lam = 0.0, pd = 0.0;
    for (std::size_t k = 1; k <= out.detections.size(); ++k) {
        const auto r = est.step(out.detections[k - 1].measurements);
        if (k >= 20) {
            lam += r.lambda_hat / 41.0;
            pd += r.p_d_hat / 41.0;
        }
    }
    EXPECT_NEAR(lam, lambda, 0.2 * lambda);
    EXPECT_NEAR(pd, 0.9, 0.1);
}

INSTANTIATE_TEST_SUITE_P(ConstantClutter, LambdaTracking, ::testing::Values(10.0, 50.0, 100.0));

TEST(LambdaEstimator, DoublingClutterRaisesEstimate) {
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        double avg[2] = {0.0, 0.0};
        for (int j = 0; j < 2; ++j) {
            sim::ScenarioConfig sc;
            sc.frames = 30;
            sc.clutter = sim::Schedule::constant(j == 0 ? 15.0 : 30.0);
            sc.seed = seed;
            const auto out = sim::simulate(sc);
            LambdaCphdEstimator est(sim::filter_system(sc, 0.5, 40), EstimatorConfig{});
            for (std::size_t k = 1; k <= out.detections.size(); ++k) {
                const auto r = est.step(out.detections[k - 1].measurements);
                if (k > 10) avg[j] += r.lambda_hat;
            }
        }
        wins += avg[1] > avg[0];
    }
    EXPECT_EQ(wins, 20);
}
