#include "teleskill/classic_dmp.hpp"
#include "teleskill/dmp_oracle.hpp"
#include "teleskill/synthetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace teleskill;
using namespace teleskill::classic;

namespace {

// x'' = K (g - x) - D x' from rest at x0, tau = 1
struct StepResponse {
    double l1;
    double l2;
    StepResponse(double k, double d) {
        const double disc = std::sqrt(d * d - 4.0 * k);
        l1 = (-d + disc) / 2.0;
        l2 = (-d - disc) / 2.0;
    }
    // remaining fraction of the initial offset
    double e(double t) const { return (l2 * std::exp(l1 * t) - l1 * std::exp(l2 * t)) / (l2 - l1); }
    double ed(double t) const { return l1 * l2 * (std::exp(l1 * t) - std::exp(l2 * t)) / (l2 - l1); }
    double edd(double t) const {
        return l1 * l2 * (l1 * std::exp(l1 * t) - l2 * std::exp(l2 * t)) / (l2 - l1);
    }
};

struct Samples {
    std::vector<double> x, xd, xdd;
};

Samples minimum_jerk_samples(double rate) {
    Samples s;
    const int n = static_cast<int>(rate);
    for (int k = 0; k <= n; ++k) {
        const double u = static_cast<double>(k) / n;
        s.x.push_back(synthetic::minimum_jerk(u));
        s.xd.push_back(synthetic::minimum_jerk_velocity(u));
        s.xdd.push_back(synthetic::minimum_jerk_acceleration(u));
    }
    return s;
}

}  // namespace

TEST(Phase, Examples) {
    EXPECT_EQ(phase(0.0, 1.0, 4.0), 1.0);
    EXPECT_NEAR(phase(0.5, 2.0, 4.0), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(phase(0.25, 1.0, 4.0), 0.36787944117144233, 1e-15);
    double prev = 2.0;
    for (int k = 0; k <= 100; ++k) {
        const double s = phase(0.05 * k, 1.0, 4.0);
        EXPECT_LT(s, prev);
        prev = s;
    }
}

TEST(Forcing, ZeroWeights) {
    const ClassicDmp dmp = ClassicDmp::with_uniform_basis(DmpParameters{}, 10, 0.02);
    for (double s : {0.02, 0.3, 1.0}) EXPECT_EQ(dmp.forcing(s), 0.0);
}

TEST(Forcing, SingleBasisAtCenter) {
    const ClassicDmp dmp(DmpParameters{}, {0.4}, {50.0}, {2.0});
    EXPECT_NEAR(dmp.forcing(0.4), 0.8, 1e-15);
    // with one basis the normalized activation is 1 everywhere
    EXPECT_NEAR(dmp.forcing(0.9), 1.8, 1e-15);
}

TEST(Forcing, EqualWeightsGiveWeightedMean) {
    const ClassicDmp dmp(DmpParameters{}, {0.1, 0.5, 0.9}, {10.0, 20.0, 30.0}, {1.5, 1.5, 1.5});
    for (double s : {0.05, 0.33, 0.77, 1.0}) EXPECT_NEAR(dmp.forcing(s), 1.5 * s, 1e-14);
}

TEST(Forcing, UnderflowThrows) {
    const ClassicDmp dmp(DmpParameters{}, {0.0}, {1e6}, {1.0});
    EXPECT_THROW(dmp.forcing(1.0), UnderflowError);
}

TEST(ClassicDmp, ConstructorValidation) {
    EXPECT_THROW(ClassicDmp(DmpParameters{}, {}, {}, {}), Error);
    EXPECT_THROW(ClassicDmp(DmpParameters{}, {0.5}, {0.0}, {1.0}), Error);
    DmpParameters p;
    p.tau = 0.0;
    EXPECT_THROW(ClassicDmp(p, {0.5}, {1.0}, {1.0}), Error);
}

TEST(UniformBasis, CentersAndWidths) {
    const ClassicDmp dmp = ClassicDmp::with_uniform_basis(DmpParameters{}, 5, 0.2);
    ASSERT_EQ(dmp.centers().size(), 5u);
    EXPECT_NEAR(dmp.centers().front(), 0.2, 1e-15);
    EXPECT_NEAR(dmp.centers().back(), 1.0, 1e-15);
    for (double h : dmp.widths()) EXPECT_NEAR(h, 1.0 / (2.0 * 0.2 * 0.2), 1e-12);
}

TEST(Fit, UnforcedResponseGivesZeroForcing) {
    const DmpParameters p;
    const StepResponse r(p.stiffness, p.damping);
    const double x0 = 0.2;
    const double g = 1.4;
    Samples s;
    const double dt = 0.001;
    for (int k = 0; k <= 2000; ++k) {
        const double t = k * dt;
        s.x.push_back(g - (g - x0) * r.e(t));
        s.xd.push_back(-(g - x0) * r.ed(t));
        s.xdd.push_back(-(g - x0) * r.edd(t));
    }
    const ClassicDmp dmp = ClassicDmp::fit(s.x, s.xd, s.xdd, dt, p, 50, g);
    double worst = 0.0;
    for (int k = 0; k <= 2000; ++k) worst = std::max(worst, std::abs(dmp.forcing(phase(k * dt, 1.0, p.alpha))));
    EXPECT_LT(worst, 1e-3 * p.stiffness * std::abs(g - x0));
}

TEST(Fit, TargetSamplesInvertTransformationSystem) {
    const DmpParameters p;
    const std::vector<double> x = {0.0, 0.1};
    const std::vector<double> xd = {0.0, 0.5};
    const std::vector<double> xdd = {2.0, -1.0};
    const std::vector<double> f = ClassicDmp::target_samples(x, xd, xdd, 0.0, 2.0, p);
    EXPECT_NEAR(f[0], (-0.55 * 2.0 + 2.0) / 2.0, 1e-15);
    EXPECT_NEAR(f[1], (-0.55 * 1.9 + 3.5 * 0.5 - 1.0) / 2.0, 1e-15);
}

TEST(Fit, MinimumJerkRollout) {
    const Samples s = minimum_jerk_samples(1000.0);
    const double dt = 0.001;
    const ClassicDmp dmp = ClassicDmp::fit(s.x, s.xd, s.xdd, dt, DmpParameters{}, 100);
    EXPECT_TRUE(dmp.notice().empty());
    EXPECT_EQ(dmp.start(), 0.0);
    EXPECT_EQ(dmp.goal(), 1.0);
    const std::vector<double> roll = dmp.rollout(0.0, 1.0, 1.0, dt, 1000);
    double se = 0.0;
    for (std::size_t k = 0; k < roll.size(); ++k) se += (roll[k] - s.x[k]) * (roll[k] - s.x[k]);
    const double nrmse = std::sqrt(se / static_cast<double>(roll.size()));   // range is 1
    EXPECT_LE(nrmse, 0.02);
}

TEST(Fit, DegenerateGoalThrows) {
    const std::vector<double> c(20, 0.3);
    const std::vector<double> z(20, 0.0);
    EXPECT_THROW(ClassicDmp::fit(c, z, z, 0.01, DmpParameters{}, 5), DegenerateScalingError);
}

TEST(Fit, StationaryTrajectoryWithDistinctGoal) {
    // xd = xdd = 0 leaves f = -K everywhere
    const std::vector<double> c(200, 0.3);
    const std::vector<double> z(200, 0.0);
    for (double f : ClassicDmp::target_samples(c, z, z, 0.3, 1.0, DmpParameters{})) EXPECT_NEAR(f, -0.55, 1e-15);
    const ClassicDmp dmp = ClassicDmp::fit(c, z, z, 0.01, DmpParameters{}, 10, 1.0);
    for (double w : dmp.weights()) EXPECT_TRUE(std::isfinite(w));
}

TEST(Fit, RankDeficientDesignUsesRidge) {
    const Samples s = minimum_jerk_samples(10.0);   // 11 samples, 40 bases
    const ClassicDmp dmp = ClassicDmp::fit(s.x, s.xd, s.xdd, 0.1, DmpParameters{}, 40);
    EXPECT_FALSE(dmp.notice().empty());
    for (double w : dmp.weights()) EXPECT_TRUE(std::isfinite(w));
}

TEST(Rollout, ConstantAtGoalWithoutForcing) {
    const ClassicDmp dmp = ClassicDmp::with_uniform_basis(DmpParameters{}, 10, 0.02);
    for (double x : dmp.rollout(0.7, 0.7, 1.0, 0.01, 500)) EXPECT_EQ(x, 0.7);
}

TEST(Rollout, StepResponseMatchesClosedForm) {
    const DmpParameters p;
    const StepResponse r(p.stiffness, p.damping);
    const ClassicDmp dmp = ClassicDmp::with_uniform_basis(p, 10, 0.02);
    const double dt = 1e-3;
    const std::vector<double> x = dmp.rollout(0.0, 1.0, 1.0, dt, 20000);
    double worst = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) worst = std::max(worst, std::abs(x[k] - (1.0 - r.e(k * dt))));
    EXPECT_LT(worst, 1e-3);
}

TEST(Rollout, DoubledTauStretchesTime) {
    const Samples s = minimum_jerk_samples(1000.0);
    const double dt = 0.001;
    const ClassicDmp dmp = ClassicDmp::fit(s.x, s.xd, s.xdd, dt, DmpParameters{}, 100);
    const std::vector<double> a = dmp.rollout(0.0, 1.5, 1.0, dt, 3000);
    const std::vector<double> b = dmp.rollout(0.0, 1.5, 2.0, dt, 6000);
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(b[2 * k] - a[k]));
    EXPECT_LT(worst, 1e-3);
}

TEST(Rollout, GoalScalingIsLinear) {
    // from x0 = 0 every term of the transformation system scales with g
    const Samples s = minimum_jerk_samples(1000.0);
    const ClassicDmp dmp = ClassicDmp::fit(s.x, s.xd, s.xdd, 0.001, DmpParameters{}, 100);
    const std::vector<double> a = dmp.rollout(0.0, 1.0, 1.0, 0.001, 1500);
    const std::vector<double> b = dmp.rollout(0.0, 2.5, 1.0, 0.001, 1500);
    for (std::size_t k = 1; k < a.size(); ++k) EXPECT_NEAR(b[k], 2.5 * a[k], 1e-12 * std::max(1.0, std::abs(b[k])));
}

TEST(Rollout, ConvergesToGoal) {
    const DmpParameters p;
    const Samples s = minimum_jerk_samples(1000.0);
    const ClassicDmp dmp = ClassicDmp::fit(s.x, s.xd, s.xdd, 0.001, p, 100);
    const double dt = 0.001;
    const int steps = static_cast<int>(5.0 * p.damping / p.stiffness / dt);
    const std::vector<double> x = dmp.rollout(0.0, 1.5, 1.0, dt, steps);
    EXPECT_LT(std::abs(x.back() - 1.5), 0.01 * 1.5);
}

TEST(Rollout, DivergenceThrows) {
    const ClassicDmp dmp(DmpParameters{}, {0.5}, {1.0}, {1e308});
    EXPECT_THROW(dmp.rollout(0.0, 10.0, 1.0, 0.01, 10), DivergenceError);
    EXPECT_THROW(dmp.rollout(0.0, 1.0, 1.0, 0.0, 10), Error);
}

TEST(Oracle, ClassicAndSimplifiedAgree) {
    const OracleResult r = run_minimum_jerk_oracle(OracleSpec{});
    EXPECT_TRUE(r.notice.empty());
    EXPECT_EQ(r.classic.size(), r.simplified.size());
    EXPECT_EQ(r.classic.size(), 1001u);
    EXPECT_LE(r.endpoint_difference, 1e-3);
    EXPECT_LE(r.nrmse, 0.03);
}
