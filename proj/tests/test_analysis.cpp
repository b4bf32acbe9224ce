#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gcontract/analysis.hpp"

using namespace gcontract;

namespace {

const double e = std::exp(1.0);
const InitialLaw delta0 = InitialLaw::point_mass();
ReservationUtility R(double c) { return {Profile::constant(c)}; }
InteractionFunction constant_graphon(double g) { return builtin("constant", {.value = g}); }

const std::vector<std::size_t> doubling{8, 16, 32, 64, 128, 256, 512};

// Phi^{-1} by Newton on erfc; independent of the library under test.
double normal_quantile(double p)
{
    double x = 0.0;
    for (int it = 0; it < 100; ++it) {
        const double f = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
        const double d = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
        const double step = f / d;
        x -= step;
        if (std::abs(step) < 1e-14) break;
    }
    return x;
}

// W2 between two Gaussians through the quantile coupling on n midpoint quantiles.
double quantile_w2(double m1, double s1, double m2, double s2, std::size_t n)
{
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double z = normal_quantile((k + 0.5) / n);
        const double d = (m1 + s1 * z) - (m2 + s2 * z);
        acc += d * d;
    }
    return std::sqrt(acc / n);
}

std::size_t inversions(const std::vector<double>& x)
{
    std::size_t c = 0;
    for (std::size_t k = 1; k < x.size(); ++k) c += x[k] > x[k - 1];
    return c;
}

// (1 - s) G_a + s G_b
InteractionFunction blend(const InteractionFunction& a, const InteractionFunction& b, double s)
{
    return InteractionFunction([a, b, s](double u, double v) { return (1.0 - s) * a(u, v) + s * b(u, v); },
                               merge_edges(a.edges(), b.edges()), std::nullopt, "blend");
}

} // namespace

TEST(GaussianW2, Examples)
{
    EXPECT_EQ(gaussian_w2({0.5, 1.0}, {0.5, 1.0}), 0.0);
    EXPECT_DOUBLE_EQ(gaussian_w2({0.0, 1.0}, {1.0, 4.0}), std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(gaussian_w2({0.0, 1.0}, {0.0, 4.0}), 1.0);
    EXPECT_THROW(gaussian_w2({0.0, -1.0}, {0.0, 1.0}), std::invalid_argument);
    EXPECT_THROW(gaussian_w2({0.0, 1.0}, {0.0, -1e-3}), std::invalid_argument);
}

TEST(GaussianW2, AgreesWithQuantileCoupling)
{
    // midpoint quantiles truncate the tails: 1e5 points give ~1e-4 accuracy
    EXPECT_NEAR(quantile_w2(0.0, 1.0, 0.0, 2.0, 100000), gaussian_w2({0.0, 1.0}, {0.0, 4.0}), 1e-3);
    EXPECT_NEAR(quantile_w2(0.3, 0.5, -1.0, 1.7, 100000), gaussian_w2({0.3, 0.25}, {-1.0, 1.7 * 1.7}), 1e-3);
}

TEST(GaussianW2, IsAMetricOnMeanAndSigma)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> M(-2.0, 2.0), V(0.0, 3.0);
    for (int k = 0; k < 1000; ++k) {
        ContractLaw a{M(rng), V(rng)}, b{M(rng), V(rng)}, c{M(rng), V(rng)};
        EXPECT_EQ(gaussian_w2(a, a), 0.0);
        EXPECT_EQ(gaussian_w2(a, b), gaussian_w2(b, a));
        EXPECT_GT(gaussian_w2(a, b), 0.0);
        EXPECT_LE(gaussian_w2(a, c), gaussian_w2(a, b) + gaussian_w2(b, c) + 1e-14);
    }
}

TEST(RateReport, FitsPowerLaws)
{
    std::vector<std::size_t> n{2, 4, 8, 16};
    std::vector<double> err;
    for (auto k : n) err.push_back(3.0 / (k * k));
    auto r = make_rate_report(n, err, 1.0);
    ASSERT_TRUE(r.fitted_slope);
    EXPECT_NEAR(*r.fitted_slope, -2.0, 1e-12);
    EXPECT_NEAR(r.constant_estimates[1], 0.75, 1e-15);
    EXPECT_NEAR(*r.constant_spread(), 2.0, 1e-12);  // upper half {8, 16}
    EXPECT_FALSE(r.slope_so_far(2));
    EXPECT_NEAR(*r.slope_so_far(3), -2.0, 1e-12);

    auto s = make_rate_report({4, 16, 64}, {0.5, 0.25, 0.125}, 0.5);
    EXPECT_NEAR(*s.fitted_slope, -0.5, 1e-12);
    EXPECT_NEAR(s.constant_estimates[2], 1.0, 1e-15);
}

TEST(RateReport, DegenerateInputs)
{
    EXPECT_FALSE(make_rate_report({1, 2}, {1.0, 0.5}, 1.0).fitted_slope);
    EXPECT_FALSE(make_rate_report({1, 2, 4}, {1.0, 0.0, 0.5}, 1.0).fitted_slope);
    EXPECT_FALSE(make_rate_report({1, 2, 4}, {0.0, 0.0, 0.0}, 1.0).constant_spread());
}

TEST(EffortConvergence, ZeroGraphon)
{
    auto r = effort_convergence(constant_graphon(0.0), 1.0, {4, 8, 16}, {.time_steps = 32});
    for (double x : r.errors) EXPECT_EQ(x, 0.0);
    EXPECT_FALSE(r.fitted_slope);
}

TEST(EffortConvergence, AlignedStepGraphonCoincides)
{
    auto g = step_graphon({0.25, 0.5, 0.875}, {{1, 0, 2, 0.5}, {0.3, 1, 1, 0}, {2, 0.1, 0, 1}, {0, 0, 3, 1}});
    auto r = effort_convergence(g, 1.0, {8, 16, 32, 64}, {.time_steps = 64});
    for (double x : r.errors) EXPECT_LE(x, 1e-12);
}

TEST(EffortConvergence, LogisticFirstOrder)
{
    auto r = effort_convergence(builtin("logistic", {.theta = 10.0}), 1.0, doubling);
    ASSERT_TRUE(r.fitted_slope);
    EXPECT_GE(*r.fitted_slope, -1.2);
    EXPECT_LE(*r.fitted_slope, -0.8);
    EXPECT_LE(*r.constant_spread(), 2.5);
    EXPECT_LE(inversions(r.errors), 1u);
    // the reference is resolved a decade below the smallest measured error
    EXPECT_LE(r.reference_error, 0.1 * *std::min_element(r.errors.begin(), r.errors.end()));
}

TEST(EffortConvergence, ErrorsAreMonotoneForEveryBuiltin)
{
    for (const char* f : {"sine-distance", "block-product", "block-logistic"}) {
        auto r = effort_convergence(builtin(f), 1.0, {8, 16, 32, 64, 128}, {.time_steps = 64});
        EXPECT_LE(inversions(r.errors), 1u) << f;
    }
}

TEST(EffortConvergence, Preconditions)
{
    auto g = builtin("logistic");
    EXPECT_THROW(effort_convergence(g, 1.0, {8}, {}), std::invalid_argument);
    EXPECT_THROW(effort_convergence(g, 1.0, {16, 8}, {}), std::invalid_argument);
    EXPECT_THROW(effort_convergence(g, 1.0, {8, 16}, {.reference_factor = 2}), std::invalid_argument);
}

TEST(ValueConvergence, ZeroGraphonIsExact)
{
    auto r = value_convergence(constant_graphon(0.0), delta0, R(0.0), 1.0, {4, 8, 16}, 30, 1, {.time_steps = 32});
    for (double x : r.value_mse.errors) EXPECT_LE(x, 1e-16);
    for (double x : r.contract_w2.errors) EXPECT_LE(x, 1e-12);
    EXPECT_NEAR(r.continuum_value, 0.5, 1e-14);
}

TEST(ValueConvergence, LogisticPointMass)
{
    // deterministic initials: the error is the O(1/N^2) quadrature-type
    // discrepancy of the value, so the mean-square error falls like N^-4
    auto r = value_convergence(builtin("logistic"), delta0, R(0.0), 1.0, {16, 32, 64, 128, 256, 512}, 30, 2);
    ASSERT_TRUE(r.value_mse.fitted_slope);
    EXPECT_LE(*r.value_mse.fitted_slope, -0.9);
    ASSERT_TRUE(r.contract_w2.fitted_slope);
    EXPECT_LE(*r.contract_w2.fitted_slope, -0.3);  // at least the C/sqrt(N) shape
}

TEST(ValueConvergence, LogisticGaussianInitials)
{
    auto law = InitialLaw::gaussian(Profile::constant(0.0), Profile::constant(1.0));
    auto r = value_convergence(builtin("logistic"), law, R(0.0), 1.0, {16, 32, 64, 128, 256, 512}, 400, 3);
    ASSERT_TRUE(r.value_mse.fitted_slope);
    EXPECT_GE(*r.value_mse.fitted_slope, -1.3);
    EXPECT_LE(*r.value_mse.fitted_slope, -0.7);
}

TEST(ValueConvergence, SeedsAndThreads)
{
    auto law = InitialLaw::gaussian(Profile::constant(0.0), Profile::constant(1.0));
    auto g = builtin("sine-distance");
    auto a = value_convergence(g, law, R(0.0), 1.0, {4, 8, 16}, 30, 9, {.time_steps = 32});
    auto b = value_convergence(g, law, R(0.0), 1.0, {4, 8, 16}, 30, 9, {.time_steps = 32, .threads = 3});
    auto c = value_convergence(g, law, R(0.0), 1.0, {4, 8, 16}, 30, 10, {.time_steps = 32});
    EXPECT_EQ(a.value_mse.errors, b.value_mse.errors);
    EXPECT_NE(a.value_mse.errors, c.value_mse.errors);
}

TEST(GapConvergence, SignAndInverseSquareDecay)
{
    auto r = gap_convergence(builtin("logistic"), delta0, R(0.0), 1.0, {64, 128, 256, 512}, 0);
    for (double d : r.signed_difference) EXPECT_LE(d, 1e-9);
    for (std::size_t k = 0; k < r.gap.errors.size(); ++k) EXPECT_NEAR(r.gap.errors[k], -r.signed_difference[k], 1e-15);
    ASSERT_TRUE(r.gap.fitted_slope);
    EXPECT_NEAR(*r.gap.fitted_slope, -2.0, 0.1);
}

TEST(StabilityEffort, IdenticalGraphons)
{
    auto g = builtin("logistic");
    auto s = stability_effort(g, g, {.time_steps = 32, .type_cells = 32});
    EXPECT_EQ(s.sup_q, 0.0);
    EXPECT_EQ(s.sup_g, 0.0);
    EXPECT_FALSE(s.ratio);
}

TEST(StabilityEffort, ConstantPerturbation)
{
    // Q = e^{g(T - t)}: the largest difference is at t = 0
    auto s = stability_effort(constant_graphon(1.0), constant_graphon(1.01));
    EXPECT_NEAR(s.sup_q, std::exp(1.01) - e, 1e-8);
    EXPECT_NEAR(s.sup_g, 0.01, 1e-15);
    ASSERT_TRUE(s.ratio);
    EXPECT_NEAR(*s.ratio, 2.7319, 1e-3);
}

TEST(StabilityEffort, ConstantDerivativeLimit)
{
    for (double eps : {0.1, 0.01, 0.001}) {
        auto s = stability_effort(constant_graphon(1.0), constant_graphon(1.0 + eps));
        EXPECT_NEAR(*s.ratio, (std::exp(1.0 + eps) - e) / eps, 1e-6) << eps;
    }
}

TEST(StabilityEffort, LogisticLocallyLipschitz)
{
    auto a = builtin("logistic", {.theta = 10.0});
    auto b = builtin("logistic", {.theta = 10.5});
    std::vector<double> ratios;
    for (double s : {1.0, 0.1, 0.01}) ratios.push_back(*stability_effort(a, blend(a, b, s)).ratio);
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    EXPECT_LE(*hi / *lo, 2.0);
}

TEST(StabilityEffort, UnionPartition)
{
    // blocks {0.3} and {0.6}: both effort fields are solved on the merged grid
    auto a = step_graphon({0.3}, {{1, 0}, {0, 1}});
    auto b = step_graphon({0.6}, {{1, 0}, {0, 1}});
    auto s = stability_effort(a, b, {.time_steps = 64, .type_cells = 60});
    EXPECT_EQ(s.sup_g, 1.0);
    EXPECT_GT(s.sup_q, 0.0);
    EXPECT_LE(s.sup_q, e * e);  // crude a priori bound
}

TEST(StabilityContracts, ConstantPerturbationMatchesClosedForm)
{
    auto law = [](double g) { return ContractLaw{(std::exp(2.0 * g) - 1.0) / (4.0 * g), (std::exp(2.0 * g) - 1.0) / (2.0 * g)}; };
    for (double u : {0.0, 0.4, 1.0}) {
        auto s = stability_contracts(constant_graphon(1.0), constant_graphon(1.01), R(0.0), u);
        EXPECT_NEAR(s.w2, gaussian_w2(law(1.0), law(1.01)), 1e-6);
        EXPECT_NEAR(s.bound_shape, 0.1 + 0.01, 1e-12);
    }
    auto g = builtin("sine-distance");
    EXPECT_EQ(stability_contracts(g, g, R(0.3), 0.2).w2, 0.0);
    EXPECT_THROW(stability_contracts(g, g, R(0.0), -0.5), std::out_of_range);
}

TEST(StabilityContracts, RatioTracksBoundShape)
{
    auto g = builtin("logistic");
    auto big = stability_contracts(g, shifted(g, 0.04), R(0.0), 0.5);
    auto small = stability_contracts(g, shifted(g, 0.01), R(0.0), 0.5);
    EXPECT_LE(big.w2 / small.w2, 2.0 * big.bound_shape / small.bound_shape);
}

TEST(InfluenceMonotonicity, ColumnSeparableExample)
{
    // G(u, v) = G^(v): Q(0, u) = 1 + G^(u) (e^{gbar} - 1)/gbar with gbar = int G^
    auto g = builtin("column-separable", {.profile = Profile::table({0.5}, {0.5, 1.0})});
    auto q = solve_continuum(g, 1.0, 256, 256);
    const double gbar = 0.75, growth = (std::exp(gbar) - 1.0) / gbar;
    EXPECT_NEAR(q.at(0.0, 0.25), 1.0 + 0.5 * growth, 1e-8);
    EXPECT_NEAR(q.at(0.0, 0.75), 1.0 + growth, 1e-8);
    auto c = check_influence_monotonicity(g, 0.25, 0.75, q);
    EXPECT_EQ(c.verdict, InfluenceVerdict::ordered);
    EXPECT_EQ(c.max_violation, 0.0);
    EXPECT_EQ(check_influence_monotonicity(g, 0.75, 0.25, q).verdict, InfluenceVerdict::hypothesis_fails);
}

TEST(InfluenceMonotonicity, SameTypeIsEqual)
{
    for (const char* f : {"sine-distance", "logistic", "block-product", "block-logistic"}) {
        auto g = builtin(f);
        auto q = solve_continuum(g, 1.0, 32, 64);
        EXPECT_EQ(check_influence_monotonicity(g, 0.37, 0.37, q).verdict, InfluenceVerdict::equal) << f;
    }
}

TEST(InfluenceMonotonicity, NegativeInteractionIsReported)
{
    auto g = shifted(builtin("sine-distance"), -0.5);
    auto q = solve_continuum(g, 1.0, 16, 16);
    EXPECT_EQ(check_influence_monotonicity(g, 0.1, 0.9, q).verdict, InfluenceVerdict::negative_interaction);
    EXPECT_FALSE(consistent(InfluenceVerdict::negative_interaction));
    EXPECT_EQ(to_string(InfluenceVerdict::hypothesis_fails), "hypothesis-fails");
    EXPECT_THROW(check_influence_monotonicity(g, 0.1, 1.1, q), std::out_of_range);
}

TEST(InfluenceMonotonicity, ColumnSortedStepGraphons)
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::uniform_int_distribution<int> blocks(1, 6);
    std::size_t violations = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int m = blocks(rng);
        std::vector<double> br;
        while (static_cast<int>(br.size()) < m - 1) {
            double b = std::round(U(rng) * 1000.0) / 1000.0;
            if (b > 0.0 && b < 1.0 && std::find(br.begin(), br.end(), b) == br.end()) br.push_back(b);
        }
        std::sort(br.begin(), br.end());
        std::vector<std::vector<double>> vals(m, std::vector<double>(m));
        for (auto& row : vals) {
            for (auto& x : row) x = 2.0 * U(rng);
            std::sort(row.begin(), row.end());  // columns increase in the influencer's type
        }
        auto g = step_graphon(br, vals);
        auto q = solve_continuum(g, 1.0, 32, 64);
        double u1 = U(rng), u2 = U(rng);
        if (u1 > u2) std::swap(u1, u2);
        auto c = check_influence_monotonicity(g, u1, u2, q);
        EXPECT_TRUE(consistent(c.verdict)) << trial << " " << to_string(c.verdict);
        violations += c.verdict == InfluenceVerdict::violated;
    }
    EXPECT_EQ(violations, 0u);
}
