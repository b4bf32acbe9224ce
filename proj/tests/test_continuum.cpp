#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gcontract/continuum.hpp"

using namespace gcontract;

namespace {

const double e = std::exp(1.0);
const double e2 = std::exp(2.0);

InteractionFunction zero() { return builtin("constant", {.value = 0.0}); }
InteractionFunction column(Profile p) { return builtin("column-separable", {.profile = std::move(p)}); }
InteractionFunction row(Profile p) { return builtin("row-separable", {.profile = std::move(p)}); }

ReservationUtility R(double c) { return {Profile::constant(c)}; }
const InitialLaw delta0 = InitialLaw::point_mass();

double max_error(const EffortField& q, const std::function<double(double, double)>& exact)
{
    double err = 0.0;
    for (std::size_t j = 0; j < q.time_grid().size(); ++j)
        for (std::size_t k = 0; k < q.type_grid().size(); ++k)
            err = std::max(err, std::abs(q(j, k) - exact(q.time_grid()[j], q.type_grid()[k].eval_u)));
    return err;
}

/// max |coarse - reference| over coarse nodes; grids must be nested.
double error_against(const EffortField& coarse, const EffortField& ref)
{
    double err = 0.0;
    const std::size_t ratio = ref.time_grid().steps() / coarse.time_grid().steps();
    for (std::size_t j = 0; j < coarse.time_grid().size(); ++j)
        for (std::size_t k = 0; k < coarse.type_grid().size(); ++k) {
            const std::size_t kr = ref.type_grid().nearest(coarse.type_grid()[k].eval_u);
            err = std::max(err, std::abs(coarse(j, k) - ref(j * ratio, kr)));
        }
    return err;
}

} // namespace

TEST(SolveContinuum, ZeroGraphonGivesUnitEffort)
{
    auto q = solve_continuum(zero(), 1.0, 16, 16);
    EXPECT_EQ(max_error(q, [](double, double) { return 1.0; }), 0.0);
}

TEST(SolveContinuum, ColumnSeparableConstant)
{
    auto q = solve_continuum(column(Profile::constant(1.0)), 1.0, 256, 256);
    for (std::size_t k = 0; k < q.type_grid().size(); ++k) EXPECT_NEAR(q(0, k), e, 1e-6);
}

TEST(SolveContinuum, RowSeparableAffine)
{
    auto q = solve_continuum(row(Profile::affine(0.0, 1.0)), 1.0, 256, 256);
    for (std::size_t k = 0; k < q.type_grid().size(); ++k) EXPECT_NEAR(q(0, k), std::exp(0.5), 1e-6);
}

TEST(SolveContinuum, ColumnSeparableClosedFormOracle)
{
    for (double c : {0.5, 1.0, 2.0}) {
        auto q = solve_continuum(column(Profile::constant(c)), 1.0, 256, 256);
        EXPECT_LE(max_error(q, [c](double t, double) { return std::exp(c * (1.0 - t)); }), 1e-6) << c;
    }
}

TEST(SolveContinuum, ColumnSeparableTypeDependentClosedForm)
{
    // dQ/dt(t,u) = -g(u) P(t) with P = int Q dv solving P' = -gbar P, P(T) = 1, so
    // Q(t,u) = 1 + g(u) (exp(gbar (T - t)) - 1) / gbar. This reduces to
    // exp(g (T - t)) only when g is constant.
    auto q = solve_continuum(column(Profile::affine(0.5, 1.5)), 1.0, 256, 256);
    const double gbar = 0.5 + 0.75;
    EXPECT_LE(max_error(q, [gbar](double t, double u) { return 1.0 + (0.5 + 1.5 * u) * std::expm1(gbar * (1.0 - t)) / gbar; }),
              1e-6);
    EXPECT_GT(std::abs(q(0, q.type_grid().size() - 1) - std::exp(2.0)), 1.0);
}

TEST(SolveContinuum, RowSeparableIsConstantAcrossTypes)
{
    auto q = solve_continuum(row(Profile::affine(0.0, 1.0)), 1.0, 256, 256);
    for (std::size_t j = 0; j < q.time_grid().size(); ++j) {
        auto s = q.slice(j);
        auto [lo, hi] = std::minmax_element(s.begin(), s.end());
        EXPECT_LE(*hi - *lo, 1e-10);
    }
    EXPECT_LE(max_error(q, [](double t, double) { return std::exp(0.5 * (1.0 - t)); }), 1e-6);
}

TEST(SolveContinuum, KernelOrientationOnAsymmetricBlocks)
{
    // G(u, v) = 2 on (first block) x (second block), else 0. The effort equation
    // integrates over the FIRST argument, so types in the second block feel the
    // first block: Q = 1 + (T - t) there and Q = 1 on the first block.
    auto g = step_graphon({0.5}, {{0.0, 2.0}, {0.0, 0.0}});
    auto q = solve_continuum(g, 1.0, 64, 64);
    EXPECT_LE(max_error(q, [](double t, double u) { return u <= 0.5 ? 1.0 : 2.0 - t; }), 1e-12);
    EXPECT_NEAR(effort(q, 0.0, 0.25), 1.0, 1e-12);
    EXPECT_NEAR(effort(q, 0.0, 0.75), 2.0, 1e-12);
}

TEST(SolveContinuum, Errors)
{
    EXPECT_THROW(solve_continuum(zero(), 0.0, 8, 8), std::invalid_argument);
    EXPECT_THROW(solve_continuum(zero(), 1.0, 0, 8), std::invalid_argument);
    EXPECT_THROW(solve_continuum(zero(), 1.0, 8, std::size_t{0}), std::invalid_argument);
    InteractionFunction bad([](double u, double) { return u > 0.5 ? NAN : 0.0; });
    EXPECT_THROW(solve_continuum(bad, 1.0, 8, 8), std::domain_error);
}

TEST(SolveContinuum, GridNodesRespectBlocks)
{
    auto g = builtin("block-product", {.blocks = 5});
    auto q = solve_continuum(g, 1.0, 8, 50);
    const auto& grid = q.type_grid();
    EXPECT_EQ(grid.blocks(), 5u);
    for (std::size_t b = 0; b < 5; ++b) {
        auto [first, last] = grid.block_range(b);
        for (std::size_t k = first; k < last; ++k) {
            EXPECT_EQ(block_index(g.edges(), grid[k].eval_u), b);
            EXPECT_GE(grid[k].u, g.edges()[b]);
            EXPECT_LE(grid[k].u, g.edges()[b + 1]);
        }
    }
}

TEST(SolveContinuum, FourthOrderWhenQuadratureIsExact)
{
    // Block-constant kernel: Q is constant on blocks, the type quadrature is exact
    // and RK4 carries the whole error, so halving both steps gains about 16x.
    auto g = step_graphon({0.25, 0.5}, {{1.0, 3.0, 0.5}, {2.0, 0.0, 1.5}, {0.5, 2.5, 1.0}});
    auto coarse = solve_continuum(g, 1.0, 4, 8);
    auto fine = solve_continuum(g, 1.0, 8, 16);
    auto ref = solve_continuum(g, 1.0, 32, 64);
    const double ec = error_against(coarse, ref), ef = error_against(fine, ref);
    EXPECT_GT(ec, 1e-9);
    EXPECT_GE(ec / ef, 8.0);
}

TEST(SolveContinuum, SecondOrderInTypeForSmoothKernels)
{
    // With a type-dependent effort the trapezoid rule in type dominates RK4 at any
    // practical time step; halving both steps gains close to 4x.
    auto g = builtin("logistic");
    auto coarse = solve_continuum(g, 1.0, 16, 16);
    auto fine = solve_continuum(g, 1.0, 32, 32);
    auto ref = solve_continuum(g, 1.0, 128, 128);
    EXPECT_GE(error_against(coarse, ref) / error_against(fine, ref), 3.5);
}

TEST(SolveContinuum, SineDistanceReflectionSymmetry)
{
    auto q = solve_continuum(builtin("sine-distance"), 1.0, 128, 256);
    const auto& grid = q.type_grid();
    const std::size_t n = grid.size();
    for (std::size_t j = 0; j < q.time_grid().size(); ++j)
        for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(q(j, k), q(j, n - 1 - k), 1e-9);
}

TEST(SolveContinuum, NonnegativeKernelBounds)
{
    for (const char* f : {"sine-distance", "logistic", "block-product", "block-logistic"}) {
        auto g = builtin(f);
        const double norm = sup_norm(g);
        auto q = solve_continuum(g, 1.0, 64, 100);
        for (std::size_t j = 0; j < q.time_grid().size(); ++j) {
            const double t = q.time_grid()[j];
            for (std::size_t k = 0; k < q.type_grid().size(); ++k) {
                EXPECT_GE(q(j, k), 1.0) << f;
                EXPECT_LE(q(j, k), std::exp(norm * (1.0 - t)) + 1e-12) << f;
            }
        }
    }
}

TEST(SolveContinuum, SignedKernelBound)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<std::vector<double>> vals(4, std::vector<double>(4));
        for (auto& r : vals)
            for (auto& v : r) v = U(rng);
        auto g = step_graphon({0.2, 0.45, 0.7}, vals);
        auto q = solve_continuum(g, 1.5, 64, 40);
        const double norm = sup_norm(g);
        for (std::size_t j = 0; j < q.time_grid().size(); ++j)
            for (std::size_t k = 0; k < q.type_grid().size(); ++k)
                EXPECT_LE(std::abs(q(j, k)), std::exp(norm * (1.5 - q.time_grid()[j])) + 1e-12);
    }
}

TEST(SolveContinuum, TerminalConditionIsOne)
{
    auto q = solve_continuum(builtin("block-logistic"), 2.0, 16, 40);
    for (std::size_t k = 0; k < q.type_grid().size(); ++k) EXPECT_EQ(q(16, k), 1.0);
    for (double u : {0.0, 0.33, 1.0}) EXPECT_EQ(effort(q, 2.0, u), 1.0);
}

TEST(PrincipalValue, Examples)
{
    EXPECT_NEAR(principal_value(solve_continuum(zero(), 1.0, 64, 64), delta0, R(0.0)), 0.5, 1e-14);
    EXPECT_NEAR(principal_value(solve_continuum(zero(), 1.0, 64, 64), delta0, R(0.2)), 0.3, 1e-14);
    auto q = solve_continuum(column(Profile::constant(1.0)), 1.0, 256, 256);
    EXPECT_NEAR(principal_value(q, delta0, R(0.0)), (e2 - 1.0) / 4.0, 1e-5);
}

TEST(PrincipalValue, InitialTermUsesLawMean)
{
    // zero graphon: V = int m(u) du + T/2 - int R
    auto q = solve_continuum(zero(), 1.0, 8, 64);
    auto law = InitialLaw::gaussian(Profile::affine(1.0, 2.0), Profile::constant(3.0));
    EXPECT_NEAR(principal_value(q, law, ReservationUtility{Profile::affine(0.0, 1.0)}), 2.0 + 0.5 - 0.5, 1e-12);
}

TEST(PrincipalValue, LogisticAgainstIndependentSolve)
{
    // Frozen from a numpy Nystrom solve (200-point Gauss-Legendre in type,
    // matrix exponential in time, 40-point Gauss-Legendre for the time integral).
    const double oracle = 0.8542234600690786;
    auto q = solve_continuum(builtin("logistic"), 1.0, 256, 1024);
    EXPECT_NEAR(principal_value(q, delta0, R(0.0)), oracle, 1e-5);
}

TEST(PrincipalValue, EqualsIntegralOfMarginalValuesForZeroMeanLaws)
{
    auto q = solve_continuum(builtin("block-logistic"), 1.0, 64, 200);
    ReservationUtility r{Profile::affine(0.1, 0.2)};
    double integral = 0.0;
    for (const auto& node : q.type_grid().nodes()) integral += node.weight * marginal_value(q, delta0, r, node.eval_u);
    EXPECT_NEAR(integral, principal_value(q, delta0, r), 1e-12);
}

TEST(PrincipalValue, MarginalValuesMissTheInitialEffortWeight)
{
    // v_p carries m(u), the value carries Q(0,u) m(u): the two integrals differ by
    // int (Q(0,u) - 1) m(u) du.
    auto q = solve_continuum(builtin("block-logistic"), 1.0, 64, 200);
    auto law = InitialLaw::point_mass(Profile::affine(0.5, 1.0));
    ReservationUtility r{Profile::affine(0.1, 0.2)};
    double integral = 0.0, correction = 0.0;
    for (std::size_t k = 0; k < q.type_grid().size(); ++k) {
        const auto& node = q.type_grid()[k];
        integral += node.weight * marginal_value(q, law, r, node.eval_u);
        correction += node.weight * (q(0, k) - 1.0) * law.mean_at(node.eval_u);
    }
    EXPECT_NEAR(integral + correction, principal_value(q, law, r), 1e-12);
}

TEST(MarginalValue, Examples)
{
    auto q0 = solve_continuum(zero(), 1.0, 64, 64);
    EXPECT_NEAR(marginal_value(q0, delta0, R(0.0), 0.37), 0.5, 1e-14);
    EXPECT_NEAR(marginal_value(q0, delta0, ReservationUtility{Profile::affine(0.0, 1.0)}, 0.5), 0.0, 1e-14);
    // g(u) = u: Q(t,1) = 2 exp((1 - t)/2) - 1, so v_p(1) = (4(e - 1) - 8(sqrt(e) - 1) + 1) / 2
    auto q = solve_continuum(column(Profile::affine(0.0, 1.0)), 1.0, 256, 256);
    EXPECT_NEAR(marginal_value(q, delta0, R(0.0), 1.0), 0.5 * (4.0 * (e - 1.0) - 8.0 * (std::sqrt(e) - 1.0) + 1.0), 1e-5);
    auto qc = solve_continuum(column(Profile::constant(1.0)), 1.0, 256, 256);
    EXPECT_NEAR(marginal_value(qc, delta0, R(0.0), 1.0), (e2 - 1.0) / 4.0, 1e-5);
    EXPECT_THROW(marginal_value(q, delta0, R(0.0), 1.2), std::out_of_range);
}

TEST(ContractLaw, Examples)
{
    auto l0 = contract_law(solve_continuum(zero(), 1.0, 32, 32), R(0.0), 0.5);
    EXPECT_NEAR(l0.mean, 0.5, 1e-14);
    EXPECT_NEAR(l0.variance, 1.0, 1e-14);
    auto l1 = contract_law(solve_continuum(column(Profile::constant(1.0)), 1.0, 256, 256), R(0.0), 0.3);
    EXPECT_NEAR(l1.mean, (e2 - 1.0) / 4.0, 1e-5);
    EXPECT_NEAR(l1.variance, (e2 - 1.0) / 2.0, 2e-5);
    auto l2 = contract_law(solve_continuum(zero(), 2.0, 32, 32), R(3.0), 0.9);
    EXPECT_NEAR(l2.mean, 4.0, 1e-14);
    EXPECT_NEAR(l2.variance, 2.0, 1e-14);
    EXPECT_THROW(contract_law(solve_continuum(zero(), 2.0, 32, 32), R(0.0), -0.1), std::out_of_range);
}

TEST(ContractLaw, VarianceIsTwiceExcessMean)
{
    auto q = solve_continuum(builtin("logistic"), 1.0, 64, 64);
    ReservationUtility r{Profile::affine(-0.3, 0.8)};
    for (double u : {0.0, 0.1, 0.5, 0.99, 1.0}) {
        auto l = contract_law(q, r, u);
        EXPECT_GE(l.variance, 0.0);
        EXPECT_DOUBLE_EQ(l.variance, 2.0 * (l.mean - r(u)));
    }
}

TEST(Effort, Examples)
{
    EXPECT_EQ(effort(solve_continuum(zero(), 1.0, 8, 8), 0.4, 0.6), 1.0);
    auto q = solve_continuum(column(Profile::affine(0.0, 1.0)), 1.0, 256, 256);
    EXPECT_NEAR(effort(q, 0.0, 1.0), 2.0 * std::sqrt(e) - 1.0, 1e-6);
    EXPECT_NEAR(effort(solve_continuum(column(Profile::constant(1.0)), 1.0, 256, 256), 0.0, 1.0), e, 1e-6);
    EXPECT_EQ(effort(q, 1.0, 0.3), 1.0);
    EXPECT_THROW(effort(q, 1.5, 0.3), std::out_of_range);
    EXPECT_THROW(effort(q, 0.5, -0.3), std::out_of_range);
}

TEST(Effort, ExactAtNodesAndBilinearBetween)
{
    auto q = solve_continuum(builtin("sine-distance"), 1.0, 10, 10);
    const auto& tg = q.time_grid();
    const auto& grid = q.type_grid();
    for (std::size_t j = 0; j < tg.size(); ++j)
        for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_EQ(effort(q, tg[j], grid[k].u), q(j, k));
    const double mid = 0.25 * (q(3, 4) + q(3, 5) + q(4, 4) + q(4, 5));
    EXPECT_NEAR(effort(q, 0.5 * (tg[3] + tg[4]), 0.5 * (grid[4].u + grid[5].u)), mid, 1e-14);
}

TEST(Effort, InterpolationStaysInsideBlock)
{
    // near a block edge the value comes from the owning block only
    auto g = step_graphon({0.5}, {{0.0, 2.0}, {0.0, 0.0}});
    auto q = solve_continuum(g, 1.0, 8, 4);
    EXPECT_NEAR(effort(q, 0.0, 0.5), 1.0, 1e-14);
    EXPECT_NEAR(effort(q, 0.0, std::nextafter(0.5, 1.0)), 2.0, 1e-14);
}

TEST(MarginalTable, RowsMatchPointQueries)
{
    auto q = solve_continuum(builtin("logistic"), 1.0, 32, 32);
    ReservationUtility r{Profile::constant(0.1)};
    for (const auto& row : marginal_table(q, delta0, r)) {
        if (row.u == 0.0 || row.u == 1.0) {
            EXPECT_NEAR(row.value, marginal_value(q, delta0, r, row.u), 1e-14);
        }
        EXPECT_DOUBLE_EQ(row.variance, 2.0 * (row.mean - 0.1));
    }
}
