#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcontract/continuum.hpp"
#include "gcontract/finite.hpp"
#include "gcontract/graphon.hpp"
#include "gcontract/parallel.hpp"
#include "gcontract/population.hpp"
#include "gcontract/random.hpp"
#include "gcontract/statistics.hpp"

namespace gcontract {

/// W2 distance between two 1-D Gaussians: sqrt(dmean^2 + dsigma^2).
inline double gaussian_w2(const ContractLaw& a, const ContractLaw& b)
{
    if (a.variance < 0.0 || b.variance < 0.0) throw std::invalid_argument("gaussian_w2: negative variance");
    const double dm = a.mean - b.mean;
    const double ds = std::sqrt(a.variance) - std::sqrt(b.variance);
    return std::sqrt(dm * dm + ds * ds);
}

/// Least-squares slope of log(error) against log(size). Needs at least three
/// points, all with positive errors; otherwise there is nothing to fit.
inline std::optional<double> fit_log_slope(std::span<const std::size_t> sizes, std::span<const double> errors)
{
    if (sizes.size() != errors.size() || sizes.size() < 3) return std::nullopt;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (!(errors[i] > 0.0) || !std::isfinite(errors[i])) return std::nullopt;
        const double x = std::log(static_cast<double>(sizes[i]));
        const double y = std::log(errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) return std::nullopt;
    return (n * sxy - sx * sy) / den;
}

/// Errors against problem size N, with N^rate_power * error as the constant
/// estimates (rate_power 1 for O(1/N) claims, 0.5 for O(1/sqrt N)).
struct RateReport {
    std::vector<std::size_t> sizes;
    std::vector<double> errors;
    std::optional<double> fitted_slope;
    std::vector<double> constant_estimates;
    double rate_power = 1.0;
    double reference_error = 0.0;  // estimated discretization error of the continuum reference

    /// max/min of the constant estimates over the upper half of the sizes.
    std::optional<double> constant_spread() const
    {
        if (constant_estimates.size() < 2) return std::nullopt;
        const std::size_t first = constant_estimates.size() / 2;
        auto [lo, hi] = std::minmax_element(constant_estimates.begin() + static_cast<std::ptrdiff_t>(first), constant_estimates.end());
        if (!(*lo > 0.0)) return std::nullopt;
        return *hi / *lo;
    }

    /// Slope fitted on the first k points (k >= 3), for running reports.
    std::optional<double> slope_so_far(std::size_t k) const
    {
        k = std::min(k, sizes.size());
        return fit_log_slope(std::span(sizes).first(k), std::span(errors).first(k));
    }
};

inline RateReport make_rate_report(std::vector<std::size_t> sizes, std::vector<double> errors, double rate_power)
{
    RateReport r;
    r.rate_power = rate_power;
    r.constant_estimates.resize(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i)
        r.constant_estimates[i] = std::pow(static_cast<double>(sizes[i]), rate_power) * errors[i];
    r.fitted_slope = fit_log_slope(sizes, errors);
    r.sizes = std::move(sizes);
    r.errors = std::move(errors);
    return r;
}

struct ConvergenceGrid {
    std::size_t time_steps = 256;
    std::size_t reference_factor = 4;  // continuum type cells = factor * max(sizes)
    std::size_t threads = 1;
};

namespace detail {

inline void check_sizes(std::span<const std::size_t> sizes)
{
    if (sizes.size() < 2) throw std::invalid_argument("convergence study needs at least two sizes");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] < 1) throw std::invalid_argument("convergence sizes must be positive");
        if (i > 0 && sizes[i] <= sizes[i - 1]) throw std::invalid_argument("convergence sizes must increase strictly");
    }
}

inline std::size_t reference_cells(const InteractionFunction& g, std::span<const std::size_t> sizes, const ConvergenceGrid& grid)
{
    if (grid.reference_factor < 4) throw std::invalid_argument("continuum reference must resolve at least 4x the largest N");
    return std::max(grid.reference_factor * sizes.back(), g.edges().size() - 1);
}

inline double max_abs_diff_on_common_nodes(const EffortField& fine, const EffortField& coarse)
{
    double err = 0.0;
    const auto& cg = coarse.type_grid();
    for (std::size_t k = 0; k < cg.size(); ++k) {
        const std::size_t kf = fine.type_grid().nearest(cg[k].eval_u);
        for (std::size_t j = 0; j < coarse.time_grid().size(); ++j) err = std::max(err, std::abs(fine(j, kf) - coarse(j, k)));
    }
    return err;
}

} // namespace detail

/// error_N = max_i max_j |Q(t_j, i/N) - Q^{i,N}(t_j)|, Q read at the nearest
/// node of a continuum solve with reference_factor * max(N) type cells. The
/// reference error is a Richardson estimate from a half-resolution solve
/// (the type quadrature is second order).
inline RateReport effort_convergence(const InteractionFunction& g, double horizon, std::vector<std::size_t> sizes,
                                     const ConvergenceGrid& grid = {})
{
    detail::check_sizes(sizes);
    const std::size_t cells = detail::reference_cells(g, sizes, grid);
    const auto reference = solve_continuum(g, horizon, grid.time_steps, cells);
    const auto half = solve_continuum(g, horizon, grid.time_steps, std::max(cells / 2, g.edges().size() - 1));
    const double ref_err = detail::max_abs_diff_on_common_nodes(reference, half) / 3.0;

    std::vector<double> errors(sizes.size());
    parallel_for(sizes.size(), grid.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t s = b; s < e; ++s) {
            const std::size_t n = sizes[s];
            const auto q = solve_finite(discretize(g, n), horizon, grid.time_steps);
            double err = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t k = reference.type_grid().nearest(static_cast<double>(i + 1) / static_cast<double>(n));
                for (std::size_t j = 0; j < q.time_grid().size(); ++j) err = std::max(err, std::abs(reference(j, k) - q(j, i)));
            }
            errors[s] = err;
        }
    });
    auto report = make_rate_report(std::move(sizes), std::move(errors), 1.0);
    report.reference_error = ref_err;
    return report;
}

struct ValueConvergence {
    RateReport value_mse;  // E[(V^N_P - V_P)^2] over replications
    RateReport contract_w2;  // max_i W2(continuum law at i/N, law of agent i)
    double continuum_value = 0.0;
};

/// Replication r at size N draws x0 with seed derive_seed(seed, N, r).
inline ValueConvergence value_convergence(const InteractionFunction& g, const InitialLaw& law, const ReservationUtility& reservation,
                                          double horizon, std::vector<std::size_t> sizes, std::size_t replications,
                                          std::uint64_t seed, const ConvergenceGrid& grid = {})
{
    detail::check_sizes(sizes);
    if (replications < 1) throw std::invalid_argument("value convergence needs at least one replication");
    const std::size_t cells = detail::reference_cells(g, sizes, grid);
    const auto reference = solve_continuum(g, horizon, grid.time_steps, cells);
    const double v = principal_value(reference, law, reservation);

    std::vector<double> mse(sizes.size()), w2(sizes.size());
    parallel_for(sizes.size(), grid.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t s = b; s < e; ++s) {
            const std::size_t n = sizes[s];
            const auto q = solve_finite(discretize(g, n), horizon, grid.time_steps);
            CompensatedSum acc;
            for (std::size_t r = 0; r < replications; ++r) {
                const auto x0 = draw_initial_outputs(law, n, derive_seed(seed, n, r));
                const double d = finite_principal_value(q, x0, reservation) - v;
                acc.add(d * d);
            }
            mse[s] = acc.value() / static_cast<double>(replications);
            double worst = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double u = static_cast<double>(i + 1) / static_cast<double>(n);
                const double var = q.squared_integral(i);
                ContractLaw finite_law{reservation(u) + 0.5 * var, var};
                worst = std::max(worst, gaussian_w2(contract_law(reference, reservation, u), finite_law));
            }
            w2[s] = worst;
        }
    });
    ValueConvergence out;
    out.value_mse = make_rate_report(sizes, std::move(mse), 1.0);
    out.contract_w2 = make_rate_report(std::move(sizes), std::move(w2), 0.5);
    out.continuum_value = v;
    return out;
}

struct GapReport {
    RateReport gap;
    std::vector<double> signed_difference;  // J^N_p(xi-hat) - V^N_p, nonpositive up to roundoff
};

/// |J^N_p(xi-hat^N) - V^N_p| for each N against one continuum solve.
inline GapReport gap_convergence(const InteractionFunction& g, const InitialLaw& law, const ReservationUtility& reservation,
                                 double horizon, std::vector<std::size_t> sizes, std::uint64_t seed, const ConvergenceGrid& grid = {})
{
    detail::check_sizes(sizes);
    const std::size_t cells = detail::reference_cells(g, sizes, grid);
    const auto reference = solve_continuum(g, horizon, grid.time_steps, cells);
    std::vector<double> gaps(sizes.size()), signed_diff(sizes.size());
    parallel_for(sizes.size(), grid.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t s = b; s < e; ++s) {
            auto vals = near_optimal_values(g, reference, law, reservation, sizes[s], horizon, grid.time_steps, seed);
            gaps[s] = vals.gap();
            signed_diff[s] = vals.projected - vals.optimal;
        }
    });
    return {make_rate_report(std::move(sizes), std::move(gaps), 1.0), std::move(signed_diff)};
}

struct StabilityGrid {
    double horizon = 1.0;
    std::size_t time_steps = 256;
    std::size_t type_cells = 256;
    std::size_t mesh = 1024;  // sampling mesh for the sup distance of the graphons
};

struct EffortStability {
    double sup_q = 0.0;
    double sup_g = 0.0;
    std::optional<double> ratio;  // absent when sup_g == 0
};

/// Both effort fields are solved on the grid over the union of the two block partitions.
inline EffortStability stability_effort(const InteractionFunction& g1, const InteractionFunction& g2, const StabilityGrid& grid = {})
{
    TypeGrid types(merge_edges(g1.edges(), g2.edges()), grid.type_cells);
    const auto q1 = solve_continuum(g1, grid.horizon, grid.time_steps, types);
    const auto q2 = solve_continuum(g2, grid.horizon, grid.time_steps, types);
    EffortStability out;
    for (std::size_t j = 0; j < q1.time_grid().size(); ++j)
        for (std::size_t k = 0; k < types.size(); ++k) out.sup_q = std::max(out.sup_q, std::abs(q1(j, k) - q2(j, k)));
    out.sup_g = sup_distance(g1, g2, grid.mesh);
    if (out.sup_g > 0.0) out.ratio = out.sup_q / out.sup_g;
    return out;
}

struct ContractStability {
    double w2 = 0.0;
    double bound_shape = 0.0;  // ||G1 - G2||^(1/2) + ||G1 - G2||
    ContractLaw law1, law2;
};

inline ContractStability stability_contracts(const InteractionFunction& g1, const InteractionFunction& g2,
                                             const ReservationUtility& reservation, double u, const StabilityGrid& grid = {})
{
    if (!(u >= 0.0 && u <= 1.0)) throw std::out_of_range("type outside [0, 1]");
    TypeGrid types(merge_edges(g1.edges(), g2.edges()), grid.type_cells);
    const auto q1 = solve_continuum(g1, grid.horizon, grid.time_steps, types);
    const auto q2 = solve_continuum(g2, grid.horizon, grid.time_steps, types);
    ContractStability out;
    out.law1 = contract_law(q1, reservation, u);
    out.law2 = contract_law(q2, reservation, u);
    out.w2 = gaussian_w2(out.law1, out.law2);
    const double d = sup_distance(g1, g2, grid.mesh);
    out.bound_shape = std::sqrt(d) + d;
    return out;
}

enum class InfluenceVerdict {
    ordered,               // hypothesis holds and Q(., u1) <= Q(., u2)
    equal,                 // hypothesis holds and the efforts coincide
    violated,              // hypothesis holds but the ordering fails
    hypothesis_fails,      // u1 is not dominated by u2 in influence
    negative_interaction,  // G < 0 somewhere: the comparison result does not apply
};

inline std::string to_string(InfluenceVerdict v)
{
    switch (v) {
    case InfluenceVerdict::ordered: return "ordered";
    case InfluenceVerdict::equal: return "equal";
    case InfluenceVerdict::violated: return "violated";
    case InfluenceVerdict::hypothesis_fails: return "hypothesis-fails";
    case InfluenceVerdict::negative_interaction: return "negative-interaction";
    }
    return "unknown";
}

struct InfluenceCheck {
    InfluenceVerdict verdict = InfluenceVerdict::equal;
    double max_violation = 0.0;  // max_t (Q(t,u1) - Q(t,u2)), clipped at 0
};

/// Tests G(v,u1) <= G(v,u2) for v on the effort's type nodes (influence
/// enters through the second argument) and, if it holds, Q(t,u1) <= Q(t,u2) + tol
/// at every grid time. Nonnegativity of G is checked on the node product grid.
inline InfluenceCheck check_influence_monotonicity(const InteractionFunction& g, double u1, double u2, const EffortField& q,
                                                   double tol = 1e-9)
{
    if (!(u1 >= 0.0 && u1 <= 1.0 && u2 >= 0.0 && u2 <= 1.0)) throw std::out_of_range("type outside [0, 1]");
    const auto& nodes = q.type_grid().nodes();
    InfluenceCheck out;
    for (const auto& a : nodes) {
        for (const auto& b : nodes)
            if (g(a.eval_u, b.eval_u) < 0.0) {
                out.verdict = InfluenceVerdict::negative_interaction;
                return out;
            }
        if (g(a.eval_u, u1) < 0.0 || g(a.eval_u, u2) < 0.0) {
            out.verdict = InfluenceVerdict::negative_interaction;
            return out;
        }
    }
    for (const auto& a : nodes)
        if (g(a.eval_u, u1) > g(a.eval_u, u2)) {
            out.verdict = InfluenceVerdict::hypothesis_fails;
            return out;
        }
    double max_gap = 0.0;
    for (std::size_t j = 0; j < q.time_grid().size(); ++j) {
        const double t = q.time_grid()[j];
        const double d = q.at(t, u1) - q.at(t, u2);
        out.max_violation = std::max(out.max_violation, d);
        max_gap = std::max(max_gap, std::abs(d));
    }
    if (out.max_violation > tol) out.verdict = InfluenceVerdict::violated;
    else out.verdict = max_gap <= tol ? InfluenceVerdict::equal : InfluenceVerdict::ordered;
    return out;
}

inline bool consistent(InfluenceVerdict v)
{
    return v == InfluenceVerdict::ordered || v == InfluenceVerdict::equal;
}

} // namespace gcontract
