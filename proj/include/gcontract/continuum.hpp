#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gcontract/graphon.hpp"
#include "gcontract/grid.hpp"
#include "gcontract/population.hpp"

namespace gcontract {

/// Gaussian law of an optimal contract.
struct ContractLaw {
    double mean = 0.0;
    double variance = 0.0;
};

/// Q(t, u) on a time x type grid; equals the equilibrium effort.
class EffortField {
public:
    EffortField(TimeGrid time, TypeGrid types, std::vector<double> values)
        : time_(std::move(time)), types_(std::move(types)), values_(std::move(values))
    {
        if (values_.size() != time_.size() * types_.size()) throw std::invalid_argument("effort field size mismatch");
    }

    const TimeGrid& time_grid() const { return time_; }
    const TypeGrid& type_grid() const { return types_; }
    double horizon() const { return time_.horizon(); }

    /// Q(t_j, node k).
    double operator()(std::size_t j, std::size_t k) const { return values_[j * types_.size() + k]; }
    std::span<const double> slice(std::size_t j) const { return {values_.data() + j * types_.size(), types_.size()}; }

    /// Bilinear interpolation inside the block that owns u; exact at nodes.
    double at(double t, double u) const
    {
        auto [j, wt] = time_.locate(t);
        auto [k, wu] = types_.locate(u);
        auto lerp_u = [&](std::size_t jj) { return (1.0 - wu) * (*this)(jj, k) + wu * (*this)(jj, k + 1); };
        double a = lerp_u(j);
        if (wt == 0.0) return a;
        return (1.0 - wt) * a + wt * lerp_u(j + 1);
    }

    /// Trapezoid approximation of the time integral of Q(., node k)^2.
    double squared_integral(std::size_t k) const
    {
        std::vector<double> f(time_.size());
        for (std::size_t j = 0; j < time_.size(); ++j) f[j] = (*this)(j, k) * (*this)(j, k);
        return trapezoid(f, time_.step());
    }

private:
    TimeGrid time_;
    TypeGrid types_;
    std::vector<double> values_;
};

/// Integral operator (K q)(u) = int_0^1 G(v, u) q(v) dv discretized on `grid`
/// with block-wise trapezoid weights. Row r is the target type u_r; the
/// integration variable is the FIRST argument of G.
inline std::vector<double> assemble_kernel(const InteractionFunction& g, const TypeGrid& grid)
{
    const std::size_t n = grid.size();
    std::vector<double> w(n * n);
    for (std::size_t r = 0; r < n; ++r) {
        const double u = grid[r].eval_u;
        for (std::size_t c = 0; c < n; ++c) {
            double val = g(grid[c].eval_u, u);
            if (!std::isfinite(val)) throw std::domain_error("interaction function is not finite at a grid point");
            w[r * n + c] = grid[c].weight * val;
        }
    }
    return w;
}

/// Solves dQ/dt(t,u) = -int_0^1 G(v,u) Q(t,v) dv with Q(T,u) = 1 by RK4 in
/// reversed time on the given type grid.
inline EffortField solve_continuum(const InteractionFunction& g, double horizon, std::size_t time_steps, const TypeGrid& grid)
{
    TimeGrid time(horizon, time_steps);
    const std::size_t n = grid.size();
    const auto kernel = assemble_kernel(g, grid);

    std::vector<double> values(time.size() * n);
    std::vector<double> q(n, 1.0);
    std::copy(q.begin(), q.end(), values.begin() + static_cast<std::ptrdiff_t>(time_steps * n));

    // d/dt q = -K q ; stepping with negative h
    Rk4 rk([&](double, std::span<const double> y, std::span<double> dy) {
        matvec(kernel, n, y, dy);
        for (double& d : dy) d = -d;
    }, n);
    const double h = time.step();
    for (std::size_t j = time_steps; j-- > 0;) {
        rk.step(time[j + 1], -h, q);
        std::copy(q.begin(), q.end(), values.begin() + static_cast<std::ptrdiff_t>(j * n));
    }
    return EffortField(time, grid, std::move(values));
}

/// Same, on the grid with `type_cells` cells over G's own block partition.
inline EffortField solve_continuum(const InteractionFunction& g, double horizon, std::size_t time_steps, std::size_t type_cells)
{
    if (type_cells < 1) throw std::invalid_argument("type cells must be >= 1");
    return solve_continuum(g, horizon, time_steps, TypeGrid(g.edges(), type_cells));
}

/// V_P = int Q(0,u) m(u) du + 1/2 int int Q^2 du dt - int R_a(u) du.
inline double principal_value(const EffortField& q, const InitialLaw& law, const ReservationUtility& reservation)
{
    const auto& grid = q.type_grid();
    double initial = 0.0, effort = 0.0, reserve = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto& node = grid[k];
        initial += node.weight * q(0, k) * law.mean_at(node.eval_u);
        effort += node.weight * q.squared_integral(k);
        reserve += node.weight * reservation(node.eval_u);
    }
    return initial + 0.5 * effort - reserve;
}

/// v_p(u) = m(u) + 1/2 int_0^T Q(t,u)^2 dt - R_a(u), Q read at the nearest node of u's block.
inline double marginal_value(const EffortField& q, const InitialLaw& law, const ReservationUtility& reservation, double u)
{
    const std::size_t k = q.type_grid().nearest(u);
    return law.mean_at(u) + 0.5 * q.squared_integral(k) - reservation(u);
}

inline ContractLaw contract_law(const EffortField& q, const ReservationUtility& reservation, double u)
{
    const std::size_t k = q.type_grid().nearest(u);
    const double var = q.squared_integral(k);
    return {reservation(u) + 0.5 * var, var};
}

/// alpha*(t, u) = Q(t, u).
inline double effort(const EffortField& q, double t, double u) { return q.at(t, u); }

/// Per-node (u, v_p, contract mean, contract variance) rows.
struct MarginalRow {
    double u, value, mean, variance;
};

inline std::vector<MarginalRow> marginal_table(const EffortField& q, const InitialLaw& law, const ReservationUtility& reservation)
{
    std::vector<MarginalRow> rows;
    const auto& grid = q.type_grid();
    rows.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double x = grid[k].eval_u;
        const double var = q.squared_integral(k);
        const double r = reservation(x);
        rows.push_back({grid[k].u, law.mean_at(x) + 0.5 * var - r, r + 0.5 * var, var});
    }
    return rows;
}

} // namespace gcontract
