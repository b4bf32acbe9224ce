#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "gcontract/continuum.hpp"
#include "gcontract/graphon.hpp"
#include "gcontract/grid.hpp"
#include "gcontract/population.hpp"
#include "gcontract/random.hpp"

namespace gcontract {

/// Q^{i,N}(t_j) for agents i = 1..n (stored 0-based).
class FiniteEffort {
public:
    FiniteEffort(TimeGrid time, std::size_t n, std::vector<double> values) : time_(std::move(time)), n_(n), values_(std::move(values))
    {
        if (values_.size() != time_.size() * n_) throw std::invalid_argument("finite effort size mismatch");
    }

    const TimeGrid& time_grid() const { return time_; }
    std::size_t agents() const { return n_; }
    double operator()(std::size_t j, std::size_t i) const { return values_[j * n_ + i]; }

    /// Linear interpolation in time for agent i.
    double at(double t, std::size_t i) const
    {
        auto [j, w] = time_.locate(t);
        double a = (*this)(j, i);
        return w == 0.0 ? a : (1.0 - w) * a + w * (*this)(j + 1, i);
    }

    double squared_integral(std::size_t i) const
    {
        std::vector<double> f(time_.size());
        for (std::size_t j = 0; j < time_.size(); ++j) f[j] = (*this)(j, i) * (*this)(j, i);
        return trapezoid(f, time_.step());
    }

private:
    TimeGrid time_;
    std::size_t n_;
    std::vector<double> values_;
};

/// dQ^i/dt = -(1/N) sum_j G^N_{j,i} Q^j, Q^i(T) = 1, integrated backward by
/// RK4. Note the transpose: agent i's effort is driven by its influence G_{j,i} on others.
inline FiniteEffort solve_finite(const DiscreteInteraction& d, double horizon, std::size_t time_steps)
{
    TimeGrid time(horizon, time_steps);
    const std::size_t n = d.n;
    if (n == 0 || d.weights.size() != n * n) throw std::invalid_argument("solve_finite: malformed interaction matrix");
    std::vector<double> transposed(n * n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(d(j, i))) throw std::domain_error("interaction matrix has non-finite entries");
            transposed[i * n + j] = d(j, i) * inv_n;
        }

    std::vector<double> values(time.size() * n);
    std::vector<double> q(n, 1.0);
    std::copy(q.begin(), q.end(), values.begin() + static_cast<std::ptrdiff_t>(time_steps * n));
    Rk4 rk([&](double, std::span<const double> y, std::span<double> dy) {
        matvec(transposed, n, y, dy);
        for (double& v : dy) v = -v;
    }, n);
    const double h = time.step();
    for (std::size_t j = time_steps; j-- > 0;) {
        rk.step(time[j + 1], -h, q);
        std::copy(q.begin(), q.end(), values.begin() + static_cast<std::ptrdiff_t>(j * n));
    }
    return FiniteEffort(time, n, std::move(values));
}

/// Draws x_0^{i,N} ~ lambda(i/N, .) independently; agent i uses stream (seed, i).
inline std::vector<double> draw_initial_outputs(const InitialLaw& law, std::size_t n, std::uint64_t seed)
{
    std::vector<double> x0(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng(seed, stream_tag::initial_outputs, i);
        x0[i] = law.sample(static_cast<double>(i + 1) / static_cast<double>(n), rng);
    }
    return x0;
}

/// V^N_P = (1/N) sum Q^i(0) x0^i + (1/2N) sum int (Q^i)^2 - (1/N) sum R_a(i/N).
inline double finite_principal_value(const FiniteEffort& q, std::span<const double> x0, const ReservationUtility& reservation)
{
    const std::size_t n = q.agents();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        s += q(0, i) * x0[i] + 0.5 * q.squared_integral(i) - reservation(static_cast<double>(i + 1) / static_cast<double>(n));
    return s / static_cast<double>(n);
}

struct FiniteSolution {
    FiniteEffort effort;
    double principal_value;
    std::vector<ContractLaw> contract_laws;
    std::vector<double> initial_outputs;
};

inline FiniteSolution finite_solution(const DiscreteInteraction& d, double horizon, std::size_t time_steps,
                                      const InitialLaw& law, const ReservationUtility& reservation, std::uint64_t seed)
{
    auto q = solve_finite(d, horizon, time_steps);
    auto x0 = draw_initial_outputs(law, d.n, seed);
    std::vector<ContractLaw> laws(d.n);
    for (std::size_t i = 0; i < d.n; ++i) {
        const double var = q.squared_integral(i);
        laws[i] = {reservation(static_cast<double>(i + 1) / static_cast<double>(d.n)) + 0.5 * var, var};
    }
    double v = finite_principal_value(q, x0, reservation);
    return {std::move(q), v, std::move(laws), std::move(x0)};
}

/// Effort of every agent at time t, written into `out`.
using EffortPath = std::function<void(double t, std::span<double> out)>;

/// Mean output m' = (1/N) G^N m + e(t), m(0) = x0, by RK4; (M+1) x n row-major.
/// Row i of G^N is the receiving agent (the transpose of the effort system).
inline std::vector<double> mean_output_trajectory(const DiscreteInteraction& d, const EffortPath& effort_of,
                                                  std::span<const double> x0, double horizon, std::size_t time_steps)
{
    TimeGrid time(horizon, time_steps);
    const std::size_t n = d.n;
    if (x0.size() != n) throw std::invalid_argument("mean_output_trajectory: x0 has wrong length");
    std::vector<double> scaled(d.weights);
    for (double& w : scaled) w /= static_cast<double>(n);
    std::vector<double> e(n);
    Rk4 rk([&](double t, std::span<const double> y, std::span<double> dy) {
        matvec(scaled, n, y, dy);
        effort_of(t, e);
        for (std::size_t i = 0; i < n; ++i) dy[i] += e[i];
    }, n);
    std::vector<double> out(time.size() * n);
    std::vector<double> m(x0.begin(), x0.end());
    std::copy(m.begin(), m.end(), out.begin());
    for (std::size_t j = 0; j < time_steps; ++j) {
        rk.step(time[j], time.step(), m);
        std::copy(m.begin(), m.end(), out.begin() + static_cast<std::ptrdiff_t>((j + 1) * n));
    }
    return out;
}

/// Principal's N-agent value of the projected mean-field contracts and of the
/// optimal N-agent contracts, both evaluated through the mean output ODE.
struct NearOptimalValues {
    double projected;  // J^N_p(xi-hat^N), agents exert Q(t, i/N)
    double optimal;    // V^N_p, agents exert Q^{i,N}(t)
    double gap() const { return std::abs(projected - optimal); }
};

/// Needs an even number of effort time steps: the state ODE runs at step 2h so
/// RK4 stages land on stored effort nodes, and int Q^2 uses Simpson's rule.
inline NearOptimalValues near_optimal_values(const InteractionFunction& g, const EffortField& continuum, const InitialLaw& law,
                                             const ReservationUtility& reservation, std::size_t n, double horizon,
                                             std::size_t time_steps, std::uint64_t seed)
{
    if (std::abs(continuum.horizon() - horizon) > 1e-12 * horizon)
        throw std::invalid_argument("near_optimal_gap: horizon mismatch with the continuum solution");
    if (continuum.time_grid().steps() != time_steps)
        throw std::invalid_argument("near_optimal_gap: time steps must match the continuum solution");
    if (time_steps % 2 != 0) throw std::invalid_argument("near_optimal_gap: time steps must be even");
    if (n == 0) throw std::invalid_argument("near_optimal_gap: n must be >= 1");

    const auto d = discretize(g, n);
    const auto finite = solve_finite(d, horizon, time_steps);
    const auto& time = finite.time_grid();
    const double h = time.step();
    const double dn = static_cast<double>(n);

    // projected effort table Q(t_j, i/N)
    std::vector<double> projected(time.size() * n);
    for (std::size_t j = 0; j < time.size(); ++j)
        for (std::size_t i = 0; i < n; ++i) projected[j * n + i] = continuum.at(time[j], static_cast<double>(i + 1) / dn);

    auto nodal = [&](auto value_at) {
        return [&time, h, n, value_at](double t, std::span<double> out) {
            auto j = static_cast<std::size_t>(std::llround(t / h));
            j = std::min(j, time.steps());
            for (std::size_t i = 0; i < n; ++i) out[i] = value_at(j, i);
        };
    };
    EffortPath projected_path = nodal([&](std::size_t j, std::size_t i) { return projected[j * n + i]; });
    EffortPath optimal_path = nodal([&](std::size_t j, std::size_t i) { return finite(j, i); });

    const auto x0 = draw_initial_outputs(law, n, seed);
    auto objective = [&](const EffortPath& path, auto value_at) {
        auto m = mean_output_trajectory(d, path, x0, horizon, time_steps / 2);
        const std::size_t last = (time_steps / 2) * n;
        double terminal = 0.0, cost = 0.0, reserve = 0.0;
        std::vector<double> f(time.size());
        for (std::size_t i = 0; i < n; ++i) {
            terminal += m[last + i];
            for (std::size_t j = 0; j < time.size(); ++j) f[j] = value_at(j, i) * value_at(j, i);
            cost += simpson(f, h);
            reserve += reservation(static_cast<double>(i + 1) / dn);
        }
        return (terminal - 0.5 * cost - reserve) / dn;
    };
    NearOptimalValues out;
    out.projected = objective(projected_path, [&](std::size_t j, std::size_t i) { return projected[j * n + i]; });
    out.optimal = objective(optimal_path, [&](std::size_t j, std::size_t i) { return finite(j, i); });
    return out;
}

/// |J^N_p(xi-hat^N) - V^N_p|.
inline double near_optimal_gap(const InteractionFunction& g, const EffortField& continuum, const InitialLaw& law,
                               const ReservationUtility& reservation, std::size_t n, double horizon, std::size_t time_steps,
                               std::uint64_t seed)
{
    return near_optimal_values(g, continuum, law, reservation, n, horizon, time_steps, seed).gap();
}

} // namespace gcontract
