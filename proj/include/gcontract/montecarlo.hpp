#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gcontract/continuum.hpp"
#include "gcontract/finite.hpp"
#include "gcontract/graphon.hpp"
#include "gcontract/parallel.hpp"
#include "gcontract/population.hpp"
#include "gcontract/random.hpp"
#include "gcontract/statistics.hpp"

namespace gcontract {

struct SimConfig {
    std::size_t paths = 100000;     // particles (simulate_particles) or replications (contract sampling)
    std::size_t steps = 256;        // Euler-Maruyama steps
    std::uint64_t seed = 0;
    double horizon = 1.0;
    std::size_t population = 1024;  // background particles feeding the mean field when sampling contracts
    std::size_t buckets = 8;        // type buckets for trajectory summaries
    std::size_t threads = 1;        // never changes results

    void validate() const
    {
        if (paths < 1) throw std::invalid_argument("simulation needs at least one path");
        if (steps < 1) throw std::invalid_argument("simulation needs at least one step");
        if (population < 1) throw std::invalid_argument("simulation needs a nonempty background population");
        if (buckets < 1) throw std::invalid_argument("simulation needs at least one bucket");
        if (!(horizon > 0.0)) throw std::invalid_argument("simulation horizon must be positive");
    }
};

/// Per-step, per-type-bucket first and second moments of the particle states.
struct ParticleSummary {
    std::vector<double> times;
    std::vector<double> bucket_centers;
    std::vector<std::size_t> bucket_counts;
    std::vector<double> mean;            // (steps+1) x buckets
    std::vector<double> second_moment;   // (steps+1) x buckets
    std::vector<double> population_mean; // steps+1

    std::size_t buckets() const { return bucket_centers.size(); }
    double mean_at(std::size_t step, std::size_t bucket) const { return mean[step * buckets() + bucket]; }
    double second_moment_at(std::size_t step, std::size_t bucket) const { return second_moment[step * buckets() + bucket]; }
};

/// Interacting particle approximation of the McKean-Vlasov equilibrium
///   dX = (Q(t, U) + int G(U, v) x mu_t(dv, dx)) dt + dB,
/// with stratified types (p + 1/2)/P and the mean-field integral replaced by
/// the empirical average over particles.
class ParticleSystem {
public:
    static constexpr std::size_t dense_limit = 4096;

    ParticleSystem(const InteractionFunction& g, const EffortField& effort, const InitialLaw& law, std::size_t particles,
                   std::uint64_t seed, std::size_t threads)
        : g_(g), effort_(effort), threads_(threads), types_(particles), state_(particles), field_(particles)
    {
        if (particles == 0) throw std::invalid_argument("particle system needs at least one particle");
        const double dp = static_cast<double>(particles);
        streams_.reserve(particles);
        for (std::size_t p = 0; p < particles; ++p) {
            types_[p] = (static_cast<double>(p) + 0.5) / dp;
            streams_.emplace_back(seed, stream_tag::particles, p);
            state_[p] = law.sample(types_[p], streams_.back());
        }
        if (particles <= dense_limit) {
            dense_.resize(particles * particles);
            parallel_for(particles, threads_, [&](std::size_t b, std::size_t e) {
                for (std::size_t p = b; p < e; ++p)
                    for (std::size_t q = 0; q < particles; ++q) dense_[p * particles + q] = g_(types_[p], types_[q]) / dp;
            });
        }
    }

    std::size_t size() const { return state_.size(); }
    const std::vector<double>& types() const { return types_; }
    const std::vector<double>& state() const { return state_; }

    /// (1/P) sum_q G(u, u_q) X_q for an arbitrary type u.
    double field_at(double u) const
    {
        double s = 0.0;
        for (std::size_t q = 0; q < size(); ++q) s += g_(u, types_[q]) * state_[q];
        return s / static_cast<double>(size());
    }

    /// One Euler-Maruyama step from t with step h.
    void step(double t, double h)
    {
        const std::size_t n = size();
        const double dp = static_cast<double>(n);
        parallel_for(n, threads_, [&](std::size_t b, std::size_t e) {
            for (std::size_t p = b; p < e; ++p) {
                double s = 0.0;
                if (!dense_.empty()) {
                    const double* row = dense_.data() + p * n;
                    for (std::size_t q = 0; q < n; ++q) s += row[q] * state_[q];
                } else {
                    for (std::size_t q = 0; q < n; ++q) s += g_(types_[p], types_[q]) * state_[q];
                    s /= dp;
                }
                field_[p] = s;
            }
        });
        const double sqrt_h = std::sqrt(h);
        parallel_for(n, threads_, [&](std::size_t b, std::size_t e) {
            for (std::size_t p = b; p < e; ++p)
                state_[p] += h * (effort_.at(t, types_[p]) + field_[p]) + sqrt_h * streams_[p].normal();
        });
    }

private:
    const InteractionFunction& g_;
    const EffortField& effort_;
    std::size_t threads_;
    std::vector<double> types_;
    std::vector<double> state_;
    std::vector<double> field_;
    std::vector<double> dense_;
    std::vector<RngStream> streams_;
};

namespace detail {

inline void check_horizon(double a, double b)
{
    if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a)))
        throw std::invalid_argument("effort horizon does not match the simulation horizon");
}

} // namespace detail

inline ParticleSummary simulate_particles(const InteractionFunction& g, const EffortField& effort, const InitialLaw& law,
                                          const SimConfig& cfg)
{
    cfg.validate();
    detail::check_horizon(effort.horizon(), cfg.horizon);
    ParticleSystem sys(g, effort, law, cfg.paths, cfg.seed, cfg.threads);
    TimeGrid time(cfg.horizon, cfg.steps);
    const std::size_t nb = cfg.buckets;

    ParticleSummary out;
    out.bucket_centers.resize(nb);
    out.bucket_counts.assign(nb, 0);
    for (std::size_t b = 0; b < nb; ++b) out.bucket_centers[b] = (static_cast<double>(b) + 0.5) / static_cast<double>(nb);
    std::vector<std::size_t> bucket_of(sys.size());
    for (std::size_t p = 0; p < sys.size(); ++p) {
        bucket_of[p] = std::min(nb - 1, static_cast<std::size_t>(sys.types()[p] * static_cast<double>(nb)));
        ++out.bucket_counts[bucket_of[p]];
    }

    auto record = [&](std::size_t j) {
        out.times.push_back(time[j]);
        std::vector<CompensatedSum> s1(nb), s2(nb);
        CompensatedSum all;
        for (std::size_t p = 0; p < sys.size(); ++p) {
            double x = sys.state()[p];
            s1[bucket_of[p]].add(x);
            s2[bucket_of[p]].add(x * x);
            all.add(x);
        }
        for (std::size_t b = 0; b < nb; ++b) {
            double c = static_cast<double>(std::max<std::size_t>(1, out.bucket_counts[b]));
            out.mean.push_back(out.bucket_counts[b] ? s1[b].value() / c : 0.0);
            out.second_moment.push_back(out.bucket_counts[b] ? s2[b].value() / c : 0.0);
        }
        out.population_mean.push_back(all.value() / static_cast<double>(sys.size()));
    };

    record(0);
    for (std::size_t j = 0; j < cfg.steps; ++j) {
        sys.step(time[j], time.step());
        record(j + 1);
    }
    return out;
}

/// Samples the optimal contract
///   xi* = R_a(u) - int (Q^2/2 + Q A_t) dt + int Q dX
/// for a tagged agent of type u, where A_t = int G(u, v) x mu_t(dv, dx) comes
/// from a background particle population of size cfg.population. Each of the
/// cfg.paths replications has its own noise stream; int Q dX is a left-point
/// (Ito) sum and the dt terms use the trapezoid rule. If `paths_out` is set,
/// the first min(dump, 1000) tagged output paths are stored row by row.
inline ContractSampleStats sample_contracts(const InteractionFunction& g, const EffortField& effort, const InitialLaw& law,
                                            const ReservationUtility& reservation, double u, const SimConfig& cfg,
                                            std::vector<double>* paths_out = nullptr, std::size_t dump = 0)
{
    cfg.validate();
    detail::check_horizon(effort.horizon(), cfg.horizon);
    if (!(u >= 0.0 && u <= 1.0)) throw std::out_of_range("type outside [0, 1]");

    TimeGrid time(cfg.horizon, cfg.steps);
    const std::size_t m = cfg.steps;
    const double h = time.step();

    std::vector<double> field(m + 1), q(m + 1);
    {
        ParticleSystem background(g, effort, law, cfg.population, cfg.seed, cfg.threads);
        field[0] = background.field_at(u);
        for (std::size_t j = 0; j < m; ++j) {
            background.step(time[j], h);
            field[j + 1] = background.field_at(u);
        }
    }
    std::vector<double> running_cost(m + 1);
    for (std::size_t j = 0; j <= m; ++j) {
        q[j] = effort.at(time[j], u);
        running_cost[j] = 0.5 * q[j] * q[j] + q[j] * field[j];
    }
    const double base = reservation(u) - trapezoid(running_cost, h);
    const double sqrt_h = std::sqrt(h);

    dump = paths_out ? std::min<std::size_t>({dump, 1000, cfg.paths}) : 0;
    if (paths_out) paths_out->assign(dump * (m + 1), 0.0);

    std::vector<double> xi(cfg.paths);
    parallel_for(cfg.paths, cfg.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) {
            RngStream rng(cfg.seed, stream_tag::tagged_contracts, r);
            double x = law.sample(u, rng);
            double ito = 0.0;
            const bool keep = r < dump;
            if (keep) (*paths_out)[r * (m + 1)] = x;
            for (std::size_t j = 0; j < m; ++j) {
                double dx = h * (q[j] + field[j]) + sqrt_h * rng.normal();
                ito += q[j] * dx;
                x += dx;
                if (keep) (*paths_out)[r * (m + 1) + j + 1] = x;
            }
            xi[r] = base + ito;
        }
    });
    return sample_stats(xi);
}

/// Samples xi^{i,N,*} for agent i (1-based) by simulating the N-agent system
///   dX^j = ((1/N) sum_l G^N_{j,l} X^l + Q^{j,N}(t)) dt + dW^j
/// and accumulating R_a(i/N) - int (Q_i^2/2 + Q_i (1/N) sum_l G^N_{i,l} X^l) dt + int Q_i dX^i.
inline ContractSampleStats sample_contracts_finite(const DiscreteInteraction& d, const FiniteEffort& effort,
                                                   const InitialLaw& law, const ReservationUtility& reservation,
                                                   std::size_t agent, const SimConfig& cfg)
{
    cfg.validate();
    const std::size_t n = d.n;
    if (agent < 1 || agent > n) throw std::out_of_range("agent index outside [1, n]");
    if (effort.agents() != n) throw std::invalid_argument("effort and interaction sizes differ");
    detail::check_horizon(effort.time_grid().horizon(), cfg.horizon);

    const std::size_t i = agent - 1;
    TimeGrid time(cfg.horizon, cfg.steps);
    const std::size_t m = cfg.steps;
    const double h = time.step();
    const double sqrt_h = std::sqrt(h);
    const double dn = static_cast<double>(n);

    std::vector<double> qtab((m + 1) * n);
    for (std::size_t j = 0; j <= m; ++j)
        for (std::size_t l = 0; l < n; ++l) qtab[j * n + l] = effort.at(time[j], l);
    const double r_i = reservation(static_cast<double>(agent) / dn);

    std::vector<double> xi(cfg.paths);
    parallel_for(cfg.paths, cfg.threads, [&](std::size_t b, std::size_t e) {
        std::vector<double> x(n), drift(n), cost(m + 1);
        for (std::size_t r = b; r < e; ++r) {
            RngStream rng(cfg.seed, stream_tag::finite_contracts, r);
            for (std::size_t l = 0; l < n; ++l) x[l] = law.sample(static_cast<double>(l + 1) / dn, rng);
            double ito = 0.0;
            for (std::size_t j = 0; j <= m; ++j) {
                for (std::size_t l = 0; l < n; ++l) {
                    double s = 0.0;
                    for (std::size_t k = 0; k < n; ++k) s += d(l, k) * x[k];
                    drift[l] = s / dn;
                }
                const double qi = qtab[j * n + i];
                cost[j] = 0.5 * qi * qi + qi * drift[i];
                if (j == m) break;
                for (std::size_t l = 0; l < n; ++l) {
                    double dx = h * (drift[l] + qtab[j * n + l]) + sqrt_h * rng.normal();
                    if (l == i) ito += qi * dx;
                    x[l] += dx;
                }
            }
            xi[r] = r_i - trapezoid(cost, h) + ito;
        }
    });
    return sample_stats(xi);
}

} // namespace gcontract
