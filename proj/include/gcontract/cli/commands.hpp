#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gcontract/analysis.hpp"
#include "gcontract/cli/config.hpp"
#include "gcontract/cli/io.hpp"
#include "gcontract/cli/manifest.hpp"
#include "gcontract/continuum.hpp"
#include "gcontract/finite.hpp"
#include "gcontract/montecarlo.hpp"

namespace gcontract::cli {

/// Run options that never change numeric results.
struct Options {
    std::size_t threads = 1;
    std::size_t dump_paths = 0;  // simulate only, at most 1000
};

/// Raised for failures inside a solve or simulation (exit code 3).
class SolverError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string name(const RunConfig& c, const std::string& stem) { return stem + "." + c.extension; }

inline json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

/// Header row = type nodes, first column = time.
inline std::string effort_table(const EffortField& q, char delim)
{
    std::vector<std::string> header{"t"};
    for (const auto& node : q.type_grid().nodes()) header.push_back(format_number(node.u));
    Table t(header, delim);
    for (std::size_t j = 0; j < q.time_grid().size(); ++j) {
        std::vector<std::string> row{format_number(q.time_grid()[j])};
        for (std::size_t k = 0; k < q.type_grid().size(); ++k) row.push_back(format_number(q(j, k)));
        t.add_row(row);
    }
    return t.text();
}

inline std::string marginal_csv(const EffortField& q, const RunConfig& c)
{
    Table t({"u", "v_p", "mean", "variance"}, c.delimiter);
    for (const auto& r : marginal_table(q, c.law, c.reservation)) t.row(r.u, r.value, r.mean, r.variance);
    return t.text();
}

inline std::string rate_csv(const RateReport& r, const std::string& error_name, const std::string& constant_name, char delim,
                            const std::vector<double>* extra = nullptr, const std::string& extra_name = "")
{
    std::vector<std::string> header{"N", error_name, constant_name, "slope_so_far"};
    if (extra) header.push_back(extra_name);
    Table t(header, delim);
    for (std::size_t i = 0; i < r.sizes.size(); ++i) {
        auto s = r.slope_so_far(i + 1);
        std::vector<std::string> row{format_number(r.sizes[i]), format_number(r.errors[i]), format_number(r.constant_estimates[i]),
                                     s ? format_number(*s) : std::string("na")};
        if (extra) row.push_back(format_number((*extra)[i]));
        t.add_row(row);
    }
    return t.text();
}

inline json rate_json(const RateReport& r)
{
    return {{"sizes", r.sizes},
            {"errors", r.errors},
            {"constant_estimates", r.constant_estimates},
            {"fitted_slope", optional_number(r.fitted_slope)},
            {"constant_spread_upper_half", optional_number(r.constant_spread())},
            {"rate_power", r.rate_power},
            {"reference_error", r.reference_error}};
}

inline bool all_zero(const RateReport& r, double tol = 1e-14)
{
    return std::all_of(r.errors.begin(), r.errors.end(), [&](double e) { return e <= tol; });
}

/// max/min of consecutive N*gap pairs, as a relative variation (max - min) / min.
inline double max_doubling_variation(const RateReport& r)
{
    double worst = 0.0;
    for (std::size_t i = 1; i < r.constant_estimates.size(); ++i) {
        const double a = r.constant_estimates[i - 1], b = r.constant_estimates[i];
        const double lo = std::min(a, b), hi = std::max(a, b);
        worst = std::max(worst, lo > 0.0 ? (hi - lo) / lo : (hi > 0.0 ? INFINITY : 0.0));
    }
    return worst;
}

inline std::size_t reference_cells(const RunConfig& c, const InteractionFunction& g, std::size_t n)
{
    return std::max({c.type_cells, c.reference_factor * n, g.edges().size() - 1});
}

} // namespace detail

inline void cmd_solve_continuum(const RunConfig& c, const Options&, OutputDirectory& out)
{
    const auto g = c.graphon.build();
    const auto q = solve_continuum(g, c.horizon, c.time_steps, c.type_cells);
    out.write(detail::name(c, "effort"), detail::effort_table(q, c.delimiter));
    out.write(detail::name(c, "marginal"), detail::marginal_csv(q, c));
    auto& r = out.results();
    r["principal_value"] = principal_value(q, c.law, c.reservation);
    r["graphon"] = g.name();
    r["block_edges"] = g.edges();
    r["time_steps"] = c.time_steps;
    r["type_cells"] = c.type_cells;
    r["type_nodes"] = q.type_grid().size();
}

inline void cmd_solve_finite(const RunConfig& c, const Options&, OutputDirectory& out)
{
    const auto g = c.graphon.build();
    const auto d = discretize(g, c.agents);
    const auto fs = finite_solution(d, c.horizon, c.time_steps, c.law, c.reservation, c.sim.seed);
    Table t({"i", "u", "q0", "x0", "mean", "variance"}, c.delimiter);
    for (std::size_t i = 0; i < c.agents; ++i)
        t.row(i + 1, static_cast<double>(i + 1) / static_cast<double>(c.agents), fs.effort(0, i), fs.initial_outputs[i],
              fs.contract_laws[i].mean, fs.contract_laws[i].variance);
    out.write(detail::name(c, "agents"), t.text());
    auto& r = out.results();
    r["principal_value"] = fs.principal_value;
    r["agents"] = c.agents;
    r["graphon"] = g.name();
    if (c.time_steps % 2 == 0) {
        const auto qc = solve_continuum(g, c.horizon, c.time_steps, detail::reference_cells(c, g, c.agents));
        const auto v = near_optimal_values(g, qc, c.law, c.reservation, c.agents, c.horizon, c.time_steps, c.sim.seed);
        r["near_optimal"] = {{"projected_value", v.projected}, {"optimal_value", v.optimal}, {"gap", v.gap()}};
    } else {
        r["near_optimal"] = nullptr;  // needs an even number of time steps
    }
}

inline void cmd_simulate(const RunConfig& c, const Options& o, OutputDirectory& out)
{
    if (o.dump_paths > 1000) throw ConfigError("--dump-paths", "at most 1000 paths can be dumped");
    const auto g = c.graphon.build();
    const auto q = solve_continuum(g, c.horizon, c.time_steps, c.type_cells);

    SimConfig particles = c.sim;
    particles.paths = c.sim.population;
    particles.threads = o.threads;
    const auto summary = simulate_particles(g, q, c.law, particles);
    Table buckets({"step", "t", "bucket", "u_center", "count", "mean", "second_moment"}, c.delimiter);
    Table population({"step", "t", "mean"}, c.delimiter);
    for (std::size_t j = 0; j < summary.times.size(); ++j) {
        for (std::size_t b = 0; b < summary.buckets(); ++b)
            buckets.row(j, summary.times[j], b, summary.bucket_centers[b], summary.bucket_counts[b], summary.mean_at(j, b),
                        summary.second_moment_at(j, b));
        population.row(j, summary.times[j], summary.population_mean[j]);
    }
    out.write(detail::name(c, "buckets"), buckets.text());
    out.write(detail::name(c, "population"), population.text());

    SimConfig sim = c.sim;
    sim.threads = o.threads;
    std::vector<double> paths;
    const auto stats = sample_contracts(g, q, c.law, c.reservation, c.sim_type, sim, o.dump_paths ? &paths : nullptr, o.dump_paths);
    const auto law = contract_law(q, c.reservation, c.sim_type);
    Table contracts({"u", "count", "empirical_mean", "empirical_variance", "standard_error_mean", "skewness", "excess_kurtosis",
                     "law_mean", "law_variance"},
                    c.delimiter);
    contracts.row(c.sim_type, stats.count, stats.empirical_mean, stats.empirical_variance, stats.standard_error_mean, stats.skewness,
                  stats.excess_kurtosis, law.mean, law.variance);
    out.write(detail::name(c, "contracts"), contracts.text());

    if (o.dump_paths) {
        const std::size_t k = paths.size() / (c.sim.steps + 1);
        std::vector<std::string> header{"t"};
        for (std::size_t p = 0; p < k; ++p) header.push_back("x_" + std::to_string(p + 1));
        Table t(header, c.delimiter);
        TimeGrid time(c.horizon, c.sim.steps);
        for (std::size_t j = 0; j <= c.sim.steps; ++j) {
            std::vector<std::string> row{format_number(time[j])};
            for (std::size_t p = 0; p < k; ++p) row.push_back(format_number(paths[p * (c.sim.steps + 1) + j]));
            t.add_row(row);
        }
        out.write(detail::name(c, "paths"), t.text());
    }

    double max_abs_mean = 0.0;
    for (double m : summary.mean) max_abs_mean = std::max(max_abs_mean, std::abs(m));
    auto& r = out.results();
    r["contract"] = {{"type", c.sim_type},
                     {"count", stats.count},
                     {"empirical_mean", stats.empirical_mean},
                     {"empirical_variance", stats.empirical_variance},
                     {"standard_error_mean", stats.standard_error_mean},
                     {"skewness", stats.skewness},
                     {"excess_kurtosis", stats.excess_kurtosis},
                     {"law_mean", law.mean},
                     {"law_variance", law.variance}};
    r["particles"] = c.sim.population;
    r["max_abs_bucket_mean"] = max_abs_mean;
    r["dumped_paths"] = o.dump_paths;
}

inline void cmd_converge(const RunConfig& c, const Options& o, OutputDirectory& out)
{
    const auto g = c.graphon.build();
    ConvergenceGrid grid{c.analysis_time_steps, c.reference_factor, o.threads};
    const auto effort = effort_convergence(g, c.horizon, c.sizes, grid);
    const auto value = value_convergence(g, c.law, c.reservation, c.horizon, c.sizes, c.replications, c.sim.seed, grid);
    const auto gap = gap_convergence(g, c.law, c.reservation, c.horizon, c.sizes, c.sim.seed, grid);

    out.write(detail::name(c, "effort_rate"), detail::rate_csv(effort, "error", "N_error", c.delimiter));
    out.write(detail::name(c, "value_mse"), detail::rate_csv(value.value_mse, "mse", "N_mse", c.delimiter));
    out.write(detail::name(c, "contract_w2"), detail::rate_csv(value.contract_w2, "w2", "sqrtN_w2", c.delimiter));
    out.write(detail::name(c, "gap"), detail::rate_csv(gap.gap, "gap", "N_gap", c.delimiter, &gap.signed_difference, "signed_difference"));

    auto verdict = [](bool applicable, bool ok) { return applicable ? (ok ? "pass" : "fail") : "not-applicable"; };
    auto& r = out.results();
    r["continuum_value"] = value.continuum_value;

    json e = detail::rate_json(effort);
    const bool e_app = !detail::all_zero(effort) && effort.fitted_slope;
    e["verdict"] = verdict(e_app, e_app && *effort.fitted_slope >= -1.2 && *effort.fitted_slope <= -0.8 &&
                                      effort.constant_spread() && *effort.constant_spread() <= 2.5);
    r["effort"] = e;

    json v = detail::rate_json(value.value_mse);
    const bool v_app = !detail::all_zero(value.value_mse, 1e-16) && value.value_mse.fitted_slope;
    v["verdict"] = verdict(v_app, v_app && *value.value_mse.fitted_slope <= -0.7);
    r["value_mse"] = v;

    json w = detail::rate_json(value.contract_w2);
    const bool w_app = !detail::all_zero(value.contract_w2) && value.contract_w2.fitted_slope;
    w["verdict"] = verdict(w_app, w_app && *value.contract_w2.fitted_slope <= -0.3);
    w["within_band"] = w_app ? json(*value.contract_w2.fitted_slope >= -0.7 && *value.contract_w2.fitted_slope <= -0.3) : json(nullptr);
    r["contract_w2"] = w;

    json gp = detail::rate_json(gap.gap);
    const bool signs_ok = std::all_of(gap.signed_difference.begin(), gap.signed_difference.end(), [](double d) { return d <= 1e-9; });
    const double variation = detail::max_doubling_variation(gap.gap);
    gp["signed_difference"] = gap.signed_difference;
    gp["max_doubling_variation"] = variation;
    gp["verdict"] = detail::all_zero(gap.gap, 1e-12) ? "not-applicable" : (signs_ok && variation < 0.5 ? "pass" : "fail");
    r["gap"] = gp;
}

inline void cmd_stability(const RunConfig& c, const Options&, OutputDirectory& out)
{
    const auto g = c.graphon.build();
    StabilityGrid grid{c.horizon, c.time_steps, c.type_cells, 1024};
    Table t({"epsilon", "sup_q", "sup_g", "ratio", "w2", "bound_shape"}, c.delimiter);
    json rows = json::array();
    auto add = [&](double eps, const InteractionFunction& g2) {
        const auto s = stability_effort(g, g2, grid);
        const auto w = stability_contracts(g, g2, c.reservation, c.stability_type, grid);
        t.add_row({format_number(eps), format_number(s.sup_q), format_number(s.sup_g), s.ratio ? format_number(*s.ratio) : "na",
                   format_number(w.w2), format_number(w.bound_shape)});
        rows.push_back({{"epsilon", eps}, {"sup_q", s.sup_q}, {"sup_g", s.sup_g}, {"ratio", detail::optional_number(s.ratio)},
                        {"w2", w.w2}, {"bound_shape", w.bound_shape}});
    };
    if (c.stability_graphon) {
        add(NAN, c.stability_graphon->build());
    } else {
        for (double eps : c.epsilons) add(eps, shifted(g, eps));
    }
    out.write(detail::name(c, "stability"), t.text());
    auto& r = out.results();
    r["rows"] = rows;
    r["type"] = c.stability_type;
    if (c.graphon.family == "constant" && !c.stability_graphon)
        r["analytic_ratio_limit"] = c.horizon * std::exp(std::max(c.graphon.params.value, 0.0) * c.horizon);
}

inline void cmd_compare(const RunConfig& c, const Options&, OutputDirectory& out)
{
    const auto g = c.graphon.build();
    const auto q = solve_continuum(g, c.horizon, c.time_steps, c.type_cells);
    Table t({"u1", "u2", "verdict", "max_violation", "q0_u1", "q0_u2"}, c.delimiter);
    std::map<std::string, std::size_t> counts;
    for (std::size_t a = 0; a < c.compare_types.size(); ++a)
        for (std::size_t b = 0; b < c.compare_types.size(); ++b) {
            if (a == b) continue;
            const double u1 = c.compare_types[a], u2 = c.compare_types[b];
            const auto check = check_influence_monotonicity(g, u1, u2, q);
            t.row(u1, u2, to_string(check.verdict), check.max_violation, q.at(0.0, u1), q.at(0.0, u2));
            ++counts[to_string(check.verdict)];
        }
    out.write(detail::name(c, "verdicts"), t.text());
    auto& r = out.results();
    r["verdict_counts"] = counts;
    r["violations"] = counts.count("violated") ? counts["violated"] : 0;
}

inline void cmd_figures(const RunConfig& c, const Options&, OutputDirectory& out)
{
    constexpr std::size_t samples = 256;
    FamilyParams params = c.graphon.params;
    for (const char* family : {"G1", "G2", "G3", "G4"}) {
        const auto g = builtin(family, params);
        const std::string stem = family;

        std::vector<std::string> header{"u"};
        std::vector<double> axis(samples);
        for (std::size_t i = 0; i < samples; ++i) {
            axis[i] = static_cast<double>(i) / static_cast<double>(samples - 1);
            header.push_back(format_number(axis[i]));
        }
        Table gt(header, c.delimiter);
        for (double u : axis) {
            std::vector<std::string> row{format_number(u)};
            for (double v : axis) row.push_back(format_number(g(u, v)));
            gt.add_row(row);
        }
        out.write(detail::name(c, stem + "_graphon"), gt.text());

        const auto q = solve_continuum(g, c.horizon, c.time_steps, c.type_cells);
        out.write(detail::name(c, stem + "_marginal"), detail::marginal_csv(q, c));
        out.write(detail::name(c, stem + "_effort"), detail::effort_table(q, c.delimiter));

        const auto rows = marginal_table(q, c.law, c.reservation);
        const auto& grid = q.type_grid();
        double terminal = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) terminal = std::max(terminal, std::abs(q(q.time_grid().steps(), k) - 1.0));
        double reflection = 0.0;
        for (const auto& row : rows)
            reflection = std::max(reflection, std::abs(row.value - marginal_value(q, c.law, c.reservation, 1.0 - row.u)));
        std::vector<double> block_spread;
        for (std::size_t b = 0; b < grid.blocks(); ++b) {
            auto [first, last] = grid.block_range(b);
            double lo = INFINITY, hi = -INFINITY;
            for (std::size_t k = first; k < last; ++k) {
                lo = std::min(lo, rows[k].value);
                hi = std::max(hi, rows[k].value);
            }
            block_spread.push_back(hi - lo);
        }
        out.results()[stem] = {{"graphon", g.name()},
                               {"principal_value", principal_value(q, c.law, c.reservation)},
                               {"terminal_effort_max_deviation", terminal},
                               {"vp_reflection_max_deviation", reflection},
                               {"vp_block_spread", block_spread}};
    }
}

using Command = std::function<void(const RunConfig&, const Options&, OutputDirectory&)>;

inline const std::map<std::string, Command>& commands()
{
    static const std::map<std::string, Command> table{
        {"solve-continuum", cmd_solve_continuum}, {"solve-finite", cmd_solve_finite}, {"simulate", cmd_simulate},
        {"converge", cmd_converge},               {"stability", cmd_stability},       {"compare", cmd_compare},
        {"figures", cmd_figures},
    };
    return table;
}

/// Runs one command into c.output_directory and writes the manifest.
/// Exit codes: 0 success, 2 configuration error, 3 solver failure.
inline int run_command(const std::string& command, const RunConfig& c, const Options& o, std::ostream& err)
{
    const auto it = commands().find(command);
    if (it == commands().end()) {
        err << "unknown command '" << command << "'\n";
        return 2;
    }
    try {
        OutputDirectory out(c.output_directory, command, c.resolved, c.sim.seed);
        try {
            it->second(c, o, out);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            err << "error: " << command << " failed: " << e.what() << '\n';
            return 3;
        }
        out.finish();
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    }
}

} // namespace gcontract::cli
