#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gcontract/grid.hpp"
#include "gcontract/profile.hpp"

namespace gcontract {

/// Interaction function G : [0,1]^2 -> R, Lipschitz on every rectangle of its
/// block partition. G(u, v) is the weight with which type v acts on type u.
/// Immutable once built.
class InteractionFunction {
public:
    using Kernel = std::function<double(double, double)>;

    explicit InteractionFunction(Kernel eval, std::vector<double> edges = {0.0, 1.0},
                                 std::optional<double> sup_norm_hint = std::nullopt, std::string name = "custom")
        : eval_(std::move(eval)), edges_(std::move(edges)), sup_hint_(sup_norm_hint), name_(std::move(name))
    {
        if (!eval_) throw std::invalid_argument("interaction function needs a kernel");
        TypeGrid(edges_, edges_.size() - 1); // validates the partition
    }

    double operator()(double u, double v) const { return eval_(u, v); }

    const std::vector<double>& edges() const { return edges_; }
    std::optional<double> sup_norm_hint() const { return sup_hint_; }
    const std::string& name() const { return name_; }

private:
    Kernel eval_;
    std::vector<double> edges_;
    std::optional<double> sup_hint_;
    std::string name_;
};

/// Parameters of the builtin families. Unused fields are ignored.
struct FamilyParams {
    double theta = 10.0;            // logistic steepness
    long blocks = 5;                // L for block-product / block-logistic
    double value = 1.0;             // constant family
    Profile profile = Profile::constant(1.0); // separable families
};

/// Builtin graphon families:
///   constant          G = c
///   row-separable     G(u,v) = g(u)
///   column-separable  G(u,v) = g(v)
///   sine-distance     G(u,v) = sin|u - v|                          (alias G1)
///   logistic          G(u,v) = 1 / (1 + exp(theta (u - v)))       (alias G2)
///   block-product     G(u,v) = ceil(uL)/L * ceil(vL)/L            (alias G3)
///   block-logistic    G(u,v) = L / (1 + exp((i-1) L (u - v))) when u, v share block i, else 0  (alias G4)
/// Blocks are the half-open intervals ((i-1)/L, i/L]; u = 0 belongs to block 1.
inline InteractionFunction builtin(const std::string& family, const FamilyParams& p = {})
{
    auto uniform_edges = [](long L) {
        std::vector<double> e(static_cast<std::size_t>(L) + 1);
        for (long i = 0; i <= L; ++i) e[static_cast<std::size_t>(i)] = static_cast<double>(i) / static_cast<double>(L);
        e.back() = 1.0;
        return e;
    };
    auto need_blocks = [&] {
        if (p.blocks <= 0) throw std::invalid_argument("family '" + family + "' needs L > 0");
    };

    if (family == "constant") {
        if (!std::isfinite(p.value)) throw std::invalid_argument("constant graphon value must be finite");
        double c = p.value;
        return InteractionFunction([c](double, double) { return c; }, {0.0, 1.0}, std::abs(c), "constant");
    }
    if (family == "row-separable") {
        Profile g = p.profile;
        return InteractionFunction([g](double u, double) { return g(u); }, g.edges(), g.sup_abs(), "row-separable");
    }
    if (family == "column-separable") {
        Profile g = p.profile;
        return InteractionFunction([g](double, double v) { return g(v); }, g.edges(), g.sup_abs(), "column-separable");
    }
    if (family == "sine-distance" || family == "G1") {
        return InteractionFunction([](double u, double v) { return std::sin(std::abs(u - v)); }, {0.0, 1.0},
                                   std::sin(1.0), "sine-distance");
    }
    if (family == "logistic" || family == "G2") {
        if (!(p.theta > 0.0) || !std::isfinite(p.theta)) throw std::invalid_argument("logistic graphon needs theta > 0");
        double th = p.theta;
        return InteractionFunction([th](double u, double v) { return 1.0 / (1.0 + std::exp(th * (u - v))); },
                                   {0.0, 1.0}, 1.0 / (1.0 + std::exp(-th)), "logistic");
    }
    if (family == "block-product" || family == "G3") {
        need_blocks();
        auto edges = uniform_edges(p.blocks);
        double L = static_cast<double>(p.blocks);
        return InteractionFunction(
            [edges, L](double u, double v) {
                double bu = static_cast<double>(block_index(edges, u) + 1);
                double bv = static_cast<double>(block_index(edges, v) + 1);
                return (bu / L) * (bv / L);
            },
            edges, 1.0, "block-product");
    }
    if (family == "block-logistic" || family == "G4") {
        need_blocks();
        auto edges = uniform_edges(p.blocks);
        double L = static_cast<double>(p.blocks);
        return InteractionFunction(
            [edges, L](double u, double v) {
                std::size_t bu = block_index(edges, u);
                if (bu != block_index(edges, v)) return 0.0;
                return L / (1.0 + std::exp(static_cast<double>(bu) * L * (u - v)));
            },
            edges, L / (1.0 + std::exp(-(L - 1.0))), "block-logistic");
    }
    throw std::invalid_argument("unknown graphon family '" + family + "'");
}

/// Piecewise-constant graphon: values[i][j] on block_i x block_j.
inline InteractionFunction step_graphon(std::vector<double> breakpoints, std::vector<std::vector<double>> values)
{
    auto edges = edges_from_breakpoints(breakpoints);
    const std::size_t m = edges.size() - 1;
    if (values.size() != m) throw std::invalid_argument("step graphon needs one row per block");
    double sup = 0.0;
    std::vector<double> flat;
    flat.reserve(m * m);
    for (const auto& row : values) {
        if (row.size() != m) throw std::invalid_argument("step graphon rows must have one value per block");
        for (double v : row) {
            if (!std::isfinite(v)) throw std::invalid_argument("step graphon values must be finite");
            sup = std::max(sup, std::abs(v));
            flat.push_back(v);
        }
    }
    return InteractionFunction(
        [edges, flat, m](double u, double v) { return flat[block_index(edges, u) * m + block_index(edges, v)]; },
        edges, sup, "step");
}

namespace detail {

inline std::vector<double> split_numbers(const std::string& line, std::size_t line_no)
{
    std::string s = line;
    for (char& c : s)
        if (c == ',' || c == ';' || c == '\t') c = ' ';
    std::istringstream in(s);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
        std::size_t used = 0;
        double v;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("step graphon line " + std::to_string(line_no) + ": not a number '" + tok + "'");
        }
        if (used != tok.size())
            throw std::invalid_argument("step graphon line " + std::to_string(line_no) + ": not a number '" + tok + "'");
        out.push_back(v);
    }
    return out;
}

} // namespace detail

/// Parses the step-graphon text format: the first non-comment line lists the
/// interior breakpoints (empty for a single block), followed by m rows of m
/// block values. Separators may be commas, semicolons, tabs or spaces; lines
/// starting with '#' are comments.
inline InteractionFunction load_step_graphon(std::istream& in)
{
    std::string line;
    std::vector<std::pair<std::size_t, std::string>> lines;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto first = line.find_first_not_of(" \t");
        if (first != std::string::npos && line[first] == '#') continue;
        lines.emplace_back(no, line);
    }
    if (lines.empty()) throw std::invalid_argument("step graphon: missing breakpoint row");
    auto breakpoints = detail::split_numbers(lines.front().second, lines.front().first);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto row = detail::split_numbers(lines[i].second, lines[i].first);
        if (row.empty()) continue;
        rows.push_back(std::move(row));
    }
    if (rows.size() != breakpoints.size() + 1)
        throw std::invalid_argument("step graphon: expected " + std::to_string(breakpoints.size() + 1) +
                                    " value rows, found " + std::to_string(rows.size()));
    return step_graphon(std::move(breakpoints), std::move(rows));
}

inline InteractionFunction load_step_graphon(const std::string& text_or_path, bool is_path)
{
    if (is_path) {
        std::ifstream f(text_or_path);
        if (!f) throw std::invalid_argument("cannot open step graphon file '" + text_or_path + "'");
        return load_step_graphon(f);
    }
    std::istringstream s(text_or_path);
    return load_step_graphon(s);
}

/// G^N_{i,j} = G(i/N, j/N) for agents i, j = 1..N (stored 0-based, row-major).
struct DiscreteInteraction {
    std::size_t n = 0;
    std::vector<double> weights;

    double operator()(std::size_t i, std::size_t j) const { return weights[i * n + j]; }
};

inline DiscreteInteraction discretize(const InteractionFunction& g, std::size_t n)
{
    if (n == 0) throw std::invalid_argument("discretize: agent count must be >= 1");
    DiscreteInteraction d{n, std::vector<double>(n * n)};
    const double dn = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) d.weights[i * n + j] = g(static_cast<double>(i + 1) / dn, static_cast<double>(j + 1) / dn);
    return d;
}

/// max |G1 - G2| over the block-aware mesh x mesh sample grid built on the
/// union of both partitions (block corners included, sampled one-sidedly).
inline double sup_distance(const InteractionFunction& g1, const InteractionFunction& g2, std::size_t mesh)
{
    if (mesh < 2) throw std::invalid_argument("sup_distance: mesh must be >= 2");
    auto edges = merge_edges(g1.edges(), g2.edges());
    TypeGrid grid(edges, std::max(mesh, edges.size() - 1));
    double best = 0.0;
    for (const auto& a : grid.nodes())
        for (const auto& b : grid.nodes()) best = std::max(best, std::abs(g1(a.eval_u, b.eval_u) - g2(a.eval_u, b.eval_u)));
    return best;
}

/// ||G||_inf: the family's analytic value when known, else sampled on the mesh.
inline double sup_norm(const InteractionFunction& g, std::size_t mesh = 1024)
{
    if (auto h = g.sup_norm_hint()) return *h;
    InteractionFunction zero([](double, double) { return 0.0; });
    return sup_distance(g, zero, mesh);
}

/// G + eps everywhere; keeps the partition.
inline InteractionFunction shifted(const InteractionFunction& g, double eps)
{
    std::optional<double> hint;
    if (auto h = g.sup_norm_hint()) hint = *h + std::abs(eps);
    return InteractionFunction([g, eps](double u, double v) { return g(u, v) + eps; }, g.edges(), hint,
                               g.name() + "+shift");
}

} // namespace gcontract
