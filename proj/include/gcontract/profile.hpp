#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <iterator>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace gcontract {

/// Index of the half-open block (b_{i-1}, b_i] holding u, given the full edge
/// list 0 = b_0 < ... < b_m = 1. u = 0 belongs to the first block.
inline std::size_t block_index(std::span<const double> edges, double u)
{
    if (edges.size() < 2) throw std::invalid_argument("block_index: need at least two edges");
    auto first = edges.begin() + 1;
    auto last = edges.end() - 1;
    return static_cast<std::size_t>(std::lower_bound(first, last, u) - first);
}

/// Checks 0 < b_1 < ... < b_{m-1} < 1 (all finite) and returns {0, b..., 1}.
inline std::vector<double> edges_from_breakpoints(std::span<const double> interior)
{
    std::vector<double> edges;
    edges.reserve(interior.size() + 2);
    edges.push_back(0.0);
    for (double b : interior) {
        if (!std::isfinite(b) || b <= edges.back() || b >= 1.0)
            throw std::invalid_argument("breakpoints must be finite and strictly increasing in (0,1)");
        edges.push_back(b);
    }
    edges.push_back(1.0);
    return edges;
}

/// Union of two edge lists over [0,1].
inline std::vector<double> merge_edges(std::span<const double> a, std::span<const double> b)
{
    std::vector<double> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// A scalar function of the agent type u in [0,1]: constant, affine a + b u,
/// a per-block table, or an arbitrary callable. Used for initial output means
/// and deviations, reservation utilities and separable graphon profiles.
class Profile {
public:
    struct Constant { double value; };
    struct Affine { double intercept; double slope; };
    struct Table { std::vector<double> edges; std::vector<double> values; };
    struct Custom { std::function<double(double)> fn; std::vector<double> edges; };

    Profile() : rep_(Constant{0.0}) {}

    static Profile constant(double c)
    {
        if (!std::isfinite(c)) throw std::invalid_argument("profile constant must be finite");
        return Profile(Constant{c});
    }

    static Profile affine(double intercept, double slope)
    {
        if (!std::isfinite(intercept) || !std::isfinite(slope))
            throw std::invalid_argument("profile coefficients must be finite");
        return Profile(Affine{intercept, slope});
    }

    /// values[i] applies on block i of the partition defined by the interior breakpoints.
    static Profile table(std::vector<double> breakpoints, std::vector<double> values)
    {
        auto edges = edges_from_breakpoints(breakpoints);
        if (values.size() + 1 != edges.size())
            throw std::invalid_argument("profile table needs one value per block");
        for (double v : values)
            if (!std::isfinite(v)) throw std::invalid_argument("profile table values must be finite");
        return Profile(Table{std::move(edges), std::move(values)});
    }

    /// fn is expected to be Lipschitz on each block of `edges`.
    static Profile custom(std::function<double(double)> fn, std::vector<double> edges = {0.0, 1.0})
    {
        return Profile(Custom{std::move(fn), std::move(edges)});
    }

    double operator()(double u) const
    {
        return std::visit([u](const auto& r) -> double {
            using R = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<R, Constant>) return r.value;
            else if constexpr (std::is_same_v<R, Affine>) return r.intercept + r.slope * u;
            else if constexpr (std::is_same_v<R, Table>) return r.values[block_index(r.edges, u)];
            else return r.fn(u);
        }, rep_);
    }

    /// Block edges on which the profile is Lipschitz; {0, 1} for smooth kinds.
    std::vector<double> edges() const
    {
        if (auto t = std::get_if<Table>(&rep_)) return t->edges;
        if (auto c = std::get_if<Custom>(&rep_)) return c->edges;
        return {0.0, 1.0};
    }

    /// sup |f| over [0,1]; exact for constant/affine/table, sampled for custom.
    double sup_abs() const
    {
        return std::visit([](const auto& r) -> double {
            using R = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<R, Constant>) return std::abs(r.value);
            else if constexpr (std::is_same_v<R, Affine>)
                return std::max(std::abs(r.intercept), std::abs(r.intercept + r.slope));
            else if constexpr (std::is_same_v<R, Table>) {
                double m = 0.0;
                for (double v : r.values) m = std::max(m, std::abs(v));
                return m;
            } else {
                double m = 0.0;
                for (int k = 0; k <= 4096; ++k) m = std::max(m, std::abs(r.fn(k / 4096.0)));
                return m;
            }
        }, rep_);
    }

    /// inf f over [0,1]; exact except for custom profiles (sampled).
    double min_value() const
    {
        return std::visit([](const auto& r) -> double {
            using R = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<R, Constant>) return r.value;
            else if constexpr (std::is_same_v<R, Affine>) return std::min(r.intercept, r.intercept + r.slope);
            else if constexpr (std::is_same_v<R, Table>) return *std::min_element(r.values.begin(), r.values.end());
            else {
                double m = r.fn(0.0);
                for (int k = 1; k <= 4096; ++k) m = std::min(m, r.fn(k / 4096.0));
                return m;
            }
        }, rep_);
    }

    const auto& representation() const { return rep_; }

private:
    template <class R>
    explicit Profile(R r) : rep_(std::move(r)) {}

    std::variant<Constant, Affine, Table, Custom> rep_;
};

} // namespace gcontract
