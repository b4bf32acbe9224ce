#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "gcontract/profile.hpp"

namespace gcontract {

/// Uniform time grid 0 = t_0 < ... < t_M = T.
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps)
    {
        if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be positive");
        if (steps < 1) throw std::invalid_argument("time steps must be >= 1");
    }

    double horizon() const { return horizon_; }
    std::size_t steps() const { return steps_; }
    std::size_t size() const { return steps_ + 1; }
    double step() const { return horizon_ / static_cast<double>(steps_); }

    double operator[](std::size_t j) const
    {
        if (j == steps_) return horizon_;
        return horizon_ * static_cast<double>(j) / static_cast<double>(steps_);
    }

    /// Cell index j and weight w with t = (1-w) t_j + w t_{j+1}.
    std::pair<std::size_t, double> locate(double t) const
    {
        if (!(t >= 0.0 && t <= horizon_)) throw std::out_of_range("time outside [0, T]");
        const double s = t / horizon_ * static_cast<double>(steps_);
        const double r = std::round(s);
        if (std::abs(s - r) <= 1e-9 * std::max(1.0, s)) {  // on a node: exact
            const auto j = static_cast<std::size_t>(r);
            return j >= steps_ ? std::pair{steps_ - 1, 1.0} : std::pair{j, 0.0};
        }
        auto j = static_cast<std::size_t>(std::floor(s));
        if (j >= steps_) return {steps_ - 1, 1.0};
        return {j, s - static_cast<double>(j)};
    }

private:
    double horizon_;
    std::size_t steps_;
};

/// One node of a block-aware type grid. `eval_u` is the coordinate at which
/// functions are sampled: the left endpoint of every block but the first is
/// nudged one ulp inside its block so piecewise functions return right limits.
struct TypeNode {
    double u;
    double eval_u;
    std::size_t block;
    double weight; // composite trapezoid weight on [0,1]
};

/// Union of per-block uniform grids. `cells` cells are distributed over the
/// blocks in proportion to their widths (at least one per block); every block
/// carries its own endpoint nodes, so a grid with m blocks has cells + m nodes
/// and no cell straddles a block edge.
class TypeGrid {
public:
    TypeGrid(std::vector<double> edges, std::size_t cells) : edges_(std::move(edges))
    {
        if (edges_.size() < 2 || edges_.front() != 0.0 || edges_.back() != 1.0)
            throw std::invalid_argument("type grid edges must run from 0 to 1");
        for (std::size_t i = 1; i < edges_.size(); ++i)
            if (!(edges_[i] > edges_[i - 1])) throw std::invalid_argument("type grid edges must increase");
        const std::size_t m = edges_.size() - 1;
        if (cells < m) throw std::invalid_argument("type cells must be at least the number of blocks");

        cells_per_block_ = allocate(cells, m);
        block_start_.resize(m + 1, 0);
        for (std::size_t b = 0; b < m; ++b) {
            const double a = edges_[b];
            const double z = edges_[b + 1];
            const std::size_t k = cells_per_block_[b];
            const double h = (z - a) / static_cast<double>(k);
            block_start_[b] = nodes_.size();
            for (std::size_t j = 0; j <= k; ++j) {
                double u = (j == k) ? z : a + (z - a) * static_cast<double>(j) / static_cast<double>(k);
                double eval_u = (j == 0 && b > 0) ? std::nextafter(a, 2.0) : u;
                double w = (j == 0 || j == k) ? 0.5 * h : h;
                nodes_.push_back({u, eval_u, b, w});
            }
        }
        block_start_[m] = nodes_.size();
    }

    const std::vector<double>& edges() const { return edges_; }
    std::size_t blocks() const { return edges_.size() - 1; }
    std::size_t cells() const { return std::accumulate(cells_per_block_.begin(), cells_per_block_.end(), std::size_t{0}); }
    std::size_t size() const { return nodes_.size(); }
    const TypeNode& operator[](std::size_t k) const { return nodes_[k]; }
    std::span<const TypeNode> nodes() const { return nodes_; }

    /// Node index range [first, last) of block b.
    std::pair<std::size_t, std::size_t> block_range(std::size_t b) const { return {block_start_[b], block_start_[b + 1]}; }

    /// Nearest node to u among the nodes of the block owning u.
    std::size_t nearest(double u) const
    {
        check(u);
        auto [first, last] = block_range(block_index(edges_, u));
        std::size_t best = first;
        for (std::size_t k = first; k < last; ++k)
            if (std::abs(nodes_[k].u - u) < std::abs(nodes_[best].u - u)) best = k;
        return best;
    }

    /// Neighbouring nodes (k, k+1) in u's block and the linear weight of k+1.
    std::pair<std::size_t, double> locate(double u) const
    {
        check(u);
        const std::size_t b = block_index(edges_, u);
        const auto [first, last] = block_range(b);
        const double a = edges_[b];
        const double width = edges_[b + 1] - a;
        const double s = (u - a) / width * static_cast<double>(cells_per_block_[b]);
        const double r = std::round(s);
        if (std::abs(s - r) <= 1e-9 * std::max(1.0, s)) {  // on a node: exact
            const auto j = static_cast<std::size_t>(r);
            return j >= cells_per_block_[b] ? std::pair{last - 2, 1.0} : std::pair{first + j, 0.0};
        }
        auto j = static_cast<std::size_t>(std::clamp(std::floor(s), 0.0, static_cast<double>(cells_per_block_[b] - 1)));
        std::size_t k = first + j;
        double w = (u - nodes_[k].u) / (nodes_[k + 1].u - nodes_[k].u);
        (void)last;
        return {k, std::clamp(w, 0.0, 1.0)};
    }

private:
    static void check(double u)
    {
        if (!(u >= 0.0 && u <= 1.0)) throw std::out_of_range("type outside [0, 1]");
    }

    std::vector<std::size_t> allocate(std::size_t cells, std::size_t m) const
    {
        std::vector<std::size_t> k(m, 1);
        std::vector<std::pair<double, std::size_t>> remainder;
        std::size_t used = 0;
        for (std::size_t b = 0; b < m; ++b) {
            double share = static_cast<double>(cells) * (edges_[b + 1] - edges_[b]);
            // guard against 0.2 * 5 = 0.99999...
            auto whole = static_cast<std::size_t>(std::floor(share + 1e-9));
            k[b] = std::max<std::size_t>(1, whole);
            remainder.emplace_back(share - static_cast<double>(whole), b);
            used += k[b];
        }
        std::stable_sort(remainder.begin(), remainder.end(), [](auto& x, auto& y) { return x.first > y.first; });
        for (std::size_t i = 0; used < cells; i = (i + 1) % m, ++used) ++k[remainder[i].second];
        while (used > cells) {
            auto it = std::max_element(k.begin(), k.end());
            --*it;
            --used;
        }
        return k;
    }

    std::vector<double> edges_;
    std::vector<std::size_t> cells_per_block_;
    std::vector<std::size_t> block_start_;
    std::vector<TypeNode> nodes_;
};

/// Composite trapezoid rule for samples on a uniform grid of spacing h.
inline double trapezoid(std::span<const double> f, double h)
{
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * h;
}

/// Composite Simpson rule; needs an odd number of samples.
inline double simpson(std::span<const double> f, double h)
{
    if (f.size() < 3 || f.size() % 2 == 0) throw std::invalid_argument("simpson needs an even number of intervals");
    double s = f.front() + f.back();
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += (i % 2 ? 4.0 : 2.0) * f[i];
    return s * h / 3.0;
}

/// Classical fourth-order Runge-Kutta step y <- y + RK4(f, t, h) for
/// y' = f(t, y). `f(t, y, dy)` writes the derivative into dy. Negative h
/// integrates backward in time.
template <class Rhs>
class Rk4 {
public:
    Rk4(Rhs rhs, std::size_t dim) : rhs_(std::move(rhs)), k1_(dim), k2_(dim), k3_(dim), k4_(dim), tmp_(dim) {}

    void step(double t, double h, std::vector<double>& y)
    {
        const std::size_t n = y.size();
        rhs_(t, std::span<const double>(y), std::span<double>(k1_));
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k1_[i];
        rhs_(t + 0.5 * h, std::span<const double>(tmp_), std::span<double>(k2_));
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k2_[i];
        rhs_(t + 0.5 * h, std::span<const double>(tmp_), std::span<double>(k3_));
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * k3_[i];
        rhs_(t + h, std::span<const double>(tmp_), std::span<double>(k4_));
        for (std::size_t i = 0; i < n; ++i) y[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }

private:
    Rhs rhs_;
    std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

/// Dense row-major matrix-vector product out = a * x.
inline void matvec(std::span<const double> a, std::size_t rows, std::span<const double> x, std::span<double> out)
{
    const std::size_t cols = x.size();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = a.data() + r * cols;
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += row[c] * x[c];
        out[r] = s;
    }
}

} // namespace gcontract
