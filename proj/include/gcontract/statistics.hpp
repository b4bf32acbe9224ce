#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace gcontract {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x)
    {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
        else comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Sample statistics of contract draws. variance is the unbiased estimator;
/// skewness and excess kurtosis use the population central moments.
struct ContractSampleStats {
    std::size_t count = 0;
    double empirical_mean = 0.0;
    double empirical_variance = 0.0;
    double standard_error_mean = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};

/// Two-pass moments in index order, so the result only depends on the data.
inline ContractSampleStats sample_stats(std::span<const double> x)
{
    ContractSampleStats s;
    s.count = x.size();
    if (x.empty()) return s;
    CompensatedSum sum;
    for (double v : x) sum.add(v);
    const double n = static_cast<double>(x.size());
    const double mean = sum.value() / n;
    CompensatedSum m2, m3, m4;
    for (double v : x) {
        double d = v - mean;
        double d2 = d * d;
        m2.add(d2);
        m3.add(d2 * d);
        m4.add(d2 * d2);
    }
    s.empirical_mean = mean;
    s.empirical_variance = x.size() > 1 ? m2.value() / (n - 1.0) : 0.0;
    s.standard_error_mean = std::sqrt(s.empirical_variance / n);
    const double c2 = m2.value() / n;
    if (c2 > 0.0) {
        s.skewness = (m3.value() / n) / std::pow(c2, 1.5);
        s.excess_kurtosis = (m4.value() / n) / (c2 * c2) - 3.0;
    }
    return s;
}

} // namespace gcontract
