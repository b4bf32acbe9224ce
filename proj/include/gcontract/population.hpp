#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "gcontract/profile.hpp"
#include "gcontract/random.hpp"

namespace gcontract {

/// Type-indexed law of the initial output: a point mass at m(u) or a
/// Gaussian N(m(u), s(u)^2).
class InitialLaw {
public:
    enum class Kind { point_mass, gaussian };

    static InitialLaw point_mass(Profile mean = Profile::constant(0.0)) { return {Kind::point_mass, std::move(mean), Profile::constant(0.0)}; }
    static InitialLaw gaussian(Profile mean, Profile std_dev) { return {Kind::gaussian, std::move(mean), std::move(std_dev)}; }

    Kind kind() const { return kind_; }
    const Profile& mean() const { return mean_; }
    const Profile& std_dev() const { return std_; }

    double mean_at(double u) const
    {
        check(u);
        return mean_(u);
    }

    double second_moment(double u) const
    {
        check(u);
        double m = mean_(u);
        double s = kind_ == Kind::gaussian ? std_(u) : 0.0;
        return m * m + s * s;
    }

    double sample(double u, RngStream& rng) const
    {
        check(u);
        double m = mean_(u);
        if (kind_ == Kind::point_mass) return m;
        double s = std_(u);
        double z = rng.normal();
        return s == 0.0 ? m : m + s * z;
    }

private:
    InitialLaw(Kind k, Profile m, Profile s) : kind_(k), mean_(std::move(m)), std_(std::move(s))
    {
        if (kind_ == Kind::gaussian) {
            if (std_.min_value() < 0.0) throw std::invalid_argument("initial output std must be nonnegative");
        }
    }

    static void check(double u)
    {
        if (!(u >= 0.0 && u <= 1.0)) throw std::out_of_range("type outside [0, 1]");
    }

    Kind kind_;
    Profile mean_;
    Profile std_;
};

inline double mean_initial(const InitialLaw& law, double u) { return law.mean_at(u); }
inline double sample_initial(const InitialLaw& law, double u, RngStream& rng) { return law.sample(u, rng); }

/// Reservation utility R_a(u).
struct ReservationUtility {
    Profile r = Profile::constant(0.0);

    double operator()(double u) const
    {
        if (!(u >= 0.0 && u <= 1.0)) throw std::out_of_range("type outside [0, 1]");
        return r(u);
    }
};

} // namespace gcontract
