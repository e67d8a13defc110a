#pragma once

// Brute-force verification of a Krylov-Safonov selection: the three clauses
//   B_r(x) in B_1(x0),  r^beta sup_{B_r(x)} u <= omega,  r^beta u(x) >= 1/omega
// evaluated over every sample, with u taken as zero outside B_1(x0). The
// quasi-metric is recomputed here from the extended-precision exponents.

#include "apde/geometry.hpp"

#include "oracles.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace oracle {

struct KsVerdict {
    bool contained = false;
    bool sup_bound = false;
    bool lower_bound = false;
    std::string detail;

    bool ok() const { return contained && sup_bound && lower_bound; }
};

inline double metric(const std::vector<double>& a, const std::vector<double>& b, const Exponents& o)
{
    const std::size_t n = o.q_space.size();
    long double d = std::pow(std::abs(static_cast<long double>(a[n]) - b[n]), o.q_time);
    for (std::size_t i = 0; i < n; ++i) {
        const long double gap = std::abs(static_cast<long double>(a[i]) - b[i]) / 2.0L;
        d = std::max(d, std::pow(gap, o.q_space[i]));
    }
    return static_cast<double>(d);
}

inline KsVerdict verify_ks(const apde::SampledFunction& u, std::size_t x0, double beta, double gamma,
                           const Exponents& o, const apde::KrylovSafonovResult& res)
{
    KsVerdict v;
    const double omega = 2.0 * std::pow(2.0 * gamma, beta);
    const auto& c0 = u.points[x0];
    const auto& x = res.point;
    const double r = res.radius;
    const std::size_t n = o.q_space.size();

    bool geometric = true;
    for (std::size_t i = 0; i < n; ++i) {
        const long double reach = 2.0L * std::pow(static_cast<long double>(r), 1.0L / o.q_space[i]);
        if (std::abs(static_cast<long double>(x[i]) - c0[i]) + reach > 2.0L * (1.0L + 1e-12L)) geometric = false;
    }
    const long double t_reach = std::pow(static_cast<long double>(r), 1.0L / o.q_time);
    if (std::abs(static_cast<long double>(x[n]) - c0[n]) + t_reach > 1.0L + 1e-12L) geometric = false;

    bool samples_inside = true;
    double sup = 0.0;
    for (std::size_t k = 0; k < u.points.size(); ++k) {
        const bool in_unit = metric(c0, u.points[k], o) < 1.0;
        if (metric(x, u.points[k], o) < r) {
            if (!in_unit) samples_inside = false;
            sup = std::max(sup, in_unit ? u.values[k] : 0.0);
        }
    }
    v.contained = geometric && samples_inside;
    const double rb = std::pow(r, beta);
    v.sup_bound = rb * sup <= omega * (1.0 + 1e-12);
    v.lower_bound = rb * u.values[res.index] >= (1.0 - 1e-12) / omega;
    v.detail = "r=" + std::to_string(r) + " sup=" + std::to_string(sup) + " u(x)=" + std::to_string(u.values[res.index]);
    return v;
}

} // namespace oracle
