#pragma once

// Reference computations written independently of the library: extended
// precision exponents, a face-by-face flux loop and an energy loop.

#include "apde/grid.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

struct Exponents {
    long double p_bar;
    long double sigma;
    long double alpha;
    std::vector<long double> alpha_i;
    std::vector<long double> q_space;
    long double q_time;
};

inline Exponents exponents(const std::vector<double>& p)
{
    Exponents o{};
    const long double n = static_cast<long double>(p.size());
    long double inv = 0.0L;
    for (double v : p) inv += 1.0L / static_cast<long double>(v);
    o.p_bar = n / inv;
    o.sigma = n * (o.p_bar - 2.0L) + o.p_bar;
    o.alpha = n / o.sigma;
    for (double v : p) {
        const long double pi = v;
        const long double a = (n * (o.p_bar - pi) + o.p_bar) / (o.sigma * pi);
        o.alpha_i.push_back(a);
        o.q_space.push_back(1.0L / (o.sigma * a));
    }
    o.q_time = 1.0L / o.sigma;
    return o;
}

inline double phi(double d, double p)
{
    return std::pow(std::abs(d), p - 2.0) * d;
}

// Value of u at a multi-index, with zero outside the grid.
inline double at(const apde::Field& u, const std::vector<long>& idx)
{
    const auto& g = u.grid;
    std::size_t lin = 0;
    for (std::size_t a = 0; a < g.rank(); ++a) {
        if (idx[a] < 0 || idx[a] >= static_cast<long>(g.dims[a])) return 0.0;
        lin = lin * g.dims[a] + static_cast<std::size_t>(idx[a]);
    }
    return u.values[lin];
}

inline std::vector<long> unravel(const apde::Grid& g, std::size_t lin)
{
    std::vector<long> idx(g.rank());
    for (std::size_t a = g.rank(); a-- > 0;) {
        idx[a] = static_cast<long>(lin % g.dims[a]);
        lin /= g.dims[a];
    }
    return idx;
}

// Divergence of the face fluxes phi_p((u_next - u)/h) / h, every face visited
// explicitly from both neighbouring cells.
inline std::vector<double> flux_divergence(const apde::Field& u, const std::vector<double>& p)
{
    const auto& g = u.grid;
    std::vector<double> out(g.size(), 0.0);
    for (std::size_t lin = 0; lin < g.size(); ++lin) {
        auto idx = unravel(g, lin);
        double sum = 0.0;
        for (std::size_t a = 0; a < g.rank(); ++a) {
            const double h = g.spacing[a];
            const double c = at(u, idx);
            idx[a] += 1;
            const double up = at(u, idx);
            idx[a] -= 2;
            const double dn = at(u, idx);
            idx[a] += 1;
            sum += (phi((up - c) / h, p[a]) - phi((c - dn) / h, p[a])) / h;
        }
        out[lin] = sum;
    }
    return out;
}

// Sum over all faces (including those to the zero ghost layer) of
// |D|^p / p times the cell volume.
inline double energy(const apde::Field& u, const std::vector<double>& p)
{
    const auto& g = u.grid;
    long double sum = 0.0L;
    for (std::size_t lin = 0; lin < g.size(); ++lin) {
        auto idx = unravel(g, lin);
        for (std::size_t a = 0; a < g.rank(); ++a) {
            const double c = at(u, idx);
            idx[a] += 1;
            const double up = at(u, idx);
            idx[a] -= 1;
            sum += std::pow(std::abs((up - c) / g.spacing[a]), p[a]) / p[a];
            if (idx[a] == 0) sum += std::pow(std::abs(c / g.spacing[a]), p[a]) / p[a];
        }
    }
    return static_cast<double>(sum) * g.cell_volume();
}

// Closed-form solution of the orthotropic equation with equal exponents,
// computed from scratch for the given mass. The constant C comes from the
// volume of the l^q unit ball, q = p/(p-1), and a Beta integral.
struct Barenblatt {
    double p;
    int n;
    double alpha;
    double k;
    double c;

    Barenblatt(double p_, int n_, double mass) : p(p_), n(n_)
    {
        alpha = n / (n * (p - 2.0) + p);
        k = ((p - 2.0) / p) * std::pow(alpha / n, 1.0 / (p - 1.0));
        const double q = p / (p - 1.0);
        const double m = (p - 1.0) / (p - 2.0);
        const double nq = n / q;
        // integral over R^N of (C - k sum |y_i|^q)_+^m = C^{m+N/q} k^{-N/q} I
        const double ball = std::pow(2.0 * std::tgamma(1.0 + 1.0 / q), n) / std::tgamma(1.0 + nq);
        const double i = ball * nq * std::tgamma(m + 1.0) * std::tgamma(nq) / std::tgamma(m + nq + 1.0);
        c = std::pow(mass * std::pow(k, nq) / i, 1.0 / (m + nq));
    }

    double operator()(const double* x, double t) const
    {
        const double q = p / (p - 1.0);
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += std::pow(std::abs(x[i] * std::pow(t, -alpha / n)), q);
        const double base = c - k * s;
        if (base <= 0.0) return 0.0;
        return std::pow(t, -alpha) * std::pow(base, (p - 1.0) / (p - 2.0));
    }
};

} // namespace oracle
