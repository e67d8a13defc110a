#include "apde/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>

namespace apde {
namespace {

// Neumaier-compensated sum of reciprocals.
double sum_reciprocals(std::span<const double> p)
{
    double sum = 0.0;
    double carry = 0.0;
    for (double v : p) {
        const double term = 1.0 / v;
        const double t = sum + term;
        if (std::abs(sum) >= std::abs(term))
            carry += (sum - t) + term;
        else
            carry += (term - t) + sum;
        sum = t;
    }
    return sum + carry;
}

std::string fmt(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace

ExponentData derive_exponents(std::span<const double> p)
{
    if (p.empty()) throw ExponentError("exponent vector is empty");
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!std::isfinite(p[i]) || p[i] <= 0.0)
            throw ExponentError("p[" + std::to_string(i + 1) + "] = " + fmt(p[i]) + " is not a finite positive number");
        if (p[i] <= 1.0)
            throw ExponentError("p[" + std::to_string(i + 1) + "] = " + fmt(p[i]) + " must exceed 1");
    }

    ExponentData e;
    e.n = static_cast<int>(p.size());
    e.p.assign(p.begin(), p.end());
    const double n = e.n;
    e.p_bar = n / sum_reciprocals(p);
    e.sigma = n * (e.p_bar - 2.0) + e.p_bar;
    e.alpha = n / e.sigma;
    e.alpha_i.resize(p.size());
    e.q_space.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double numer = n * (e.p_bar - p[i]) + e.p_bar;
        e.alpha_i[i] = numer / (e.sigma * p[i]);
        e.q_space[i] = p[i] / numer;
    }
    e.q_time = 1.0 / e.sigma;

    double q_max = e.q_time;
    for (double q : e.q_space) q_max = std::max(q_max, q);
    e.gamma = std::max(1.0, std::exp2(q_max - 1.0));
    return e;
}

ExponentData derive_exponents(std::span<const double> p, int n)
{
    if (n < 1) throw ExponentError("dimension must be at least 1");
    if (static_cast<int>(p.size()) != n)
        throw ExponentError("expected " + std::to_string(n) + " exponents, got " + std::to_string(p.size()));
    return derive_exponents(p);
}

AdmissibilityReport validate_admissible(const ExponentData& e)
{
    AdmissibilityReport report;
    const double upper = e.p_bar * (1.0 + 1.0 / e.n);
    for (std::size_t i = 0; i < e.p.size(); ++i) {
        const std::string name = "p_" + std::to_string(i + 1);
        if (!(e.p[i] > 2.0))
            report.violations.push_back(name + " = " + fmt(e.p[i]) + " violates p_i > 2");
        if (!(e.p[i] < upper))
            report.violations.push_back(name + " = " + fmt(e.p[i]) + " violates p_i < p_bar(1+1/N) = " + fmt(upper));
    }
    if (!(e.p_bar < e.n))
        report.violations.push_back("p_bar = " + fmt(e.p_bar) + " violates p_bar < N = " + std::to_string(e.n));
    report.ok = report.violations.empty();
    return report;
}

double quasi_metric(std::span<const double> z1, std::span<const double> z2, const ExponentData& e)
{
    const std::size_t n = static_cast<std::size_t>(e.n);
    if (z1.size() != n + 1 || z2.size() != n + 1)
        throw std::invalid_argument("quasi_metric: points must have N+1 coordinates");
    double d = std::pow(std::abs(z1[n] - z2[n]), e.q_time);
    for (std::size_t i = 0; i < n; ++i)
        d = std::max(d, std::pow(std::abs(0.5 * (z1[i] - z2[i])), e.q_space[i]));
    return d;
}

} // namespace apde
