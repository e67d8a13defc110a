#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace apde {

/// Exponent vector p and every scaling constant derived from it.
///
/// For p = (p_1..p_N) with harmonic mean p_bar:
///   sigma     = N (p_bar - 2) + p_bar
///   alpha     = N / sigma                       (amplitude decay rate)
///   alpha_i   = (N (p_bar - p_i) + p_bar) / (sigma p_i)   (support spread rates)
///   q_space_i = 1 / (sigma alpha_i),  q_time = 1 / sigma  (quasi-metric exponents)
///   gamma     = max(1, 2^(q_max - 1))           (quasi-triangle constant)
struct ExponentData {
    int n = 0;
    std::vector<double> p;
    double p_bar = 0.0;
    double sigma = 0.0;
    double alpha = 0.0;
    std::vector<double> alpha_i;
    std::vector<double> q_space;
    double q_time = 0.0;
    double gamma = 1.0;

    bool operator==(const ExponentData&) const = default;
};

class ExponentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Throws ExponentError on empty, non-finite or non-positive entries, or p_i <= 1.
ExponentData derive_exponents(std::span<const double> p);
/// Same, additionally checking p.size() == n.
ExponentData derive_exponents(std::span<const double> p, int n);

struct AdmissibilityReport {
    bool ok = true;
    std::vector<std::string> violations;
};

/// Strict check of 2 < p_i < p_bar (1 + 1/N) for every i and p_bar < N.
/// Lists every violated clause; never throws.
AdmissibilityReport validate_admissible(const ExponentData& e);

/// Anisotropic parabolic quasi-distance between space-time points (x, t) and
/// (y, s), each given as N space coordinates followed by time:
///   max{ |(x_i - y_i)/2|^{q_space_i}, |t - s|^{q_time} }.
double quasi_metric(std::span<const double> z1, std::span<const double> z2, const ExponentData& e);

} // namespace apde
