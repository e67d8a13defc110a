#pragma once

#include "apde/exponents.hpp"
#include "apde/grid.hpp"
#include "apde/solver.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace apde {

/// Rescaled semigroup: evolves g (data at prototype time t = 1) to t = e^s
/// and maps the result back with the mass-preserving scaling element
/// rho = e^{s/sigma}, theta = rho^{-N}, resampled onto g's grid. The output
/// carries time stamp 0. With renormalize_mass the resampled field is scaled
/// to the evolved field's discrete mass, which removes the interpolation
/// drift of the mass.
Field semigroup_tilde(const Field& g, double s, const ExponentData& e, const SolverConfig& cfg,
                      bool renormalize_mass = false);

struct FixedPointConfig {
    /// Mass of the initial datum eps0 / |B_1| * 1{|y| < 1}.
    double eps0 = 0.05;
    double s_bar = 1.0;
    /// Stop when ||S_{s_bar} w - w||_1 / ||w||_1 <= tol.
    double tol = 1e-4;
    int max_iters = 200;
    /// Restart from the running pointwise maximum of the iterates when the
    /// residual stalls.
    bool use_running_sup = true;
    /// Iterations without a 1% residual improvement that count as a stall.
    int stall_window = 5;
    bool renormalize_mass = true;
    SolverConfig solver;
};

/// Throws std::invalid_argument naming the offending field.
void validate(const FixedPointConfig& cfg);

class FixedPointError : public std::runtime_error {
public:
    FixedPointError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history_(std::move(history))
    {
    }
    const std::vector<double>& residual_history() const { return history_; }

private:
    std::vector<double> history_;
};

struct EtaEstimate {
    double eta = 0.0;
    /// Non-empty when w does not resolve a positive neighbourhood of 0.
    std::string warning;
};

struct BarenblattProfile {
    Field w;
    double mass = 0.0;
    double sup = 0.0;
    SupportBox support;
    double eta_bar = 0.0;
    std::string eta_warning;
    ExponentData exps;
    int iterations = 0;
    int restarts = 0;
    double residual = 0.0;
    std::vector<double> residual_history;
};

/// Iterates g <- S_{s_bar} g from the scaled indicator of the unit ball until
/// the relative L1 residual drops below cfg.tol. The returned w is the last
/// iterate whose image was measured, so residual is exactly its own
/// fixed-point residual.
BarenblattProfile build_barenblatt(const ExponentData& e, const FixedPointConfig& cfg, const Grid& grid);

/// lambda t^{-alpha} w(lambda^{(2 - p_i)/p_i} x_i t^{-alpha_i}), with w
/// interpolated multilinearly and taken as 0 outside its cell-centre hull.
double eval_barenblatt(const BarenblattProfile& profile, double lambda, std::span<const double> x, double t);

/// Field of eval_barenblatt(profile, lambda, ., t) at the cell centres of g.
Field sample_barenblatt(const BarenblattProfile& profile, double lambda, double t, const Grid& g);

/// Largest eta with min of the interpolant of w over prod_i (-eta, eta) >= eta.
/// The minimum is exact, so eta may be smaller than one cell.
EtaEstimate estimate_eta(const Field& w);

/// Relative L1 distance between T_{rho, rho^{-N}} B(., rho^sigma t) resampled
/// onto g and B(., t) sampled on g, with B = eval_barenblatt(profile, 1, ., .).
double self_similarity_residual(const BarenblattProfile& profile, double rho, double t, const Grid& g);

/// ||a - b||_1 on a shared grid.
double l1_distance(const Field& a, const Field& b);

} // namespace apde
