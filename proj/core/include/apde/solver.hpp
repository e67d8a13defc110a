#pragma once

#include "apde/exponents.hpp"
#include "apde/grid.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace apde {

enum class Scheme { explicit_flux, implicit_prox };

struct SolverConfig {
    Scheme scheme = Scheme::explicit_flux;
    double cfl_safety = 0.4;
    double implicit_dt = 1e-2;
    /// Relative gradient norm at which the implicit inner minimiser stops.
    double min_tol = 1e-9;
    /// Newton iterations per implicit step.
    int max_inner_iters = 100;
    /// Conjugate-gradient iterations per Newton iteration.
    int max_linear_iters = 5000;
    std::vector<double> snapshot_times;
    /// Half-widths in diagnostics use |u| > support_threshold * sup u.
    double support_threshold = 1e-6;
    /// Boundary contact uses |u| > contact_threshold * sup g.
    double contact_threshold = 1e-9;
    std::size_t contact_cells = 2;
};

/// Throws std::invalid_argument naming the offending field.
void validate(const SolverConfig& cfg);

/// Per-cell sum over axes of (F_{i,+} - F_{i,-}) / h_i with face fluxes
/// F = |D|^{p_i - 2} D, D the face difference quotient; zero Dirichlet ghosts.
Field flux_divergence(const Field& u, const ExponentData& e);

/// safety / max over cells of sum_i 2 (p_i - 1) |d_i u|^{p_i - 2} / h_i^2,
/// |d_i u| the larger one-sided difference quotient. +infinity when every
/// local diffusivity vanishes.
double cfl_dt(const Field& u, const ExponentData& e, double safety);

/// Discrete gradient-flow energy sum_i sum_faces |D|^{p_i} / p_i * cell volume,
/// including the faces to the zero ghost layer.
double energy(const Field& u, const ExponentData& e);

class CflError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// u + dt * flux_divergence(u); throws CflError when dt > cfl_dt(u, e, 1).
Field step_explicit(const Field& u, double dt, const ExponentData& e);

struct ExplicitEvaluation {
    /// flux_divergence(u, e).
    Field divergence;
    /// cfl_dt(u, e, safety).
    double dt = 0.0;
};

/// Divergence and stable step from a single stencil pass.
ExplicitEvaluation evaluate_explicit(const Field& u, const ExponentData& e, double safety);

class ImplicitSolveError : public std::runtime_error {
public:
    ImplicitSolveError(const std::string& what, Field last_iterate, double residual)
        : std::runtime_error(what), last_iterate_(std::move(last_iterate)), residual_(residual)
    {
    }
    const Field& last_iterate() const { return last_iterate_; }
    double residual() const { return residual_; }

private:
    Field last_iterate_;
    double residual_;
};

struct ImplicitStats {
    int newton_iters = 0;
    int linear_iters = 0;
    double relative_gradient = 0.0;
};

/// Proximal step: the minimiser over v (zero boundary) of
///   energy(v) + ||v - u||_2^2 / (2 dt)
/// solved by Newton iterations with Jacobi-preconditioned conjugate
/// gradients and Armijo backtracking, until the gradient norm falls below
/// cfg.min_tol times its value at v = u.
Field step_implicit(const Field& u, double dt, const ExponentData& e, const SolverConfig& cfg,
                    ImplicitStats* stats = nullptr);

class BoundaryContactError : public std::runtime_error {
public:
    BoundaryContactError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

DiagnosticsRow diagnose(const Field& u, const ExponentData& e, double support_threshold);

/// Evolves g from t0 to t1 and records snapshots at cfg.snapshot_times
/// (default {t0, t1}). Aborts with BoundaryContactError when the support
/// comes within cfg.contact_cells of the boundary.
Trajectory evolve(const Field& g, double t0, double t1, const ExponentData& e, const SolverConfig& cfg);

/// Field at t1 only; same contract as evolve without snapshot storage.
Field evolve_to(const Field& g, double t0, double t1, const ExponentData& e, const SolverConfig& cfg,
                std::size_t* steps = nullptr);

} // namespace apde
