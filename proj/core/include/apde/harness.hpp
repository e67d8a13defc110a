#pragma once

#include "apde/exponents.hpp"
#include "apde/geometry.hpp"
#include "apde/grid.hpp"
#include "apde/solver.hpp"

#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace apde {

/// Closed-form self-similar solution of the orthotropic equation with all
/// exponents equal to p:
///   B(x, t) = t^{-alpha} (C - k sum_i |x_i t^{-alpha/N}|^{p/(p-1)})_+^{(p-1)/(p-2)}
/// with alpha = N / (N (p - 2) + p), k = ((p - 2)/p) (alpha/N)^{1/(p-1)} and C
/// fixed by the mass. Each axis flux satisfies
///   |d_i F|^{p-2} d_i F = -(alpha/N) y_i F,
/// which makes B an exact solution. The support is the l^{p/(p-1)} ball of
/// radius (C/k)^{(p-1)/p} t^{alpha/N}.
struct IsotropicBarenblatt {
    IsotropicBarenblatt(double p, int n, double mass);

    double operator()(std::span<const double> x, double t) const;
    /// Support radius along each coordinate axis at time t.
    double support_radius(double t) const;

    double p;
    int n;
    double mass;
    double alpha;
    double k;
    double c;
};

/// Value of the closed-form solution; throws for t <= 0 or p <= 2.
double isotropic_barenblatt(std::span<const double> x, double t, double p, int n, double mass);

/// Second-order finite-difference residual of the equation at (x, t),
///   |d_t B - sum_i D_i^- phi_p(D_i^+ B)| / |d_t B|,
/// with spatial step h and time step h^2 (central). Used to validate the
/// closed form before any test relies on it.
double pde_residual(const std::function<double(std::span<const double>, double)>& u, std::span<const double> x, double t,
                    double p, double h);

/// The closed form sampled at cell centres.
Field sample_field(const IsotropicBarenblatt& b, const Grid& g, double t);

/// Exact-formula trajectory (no solver) with diagnostics per snapshot.
Trajectory oracle_trajectory(const IsotropicBarenblatt& b, const Grid& g, std::span<const double> times,
                             const ExponentData& e, double support_threshold = 1e-6);

class DegenerateFitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SupportGrowthOptions {
    /// Initial half-width subtracted before the fit, per axis (empty: zeros).
    std::vector<double> r0;
    /// Time origin subtracted before the fit.
    double time_origin = 0.0;
    /// The fit uses the snapshots in the last `late_fraction` of log time.
    double late_fraction = 0.5;
};

struct SupportGrowthReport {
    std::vector<double> slopes;
    std::vector<double> alpha_i;
    /// (slope_i - alpha_i) / alpha_i.
    std::vector<double> relative_errors;
    /// slope_1 > slope_2 > ... > slope_N.
    bool strictly_decreasing = false;
    std::size_t points_used = 0;
};

/// Least-squares slope of log(half_width_i - r0_i) against log(t - origin)
/// from the trajectory diagnostics. Requires at least 10 snapshots spanning a
/// decade of (t - origin); throws DegenerateFitError when the support does
/// not grow.
SupportGrowthReport check_support_growth(const Trajectory& traj, const ExponentData& e,
                                         const SupportGrowthOptions& opts = {});

/// Applies the scaling element to every snapshot on its pullback grid, so the
/// values are the source values divided by theta, without interpolation.
Trajectory transform_trajectory(const Trajectory& traj, const ScaleTransform& t, const ExponentData& e);

/// Value of the space-time interpolant of a trajectory (linear in time,
/// multilinear in space). Throws CoverageError outside the data window.
double trajectory_value(const Trajectory& traj, std::span<const double> x, double t);

/// Exact extrema over the box [lo, hi] of the trajectory interpolant at time t.
Extrema trajectory_extrema(const Trajectory& traj, std::span<const double> lo, std::span<const double> hi, double t);

struct ProbePoint {
    std::vector<double> x;
    double t = 0.0;
};

struct SkippedProbe {
    std::size_t probe = 0;
    std::size_t rho = 0;
    std::string reason;
};

struct HarnackReport {
    std::vector<ProbePoint> probe_points;
    double C1 = 1.0;
    double C2 = 1.0;
    std::vector<double> rho_grid;
    /// [probe][rho]; NaN where the pair was skipped, +inf where the infimum vanishes.
    std::vector<std::vector<double>> ratios_fwd;
    std::vector<std::vector<double>> ratios_bwd;
    /// max(1, largest finite ratio) over retained pairs.
    double empirical_C3 = 1.0;
    /// Same maximum restricted to each rho.
    std::vector<double> c3_per_rho;
    std::vector<SkippedProbe> skipped;
    std::size_t retained = 0;
};

/// For each probe (x*, t*) and radius rho with u* = u(x*, t*) > 0:
/// M = u* / C1, tau = M^{2 - p_bar} (C2 rho)^{p_bar},
///   forward  = u* / inf_{x* + K_rho(M)} u(., t* + tau)
///   backward = sup_{x* + K_rho(M)} u(., t* - tau) / u*.
/// Pairs whose window x* + K_{C2 rho}(M) or times t* -+ tau leave the data are
/// recorded as skipped. Throws std::invalid_argument when nothing is retained.
HarnackReport harnack_probe(const Trajectory& traj, const ExponentData& e, double C1, double C2,
                            std::span<const double> rho_grid, std::span<const ProbePoint> probes);

struct DeGiorgiProbe {
    double a = 1.0;
    double mu_observed = 0.0;
    double inf_half = 0.0;
    bool implication_holds = false;
};

/// Lattice resolution of the De Giorgi probe: `space` midpoints per axis and
/// `time` levels ending at s = 0.
struct DeGiorgiLattice {
    std::size_t space = 16;
    std::size_t time = 16;
};

/// Probe of a function already rescaled to Q_1^- = K_1 x (-1, 0], K_1 the cube
/// of half-width 1/2: mu_observed is the lattice fraction of Q_1^- where
/// v <= a, inf_half the lattice minimum over Q_{1/2}^- = K_{1/2} x (-1/4, 0].
DeGiorgiProbe degiorgi_probe(const std::function<double(std::span<const double>, double)>& v, std::size_t rank, double a,
                             const DeGiorgiLattice& lattice = {});

/// Window (x0, t0) + T_{rho, theta}(Q_1^-) of a trajectory, rescaled by the
/// scaling group: v(y, s) = u(x0 + T(y, s)) / theta. Throws CoverageError when
/// the window leaves the data.
DeGiorgiProbe degiorgi_probe(const Trajectory& traj, const ExponentData& e, std::span<const double> x0, double t0,
                             const ScaleTransform& window, double a, const DeGiorgiLattice& lattice = {});

/// Largest mu_observed among probes where the implication held.
std::optional<double> largest_mu_with_implication(std::span<const DeGiorgiProbe> corpus);

struct ClusterCube {
    std::vector<double> center;
    /// Edge length per axis.
    std::vector<double> edge;
    int depth = 0;
    /// Cell-centre fraction of the cube where u >= lambda a.
    double fraction = 0.0;
};

struct ClusterResult {
    std::optional<ClusterCube> cube;
    /// Cell-centre fraction of the whole slice where u >= a.
    double level_fraction = 0.0;
    /// level_fraction >= alpha_bar.
    bool hypothesis_holds = false;
};

/// Brute force over the dyadic subcubes of the slice's grid box (edge ratios
/// 2^{-k}, k <= max_depth): the shallowest cube whose cell-centre fraction with
/// u >= lambda a exceeds 1 - nu; ties at one depth go to the largest fraction,
/// then to the first cube in storage order.
ClusterResult cluster_search(const Field& u_slice, double lambda, double nu, double alpha_bar, double a,
                             int max_depth = 6);

/// Sum of `bumps` smooth bumps amplitude * (1 - |x - c|^2 / r^2)_+^2 with
/// centres in the middle half of the box, radii in [0.05, 0.15] of the smallest
/// extent and amplitudes in [amp_lo, amp_hi]. Only raw engine output is used,
/// so the field is reproducible across standard libraries.
Field random_bump_field(const Grid& g, std::mt19937_64& rng, int bumps, double amp_lo, double amp_hi);

struct ComparisonResult {
    /// Cells where the lower solution exceeds the upper one by more than the slack.
    std::size_t violations = 0;
    /// Largest (lower - upper)_+ seen over all steps.
    double max_excess = 0.0;
    std::size_t steps = 0;
};

/// Advances an ordered pair g_lo <= g_hi by `steps` steps of the configured
/// scheme with a shared step size (explicit: the smaller CFL step of the
/// pair; implicit: cfg.implicit_dt) and counts order violations larger than
/// `slack` after every step.
ComparisonResult compare_ordered_pair(const Field& g_lo, const Field& g_hi, const ExponentData& e,
                                      const SolverConfig& cfg, std::size_t steps, double slack);

} // namespace apde
