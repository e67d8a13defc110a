#pragma once

#include "apde/exponents.hpp"
#include "apde/grid.hpp"

#include <optional>
#include <span>
#include <vector>

namespace apde {

/// Element (rho, theta) of the two-parameter scaling group. The space-time
/// map is
///   T(y, s) = (theta^{(p_i - p_bar)/p_i} rho^{p_bar/p_i} y_i,  theta^{2 - p_bar} rho^{p_bar} s)
/// and the induced action on functions is u -> u(T(.)) / theta. Composition
/// multiplies both parameters.
struct ScaleTransform {
    double rho = 1.0;
    double theta = 1.0;

    static ScaleTransform identity() { return {}; }
    /// The mass-preserving subgroup element with theta = rho^{-N}.
    static ScaleTransform mass_preserving(double rho, const ExponentData& e);
};

ScaleTransform compose(const ScaleTransform& a, const ScaleTransform& b);
ScaleTransform invert(const ScaleTransform& t);

struct ScaleFactors {
    std::vector<double> space;
    double time = 1.0;
};
ScaleFactors scale_factors(const ScaleTransform& t, const ExponentData& e);

/// z holds N space coordinates followed by time.
std::vector<double> transform_point(const ScaleTransform& t, std::span<const double> z, const ExponentData& e);

enum class Extension {
    none, ///< sample points outside the source hull are an error
    zero, ///< the source is compactly supported; it is padded with zeros as needed
};

struct TransformOptions {
    /// Rescale the output so its discrete mass equals the analytic image of
    /// the input mass, mass(u) / (theta rho^N).
    bool renormalize_mass = false;
    Extension extension = Extension::none;
};

/// Resamples (u(T(y, s)) / theta) onto `target` by multilinear interpolation.
/// The output time stamp is u.time / (theta^{2-p_bar} rho^{p_bar}).
/// Throws CoverageError when a sample point leaves the source hull and the
/// extension policy does not allow zero padding (or the source is not zero on
/// its outer cell layer).
Field transform_field(const ScaleTransform& t, const Field& u, const Grid& target, const ExponentData& e,
                      const TransformOptions& opts = {});

/// Grid whose cell centres map exactly onto the centres of `g` under T.
Grid pullback_grid(const ScaleTransform& t, const Grid& g, const ExponentData& e);

/// Intrinsic box centre + K_rho(theta) with half-widths
/// theta^{(p_i - p_bar)/p_i} rho^{p_bar/p_i} / 2, and the backward time depth
/// theta^{2 - p_bar} rho^{p_bar} of the matching cylinder.
struct IntrinsicBox {
    std::vector<double> center;
    double rho = 1.0;
    double theta = 1.0;
    std::vector<double> half_widths;
    std::optional<double> time_depth;

    double volume() const;
};
IntrinsicBox intrinsic_box(std::span<const double> center, double rho, double theta, const ExponentData& e,
                           bool with_time = false);

/// Fokker-Planck change of variables applied slice by slice:
///   (Phi u)_s = T_{e^{s/sigma}} u_{e^s},  s = log t
/// Input slices must have strictly positive times; output slices carry s.
std::vector<Field> phi_map(std::span<const Field> slices, const Grid& target, const ExponentData& e,
                           const TransformOptions& opts = {});
/// Inverse map: (Psi w)_t = t^{-alpha} w(t^{-alpha_i} x_i, log t); slices carry s, outputs t = e^s.
std::vector<Field> psi_map(std::span<const Field> slices, const Grid& target, const ExponentData& e,
                           const TransformOptions& opts = {});

/// Samples of a bounded function on the quasi-ball B_1(x0) in space-time.
struct SampledFunction {
    std::vector<std::vector<double>> points; ///< N+1 coordinates each
    std::vector<double> values;
};

struct KrylovSafonovResult {
    std::size_t index = 0; ///< sample index of the selected point
    std::vector<double> point;
    double radius = 0.0;
    double omega = 0.0;
    int steps = 0;
};

/// omega = 2 (2 gamma)^beta.
double krylov_safonov_omega(double gamma, double beta);

/// Deterministic point/radius selection: start at (x0, 1/(2 gamma)); while
/// r^beta sup_{B_r(x)} u > omega move to the sample maximising u in B_r(x)
/// and shrink r by omega^{-2/beta}. The result satisfies
///   B_r(x) in B_1(x0),  r^beta sup_{B_r(x)} u <= omega,  r^beta u(x) >= 1/omega
/// with suprema taken over the samples. Throws std::invalid_argument when
/// u(x0) < 1 or gamma is not finite.
KrylovSafonovResult krylov_safonov_select(const SampledFunction& u, std::size_t x0, double beta, const ExponentData& e);

/// Quasi-balls are boxes: B_r(z) = {|x_i - z_i| < 2 r^{1/q_space_i}, |t - s| < r^{1/q_time}}.
bool quasi_ball_contains(std::span<const double> outer_center, double outer_radius,
                         std::span<const double> inner_center, double inner_radius, const ExponentData& e);

} // namespace apde
