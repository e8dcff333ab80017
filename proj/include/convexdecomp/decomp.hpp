#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "convexdecomp/funcrepr.hpp"

namespace convexdecomp {

struct DecompConfig {
    /// Total sampling budget hint for the black-box path; 0 means 64 * dim.
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    double tol_rank = 1e-9;
    /// Line-probe parameters; must contain both signs.
    std::vector<double> ts = {1.0, -1.0, 4.0, -4.0, 16.0, -16.0, 64.0, -64.0, 256.0, -256.0};
    std::size_t stability_batches = 3;
    unsigned threads = 1;
};

/// The canonical decomposition f(z) = core(P_X z) + <v, z> with X the span
/// of subgradient differences, Y its orthogonal complement (the constancy
/// subspace), and v the component of any subgradient orthogonal to X.
struct Decomposition {
    Subspace x_space;
    Subspace y_space;
    Vector v;    // lies in the orthogonal complement of x_space
    Vector z0;   // base point (origin)
    Vector xi0;  // chosen subgradient at z0
    double a = 0.0; // attained lower bound f(z0) - <xi0, z0> of the shifted core
    ConvexFunction f;

    /// Coordinates of z with respect to the x_space basis.
    Vector x_coords(const Vector& z) const;
    /// Point of x_space with the given coordinates.
    Vector embed(const Vector& u) const;
    /// Core evaluated at x_space coordinates: f(embed(u)) - <v, embed(u)>.
    double core(const Vector& u) const;
    /// core(P_X z) + <v, z>; equals f(z) up to floating-point noise.
    double reconstruct(const Vector& z) const;
};

struct DecomposeResult {
    Decomposition decomposition;
    /// False when the sampled rank never stabilized within the budget; the
    /// contained subspaces are then partial, not an answer.
    bool conclusive = true;
    std::size_t samples_used = 0;
};

/// True iff f agrees with its supporting affine map at z0 along the whole
/// probed line through z0 with direction v, within 1e-8 * (1 + |f(z0)|).
bool line_flat(const ConvexFunction& f, const Vector& z0, const Vector& xi0,
               const Vector& v, const std::vector<double>& ts);

/// Closed-form span of subgradient differences for structural functions;
/// nullopt when any black box is involved.
std::optional<Subspace> structural_x_space(const ConvexFunction& f, double tol_rank,
                                           std::uint64_t seed);

/// Indices of max-affine pieces that are strictly active (margin 1e-10)
/// somewhere among 200 * dim seeded samples plus all pairwise bisector
/// probes. A never-sampled active region can drop a piece; the flat-line
/// cross-check in decompose flags that.
std::vector<std::size_t> retained_pieces(const MaxAffineNode& m, std::size_t dim,
                                         std::uint64_t seed);

/// Constancy subspace: directions v with f(z0 + t v) - f(z0) - <xi0, t v> = 0
/// for all t. Closed forms for structural functions; the black-box path
/// complements the sampled subgradient-difference span and checks each
/// candidate direction with the line probe.
Subspace constancy_space(const ConvexFunction& f, const Vector& z0, const Vector& xi0,
                         const DecompConfig& cfg);

DecomposeResult decompose(const ConvexFunction& f, const DecompConfig& cfg = {});

struct DecompositionCheck {
    double reconstruction_abs = 0.0;
    double reconstruction_rel = 0.0;   // normalized by 1 + |f(z)|
    double quotient_shift_abs = 0.0;   // |(f - <xi0,.>)(z + y) - (f - <xi0,.>)(z)|
    double quotient_shift_rel = 0.0;
    double subgrad_y_coupling = 0.0;   // |<xi(z2) - xi(z1), y>| / (1 + |xi(z2) - xi(z1)|)
};

/// Residuals of the reconstruction identity, quotient well-definedness and
/// subgradient/constancy orthogonality over seeded probes. Reports only;
/// thresholds belong to the caller.
DecompositionCheck verify_decomposition(const ConvexFunction& f, const Decomposition& d,
                                        std::size_t probes, std::uint64_t seed);

} // namespace convexdecomp
