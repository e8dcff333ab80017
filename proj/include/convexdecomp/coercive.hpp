#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "convexdecomp/decomp.hpp"

namespace convexdecomp {

enum class CoercivityStatus { Certified, Refuted, Evidence };

struct RefutingRay {
    Vector x;
    Vector v;
};

struct EvidenceStats {
    std::size_t rays_checked = 0;
    double max_t = 0.0;
    double min_terminal_slope = 0.0;
};

/// Three-valued answer for "is f directionally coercive?". Certified comes
/// only from an exact structural criterion (positive definiteness, positive
/// span of kernel directions), never from sampling. Refuted carries a ray
/// along which f stayed within gap 1 at the tested horizon with terminal
/// slope <= 1e-9. Everything else is Evidence with the scan statistics.
struct CoercivityVerdict {
    CoercivityStatus status = CoercivityStatus::Evidence;
    std::optional<RefutingRay> refuting_ray;
    std::optional<EvidenceStats> evidence;
};

struct VerdictConfig {
    std::size_t rays = 200;
    std::uint64_t seed = 0;
    double max_t = 1e4;
    unsigned threads = 1;
};

CoercivityVerdict directional_verdict(const ConvexFunction& f, const VerdictConfig& cfg = {});

/// Exact finite test: do the directions positively span R^dim? Rank check
/// plus phase-1 simplex feasibility of a strictly positive combination of 0.
bool positively_spans(const std::vector<Vector>& dirs, std::size_t dim);

struct WitnessTerm {
    Vector x;      // point on the boundary of {psi <= level}
    Vector xi;     // chosen subgradient of psi there
    double weight; // 1 / (2^(n+1) * max(1, |xi|)), n the 1-based term index
};

/// Coercivizing linear functional xi = sum_n weight_n * xi_n built from
/// subgradients at sublevel-boundary points of the normalized
/// psi(x) = f(x) - f0 - <xi0, x>.
struct Witness {
    Vector xi;
    std::vector<WitnessTerm> trace;
    std::vector<Vector> skipped_rays; // recession directions: psi stayed <= level out to t = 1e6
    Vector xi0;
    double f0 = 0.0;
    double level = 1.0;
};

/// Requires the constancy subspace of f to be trivial (f not constant on any
/// line). Boundary points are found by bisection along all +/- coordinate
/// directions first, then seeded random unit directions, until n_terms
/// boundary points are collected.
Witness build_witness(const ConvexFunction& f, std::size_t n_terms, std::uint64_t seed);

struct WitnessCheck {
    CoercivityVerdict verdict;          // for f - <xi, .>
    double envelope_violation = 0.0;    // max over seeded x of the supporting
                                        // lower-envelope bound violation,
                                        // normalized by 1 + |psi(x)|
};

WitnessCheck verify_witness(const ConvexFunction& f, const Witness& w, std::size_t rays,
                            std::uint64_t seed, double max_t, unsigned threads = 1);

/// Rank of the span of the trace subgradients (tolerance 1e-9): in finite
/// dimension the trace separates points iff this equals the dimension.
std::size_t separation_rank(const Witness& w);

struct StrictMinimum {
    Vector xi0;
    Vector minimizer;
};

/// Grid check for one candidate slope: minimizes f - <xi0, .> over the
/// [-radius, radius]^dim lattice with `grid` cells per axis and accepts only
/// a unique interior grid argmin whose 2 * dim * 8 local probes at radius
/// 1e-3 all exceed the minimum strictly.
std::optional<Vector> strict_minimizer_for_slope(const ConvexFunction& f, const Vector& xi0,
                                                 std::size_t grid, double radius);

/// Searches candidate slopes over the estimated interior of the range of the
/// subgradient map (midpoint of the observed slope box first, stepping
/// outward), returning the first slope whose shifted function has a strict
/// grid-isolated minimizer. dim <= 3.
std::optional<StrictMinimum> strict_minimum_witness(const ConvexFunction& f, std::size_t grid,
                                                    double radius);

/// True iff f(x + t e_m) equals f(x) exactly at 33 equispaced points of the
/// open interval (-(m - x_m), m - x_m). Requires x_m < m (1-based m).
bool flat_segment_check(const ConvexFunction& f, const Vector& x, std::size_t m);

/// Smallest radius R (doubling from 1, at most 2^max_doublings) at which the
/// minimum of f over seeded points of the radius-R sphere exceeds f(0) + 1;
/// nullopt when no tested radius works. In finite dimension a directionally
/// coercive convex function is coercive, so certified functions pass.
std::optional<double> coercivity_radius(const ConvexFunction& f, std::uint64_t seed,
                                        std::size_t sphere_points = 512,
                                        int max_doublings = 20);

} // namespace convexdecomp
