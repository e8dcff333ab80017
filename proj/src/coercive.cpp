#include "convexdecomp/coercive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "convexdecomp/errors.hpp"
#include "convexdecomp/parallel.hpp"
#include "convexdecomp/rng.hpp"

namespace convexdecomp {

namespace {

constexpr double kRefuteGap = 1.0;
constexpr double kRefuteSlope = 1e-9;
constexpr double kRecessionHorizon = 1e6;
constexpr double kBoundaryTol = 1e-10;

double eval_or_inf(const ConvexFunction& f, const Vector& z) {
    try {
        return eval(f, z);
    } catch (const std::range_error&) {
        return std::numeric_limits<double>::infinity();
    }
}

// Cholesky with a relative pivot floor. Success certifies positive
// definiteness with margin; anything marginal falls through to Evidence.
bool cholesky_positive_definite(const std::vector<double>& a, std::size_t n) {
    double scale = 0.0;
    for (double x : a) scale = std::max(scale, std::fabs(x));
    if (scale == 0.0) return false;
    const double floor = 1e-10 * scale;
    std::vector<double> l(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) diag -= l[j * n + k] * l[j * n + k];
        if (!(diag > floor)) return false;
        l[j * n + j] = std::sqrt(diag);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
            l[i * n + j] = s / l[j * n + j];
        }
    }
    return true;
}

// Structural certificates of directional coercivity. A certified summand
// grows superlinearly along every ray while the remaining convex parts are
// bounded below by affine maps, so sums and affine shifts inherit the
// certificate.
bool certified_structural(const ConvexFunction& f) {
    const std::size_t dim = f.dim();
    return std::visit(
        [&](const auto& repr) -> bool {
            using T = std::decay_t<decltype(repr)>;
            if constexpr (std::is_same_v<T, QuadraticNode>) {
                return cholesky_positive_definite(repr.a, dim);
            } else if constexpr (std::is_same_v<T, ScalarCompositeNode>) {
                std::vector<Vector> dirs;
                for (const auto& t : repr.terms) {
                    if (t.kernel == Kernel::ReluSquare) {
                        dirs.push_back(t.a);
                    } else if (t.kernel == Kernel::Square) {
                        dirs.push_back(t.a);
                        dirs.push_back(scaled(t.a, -1.0));
                    } else {
                        return false; // Abs/Exp terms carry no quadratic growth certificate
                    }
                }
                return positively_spans(dirs, dim);
            } else if constexpr (std::is_same_v<T, AffinePlusNode>) {
                return certified_structural(repr.base);
            } else if constexpr (std::is_same_v<T, SumNode>) {
                for (const auto& p : repr.parts) {
                    if (certified_structural(p)) return true;
                }
                return false;
            } else {
                return false;
            }
        },
        f.node().repr);
}

} // namespace

bool positively_spans(const std::vector<Vector>& dirs, std::size_t dim) {
    if (dim == 0) return true;
    if (dirs.empty()) return false;
    if (accumulate_span(dirs, 1e-9, dim).dim() != dim) return false;

    // 0 must be a strictly positive combination of the directions. With
    // mu = lambda + 1, lambda >= 0, that is feasibility of
    // { lambda >= 0 : U lambda = -U 1 }, settled by phase-1 simplex with
    // Bland's rule.
    const std::size_t m = dirs.size();
    std::vector<double> b(dim, 0.0);
    for (const Vector& u : dirs) {
        for (std::size_t i = 0; i < dim; ++i) b[i] -= u[i];
    }
    // tableau rows: [U | I | rhs] with rows flipped so rhs >= 0
    const std::size_t cols = m + dim;
    std::vector<std::vector<double>> t(dim, std::vector<double>(cols + 1, 0.0));
    for (std::size_t i = 0; i < dim; ++i) {
        const double sign = b[i] < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < m; ++j) t[i][j] = sign * dirs[j][i];
        t[i][m + i] = 1.0;
        t[i][cols] = sign * b[i];
    }
    std::vector<std::size_t> basis(dim);
    for (std::size_t i = 0; i < dim; ++i) basis[i] = m + i;

    // objective: minimize the sum of artificials; reduced-cost row
    std::vector<double> obj(cols + 1, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j <= cols; ++j) obj[j] -= t[i][j];
    }
    for (std::size_t i = 0; i < dim; ++i) obj[m + i] = 0.0;

    double bsum = 0.0;
    for (std::size_t i = 0; i < dim; ++i) bsum += t[i][cols];
    const double pivot_tol = 1e-11;
    const double cost_tol = 1e-9;

    for (int iter = 0; iter < 20000; ++iter) {
        std::size_t enter = cols;
        for (std::size_t j = 0; j < cols; ++j) { // Bland: lowest eligible index
            if (obj[j] < -cost_tol) {
                enter = j;
                break;
            }
        }
        if (enter == cols) break;
        std::size_t leave = dim;
        double best_ratio = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            if (t[i][enter] > pivot_tol) {
                const double ratio = t[i][cols] / t[i][enter];
                if (leave == dim || ratio < best_ratio - 1e-15 ||
                    (std::fabs(ratio - best_ratio) <= 1e-15 && basis[i] < basis[leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
        }
        if (leave == dim) break; // unbounded column: cannot happen in phase 1
        const double piv = t[leave][enter];
        for (std::size_t j = 0; j <= cols; ++j) t[leave][j] /= piv;
        for (std::size_t i = 0; i < dim; ++i) {
            if (i == leave) continue;
            const double factor = t[i][enter];
            if (factor == 0.0) continue;
            for (std::size_t j = 0; j <= cols; ++j) t[i][j] -= factor * t[leave][j];
        }
        const double ofac = obj[enter];
        if (ofac != 0.0) {
            for (std::size_t j = 0; j <= cols; ++j) obj[j] -= ofac * t[leave][j];
        }
        basis[leave] = enter;
    }
    const double artificial_sum = -obj[cols];
    return artificial_sum <= 1e-7 * (1.0 + bsum);
}

CoercivityVerdict directional_verdict(const ConvexFunction& f, const VerdictConfig& cfg) {
    if (!(cfg.max_t >= 1.0)) {
        throw PreconditionError("directional_verdict: max_t must be >= 1");
    }
    if (certified_structural(f)) {
        return CoercivityVerdict{CoercivityStatus::Certified, std::nullopt, std::nullopt};
    }

    const std::size_t dim = f.dim();
    std::vector<RefutingRay> rays;
    for (std::size_t i = 0; i < dim; ++i) {
        rays.push_back({zeros(dim), coordinate(dim, i)});
        rays.push_back({zeros(dim), scaled(coordinate(dim, i), -1.0)});
    }
    try {
        DecompConfig dc;
        dc.seed = cfg.seed;
        dc.threads = cfg.threads;
        auto dr = decompose(f, dc);
        if (dr.conclusive) {
            for (const Vector& y : dr.decomposition.y_space.basis) {
                rays.push_back({zeros(dim), y});
                rays.push_back({zeros(dim), scaled(y, -1.0)});
            }
        }
    } catch (const std::exception&) {
        // flat directions are an optimization of the scan, not a requirement
    }
    for (std::size_t j = 0; j < cfg.rays; ++j) {
        Rng rng(substream_seed(cfg.seed, kStreamRays, j));
        rays.push_back({rng.gaussian_vector(dim), rng.unit_vector(dim)});
    }

    struct RayStat {
        double gap = 0.0;
        double slope = 0.0;
    };
    std::vector<RayStat> stats(rays.size());
    parallel_for_indexed(rays.size(), cfg.threads, [&](std::size_t j) {
        const auto& r = rays[j];
        const double f0 = eval_or_inf(f, r.x);
        Vector far = r.x, half = r.x;
        axpy(far, cfg.max_t, r.v);
        axpy(half, cfg.max_t / 2.0, r.v);
        const double ffar = eval_or_inf(f, far);
        const double fhalf = eval_or_inf(f, half);
        stats[j].gap = ffar - f0;
        stats[j].slope = (ffar - fhalf) / (cfg.max_t / 2.0);
    });

    double min_slope = std::numeric_limits<double>::max();
    for (std::size_t j = 0; j < rays.size(); ++j) {
        if (stats[j].gap <= kRefuteGap && stats[j].slope <= kRefuteSlope) {
            return CoercivityVerdict{CoercivityStatus::Refuted, rays[j], std::nullopt};
        }
        if (std::isfinite(stats[j].slope)) min_slope = std::min(min_slope, stats[j].slope);
    }
    EvidenceStats ev;
    ev.rays_checked = rays.size();
    ev.max_t = cfg.max_t;
    ev.min_terminal_slope = min_slope;
    return CoercivityVerdict{CoercivityStatus::Evidence, std::nullopt, ev};
}

namespace {

struct Shifted {
    const ConvexFunction& f;
    const Vector& xi0;
    double f0;

    double value(const Vector& x) const { return eval(f, x) - f0 - dot(xi0, x); }
    double value_or_inf(const Vector& x) const {
        try {
            return value(x);
        } catch (const std::range_error&) {
            return std::numeric_limits<double>::infinity();
        }
    }
    Vector subgrad(const Vector& x) const { return sub(subgradient(f, x), xi0); }
};

// Single sublevel-boundary crossing along a ray of a convex function:
// doubling bracket then bisection. Returns the parameter t with
// |psi(t dir) - level| <= kBoundaryTol, or nullopt when the ray recesses
// (psi stays <= level out to the horizon).
std::optional<double> boundary_crossing(const Shifted& psi, const Vector& dir, double level) {
    double lo = 0.0;
    double t = 1.0;
    for (;;) {
        Vector z = scaled(dir, t);
        const double val = psi.value_or_inf(z);
        if (std::fabs(val - level) <= kBoundaryTol) return t;
        if (val > level) break;
        lo = t;
        // recession: still inside the sublevel set at the horizon
        if (t >= kRecessionHorizon) return std::nullopt;
        t *= 2.0;
    }
    double hi = t;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double val = psi.value_or_inf(scaled(dir, mid));
        if (std::fabs(val - level) <= kBoundaryTol) return mid;
        if (val > level) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

} // namespace

Witness build_witness(const ConvexFunction& f, std::size_t n_terms, std::uint64_t seed) {
    if (n_terms < 1) throw PreconditionError("build_witness: n_terms must be >= 1");
    const std::size_t dim = f.dim();

    DecompConfig dc;
    dc.seed = seed;
    auto dr = decompose(f, dc);
    if (!dr.conclusive) {
        throw OracleError("build_witness: decomposition inconclusive for this oracle");
    }
    if (dr.decomposition.y_space.dim() != 0) {
        std::string dirstr = "(";
        const Vector& flat = dr.decomposition.y_space.basis.front();
        for (std::size_t i = 0; i < flat.size(); ++i) {
            dirstr += (i ? "," : "") + std::to_string(flat[i]);
        }
        dirstr += ")";
        throw PreconditionError(
            "build_witness: function is constant on lines; flat direction " + dirstr);
    }

    Witness w;
    w.f0 = eval(f, zeros(dim));
    w.xi0 = subgradient(f, zeros(dim));
    w.level = 1.0;
    const Shifted psi{f, w.xi0, w.f0};
    const bool check_oracle = f.has_black_box();

    w.xi = zeros(dim);
    const std::size_t max_dirs = 2 * dim + std::max<std::size_t>(64, 8 * n_terms);
    std::size_t random_drawn = 0;
    for (std::size_t d = 0; d < max_dirs && w.trace.size() < n_terms; ++d) {
        Vector dir;
        if (d < dim) {
            dir = coordinate(dim, d);
        } else if (d < 2 * dim) {
            dir = scaled(coordinate(dim, d - dim), -1.0);
        } else {
            Rng rng(substream_seed(seed, kStreamWitness, random_drawn++));
            dir = rng.unit_vector(dim);
        }
        const auto t = boundary_crossing(psi, dir, w.level);
        if (!t) {
            w.skipped_rays.push_back(std::move(dir));
            continue;
        }
        WitnessTerm term;
        term.x = scaled(dir, *t);
        term.xi = psi.subgrad(term.x);
        if (check_oracle) {
            ConvexFunction psi_fn = ConvexFunction::affine_plus(f, scaled(w.xi0, -1.0), -w.f0);
            if (!validate_subgradient(psi_fn, {term.x, term.xi}, 64,
                                      substream_seed(seed, kStreamWitness,
                                                     (1u << 20) + w.trace.size()))) {
                throw OracleError("build_witness: boundary subgradient failed validation");
            }
        }
        const std::size_t n = w.trace.size() + 1; // 1-based term index
        const double denominator = std::max(1.0, norm(term.xi));
        term.weight = std::ldexp(1.0, -static_cast<int>(n + 1)) / denominator;
        axpy(w.xi, term.weight, term.xi);
        w.trace.push_back(std::move(term));
    }

    if (w.trace.empty()) {
        throw PreconditionError(
            "build_witness: every probed direction recedes; function behaves affinely");
    }
    return w;
}

WitnessCheck verify_witness(const ConvexFunction& f, const Witness& w, std::size_t rays,
                            std::uint64_t seed, double max_t, unsigned threads) {
    // The construction coercivizes psi = f - f0 - <xi0, .>, so the function
    // to scan is psi - <xi, .> = f - <xi0 + xi, .> up to a constant. For the
    // textbook examples xi0 = 0 and this is plain f - <xi, .>.
    Vector total = w.xi0;
    axpy(total, 1.0, w.xi);
    ConvexFunction shifted = ConvexFunction::affine_plus(f, scaled(total, -1.0), 0.0);
    VerdictConfig vc;
    vc.rays = rays;
    vc.seed = seed;
    vc.max_t = max_t;
    vc.threads = threads;
    WitnessCheck out;
    out.verdict = directional_verdict(shifted, vc);

    // supporting lower envelope: psi(x) >= max_n max{0, psi(x_n) + <xi_n, x - x_n>}
    const Shifted psi{f, w.xi0, w.f0};
    const std::size_t dim = f.dim();
    constexpr double kScales[3] = {1.0, 8.0, 64.0};
    double worst = 0.0;
    for (std::size_t j = 0; j < 1000; ++j) {
        Rng rng(substream_seed(seed, kStreamEnvelope, j));
        Vector x = rng.gaussian_vector(dim);
        for (double& e : x) e *= kScales[j % 3];
        const double px = psi.value_or_inf(x);
        if (!std::isfinite(px)) continue;
        double envelope = 0.0;
        for (const auto& term : w.trace) {
            const double supporting = psi.value(term.x) + dot(term.xi, sub(x, term.x));
            envelope = std::max(envelope, supporting);
        }
        worst = std::max(worst, (envelope - px) / (1.0 + std::fabs(px)));
    }
    out.envelope_violation = worst;
    return out;
}

std::size_t separation_rank(const Witness& w) {
    if (w.trace.empty()) throw PreconditionError("separation_rank: empty trace");
    std::vector<Vector> xis;
    xis.reserve(w.trace.size());
    for (const auto& t : w.trace) xis.push_back(t.xi);
    return accumulate_span(xis, 1e-9).dim();
}

namespace {

// Row-major lattice over [-radius, radius]^dim with grid+1 points per axis.
struct Lattice {
    std::size_t dim;
    std::size_t per_axis;
    double radius;

    std::size_t size() const {
        std::size_t n = 1;
        for (std::size_t i = 0; i < dim; ++i) n *= per_axis;
        return n;
    }
    Vector point(std::size_t index) const {
        Vector x(dim);
        for (std::size_t i = dim; i-- > 0;) {
            const std::size_t k = index % per_axis;
            index /= per_axis;
            x[i] = -radius + 2.0 * radius * static_cast<double>(k) /
                                 static_cast<double>(per_axis - 1);
        }
        return x;
    }
    bool on_boundary(std::size_t index) const {
        for (std::size_t i = 0; i < dim; ++i) {
            const std::size_t k = index % per_axis;
            index /= per_axis;
            if (k == 0 || k == per_axis - 1) return true;
        }
        return false;
    }
};

void check_strict_min_preconditions(const ConvexFunction& f, std::size_t grid) {
    if (f.dim() > 3) {
        throw PreconditionError("strict minimum search supports dimension <= 3 only");
    }
    if (grid < 64) throw PreconditionError("strict minimum search requires grid >= 64");
}

std::optional<Vector> isolated_minimizer(const ConvexFunction& f, const Vector& xi0,
                                         const Lattice& lat,
                                         const std::vector<double>& fvals) {
    const std::size_t total = lat.size();
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;
    bool tie = false;
    for (std::size_t idx = 0; idx < total; ++idx) {
        const double g = fvals[idx] - dot(xi0, lat.point(idx));
        if (g < best) {
            best = g;
            best_index = idx;
            tie = false;
        } else if (g == best) {
            tie = true;
        }
    }
    if (tie || lat.on_boundary(best_index)) return std::nullopt;
    const Vector xmin = lat.point(best_index);
    for (std::size_t i = 0; i < lat.dim; ++i) {
        for (double sign : {1.0, -1.0}) {
            for (int k = 1; k <= 8; ++k) {
                Vector p = xmin;
                p[i] += sign * 1e-3 * static_cast<double>(k) / 8.0;
                double g;
                try {
                    g = eval(f, p) - dot(xi0, p);
                } catch (const std::range_error&) {
                    continue;
                }
                if (!(g > best)) return std::nullopt;
            }
        }
    }
    return xmin;
}

} // namespace

std::optional<Vector> strict_minimizer_for_slope(const ConvexFunction& f, const Vector& xi0,
                                                 std::size_t grid, double radius) {
    check_strict_min_preconditions(f, grid);
    if (xi0.size() != f.dim()) {
        throw std::invalid_argument("strict_minimizer_for_slope: dimension mismatch");
    }
    const Lattice lat{f.dim(), grid + 1, radius};
    std::vector<double> fvals(lat.size());
    for (std::size_t idx = 0; idx < lat.size(); ++idx) {
        try {
            fvals[idx] = eval(f, lat.point(idx));
        } catch (const std::range_error&) {
            fvals[idx] = std::numeric_limits<double>::infinity();
        }
    }
    return isolated_minimizer(f, xi0, lat, fvals);
}

std::optional<StrictMinimum> strict_minimum_witness(const ConvexFunction& f, std::size_t grid,
                                                    double radius) {
    check_strict_min_preconditions(f, grid);
    const std::size_t dim = f.dim();
    const Lattice lat{dim, grid + 1, radius};
    const std::size_t total = lat.size();

    std::vector<double> fvals(total);
    Vector lo(dim, std::numeric_limits<double>::max());
    Vector hi(dim, std::numeric_limits<double>::lowest());
    for (std::size_t idx = 0; idx < total; ++idx) {
        const Vector x = lat.point(idx);
        try {
            fvals[idx] = eval(f, x);
            const Vector g = subgradient(f, x);
            for (std::size_t i = 0; i < dim; ++i) {
                lo[i] = std::min(lo[i], g[i]);
                hi[i] = std::max(hi[i], g[i]);
            }
        } catch (const std::range_error&) {
            fvals[idx] = std::numeric_limits<double>::infinity();
        }
    }

    if (lo[0] > hi[0]) return std::nullopt; // no finite evaluation anywhere

    // Candidate slopes live in the observed slope box. The most interior
    // candidate (the box midpoint) is tried first, then lattice offsets in
    // rings of growing l1 radius.
    Vector mid(dim), step(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        mid[i] = 0.5 * (lo[i] + hi[i]);
        step[i] = (hi[i] - lo[i]) / static_cast<double>(grid);
    }
    const long k_max = static_cast<long>(grid / 2);
    struct Offset {
        long sum;
        std::vector<long> k;
    };
    std::vector<Offset> offsets;
    std::vector<long> ks(dim, -k_max);
    for (;;) {
        long s = 0;
        for (long k : ks) s += std::labs(k);
        if (s <= k_max) offsets.push_back({s, ks});
        std::size_t i = 0;
        for (; i < dim; ++i) {
            if (++ks[i] <= k_max) break;
            ks[i] = -k_max;
        }
        if (i == dim) break;
    }
    std::stable_sort(offsets.begin(), offsets.end(), [](const Offset& a, const Offset& b) {
        if (a.sum != b.sum) return a.sum < b.sum;
        return a.k < b.k;
    });

    std::size_t tried = 0;
    for (const Offset& off : offsets) {
        if (tried >= 256) break;
        Vector xi(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            xi[i] = mid[i] + static_cast<double>(off.k[i]) * step[i];
        }
        ++tried;
        if (auto xmin = isolated_minimizer(f, xi, lat, fvals)) {
            return StrictMinimum{std::move(xi), std::move(*xmin)};
        }
    }
    return std::nullopt;
}

bool flat_segment_check(const ConvexFunction& f, const Vector& x, std::size_t m) {
    if (x.size() != f.dim()) {
        throw std::invalid_argument("flat_segment_check: dimension mismatch");
    }
    if (m < 1 || m > f.dim()) {
        throw PreconditionError("flat_segment_check: m must be within 1..dim");
    }
    const double h = static_cast<double>(m) - x[m - 1];
    if (!(h > 0.0)) {
        throw PreconditionError("flat_segment_check: requires x_m < m");
    }
    const double fx = eval(f, x);
    for (int k = 1; k <= 33; ++k) {
        const double t = -h + static_cast<double>(k) * h / 17.0;
        Vector z = x;
        z[m - 1] += t;
        if (eval(f, z) != fx) return false;
    }
    return true;
}

std::optional<double> coercivity_radius(const ConvexFunction& f, std::uint64_t seed,
                                        std::size_t sphere_points, int max_doublings) {
    const std::size_t dim = f.dim();
    const double f0 = eval(f, zeros(dim));
    std::vector<Vector> dirs;
    dirs.reserve(sphere_points);
    for (std::size_t j = 0; j < sphere_points; ++j) {
        Rng rng(substream_seed(seed, kStreamSphere, j));
        dirs.push_back(rng.unit_vector(dim));
    }
    double radius = 1.0;
    for (int e = 0; e <= max_doublings; ++e) {
        double lowest = std::numeric_limits<double>::infinity();
        for (const Vector& u : dirs) {
            lowest = std::min(lowest, eval_or_inf(f, scaled(u, radius)));
        }
        if (lowest > f0 + 1.0) return radius;
        radius *= 2.0;
    }
    return std::nullopt;
}

} // namespace convexdecomp
