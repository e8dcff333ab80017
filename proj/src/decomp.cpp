#include "convexdecomp/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "convexdecomp/errors.hpp"
#include "convexdecomp/parallel.hpp"
#include "convexdecomp/rng.hpp"

namespace convexdecomp {

namespace {

constexpr double kSampleScales[3] = {1.0, 8.0, 64.0};

Vector seeded_point(std::size_t dim, std::uint64_t seed, std::uint64_t stream,
                    std::size_t index) {
    Rng rng(substream_seed(seed, stream, index));
    Vector z = rng.gaussian_vector(dim);
    const double scale = kSampleScales[index % 3];
    for (double& x : z) x *= scale;
    return z;
}

std::size_t sample_budget(const DecompConfig& cfg, std::size_t dim) {
    return cfg.samples > 0 ? cfg.samples : 64 * dim;
}

struct SampledSpan {
    Subspace x;
    bool conclusive = true;
    std::size_t samples_used = 0;
};

// Black-box path: accumulate subgradient differences xi(z_i) - xi(z_1) over
// seeded multi-scale Gaussian samples until the rank holds still for
// `stability_batches` consecutive batches. Every consumed black-box sample
// is validated against the subgradient inequality.
SampledSpan sampled_x_space(const ConvexFunction& f, const DecompConfig& cfg) {
    const std::size_t dim = f.dim();
    const std::size_t batch = std::max<std::size_t>(8, sample_budget(cfg, dim) / 8);
    const std::size_t max_samples = std::max<std::size_t>(100 * dim, 4 * batch);

    struct Slot {
        Vector xi;
        bool valid = false;
    };

    const Vector z_ref = seeded_point(dim, cfg.seed, kStreamSamples, 0);
    Vector xi_ref = subgradient(f, z_ref);
    if (!all_finite(xi_ref) ||
        !validate_subgradient(f, {z_ref, xi_ref}, 64, substream_seed(cfg.seed, kStreamSamples, 1u << 20))) {
        throw OracleError("decompose: subgradient oracle failed validation at sample 0");
    }

    SpanAccumulator acc(dim, cfg.tol_rank);
    SampledSpan out;
    out.samples_used = 1;
    std::size_t next_index = 1;
    std::size_t stable = 0;
    std::size_t last_rank = 0;

    while (out.samples_used < max_samples && acc.rank() < dim) {
        const std::size_t count = std::min(batch, max_samples - out.samples_used);
        std::vector<Slot> slots(count);
        parallel_for_indexed(count, cfg.threads, [&](std::size_t k) {
            const std::size_t index = next_index + k;
            const Vector z = seeded_point(dim, cfg.seed, kStreamSamples, index);
            Slot s;
            s.xi = subgradient(f, z);
            s.valid = all_finite(s.xi) &&
                      validate_subgradient(f, {z, s.xi}, 64,
                                           substream_seed(cfg.seed, kStreamSamples,
                                                          (1u << 20) + index));
            slots[k] = std::move(s);
        });
        // ordered reduction: deterministic output and deterministic errors
        for (std::size_t k = 0; k < count; ++k) {
            if (!slots[k].valid) {
                throw OracleError("decompose: subgradient oracle failed validation at sample " +
                                  std::to_string(next_index + k));
            }
            acc.add(sub(slots[k].xi, xi_ref));
        }
        next_index += count;
        out.samples_used += count;
        if (acc.rank() == last_rank) {
            ++stable;
        } else {
            last_rank = acc.rank();
            stable = 0;
        }
        if (stable >= cfg.stability_batches) break;
    }

    out.x = acc.subspace();
    out.conclusive = acc.rank() == dim || stable >= cfg.stability_batches;
    return out;
}

Subspace quadratic_range(const QuadraticNode& q, std::size_t dim, double tol) {
    SpanAccumulator acc(dim, tol);
    for (std::size_t j = 0; j < dim; ++j) {
        Vector col(dim);
        for (std::size_t i = 0; i < dim; ++i) col[i] = q.a[i * dim + j];
        acc.add(col);
    }
    return acc.subspace();
}

} // namespace

std::vector<std::size_t> retained_pieces(const MaxAffineNode& m, std::size_t dim,
                                         std::uint64_t seed) {
    const std::size_t n = m.as.size();
    if (n == 1) return {0};

    // exact duplicates only confuse the strict-activity scan; keep the first
    std::vector<bool> duplicate(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (!duplicate[j] && m.as[i] == m.as[j] && m.cs[i] == m.cs[j]) {
                duplicate[i] = true;
                break;
            }
        }
    }

    std::vector<Vector> probes;
    const std::size_t n_samples = 200 * dim;
    for (std::size_t k = 0; k < n_samples; ++k) {
        probes.push_back(seeded_point(dim, seed, kStreamRetention, k));
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (duplicate[i] || duplicate[j]) continue;
            const Vector d = sub(m.as[i], m.as[j]);
            const double dn2 = dot(d, d);
            if (dn2 <= 1e-28) continue; // parallel pieces: the scan settles them
            // point where pieces i and j tie, probed to both sides
            Vector x0 = scaled(d, (m.cs[j] - m.cs[i]) / dn2);
            const double dn = std::sqrt(dn2);
            for (double step : {1e-3, 1.0, 100.0}) {
                Vector plus = x0;
                axpy(plus, step / dn, d);
                Vector minus = x0;
                axpy(minus, -step / dn, d);
                probes.push_back(std::move(plus));
                probes.push_back(std::move(minus));
            }
        }
    }

    constexpr double kMargin = 1e-10;
    std::vector<bool> active(n, false);
    for (const Vector& x : probes) {
        std::size_t best = 0;
        double best_val = -1e308, second = -1e308;
        for (std::size_t i = 0; i < n; ++i) {
            if (duplicate[i]) continue;
            const double v = dot(m.as[i], x) + m.cs[i];
            if (v > best_val) {
                second = best_val;
                best_val = v;
                best = i;
            } else if (v > second) {
                second = v;
            }
        }
        if (best_val > second + kMargin) active[best] = true;
    }

    std::vector<std::size_t> retained;
    for (std::size_t i = 0; i < n; ++i) {
        if (!duplicate[i] && active[i]) retained.push_back(i);
    }
    if (retained.empty()) {
        // all pieces tie everywhere sampled (e.g. parallel pieces): the top
        // offset alone describes f, and a single piece spans nothing
        std::size_t top = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (!duplicate[i] && m.cs[i] > m.cs[top]) top = i;
        }
        retained.push_back(top);
    }
    return retained;
}

std::optional<Subspace> structural_x_space(const ConvexFunction& f, double tol_rank,
                                           std::uint64_t seed) {
    const std::size_t dim = f.dim();
    return std::visit(
        [&](const auto& repr) -> std::optional<Subspace> {
            using T = std::decay_t<decltype(repr)>;
            if constexpr (std::is_same_v<T, QuadraticNode>) {
                return quadratic_range(repr, dim, tol_rank);
            } else if constexpr (std::is_same_v<T, MaxAffineNode>) {
                const auto kept = retained_pieces(repr, dim, seed);
                SpanAccumulator acc(dim, tol_rank);
                for (std::size_t i : kept) acc.add(sub(repr.as[i], repr.as[kept.front()]));
                return acc.subspace();
            } else if constexpr (std::is_same_v<T, ScalarCompositeNode>) {
                SpanAccumulator acc(dim, tol_rank);
                for (const auto& t : repr.terms) acc.add(t.a);
                return acc.subspace();
            } else if constexpr (std::is_same_v<T, AffinePlusNode>) {
                return structural_x_space(repr.base, tol_rank, seed);
            } else if constexpr (std::is_same_v<T, SumNode>) {
                SpanAccumulator acc(dim, tol_rank);
                for (const auto& p : repr.parts) {
                    auto xs = structural_x_space(p, tol_rank, seed);
                    if (!xs) return std::nullopt;
                    for (const Vector& b : xs->basis) acc.add(b);
                }
                return acc.subspace();
            } else {
                return std::nullopt;
            }
        },
        f.node().repr);
}

bool line_flat(const ConvexFunction& f, const Vector& z0, const Vector& xi0,
               const Vector& v, const std::vector<double>& ts) {
    const double f0 = eval(f, z0);
    const double tol = 1e-8 * (1.0 + std::fabs(f0));
    const double slope = dot(xi0, v);
    for (double t : ts) {
        Vector z = z0;
        axpy(z, t, v);
        double val;
        try {
            val = eval(f, z);
        } catch (const std::range_error&) {
            return false;
        }
        if (std::fabs(val - f0 - t * slope) > tol) return false;
    }
    return true;
}

Subspace constancy_space(const ConvexFunction& f, const Vector& z0, const Vector& xi0,
                         const DecompConfig& cfg) {
    if (z0.size() != f.dim() || xi0.size() != f.dim()) {
        throw std::invalid_argument("constancy_space: dimension mismatch");
    }
    if (cfg.ts.empty()) throw PreconditionError("constancy_space: ts must be nonempty");
    if (!validate_subgradient(f, {z0, xi0}, 64, substream_seed(cfg.seed, kStreamValidate, 0xC0))) {
        throw OracleError("constancy_space: xi0 violates the subgradient inequality at z0");
    }
    if (auto xs = structural_x_space(f, cfg.tol_rank, cfg.seed)) {
        return orthogonal_complement(*xs);
    }
    auto sampled = sampled_x_space(f, cfg);
    if (!sampled.conclusive) {
        throw OracleError("constancy_space: sampled rank did not stabilize within budget");
    }
    Subspace y = orthogonal_complement(sampled.x);
    for (const Vector& v : y.basis) {
        if (!line_flat(f, z0, xi0, v, cfg.ts)) {
            throw OracleError("constancy_space: complement direction fails the flat-line probe");
        }
    }
    return y;
}

Vector Decomposition::x_coords(const Vector& z) const {
    Vector u(x_space.dim());
    for (std::size_t i = 0; i < x_space.dim(); ++i) u[i] = dot(x_space.basis[i], z);
    return u;
}

Vector Decomposition::embed(const Vector& u) const {
    if (u.size() != x_space.dim()) {
        throw std::invalid_argument("Decomposition::embed: coordinate count mismatch");
    }
    Vector z(x_space.ambient_dim, 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) axpy(z, u[i], x_space.basis[i]);
    return z;
}

double Decomposition::core(const Vector& u) const {
    const Vector z = embed(u);
    return eval(f, z) - dot(v, z);
}

double Decomposition::reconstruct(const Vector& z) const {
    return core(x_coords(z)) + dot(v, z);
}

DecomposeResult decompose(const ConvexFunction& f, const DecompConfig& cfg) {
    const std::size_t dim = f.dim();
    if (cfg.ts.empty()) throw PreconditionError("decompose: ts must be nonempty");
    bool has_pos = false, has_neg = false;
    for (double t : cfg.ts) {
        has_pos = has_pos || t > 0;
        has_neg = has_neg || t < 0;
    }
    if (!has_pos || !has_neg) {
        throw PreconditionError("decompose: ts must contain both signs");
    }
    if (!(cfg.tol_rank > 0)) throw PreconditionError("decompose: tol_rank must be positive");

    const Vector z0 = zeros(dim);
    const Vector xi0 = subgradient(f, z0);
    if (f.has_black_box()) {
        if (!all_finite(xi0) ||
            !validate_subgradient(f, {z0, xi0}, 64, substream_seed(cfg.seed, kStreamValidate, 0xD0))) {
            throw OracleError("decompose: xi0 violates the subgradient inequality at the origin");
        }
    }

    Subspace x;
    bool conclusive = true;
    std::size_t used = 0;
    if (auto xs = structural_x_space(f, cfg.tol_rank, cfg.seed)) {
        x = std::move(*xs);
    } else {
        auto sampled = sampled_x_space(f, cfg);
        x = std::move(sampled.x);
        conclusive = sampled.conclusive;
        used = sampled.samples_used;
    }

    Subspace y = orthogonal_complement(x);
    if (conclusive) {
        // cross-check against the direct constancy characterization: every
        // complement direction must be a flat line of f
        for (const Vector& w : y.basis) {
            if (!line_flat(f, z0, xi0, w, cfg.ts)) {
                throw OracleError(
                    "decompose: complement direction fails the flat-line constancy probe");
            }
        }
    }

    Vector v = complement_project(x, xi0);
    const double a = eval(f, z0) - dot(xi0, z0);
    Decomposition d{std::move(x), std::move(y), std::move(v), z0, xi0, a, f};
    return DecomposeResult{std::move(d), conclusive, used};
}

DecompositionCheck verify_decomposition(const ConvexFunction& f, const Decomposition& d,
                                        std::size_t probes, std::uint64_t seed) {
    DecompositionCheck out;
    const std::size_t dim = f.dim();

    for (std::size_t j = 0; j < probes; ++j) {
        const Vector z = seeded_point(dim, seed, kStreamVerify, j);
        double fz, rec;
        try {
            fz = eval(f, z);
            rec = d.reconstruct(z);
        } catch (const std::range_error&) {
            continue;
        }
        const double resid = std::fabs(fz - rec);
        out.reconstruction_abs = std::max(out.reconstruction_abs, resid);
        out.reconstruction_rel = std::max(out.reconstruction_rel, resid / (1.0 + std::fabs(fz)));
    }

    if (d.y_space.dim() > 0) {
        for (std::size_t j = 0; j < probes; ++j) {
            Rng rng(substream_seed(seed, kStreamVerify, (1u << 22) + j));
            const Vector z = seeded_point(dim, seed, kStreamVerify, (1u << 21) + j);
            Vector y(dim, 0.0);
            const double scale = kSampleScales[j % 3];
            for (const Vector& b : d.y_space.basis) axpy(y, scale * rng.gaussian(), b);
            try {
                const double v1 = eval(f, add(z, y)) - dot(d.xi0, add(z, y));
                const double v0 = eval(f, z) - dot(d.xi0, z);
                const double diff = std::fabs(v1 - v0);
                out.quotient_shift_abs = std::max(out.quotient_shift_abs, diff);
                out.quotient_shift_rel =
                    std::max(out.quotient_shift_rel, diff / (1.0 + std::fabs(v0)));
            } catch (const std::range_error&) {
                continue;
            }
        }

        const std::size_t pairs = std::max<std::size_t>(probes / 10, 1);
        for (std::size_t j = 0; j < pairs; ++j) {
            const Vector z1 = seeded_point(dim, seed, kStreamVerify, (1u << 23) + 2 * j);
            const Vector z2 = seeded_point(dim, seed, kStreamVerify, (1u << 23) + 2 * j + 1);
            const Vector dxi = sub(subgradient(f, z2), subgradient(f, z1));
            const double nd = norm(dxi);
            for (const Vector& b : d.y_space.basis) {
                out.subgrad_y_coupling =
                    std::max(out.subgrad_y_coupling, std::fabs(dot(dxi, b)) / (1.0 + nd));
            }
        }
    }
    return out;
}

} // namespace convexdecomp
