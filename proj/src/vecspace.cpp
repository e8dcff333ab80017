#include "convexdecomp/vecspace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace convexdecomp {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                    std::to_string(a) + " vs " + std::to_string(b) + ")");
    }
}

} // namespace

double dot(const Vector& a, const Vector& b) {
    require_same_dim(a.size(), b.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const Vector& v) { return std::sqrt(dot(v, v)); }

void axpy(Vector& y, double alpha, const Vector& x) {
    require_same_dim(y.size(), x.size(), "axpy");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

Vector scaled(const Vector& v, double alpha) {
    Vector out(v);
    for (double& x : out) x *= alpha;
    return out;
}

Vector add(const Vector& a, const Vector& b) {
    require_same_dim(a.size(), b.size(), "add");
    Vector out(a);
    for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
    return out;
}

Vector sub(const Vector& a, const Vector& b) {
    require_same_dim(a.size(), b.size(), "sub");
    Vector out(a);
    for (std::size_t i = 0; i < b.size(); ++i) out[i] -= b[i];
    return out;
}

Vector zeros(std::size_t n) { return Vector(n, 0.0); }

Vector coordinate(std::size_t n, std::size_t i) {
    if (i >= n) throw std::invalid_argument("coordinate: index out of range");
    Vector e(n, 0.0);
    e[i] = 1.0;
    return e;
}

bool all_finite(const Vector& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

double orthonormality_defect(const std::vector<Vector>& basis) {
    double worst = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i) {
        for (std::size_t j = i; j < basis.size(); ++j) {
            const double target = (i == j) ? 1.0 : 0.0;
            worst = std::max(worst, std::fabs(dot(basis[i], basis[j]) - target));
        }
    }
    return worst;
}

Subspace make_subspace(std::size_t ambient_dim, std::vector<Vector> basis, double tol) {
    if (basis.size() > ambient_dim) {
        throw std::invalid_argument("make_subspace: more basis vectors than ambient dimension");
    }
    for (const Vector& b : basis) require_same_dim(b.size(), ambient_dim, "make_subspace");
    if (orthonormality_defect(basis) > 1e-12) {
        throw std::invalid_argument("make_subspace: basis is not orthonormal to 1e-12");
    }
    Subspace s;
    s.ambient_dim = ambient_dim;
    s.basis = std::move(basis);
    s.tol = tol;
    return s;
}

SpanAccumulator::SpanAccumulator(std::size_t ambient_dim, double tol)
    : ambient_(ambient_dim), tol_(tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("SpanAccumulator: tol must be positive");
}

SpanAccumulator::SpanAccumulator(std::size_t ambient_dim, double tol,
                                 std::vector<Vector> orthonormal_seed)
    : SpanAccumulator(ambient_dim, tol) {
    for (const Vector& b : orthonormal_seed) {
        require_same_dim(b.size(), ambient_, "SpanAccumulator seed");
    }
    basis_ = std::move(orthonormal_seed);
}

bool SpanAccumulator::add(const Vector& candidate) {
    require_same_dim(candidate.size(), ambient_, "SpanAccumulator::add");
    if (basis_.size() >= ambient_) return false;
    const double cnorm = norm(candidate);
    Vector r = candidate;
    for (int pass = 0; pass < 2; ++pass) {
        for (const Vector& b : basis_) axpy(r, -dot(r, b), b);
    }
    const double resid = norm(r);
    if (resid <= tol_ * std::max(1.0, cnorm)) return false;
    for (double& x : r) x /= resid;
    basis_.push_back(std::move(r));
    return true;
}

Subspace SpanAccumulator::subspace() const {
    Subspace s;
    s.ambient_dim = ambient_;
    s.basis = basis_;
    s.tol = tol_;
    return s;
}

Subspace accumulate_span(const std::vector<Vector>& vectors, double tol,
                         std::size_t ambient_dim) {
    std::size_t dim = ambient_dim;
    if (dim == 0 && !vectors.empty()) dim = vectors.front().size();
    SpanAccumulator acc(dim, tol);
    for (const Vector& v : vectors) acc.add(v);
    return acc.subspace();
}

Vector project(const Subspace& s, const Vector& z) {
    require_same_dim(z.size(), s.ambient_dim, "project");
    Vector out(s.ambient_dim, 0.0);
    for (const Vector& b : s.basis) axpy(out, dot(b, z), b);
    return out;
}

Vector complement_project(const Subspace& s, const Vector& z) {
    return sub(z, project(s, z));
}

Subspace orthogonal_complement(const Subspace& s) {
    SpanAccumulator acc(s.ambient_dim, s.tol > 0.0 ? s.tol : 1e-9, s.basis);
    Subspace out;
    out.ambient_dim = s.ambient_dim;
    out.tol = s.tol;
    for (std::size_t i = 0; i < s.ambient_dim; ++i) {
        if (acc.add(coordinate(s.ambient_dim, i))) {
            out.basis.push_back(acc.basis().back());
        }
    }
    return out;
}

namespace {

// Largest eigenvalue of a small dense symmetric matrix via cyclic Jacobi
// rotations; only used for the subspace metric, where k is the subspace dim.
double largest_eigenvalue_sym(std::vector<double> m, std::size_t k) {
    if (k == 0) return 0.0;
    double scale = 0.0;
    for (double x : m) scale = std::max(scale, std::fabs(x));
    if (scale == 0.0) return 0.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            for (std::size_t q = p + 1; q < k; ++q) off = std::max(off, std::fabs(m[p * k + q]));
        }
        if (off <= 1e-14 * scale) break;
        for (std::size_t p = 0; p < k; ++p) {
            for (std::size_t q = p + 1; q < k; ++q) {
                const double apq = m[p * k + q];
                if (std::fabs(apq) <= 1e-300) continue;
                const double app = m[p * k + p];
                const double aqq = m[q * k + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < k; ++i) {
                    const double mip = m[i * k + p];
                    const double miq = m[i * k + q];
                    m[i * k + p] = c * mip - s * miq;
                    m[i * k + q] = s * mip + c * miq;
                }
                for (std::size_t j = 0; j < k; ++j) {
                    const double mpj = m[p * k + j];
                    const double mqj = m[q * k + j];
                    m[p * k + j] = c * mpj - s * mqj;
                    m[q * k + j] = s * mpj + c * mqj;
                }
            }
        }
    }
    double lmax = m[0];
    for (std::size_t i = 1; i < k; ++i) lmax = std::max(lmax, m[i * k + i]);
    return lmax;
}

// Worst distance of a unit vector of `from` to the subspace `to`: the
// largest singular value of the complement-projected basis, i.e. sin of the
// largest principal angle. The residual form avoids the 1 - cos^2
// cancellation, so equal subspaces come out at roundoff level rather than
// sqrt(roundoff).
double directional_gap(const Subspace& from, const Subspace& to) {
    const std::size_t k = from.dim();
    std::vector<Vector> r;
    r.reserve(k);
    for (const Vector& u : from.basis) r.push_back(complement_project(to, u));
    std::vector<double> g(k * k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) g[i * k + j] = dot(r[i], r[j]);
    }
    const double lmax = std::clamp(largest_eigenvalue_sym(std::move(g), k), 0.0, 1.0);
    return std::sqrt(lmax);
}

} // namespace

double subspace_distance(const Subspace& a, const Subspace& b) {
    require_same_dim(a.ambient_dim, b.ambient_dim, "subspace_distance");
    if (a.dim() != b.dim()) return 1.0;
    if (a.dim() == 0) return 0.0;
    return std::max(directional_gap(a, b), directional_gap(b, a));
}

} // namespace convexdecomp
