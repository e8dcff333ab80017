#include "convexdecomp/funcrepr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "convexdecomp/errors.hpp"
#include "convexdecomp/rng.hpp"

namespace convexdecomp {

double kernel_value(Kernel k, double t) {
    switch (k) {
        case Kernel::ReluSquare: return t <= 0.0 ? 0.0 : t * t;
        case Kernel::Square: return t * t;
        case Kernel::Abs: return std::fabs(t);
        case Kernel::Exp:
            if (t > 700.0) throw std::range_error("exp kernel argument exceeds 700");
            return std::exp(t);
    }
    throw std::logic_error("kernel_value: unknown kernel");
}

double kernel_slope(Kernel k, double t) {
    switch (k) {
        case Kernel::ReluSquare: return t <= 0.0 ? 0.0 : 2.0 * t;
        case Kernel::Square: return 2.0 * t;
        case Kernel::Abs: return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0);
        case Kernel::Exp:
            if (t > 700.0) throw std::range_error("exp kernel argument exceeds 700");
            return std::exp(t);
    }
    throw std::logic_error("kernel_slope: unknown kernel");
}

namespace {

void require_dim(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                    std::to_string(got) + " vs " + std::to_string(want) + ")");
    }
}

Vector matvec(const std::vector<double>& a, std::size_t n, const Vector& x) {
    Vector out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += a[i * n + j] * x[j];
        out[i] = s;
    }
    return out;
}

// Gershgorin bound for |lambda|_max, then 64 power-iteration steps on
// B = s*I - A; the Rayleigh quotient of the iterate estimates lambda_max(B)
// and hence lambda_min(A) = s - lambda_max(B).
double smallest_eigenvalue_estimate(const std::vector<double>& a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += std::fabs(a[i * n + j]);
        s = std::max(s, row);
    }
    if (s == 0.0) return 0.0;
    Vector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 / static_cast<double>(i + 1);
    double nv = norm(v);
    for (double& x : v) x /= nv;
    for (int it = 0; it < 64; ++it) {
        Vector av = matvec(a, n, v);
        Vector w(n);
        for (std::size_t i = 0; i < n; ++i) w[i] = s * v[i] - av[i];
        nv = norm(w);
        if (nv <= 1e-300) return s; // B v ~ 0: A acts as s*I on the iterate
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nv;
    }
    Vector av = matvec(a, n, v);
    double rayleigh = 0.0;
    for (std::size_t i = 0; i < n; ++i) rayleigh += v[i] * (s * v[i] - av[i]);
    return s - rayleigh;
}

std::shared_ptr<const FunctionNode> make_node(FunctionNode&& node) {
    return std::make_shared<const FunctionNode>(std::move(node));
}

struct EvalVisitor {
    const Vector& z;
    std::size_t dim;

    double operator()(const QuadraticNode& q) const {
        const Vector az = matvec(q.a, dim, z);
        return 0.5 * dot(z, az) + dot(q.b, z) + q.c;
    }
    double operator()(const MaxAffineNode& m) const {
        double best = dot(m.as[0], z) + m.cs[0];
        for (std::size_t i = 1; i < m.as.size(); ++i) {
            best = std::max(best, dot(m.as[i], z) + m.cs[i]);
        }
        return best;
    }
    double operator()(const ScalarCompositeNode& sc) const {
        double s = 0.0;
        for (const auto& t : sc.terms) s += t.w * kernel_value(t.kernel, dot(t.a, z) - t.s);
        return s;
    }
    double operator()(const AffinePlusNode& ap) const {
        return eval(ap.base, z) + dot(ap.l, z) + ap.c0;
    }
    double operator()(const SumNode& sn) const {
        double s = 0.0;
        for (const auto& p : sn.parts) s += eval(p, z);
        return s;
    }
    double operator()(const BlackBoxNode& bb) const { return bb.value(z); }
};

constexpr double kMaxAffineTieTol = 1e-12;

struct SubgradVisitor {
    const Vector& z;
    std::size_t dim;

    Vector operator()(const QuadraticNode& q) const {
        Vector g = matvec(q.a, dim, z);
        axpy(g, 1.0, q.b);
        return g;
    }
    Vector operator()(const MaxAffineNode& m) const {
        double best = dot(m.as[0], z) + m.cs[0];
        for (std::size_t i = 1; i < m.as.size(); ++i) {
            best = std::max(best, dot(m.as[i], z) + m.cs[i]);
        }
        // lowest-index piece within the tie tolerance
        for (std::size_t i = 0; i < m.as.size(); ++i) {
            if (dot(m.as[i], z) + m.cs[i] >= best - kMaxAffineTieTol) return m.as[i];
        }
        return m.as[0];
    }
    Vector operator()(const ScalarCompositeNode& sc) const {
        Vector g(dim, 0.0);
        for (const auto& t : sc.terms) {
            axpy(g, t.w * kernel_slope(t.kernel, dot(t.a, z) - t.s), t.a);
        }
        return g;
    }
    Vector operator()(const AffinePlusNode& ap) const {
        Vector g = subgradient(ap.base, z);
        axpy(g, 1.0, ap.l);
        return g;
    }
    Vector operator()(const SumNode& sn) const {
        Vector g(dim, 0.0);
        for (const auto& p : sn.parts) axpy(g, 1.0, subgradient(p, z));
        return g;
    }
    Vector operator()(const BlackBoxNode& bb) const { return bb.subgrad(z); }
};

} // namespace

ConvexFunction ConvexFunction::quadratic(std::vector<double> a_rowmajor, Vector b, double c) {
    const std::size_t n = b.size();
    if (n == 0) throw std::invalid_argument("quadratic: dimension must be positive");
    if (a_rowmajor.size() != n * n) {
        throw std::invalid_argument("quadratic: matrix size does not match b");
    }
    if (!all_finite(a_rowmajor) || !all_finite(b) || !std::isfinite(c)) {
        throw std::invalid_argument("quadratic: non-finite entry");
    }
    double scale = 0.0;
    for (double x : a_rowmajor) scale = std::max(scale, std::fabs(x));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::fabs(a_rowmajor[i * n + j] - a_rowmajor[j * n + i]) > 1e-12 * std::max(1.0, scale)) {
                throw std::invalid_argument("quadratic: matrix is not symmetric");
            }
        }
    }
    // symmetrize exactly-symmetric input is a no-op; near-symmetric input is
    // averaged so the gradient formula A x + b holds
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double m = 0.5 * (a_rowmajor[i * n + j] + a_rowmajor[j * n + i]);
            a_rowmajor[i * n + j] = m;
            a_rowmajor[j * n + i] = m;
        }
    }
    const double lmin = smallest_eigenvalue_estimate(a_rowmajor, n);
    double gersh = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += std::fabs(a_rowmajor[i * n + j]);
        gersh = std::max(gersh, row);
    }
    if (lmin < -1e-10 * gersh) {
        throw std::invalid_argument("quadratic: matrix is not positive semidefinite");
    }
    FunctionNode node{QuadraticNode{std::move(a_rowmajor), std::move(b), c}, n};
    return ConvexFunction(make_node(std::move(node)));
}

ConvexFunction ConvexFunction::max_affine(std::vector<Vector> as, std::vector<double> cs) {
    if (as.empty() || as.size() != cs.size()) {
        throw std::invalid_argument("max_affine: needs matching, nonempty pieces");
    }
    const std::size_t n = as.front().size();
    if (n == 0) throw std::invalid_argument("max_affine: dimension must be positive");
    for (const Vector& a : as) {
        require_dim(a.size(), n, "max_affine piece");
        if (!all_finite(a)) throw std::invalid_argument("max_affine: non-finite entry");
    }
    for (double c : cs) {
        if (!std::isfinite(c)) throw std::invalid_argument("max_affine: non-finite offset");
    }
    FunctionNode node{MaxAffineNode{std::move(as), std::move(cs)}, n};
    return ConvexFunction(make_node(std::move(node)));
}

ConvexFunction ConvexFunction::scalar_composite(std::vector<Term> terms) {
    if (terms.empty()) throw std::invalid_argument("scalar_composite: needs at least one term");
    const std::size_t n = terms.front().a.size();
    if (n == 0) throw std::invalid_argument("scalar_composite: dimension must be positive");
    for (const Term& t : terms) {
        require_dim(t.a.size(), n, "scalar_composite term");
        if (!(t.w > 0.0)) throw std::invalid_argument("scalar_composite: weights must be positive");
        if (!all_finite(t.a) || !std::isfinite(t.s) || !std::isfinite(t.w)) {
            throw std::invalid_argument("scalar_composite: non-finite entry");
        }
        if (norm(t.a) == 0.0) throw std::invalid_argument("scalar_composite: zero direction");
    }
    FunctionNode node{ScalarCompositeNode{std::move(terms)}, n};
    return ConvexFunction(make_node(std::move(node)));
}

ConvexFunction ConvexFunction::affine_plus(ConvexFunction base, Vector l, double c0) {
    require_dim(l.size(), base.dim(), "affine_plus");
    if (!all_finite(l) || !std::isfinite(c0)) {
        throw std::invalid_argument("affine_plus: non-finite entry");
    }
    const std::size_t n = base.dim();
    FunctionNode node{AffinePlusNode{std::move(base), std::move(l), c0}, n};
    return ConvexFunction(make_node(std::move(node)));
}

ConvexFunction ConvexFunction::sum(std::vector<ConvexFunction> parts) {
    if (parts.empty()) throw std::invalid_argument("sum: needs at least one part");
    const std::size_t n = parts.front().dim();
    for (const auto& p : parts) require_dim(p.dim(), n, "sum part");
    FunctionNode node{SumNode{std::move(parts)}, n};
    return ConvexFunction(make_node(std::move(node)));
}

ConvexFunction ConvexFunction::black_box(std::size_t dim, ValueFn value, SubgradFn subgrad) {
    if (dim == 0) throw std::invalid_argument("black_box: dimension must be positive");
    if (!value || !subgrad) throw std::invalid_argument("black_box: oracles must be callable");
    FunctionNode node{BlackBoxNode{std::move(value), std::move(subgrad)}, dim};
    return ConvexFunction(make_node(std::move(node)));
}

std::size_t ConvexFunction::dim() const { return node_->dim; }

bool ConvexFunction::has_black_box() const {
    return std::visit(
        [](const auto& repr) -> bool {
            using T = std::decay_t<decltype(repr)>;
            if constexpr (std::is_same_v<T, BlackBoxNode>) {
                return true;
            } else if constexpr (std::is_same_v<T, AffinePlusNode>) {
                return repr.base.has_black_box();
            } else if constexpr (std::is_same_v<T, SumNode>) {
                for (const auto& p : repr.parts) {
                    if (p.has_black_box()) return true;
                }
                return false;
            } else {
                return false;
            }
        },
        node_->repr);
}

double eval(const ConvexFunction& f, const Vector& z) {
    require_dim(z.size(), f.dim(), "eval");
    return std::visit(EvalVisitor{z, f.dim()}, f.node().repr);
}

Vector subgradient(const ConvexFunction& f, const Vector& z) {
    require_dim(z.size(), f.dim(), "subgradient");
    return std::visit(SubgradVisitor{z, f.dim()}, f.node().repr);
}

bool validate_subgradient(const ConvexFunction& f, const SubgradientSample& sample,
                          std::size_t probes, std::uint64_t seed) {
    if (probes < 1) throw PreconditionError("validate_subgradient: probes must be >= 1");
    require_dim(sample.point.size(), f.dim(), "validate_subgradient point");
    require_dim(sample.xi.size(), f.dim(), "validate_subgradient xi");
    static constexpr double kScales[3] = {1.0, 8.0, 64.0};
    const double fx = eval(f, sample.point);
    for (std::size_t j = 0; j < probes; ++j) {
        Rng rng(substream_seed(seed, kStreamValidate, j));
        Vector y = sample.point;
        axpy(y, kScales[j % 3], rng.gaussian_vector(f.dim()));
        double fy;
        try {
            fy = eval(f, y);
        } catch (const std::range_error&) {
            continue; // exp blow-up: f(y) is astronomically large, inequality holds
        }
        const double lin = fx + dot(sample.xi, sub(y, sample.point));
        if (fy < lin - 1e-8 * (1.0 + std::fabs(fy))) return false;
    }
    return true;
}

double convexity_violation(const std::function<double(const Vector&)>& value,
                           std::size_t dim, std::size_t triples, std::uint64_t seed) {
    static constexpr double kScales[3] = {1.0, 8.0, 64.0};
    double worst = 0.0;
    for (std::size_t j = 0; j < triples; ++j) {
        Rng rng(substream_seed(seed, kStreamConvexity, j));
        const double scale = kScales[j % 3];
        Vector x = rng.gaussian_vector(dim);
        Vector y = rng.gaussian_vector(dim);
        for (double& e : x) e *= scale;
        for (double& e : y) e *= scale;
        const double lambda = rng.uniform();
        Vector mid(dim);
        for (std::size_t i = 0; i < dim; ++i) mid[i] = lambda * x[i] + (1.0 - lambda) * y[i];
        double fx, fy, fm;
        try {
            fx = value(x);
            fy = value(y);
            fm = value(mid);
        } catch (const std::range_error&) {
            continue;
        }
        const double viol = (fm - lambda * fx - (1.0 - lambda) * fy) /
                            (1.0 + std::fabs(fx) + std::fabs(fy));
        worst = std::max(worst, viol);
    }
    return worst;
}

ConvexFunction black_box_wrap(const ConvexFunction& f) {
    ConvexFunction inner = f;
    return ConvexFunction::black_box(
        f.dim(), [inner](const Vector& z) { return eval(inner, z); },
        [inner](const Vector& z) { return subgradient(inner, z); });
}

} // namespace convexdecomp
