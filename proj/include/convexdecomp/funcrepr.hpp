#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <variant>
#include <vector>

#include "convexdecomp/vecspace.hpp"

namespace convexdecomp {

/// Convex scalar kernels with a fixed subderivative selection at kinks.
enum class Kernel {
    ReluSquare, // 0 for t <= 0, t^2 for t >= 0
    Square,     // t^2
    Abs,        // |t| with slope 0 chosen at t = 0
    Exp,        // e^t; arguments above 700 raise std::range_error
};

double kernel_value(Kernel k, double t);
double kernel_slope(Kernel k, double t);

struct FunctionNode;

/// Continuous convex function on R^n with exact value and subgradient
/// oracles. Structural variants are convex by construction; the black-box
/// variant wraps caller-supplied oracles. Immutable and cheap to copy.
class ConvexFunction {
public:
    using ValueFn = std::function<double(const Vector&)>;
    using SubgradFn = std::function<Vector(const Vector&)>;

    /// (1/2) x^T A x + <b, x> + c with A symmetric positive semidefinite.
    /// A is given row-major and validated (symmetry to 1e-12 relative,
    /// smallest eigenvalue >= -1e-10 * scale estimated by 64 power-iteration
    /// steps on the shifted matrix).
    static ConvexFunction quadratic(std::vector<double> a_rowmajor, Vector b, double c);

    /// max_i (<a_i, x> + c_i), at least one piece.
    static ConvexFunction max_affine(std::vector<Vector> as, std::vector<double> cs);

    /// sum_i w_i * kernel_i(<a_i, x> - s_i) with w_i > 0 and a_i != 0.
    struct Term {
        double w;
        Kernel kernel;
        Vector a;
        double s;
    };
    static ConvexFunction scalar_composite(std::vector<Term> terms);

    /// base + <l, x> + c0.
    static ConvexFunction affine_plus(ConvexFunction base, Vector l, double c0);

    /// sum of parts (nonempty, equal dimensions).
    static ConvexFunction sum(std::vector<ConvexFunction> parts);

    /// Caller-supplied oracles, trusted but checked at consumption points.
    static ConvexFunction black_box(std::size_t dim, ValueFn value, SubgradFn subgrad);

    std::size_t dim() const;
    const FunctionNode& node() const { return *node_; }

    /// True iff the representation contains a black-box oracle anywhere.
    bool has_black_box() const;

private:
    explicit ConvexFunction(std::shared_ptr<const FunctionNode> node)
        : node_(std::move(node)) {}
    std::shared_ptr<const FunctionNode> node_;
};

struct QuadraticNode {
    std::vector<double> a; // row-major dim x dim, symmetric PSD
    Vector b;
    double c;
};

struct MaxAffineNode {
    std::vector<Vector> as;
    std::vector<double> cs;
};

struct ScalarCompositeNode {
    std::vector<ConvexFunction::Term> terms;
};

struct AffinePlusNode {
    ConvexFunction base;
    Vector l;
    double c0;
};

struct SumNode {
    std::vector<ConvexFunction> parts;
};

struct BlackBoxNode {
    ConvexFunction::ValueFn value;
    ConvexFunction::SubgradFn subgrad;
};

struct FunctionNode {
    std::variant<QuadraticNode, MaxAffineNode, ScalarCompositeNode, AffinePlusNode,
                 SumNode, BlackBoxNode>
        repr;
    std::size_t dim;
};

double eval(const ConvexFunction& f, const Vector& z);

/// One chosen element of the subdifferential at z; deterministic, equal to
/// the gradient at smooth points. Max-affine ties resolve to the
/// lowest-index active piece (absolute tolerance 1e-12).
Vector subgradient(const ConvexFunction& f, const Vector& z);

struct SubgradientSample {
    Vector point;
    Vector xi;
};

/// Checks the subgradient inequality f(y) >= f(point) + <xi, y - point> at
/// `probes` seeded points with slack 1e-8 * (1 + |f(y)|).
bool validate_subgradient(const ConvexFunction& f, const SubgradientSample& sample,
                          std::size_t probes, std::uint64_t seed);

/// Max normalized violation of midpoint convexity over seeded triples:
/// (f(lx + (1-l)y) - l f(x) - (1-l) f(y)) / (1 + |f(x)| + |f(y)|).
double convexity_violation(const std::function<double(const Vector&)>& value,
                           std::size_t dim, std::size_t triples, std::uint64_t seed);

/// Wraps any function behind opaque value/subgradient oracles, forcing the
/// sampling code paths.
ConvexFunction black_box_wrap(const ConvexFunction& f);

} // namespace convexdecomp
