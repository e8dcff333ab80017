#pragma once

#include <cstddef>
#include <vector>

namespace convexdecomp {

/// Dense vector in R^n. Entries are expected to be finite; dimension is the
/// entry count.
using Vector = std::vector<double>;

double dot(const Vector& a, const Vector& b);
double norm(const Vector& v);
/// y += alpha * x
void axpy(Vector& y, double alpha, const Vector& x);
Vector scaled(const Vector& v, double alpha);
Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
Vector zeros(std::size_t n);
/// i-th coordinate vector of R^n (0-based index).
Vector coordinate(std::size_t n, std::size_t i);
bool all_finite(const Vector& v);

/// Linear subspace of R^n held as a pairwise-orthonormal basis (possibly
/// empty) plus the tolerance that was used while constructing it.
struct Subspace {
    std::size_t ambient_dim = 0;
    std::vector<Vector> basis;
    double tol = 1e-9;

    std::size_t dim() const { return basis.size(); }
};

/// Largest deviation of <b_i, b_j> from delta_ij over all basis pairs.
double orthonormality_defect(const std::vector<Vector>& basis);

/// Builds a Subspace from an already orthonormal basis, checking the
/// orthonormality invariant to 1e-12.
Subspace make_subspace(std::size_t ambient_dim, std::vector<Vector> basis,
                       double tol = 1e-9);

/// Incremental rank-revealing span accumulation: modified Gram-Schmidt with
/// one reorthogonalization pass. A candidate is treated as dependent iff its
/// residual after projection onto the accumulated basis has norm
/// <= tol * max(1, |candidate|).
class SpanAccumulator {
public:
    SpanAccumulator(std::size_t ambient_dim, double tol);
    /// Seeds the accumulator with a trusted orthonormal basis.
    SpanAccumulator(std::size_t ambient_dim, double tol,
                    std::vector<Vector> orthonormal_seed);

    /// Returns true iff the candidate increased the rank.
    bool add(const Vector& candidate);

    std::size_t rank() const { return basis_.size(); }
    const std::vector<Vector>& basis() const { return basis_; }
    Subspace subspace() const;

private:
    std::size_t ambient_;
    double tol_;
    std::vector<Vector> basis_;
};

/// Orthonormal basis of span(vectors). Candidates are processed in input
/// order; duplicates do not affect the result. ambient_dim may be 0 when
/// vectors is nonempty (it is then deduced).
Subspace accumulate_span(const std::vector<Vector>& vectors, double tol,
                         std::size_t ambient_dim = 0);

/// Orthogonal projection of z onto s: sum_i <b_i, z> b_i.
Vector project(const Subspace& s, const Vector& z);

/// z - project(s, z); orthogonal to every basis vector of s.
Vector complement_project(const Subspace& s, const Vector& z);

/// Orthonormal basis of the orthogonal complement of s, built by completing
/// the basis of s with coordinate vectors.
Subspace orthogonal_complement(const Subspace& s);

/// Symmetric gap between two subspaces: the sine of the largest principal
/// angle, computed from the singular values of the basis cross-product.
/// 0 for equal subspaces, in [0,1] when dimensions match, 1 otherwise.
double subspace_distance(const Subspace& a, const Subspace& b);

} // namespace convexdecomp
