#include "testkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace convexdecomp::testkit {

namespace {

// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations,
// accumulating the eigenvector matrix.
void jacobi_eigen(std::vector<double> a, std::size_t n, std::vector<double>& values,
                  std::vector<Vector>& vectors) {
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    double scale = 0.0;
    for (double x : a) scale = std::max(scale, std::fabs(x));
    if (scale > 0.0) {
        for (int sweep = 0; sweep < 200; ++sweep) {
            double off = 0.0;
            for (std::size_t p = 0; p < n; ++p) {
                for (std::size_t q = p + 1; q < n; ++q) {
                    off = std::max(off, std::fabs(a[p * n + q]));
                }
            }
            if (off <= 1e-14 * scale) break;
            for (std::size_t p = 0; p < n; ++p) {
                for (std::size_t q = p + 1; q < n; ++q) {
                    const double apq = a[p * n + q];
                    if (std::fabs(apq) <= 1e-300) continue;
                    const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                     (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                    const double c = 1.0 / std::sqrt(t * t + 1.0);
                    const double s = t * c;
                    for (std::size_t i = 0; i < n; ++i) {
                        const double aip = a[i * n + p];
                        const double aiq = a[i * n + q];
                        a[i * n + p] = c * aip - s * aiq;
                        a[i * n + q] = s * aip + c * aiq;
                    }
                    for (std::size_t j = 0; j < n; ++j) {
                        const double apj = a[p * n + j];
                        const double aqj = a[q * n + j];
                        a[p * n + j] = c * apj - s * aqj;
                        a[q * n + j] = s * apj + c * aqj;
                    }
                    for (std::size_t i = 0; i < n; ++i) {
                        const double vip = v[i * n + p];
                        const double viq = v[i * n + q];
                        v[i * n + p] = c * vip - s * viq;
                        v[i * n + q] = s * vip + c * viq;
                    }
                }
            }
        }
    }
    values.resize(n);
    vectors.assign(n, Vector(n));
    for (std::size_t j = 0; j < n; ++j) {
        values[j] = a[j * n + j];
        for (std::size_t i = 0; i < n; ++i) vectors[j][i] = v[i * n + j];
    }
}

} // namespace

Subspace nullspace_oracle(const std::vector<double>& a_rowmajor, std::size_t dim) {
    if (dim > 64) throw std::invalid_argument("nullspace_oracle: dim must be <= 64");
    if (a_rowmajor.size() != dim * dim) {
        throw std::invalid_argument("nullspace_oracle: matrix size mismatch");
    }
    double scale = 0.0;
    for (double x : a_rowmajor) scale = std::max(scale, std::fabs(x));
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = i + 1; j < dim; ++j) {
            if (std::fabs(a_rowmajor[i * dim + j] - a_rowmajor[j * dim + i]) >
                1e-12 * std::max(1.0, scale)) {
                throw std::invalid_argument("nullspace_oracle: matrix is not symmetric");
            }
        }
    }
    std::vector<double> values;
    std::vector<Vector> vectors;
    jacobi_eigen(a_rowmajor, dim, values, vectors);
    double lmax = 0.0;
    for (double l : values) lmax = std::max(lmax, std::fabs(l));
    std::vector<Vector> basis;
    for (std::size_t j = 0; j < dim; ++j) {
        if (std::fabs(values[j]) <= 1e-10 * lmax) basis.push_back(vectors[j]);
    }
    return make_subspace(dim, std::move(basis));
}

std::vector<std::pair<double, double>> ray_table(const ConvexFunction& f, const Vector& x,
                                                 const Vector& v,
                                                 const std::vector<double>& ts) {
    std::vector<std::pair<double, double>> out;
    for (double t : ts) {
        Vector z = x;
        axpy(z, t, v);
        out.emplace_back(t, eval(f, z));
    }
    return out;
}

std::pair<Vector, double> grid_argmin(const ConvexFunction& f, double radius,
                                      std::size_t points_per_axis) {
    const std::size_t dim = f.dim();
    if (dim > 3) throw std::invalid_argument("grid_argmin: dim must be <= 3");
    if (points_per_axis < 2) throw std::invalid_argument("grid_argmin: need >= 2 points");
    std::size_t total = 1;
    for (std::size_t i = 0; i < dim; ++i) total *= points_per_axis;
    Vector best_x;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t idx = 0; idx < total; ++idx) {
        Vector x(dim);
        std::size_t rem = idx;
        for (std::size_t i = dim; i-- > 0;) {
            const std::size_t k = rem % points_per_axis;
            rem /= points_per_axis;
            x[i] = -radius + 2.0 * radius * static_cast<double>(k) /
                                 static_cast<double>(points_per_axis - 1);
        }
        double val;
        try {
            val = eval(f, x);
        } catch (const std::range_error&) {
            continue;
        }
        if (val < best) {
            best = val;
            best_x = std::move(x);
        }
    }
    return {best_x, best};
}

Subspace pairwise_diff_span_oracle(const MaxAffineNode& m, std::size_t dim) {
    std::vector<Vector> diffs;
    for (std::size_t i = 0; i < m.as.size(); ++i) {
        for (std::size_t j = i + 1; j < m.as.size(); ++j) {
            diffs.push_back(sub(m.as[i], m.as[j]));
        }
    }
    return accumulate_span(diffs, 1e-9, dim);
}

} // namespace convexdecomp::testkit
