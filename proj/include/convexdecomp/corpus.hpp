#pragma once

#include <optional>
#include <string>
#include <vector>

#include "convexdecomp/decomp.hpp"

namespace convexdecomp {

struct GroundTruth {
    Subspace x_space;
    Subspace y_space;
    Vector v;
};

struct CorpusEntry {
    std::string name;
    ConvexFunction f;
    std::optional<GroundTruth> truth;
    std::vector<std::string> tags;
};

/// f(x) = sum_{n=1..N} x_n^2 / 2^n: positive definite diagonal quadratic
/// with eigenvalues 2/2^n. Coercive with a strict minimum at 0.
CorpusEntry make_weighted_quadratic(std::size_t n);

/// f(x) = sum_{n=1..N} relu_square(x_n): nonnegative, bounded by |x|^2, not
/// constant on any line yet flat along every negative coordinate ray.
CorpusEntry make_example_gamma(std::size_t n);

/// f(x) = sum_{n=1..N} 2^{-n} relu_square(x_n - n): not constant on any
/// line, flat on widening coordinate segments, no strict minimum in the
/// limit of large N.
CorpusEntry make_example33(std::size_t n);

/// Deterministic graded corpus: the three families above at
/// N in {1,2,4,8,16}, seeded rank-deficient PSD quadratics with exact
/// range/null spaces, max-affine functions with slopes confined to a known
/// subspace plus a known drift, certified composites, sums and affine
/// shifts. At least 40 entries; same seed gives bit-identical entries.
std::vector<CorpusEntry> make_graded_corpus(std::uint64_t seed);

/// Assembles a Decomposition from exact ground truth (z0 = 0), for running
/// verify_decomposition against the truth instead of a computed result.
Decomposition decomposition_from_truth(const ConvexFunction& f, const GroundTruth& t);

} // namespace convexdecomp
