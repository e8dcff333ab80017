#include "convexdecomp/corpus.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "convexdecomp/rng.hpp"

namespace convexdecomp {

namespace {

std::string with_n(const std::string& base, std::size_t n) {
    return base + "_n" + std::to_string(n);
}

Subspace full_space(std::size_t dim) {
    std::vector<Vector> basis;
    for (std::size_t i = 0; i < dim; ++i) basis.push_back(coordinate(dim, i));
    return make_subspace(dim, std::move(basis));
}

Subspace trivial_space(std::size_t dim) { return make_subspace(dim, {}); }

/// count seeded orthonormal vectors in R^dim, via Gram-Schmidt on Gaussian
/// draws. The returned vectors are the ground truth itself, so the truth is
/// exact by construction.
std::vector<Vector> seeded_orthonormal(std::size_t dim, std::size_t count,
                                       std::uint64_t seed, std::uint64_t salt) {
    SpanAccumulator acc(dim, 1e-6);
    std::size_t draw = 0;
    while (acc.rank() < count) {
        Rng rng(substream_seed(seed, kStreamCorpus, salt * 1024 + draw));
        acc.add(rng.gaussian_vector(dim));
        if (++draw > 64 * count + 64) {
            throw std::logic_error("seeded_orthonormal: rank deficit");
        }
    }
    return acc.basis();
}

ConvexFunction rank_quadratic(const std::vector<Vector>& q, std::size_t dim, std::size_t rank,
                              const std::vector<double>& eigenvalues, const Vector& b, double c) {
    std::vector<double> a(dim * dim, 0.0);
    for (std::size_t r = 0; r < rank; ++r) {
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                a[i * dim + j] += eigenvalues[r] * q[r][i] * q[r][j];
            }
        }
    }
    // enforce bit-level symmetry of the accumulated products
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = i + 1; j < dim; ++j) {
            const double m = 0.5 * (a[i * dim + j] + a[j * dim + i]);
            a[i * dim + j] = m;
            a[j * dim + i] = m;
        }
    }
    return ConvexFunction::quadratic(std::move(a), b, c);
}

CorpusEntry make_psd_entry(std::size_t dim, std::size_t rank, std::uint64_t seed,
                           std::uint64_t salt) {
    const auto q = seeded_orthonormal(dim, dim, seed, salt);
    Rng rng(substream_seed(seed, kStreamCorpus, salt * 1024 + 999));
    std::vector<double> eigenvalues(rank);
    for (double& l : eigenvalues) l = 0.5 + 4.0 * rng.uniform();
    Vector b(dim, 0.0);
    std::vector<Vector> null_basis(q.begin() + static_cast<long>(rank), q.end());
    Vector v_truth(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
        const double beta = rng.gaussian();
        axpy(b, beta, q[i]);
        if (i >= rank) axpy(v_truth, beta, q[i]);
    }
    const double c = rng.gaussian();
    CorpusEntry e{"psd_d" + std::to_string(dim) + "_r" + std::to_string(rank),
                  rank_quadratic(q, dim, rank, eigenvalues, b, c),
                  GroundTruth{
                      make_subspace(dim, {q.begin(), q.begin() + static_cast<long>(rank)}),
                      make_subspace(dim, std::move(null_basis)), std::move(v_truth)},
                  {"quadratic", "flat-directions"}};
    return e;
}

// Max-affine tangent fan: pieces are tangent planes of |p|^2 at points p in
// a known subspace S, plus a drift u in the orthogonal complement. Every
// tangent through a distinct point is essential, the slope differences span
// S exactly, and the subgradient at 0 is the drift piece itself.
CorpusEntry make_maxaffine_entry(std::size_t dim, std::size_t rank, std::uint64_t seed,
                                 std::uint64_t salt, bool with_drift) {
    const auto q = seeded_orthonormal(dim, dim, seed, salt);
    Rng rng(substream_seed(seed, kStreamCorpus, salt * 1024 + 998));
    Vector drift(dim, 0.0);
    if (with_drift && rank < dim) axpy(drift, 0.5 + rng.uniform(), q[rank]);

    std::vector<Vector> tangent_points;
    tangent_points.push_back(zeros(dim));
    for (std::size_t r = 0; r < rank; ++r) tangent_points.push_back(q[r]);
    for (int extra = 0; extra < 2; ++extra) {
        Vector p(dim, 0.0);
        for (std::size_t r = 0; r < rank; ++r) axpy(p, 1.5 * (rng.uniform() - 0.5), q[r]);
        tangent_points.push_back(std::move(p));
    }

    std::vector<Vector> as;
    std::vector<double> cs;
    for (const Vector& p : tangent_points) {
        Vector a = drift;
        axpy(a, 2.0, p);
        as.push_back(std::move(a));
        cs.push_back(-dot(p, p));
    }

    std::vector<Vector> x_basis(q.begin(), q.begin() + static_cast<long>(rank));
    std::vector<Vector> y_basis(q.begin() + static_cast<long>(rank), q.end());
    CorpusEntry e{"maxaff_d" + std::to_string(dim) + "_r" + std::to_string(rank),
                  ConvexFunction::max_affine(std::move(as), std::move(cs)),
                  GroundTruth{make_subspace(dim, std::move(x_basis)),
                              make_subspace(dim, std::move(y_basis)), drift},
                  {"max-affine"}};
    if (rank < dim) e.tags.push_back("flat-directions");
    return e;
}

} // namespace

CorpusEntry make_weighted_quadratic(std::size_t n) {
    if (n < 1) throw std::invalid_argument("make_weighted_quadratic: n must be >= 1");
    std::vector<double> a(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        a[i * n + i] = std::ldexp(2.0, -static_cast<int>(i + 1)); // 2 / 2^(i+1)
    }
    CorpusEntry e{with_n("weighted_quadratic", n),
                  ConvexFunction::quadratic(std::move(a), zeros(n), 0.0),
                  GroundTruth{full_space(n), trivial_space(n), zeros(n)},
                  {"paper-example", "coercive", "strict-min-at-0"}};
    return e;
}

CorpusEntry make_example_gamma(std::size_t n) {
    if (n < 1) throw std::invalid_argument("make_example_gamma: n must be >= 1");
    std::vector<ConvexFunction::Term> terms;
    for (std::size_t i = 0; i < n; ++i) {
        terms.push_back({1.0, Kernel::ReluSquare, coordinate(n, i), 0.0});
    }
    CorpusEntry e{with_n("example_gamma", n),
                  ConvexFunction::scalar_composite(std::move(terms)),
                  GroundTruth{full_space(n), trivial_space(n), zeros(n)},
                  {"paper-example", "paper-counterexample"}};
    return e;
}

CorpusEntry make_example33(std::size_t n) {
    if (n < 1) throw std::invalid_argument("make_example33: n must be >= 1");
    std::vector<ConvexFunction::Term> terms;
    for (std::size_t i = 0; i < n; ++i) {
        terms.push_back({std::ldexp(1.0, -static_cast<int>(i + 1)), Kernel::ReluSquare,
                         coordinate(n, i), static_cast<double>(i + 1)});
    }
    CorpusEntry e{with_n("example33", n),
                  ConvexFunction::scalar_composite(std::move(terms)),
                  GroundTruth{full_space(n), trivial_space(n), zeros(n)},
                  {"paper-example", "no-strict-min-limit"}};
    return e;
}

std::vector<CorpusEntry> make_graded_corpus(std::uint64_t seed) {
    std::vector<CorpusEntry> entries;

    for (std::size_t n : {1, 2, 4, 8, 16}) {
        entries.push_back(make_weighted_quadratic(n));
        entries.push_back(make_example_gamma(n));
        entries.push_back(make_example33(n));
    }

    std::uint64_t salt = 1;
    for (auto [dim, rank] : std::initializer_list<std::pair<std::size_t, std::size_t>>{
             {2, 1}, {3, 1}, {3, 2}, {4, 2}, {4, 3}, {6, 3}, {8, 4}, {8, 6}, {16, 8}}) {
        entries.push_back(make_psd_entry(dim, rank, seed, salt++));
    }

    for (auto [dim, rank] : std::initializer_list<std::pair<std::size_t, std::size_t>>{
             {2, 1}, {3, 2}, {4, 2}, {8, 3}}) {
        entries.push_back(make_maxaffine_entry(dim, rank, seed, salt++, true));
    }
    entries.push_back(make_maxaffine_entry(2, 2, seed, salt++, false));
    entries.back().name = "maxaff_d2_full";

    // symmetric relu pairs: relu_square(t) + relu_square(-t) = t^2, so these
    // are coercive composites certified by the positive-span test
    for (std::size_t n : {2, 4, 8}) {
        std::vector<ConvexFunction::Term> terms;
        for (std::size_t i = 0; i < n; ++i) {
            terms.push_back({1.0, Kernel::ReluSquare, coordinate(n, i), 0.0});
            terms.push_back({1.0, Kernel::ReluSquare, scaled(coordinate(n, i), -1.0), 0.0});
        }
        entries.push_back(CorpusEntry{with_n("pm_gamma", n),
                                      ConvexFunction::scalar_composite(std::move(terms)),
                                      GroundTruth{full_space(n), trivial_space(n), zeros(n)},
                                      {"coercive", "composite"}});
    }

    {
        // square kernels along seeded spanning directions
        const std::size_t dim = 3;
        const auto q = seeded_orthonormal(dim, dim, seed, salt++);
        std::vector<ConvexFunction::Term> terms;
        Rng rng(substream_seed(seed, kStreamCorpus, 7777));
        for (std::size_t i = 0; i < dim; ++i) {
            terms.push_back({0.5 + rng.uniform(), Kernel::Square, q[i], rng.gaussian()});
        }
        Vector extra(dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i) axpy(extra, rng.gaussian(), q[i]);
        terms.push_back({0.25, Kernel::Square, extra, 0.0});
        // xi0 = sum w * 2(<a,0>-s) a has no component outside the full span
        Vector v0 = zeros(dim);
        entries.push_back(CorpusEntry{"sq_composite_d3",
                                      ConvexFunction::scalar_composite(std::move(terms)),
                                      GroundTruth{full_space(dim), trivial_space(dim), v0},
                                      {"coercive", "composite"}});
    }

    {
        // smooth strictly convex but kernel-wise uncertifiable: 2cosh(x1) + x2^2
        std::vector<ConvexFunction::Term> terms;
        terms.push_back({1.0, Kernel::Exp, coordinate(2, 0), 0.0});
        terms.push_back({1.0, Kernel::Exp, scaled(coordinate(2, 0), -1.0), 0.0});
        terms.push_back({1.0, Kernel::Square, coordinate(2, 1), 0.0});
        entries.push_back(CorpusEntry{"cosh_square_d2",
                                      ConvexFunction::scalar_composite(std::move(terms)),
                                      GroundTruth{full_space(2), trivial_space(2), zeros(2)},
                                      {"composite", "smooth"}});
    }

    {
        // kink at the origin: |x1| + x2^2
        std::vector<ConvexFunction::Term> terms;
        terms.push_back({1.0, Kernel::Abs, coordinate(2, 0), 0.0});
        terms.push_back({1.0, Kernel::Square, coordinate(2, 1), 0.0});
        entries.push_back(CorpusEntry{"abs_square_d2",
                                      ConvexFunction::scalar_composite(std::move(terms)),
                                      GroundTruth{full_space(2), trivial_space(2), zeros(2)},
                                      {"composite", "kink"}});
    }

    {
        // affine function: constant on every line
        const std::size_t dim = 3;
        Rng rng(substream_seed(seed, kStreamCorpus, 8888));
        Vector l = rng.gaussian_vector(dim);
        ConvexFunction zero_base = ConvexFunction::quadratic(std::vector<double>(dim * dim, 0.0),
                                                             zeros(dim), 0.0);
        entries.push_back(CorpusEntry{"affine_d3",
                                      ConvexFunction::affine_plus(zero_base, l, 1.25),
                                      GroundTruth{trivial_space(dim), full_space(dim), l},
                                      {"affine", "flat-directions"}});
    }

    {
        // affine shift of a coercive quadratic: still coercive, v stays 0
        CorpusEntry base = make_weighted_quadratic(4);
        Rng rng(substream_seed(seed, kStreamCorpus, 9001));
        Vector l = rng.gaussian_vector(4);
        entries.push_back(CorpusEntry{"shift_weighted_quadratic_n4",
                                      ConvexFunction::affine_plus(base.f, l, -0.5),
                                      GroundTruth{full_space(4), trivial_space(4), zeros(4)},
                                      {"coercive", "affine-shift"}});
    }

    {
        // affine shift of a rank-deficient quadratic: v picks up the
        // complement component of the shift
        CorpusEntry base = make_psd_entry(4, 2, seed, salt++);
        Rng rng(substream_seed(seed, kStreamCorpus, 9002));
        Vector l = rng.gaussian_vector(4);
        Vector v = add(base.truth->v, complement_project(base.truth->x_space, l));
        entries.push_back(CorpusEntry{"shift_psd_d4_r2",
                                      ConvexFunction::affine_plus(base.f, l, 2.0),
                                      GroundTruth{base.truth->x_space, base.truth->y_space, v},
                                      {"quadratic", "flat-directions", "affine-shift"}});
    }

    {
        CorpusEntry gamma = make_example_gamma(4);
        Rng rng(substream_seed(seed, kStreamCorpus, 9003));
        Vector l = rng.gaussian_vector(4);
        entries.push_back(CorpusEntry{"shift_example_gamma_n4",
                                      ConvexFunction::affine_plus(gamma.f, l, 0.75),
                                      GroundTruth{full_space(4), trivial_space(4), zeros(4)},
                                      {"composite", "affine-shift"}});
    }

    {
        // sum of a counterexample composite and a coercive quadratic
        CorpusEntry gamma = make_example_gamma(4);
        CorpusEntry quad = make_weighted_quadratic(4);
        entries.push_back(CorpusEntry{"sum_gamma_quadratic_n4",
                                      ConvexFunction::sum({gamma.f, quad.f}),
                                      GroundTruth{full_space(4), trivial_space(4), zeros(4)},
                                      {"coercive", "sum"}});
    }

    {
        // two rank-deficient quadratics with overlapping ranges
        const std::size_t dim = 6;
        const auto q = seeded_orthonormal(dim, dim, seed, salt++);
        std::vector<double> ev1{1.0, 2.0, 0.75};
        std::vector<double> ev2{1.5, 0.5, 1.25};
        std::vector<Vector> q2(q.begin() + 2, q.end());
        Vector b1 = scaled(q[5], 0.3);
        Vector b2 = scaled(q[5], 0.1);
        ConvexFunction f1 = rank_quadratic(q, dim, 3, ev1, b1, 0.0);
        ConvexFunction f2 = rank_quadratic(q2, dim, 3, ev2, b2, 1.0);
        std::vector<Vector> x_basis(q.begin(), q.begin() + 5);
        entries.push_back(CorpusEntry{"sum_psd_pair_d6",
                                      ConvexFunction::sum({f1, f2}),
                                      GroundTruth{make_subspace(dim, std::move(x_basis)),
                                                  make_subspace(dim, {q[5]}),
                                                  scaled(q[5], 0.4)},
                                      {"quadratic", "sum", "flat-directions"}});
    }

    return entries;
}

Decomposition decomposition_from_truth(const ConvexFunction& f, const GroundTruth& t) {
    const std::size_t dim = f.dim();
    Decomposition d{t.x_space, t.y_space, t.v, zeros(dim), subgradient(f, zeros(dim)),
                    0.0, f};
    d.a = eval(f, d.z0) - dot(d.xi0, d.z0);
    return d;
}

} // namespace convexdecomp
