#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "convexdecomp/corpus.hpp"
#include "convexdecomp/errors.hpp"
#include "convexdecomp/funcrepr.hpp"
#include "convexdecomp/funcrepr_json.hpp"
#include "convexdecomp/rng.hpp"

using namespace convexdecomp;

namespace {

ConvexFunction theta_1d() {
    return ConvexFunction::scalar_composite({{1.0, Kernel::ReluSquare, {1.0}, 0.0}});
}

} // namespace

TEST_CASE("relu_square kernel matches its closed form") {
    ConvexFunction theta = theta_1d();
    CHECK(eval(theta, {-1.0}) == 0.0);
    CHECK(eval(theta, {2.0}) == 4.0);
    CHECK(subgradient(theta, {0.0})[0] == 0.0);
    CHECK(subgradient(theta, {-5.0})[0] == 0.0);
    CHECK(subgradient(theta, {3.0})[0] == doctest::Approx(6.0));
}

TEST_CASE("quadratic eval and gradient") {
    ConvexFunction f = ConvexFunction::quadratic({2.0, 0.0, 0.0, 0.0}, {1.0, 1.0}, 0.0);
    CHECK(eval(f, {1.0, 2.0}) == doctest::Approx(4.0));
    Vector g = subgradient(f, {1.0, 2.0});
    CHECK(g[0] == doctest::Approx(3.0));
    CHECK(g[1] == doctest::Approx(1.0));
}

TEST_CASE("quadratic construction rejects non-PSD and asymmetric input") {
    CHECK_THROWS_AS(ConvexFunction::quadratic({-1.0}, {0.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ConvexFunction::quadratic({1.0, 0.5, -0.5, 1.0}, {0.0, 0.0}, 0.0),
                    std::invalid_argument);
    // indefinite matrix with eigenvalues 3 and -1
    CHECK_THROWS_AS(ConvexFunction::quadratic({1.0, 2.0, 2.0, 1.0}, {0.0, 0.0}, 0.0),
                    std::invalid_argument);
    CHECK_NOTHROW(ConvexFunction::quadratic({0.0, 0.0, 0.0, 0.0}, {0.0, 0.0}, 0.0));
}

TEST_CASE("max_affine tie-break picks the lowest active index") {
    ConvexFunction f = ConvexFunction::max_affine({{1.0}, {-1.0}}, {0.0, 0.0});
    CHECK(eval(f, {0.0}) == 0.0);
    CHECK(subgradient(f, {0.0})[0] == 1.0);
    CHECK(subgradient(f, {-2.0})[0] == -1.0);
}

TEST_CASE("abs kernel returns slope 0 at its kink") {
    ConvexFunction f = ConvexFunction::scalar_composite({{1.0, Kernel::Abs, {1.0}, 0.0}});
    CHECK(subgradient(f, {0.0})[0] == 0.0);
    CHECK(subgradient(f, {1.5})[0] == 1.0);
    CHECK(subgradient(f, {-1.5})[0] == -1.0);
}

TEST_CASE("exp kernel reports a range error above 700") {
    ConvexFunction f = ConvexFunction::scalar_composite({{1.0, Kernel::Exp, {1.0}, 0.0}});
    CHECK(eval(f, {1.0}) == doctest::Approx(std::exp(1.0)));
    CHECK_THROWS_AS(eval(f, {701.0}), std::range_error);
}

TEST_CASE("eval of a sum is the floating-point sum of the parts") {
    Rng rng(7);
    ConvexFunction f = ConvexFunction::quadratic({2.0, 0.0, 0.0, 1.0}, {0.3, -0.2}, 0.7);
    ConvexFunction g = ConvexFunction::scalar_composite(
        {{1.0, Kernel::ReluSquare, {1.0, 0.5}, 0.25}});
    ConvexFunction s = ConvexFunction::sum({f, g});
    for (int i = 0; i < 100; ++i) {
        Vector z = rng.gaussian_vector(2);
        CHECK(eval(s, z) == eval(f, z) + eval(g, z));
    }
}

TEST_CASE("validate_subgradient accepts exact gradients and rejects fakes") {
    ConvexFunction f = ConvexFunction::quadratic({2.0}, {0.0}, 0.0); // x^2
    CHECK(validate_subgradient(f, {{0.0}, {0.0}}, 64, 11));
    CHECK(validate_subgradient(f, {{1.5}, subgradient(f, {1.5})}, 64, 11));
    CHECK_FALSE(validate_subgradient(f, {{0.0}, {3.0}}, 64, 11));

    ConvexFunction theta = theta_1d();
    CHECK(validate_subgradient(theta, {{-5.0}, {0.0}}, 64, 11));
}

TEST_CASE("corpus functions satisfy midpoint convexity on seeded triples") {
    for (const auto& entry : make_graded_corpus(2024)) {
        ConvexFunction f = entry.f;
        const double viol = convexity_violation(
            [f](const Vector& z) { return eval(f, z); }, f.dim(), 1000, 555);
        INFO(entry.name);
        CHECK(viol <= 1e-9);
    }
}

TEST_CASE("subgradients match central finite differences at smooth points") {
    std::size_t checked = 0;
    auto corpus = make_graded_corpus(2024);
    for (std::size_t e = 0; e < corpus.size() && checked < 1000; ++e) {
        const ConvexFunction& f = corpus[e].f;
        const std::size_t dim = f.dim();
        for (std::size_t j = 0; j < 40 && checked < 1000; ++j) {
            Rng rng(substream_seed(101 + e, 0xFD, j));
            Vector x = rng.gaussian_vector(dim);
            const double scale = (j % 2 == 0) ? 1.0 : 8.0;
            for (double& c : x) c *= scale;
            Vector g;
            try {
                g = subgradient(f, x);
            } catch (const std::range_error&) {
                continue;
            }
            const double h = 1e-6;
            for (std::size_t i = 0; i < dim; ++i) {
                Vector xp = x, xm = x;
                xp[i] += h;
                xm[i] -= h;
                double fp, fm, f0;
                try {
                    fp = eval(f, xp);
                    fm = eval(f, xm);
                    f0 = eval(f, x);
                } catch (const std::range_error&) {
                    continue;
                }
                const double forward = (fp - f0) / h;
                const double backward = (f0 - fm) / h;
                // only judge points where the two one-sided slopes agree
                if (std::fabs(forward - backward) > 1e-6 * (1.0 + std::fabs(forward))) continue;
                const double central = (fp - fm) / (2.0 * h);
                CHECK(std::fabs(g[i] - central) <= 1e-5 * (1.0 + std::fabs(central)));
                ++checked;
            }
        }
    }
    CHECK(checked >= 900);
}

TEST_CASE("subgradient oracle passes validation across the corpus") {
    for (const auto& entry : make_graded_corpus(2024)) {
        const ConvexFunction& f = entry.f;
        bool ok = true;
        for (std::size_t j = 0; j < 100 && ok; ++j) {
            Rng rng(substream_seed(77, 0xAB, j));
            Vector x = scaled(rng.gaussian_vector(f.dim()), (j % 3 == 0) ? 8.0 : 1.0);
            Vector xi;
            try {
                xi = subgradient(f, x);
            } catch (const std::range_error&) {
                continue;
            }
            ok = validate_subgradient(f, {x, xi}, 64, substream_seed(78, 0xAB, j));
        }
        INFO(entry.name);
        CHECK(ok);
    }
}

TEST_CASE("function spec round-trips through JSON") {
    auto corpus = make_graded_corpus(2024);
    Rng rng(31);
    for (const auto& entry : corpus) {
        const auto doc = function_spec_to_json(entry.f);
        ConvexFunction loaded = load_function_spec(doc);
        REQUIRE(loaded.dim() == entry.f.dim());
        for (int j = 0; j < 25; ++j) {
            Vector z = rng.gaussian_vector(entry.f.dim());
            double a, b;
            try {
                a = eval(entry.f, z);
                b = eval(loaded, z);
            } catch (const std::range_error&) {
                continue;
            }
            INFO(entry.name);
            CHECK(a == b);
        }
    }
}

TEST_CASE("loader names the offending field") {
    nlohmann::json bad{{"kind", "quadratic"}, {"A", {{2.0, 0.0}, {0.0, 0.0}}}};
    try {
        load_function_spec(bad);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("'b'") != std::string::npos);
    }
    nlohmann::json mismatched{{"kind", "quadratic"},
                              {"A", {{2.0, 0.0}, {0.0, 0.0}}},
                              {"b", {1.0, 2.0, 3.0}}};
    CHECK_THROWS_AS(load_function_spec(mismatched), ParseError);
    nlohmann::json unknown{{"kind", "mystery"}};
    CHECK_THROWS_AS(load_function_spec(unknown), ParseError);
}

TEST_CASE("black boxes are not serializable") {
    ConvexFunction bb = black_box_wrap(theta_1d());
    CHECK_THROWS_AS(function_spec_to_json(bb), ParseError);
}
