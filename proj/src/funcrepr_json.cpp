#include "convexdecomp/funcrepr_json.hpp"

#include <fstream>
#include <stdexcept>

#include "convexdecomp/errors.hpp"

namespace convexdecomp {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& why) {
    throw ParseError("function spec field '" + field + "': " + why);
}

double number_field(const json& j, const std::string& field) {
    if (!j.contains(field)) fail(field, "missing");
    if (!j[field].is_number()) fail(field, "expected a number");
    return j[field].get<double>();
}

Vector vector_field(const json& j, const std::string& field) {
    if (!j.contains(field)) fail(field, "missing");
    if (!j[field].is_array()) fail(field, "expected an array of numbers");
    Vector out;
    for (const auto& e : j[field]) {
        if (!e.is_number()) fail(field, "expected numeric entries");
        out.push_back(e.get<double>());
    }
    if (out.empty()) fail(field, "must be nonempty");
    if (!all_finite(out)) fail(field, "entries must be finite");
    return out;
}

Kernel kernel_field(const json& j, const std::string& field) {
    if (!j.contains(field)) fail(field, "missing");
    if (!j[field].is_string()) fail(field, "expected a string");
    const std::string k = j[field].get<std::string>();
    if (k == "relu_square") return Kernel::ReluSquare;
    if (k == "square") return Kernel::Square;
    if (k == "abs") return Kernel::Abs;
    if (k == "exp") return Kernel::Exp;
    fail(field, "unknown kernel '" + k + "'");
}

const char* kernel_name(Kernel k) {
    switch (k) {
        case Kernel::ReluSquare: return "relu_square";
        case Kernel::Square: return "square";
        case Kernel::Abs: return "abs";
        case Kernel::Exp: return "exp";
    }
    return "?";
}

ConvexFunction parse(const json& j);

ConvexFunction parse_quadratic(const json& j) {
    if (!j.contains("A") || !j["A"].is_array()) fail("A", "expected an array of rows");
    std::vector<double> a;
    std::size_t n = j["A"].size();
    if (n == 0) fail("A", "must be nonempty");
    for (const auto& row : j["A"]) {
        if (!row.is_array() || row.size() != n) fail("A", "must be square");
        for (const auto& e : row) {
            if (!e.is_number()) fail("A", "expected numeric entries");
            a.push_back(e.get<double>());
        }
    }
    Vector b = vector_field(j, "b");
    if (b.size() != n) fail("b", "length must match A");
    const double c = j.contains("c") ? number_field(j, "c") : 0.0;
    try {
        return ConvexFunction::quadratic(std::move(a), std::move(b), c);
    } catch (const std::invalid_argument& e) {
        fail("A", e.what());
    }
}

ConvexFunction parse_max_affine(const json& j) {
    if (!j.contains("pieces") || !j["pieces"].is_array() || j["pieces"].empty()) {
        fail("pieces", "expected a nonempty array");
    }
    std::vector<Vector> as;
    std::vector<double> cs;
    for (const auto& p : j["pieces"]) {
        as.push_back(vector_field(p, "a"));
        cs.push_back(p.contains("c") ? number_field(p, "c") : 0.0);
        if (as.back().size() != as.front().size()) fail("pieces", "inconsistent dimensions");
    }
    try {
        return ConvexFunction::max_affine(std::move(as), std::move(cs));
    } catch (const std::invalid_argument& e) {
        fail("pieces", e.what());
    }
}

ConvexFunction parse_scalar_composite(const json& j) {
    if (!j.contains("terms") || !j["terms"].is_array() || j["terms"].empty()) {
        fail("terms", "expected a nonempty array");
    }
    std::vector<ConvexFunction::Term> terms;
    for (const auto& t : j["terms"]) {
        ConvexFunction::Term term;
        term.w = t.contains("w") ? number_field(t, "w") : 1.0;
        term.kernel = kernel_field(t, "kernel");
        term.a = vector_field(t, "a");
        term.s = t.contains("s") ? number_field(t, "s") : 0.0;
        if (!terms.empty() && term.a.size() != terms.front().a.size()) {
            fail("terms", "inconsistent dimensions");
        }
        terms.push_back(std::move(term));
    }
    try {
        return ConvexFunction::scalar_composite(std::move(terms));
    } catch (const std::invalid_argument& e) {
        fail("terms", e.what());
    }
}

ConvexFunction parse_affine_plus(const json& j) {
    if (!j.contains("base")) fail("base", "missing");
    ConvexFunction base = parse(j["base"]);
    Vector l = vector_field(j, "l");
    const double c0 = j.contains("c0") ? number_field(j, "c0") : 0.0;
    if (l.size() != base.dim()) fail("l", "length must match base dimension");
    return ConvexFunction::affine_plus(std::move(base), std::move(l), c0);
}

ConvexFunction parse_sum(const json& j) {
    if (!j.contains("parts") || !j["parts"].is_array() || j["parts"].empty()) {
        fail("parts", "expected a nonempty array");
    }
    std::vector<ConvexFunction> parts;
    for (const auto& p : j["parts"]) parts.push_back(parse(p));
    for (const auto& p : parts) {
        if (p.dim() != parts.front().dim()) fail("parts", "inconsistent dimensions");
    }
    return ConvexFunction::sum(std::move(parts));
}

ConvexFunction parse(const json& j) {
    if (!j.is_object()) fail("kind", "expected an object");
    if (!j.contains("kind") || !j["kind"].is_string()) fail("kind", "missing or non-string");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "quadratic") return parse_quadratic(j);
    if (kind == "max_affine") return parse_max_affine(j);
    if (kind == "scalar_composite") return parse_scalar_composite(j);
    if (kind == "affine_plus") return parse_affine_plus(j);
    if (kind == "sum") return parse_sum(j);
    fail("kind", "unknown kind '" + kind + "'");
}

} // namespace

ConvexFunction load_function_spec(const nlohmann::json& doc) { return parse(doc); }

ConvexFunction load_function_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open function spec file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError("invalid JSON in " + path + ": " + e.what());
    }
    return load_function_spec(doc);
}

nlohmann::json function_spec_to_json(const ConvexFunction& f) {
    using nlohmann::json;
    return std::visit(
        [&](const auto& repr) -> json {
            using T = std::decay_t<decltype(repr)>;
            json j;
            if constexpr (std::is_same_v<T, QuadraticNode>) {
                j["kind"] = "quadratic";
                const std::size_t n = f.dim();
                json rows = json::array();
                for (std::size_t i = 0; i < n; ++i) {
                    json row = json::array();
                    for (std::size_t k = 0; k < n; ++k) row.push_back(repr.a[i * n + k]);
                    rows.push_back(std::move(row));
                }
                j["A"] = std::move(rows);
                j["b"] = repr.b;
                j["c"] = repr.c;
            } else if constexpr (std::is_same_v<T, MaxAffineNode>) {
                j["kind"] = "max_affine";
                json pieces = json::array();
                for (std::size_t i = 0; i < repr.as.size(); ++i) {
                    pieces.push_back(json{{"a", repr.as[i]}, {"c", repr.cs[i]}});
                }
                j["pieces"] = std::move(pieces);
            } else if constexpr (std::is_same_v<T, ScalarCompositeNode>) {
                j["kind"] = "scalar_composite";
                json terms = json::array();
                for (const auto& t : repr.terms) {
                    terms.push_back(json{{"w", t.w},
                                         {"kernel", kernel_name(t.kernel)},
                                         {"a", t.a},
                                         {"s", t.s}});
                }
                j["terms"] = std::move(terms);
            } else if constexpr (std::is_same_v<T, AffinePlusNode>) {
                j["kind"] = "affine_plus";
                j["base"] = function_spec_to_json(repr.base);
                j["l"] = repr.l;
                j["c0"] = repr.c0;
            } else if constexpr (std::is_same_v<T, SumNode>) {
                j["kind"] = "sum";
                json parts = json::array();
                for (const auto& p : repr.parts) parts.push_back(function_spec_to_json(p));
                j["parts"] = std::move(parts);
            } else {
                throw ParseError("black-box functions are not serializable");
            }
            return j;
        },
        f.node().repr);
}

} // namespace convexdecomp
