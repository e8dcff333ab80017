#pragma once

#include <string>

#include <json.hpp>

#include "convexdecomp/funcrepr.hpp"

namespace convexdecomp {

/// Parses the function-spec JSON document format:
///   {"kind": "quadratic", "A": [[...],...], "b": [...], "c": 0}
///   {"kind": "max_affine", "pieces": [{"a": [...], "c": 0}, ...]}
///   {"kind": "scalar_composite",
///    "terms": [{"w": 1, "kernel": "relu_square", "a": [...], "s": 0}, ...]}
///   {"kind": "affine_plus", "base": {...}, "l": [...], "c0": 0}
///   {"kind": "sum", "parts": [{...}, ...]}
/// Dimensions are inferred and cross-checked; any mismatch or malformed
/// field raises ParseError naming the offending field.
ConvexFunction load_function_spec(const nlohmann::json& doc);

ConvexFunction load_function_spec_file(const std::string& path);

/// Inverse of load_function_spec for structural functions. Black boxes are
/// not serializable and raise ParseError.
nlohmann::json function_spec_to_json(const ConvexFunction& f);

} // namespace convexdecomp
