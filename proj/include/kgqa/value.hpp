#pragma once
// Scalar value model shared by the property graph and the query engine:
// null, boolean, integer, float, string. Rendering follows Python repr
// conventions so tool responses match the printed traces byte-for-byte.

#include <cstdint>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

namespace kgqa {

struct Null {
    bool operator==(const Null&) const = default;
};

using Value = std::variant<Null, bool, int64_t, double, std::string>;

inline bool is_null(const Value& v) { return std::holds_alternative<Null>(v); }

inline bool is_number(const Value& v) {
    return std::holds_alternative<int64_t>(v) || std::holds_alternative<double>(v);
}

inline double as_double(const Value& v) {
    if (const auto* i = std::get_if<int64_t>(&v)) return static_cast<double>(*i);
    return std::get<double>(v);
}

// Python-repr rendering: None/True/False, shortest round-trip floats
// (integral floats keep a trailing ".0"), strings single-quoted unless they
// contain a single quote and no double quote.
std::string repr(const Value& v);
std::string repr_string(const std::string& s);
std::string repr_double(double d);

// Three-way total order used for ORDER BY, tie-breaking and grouping:
// booleans < numbers < strings < null; numbers compared by numeric value
// (exact for int/int). Null equals null here, unlike in WHERE comparisons.
int compare_total(const Value& a, const Value& b);

// JSON bridge. Scalars only; anything else throws.
Value value_from_json(const nlohmann::json& j);
nlohmann::json value_to_json(const Value& v);

}  // namespace kgqa
