#include "kgqa/value.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace kgqa {

std::string repr_double(double d) {
    if (std::isnan(d)) return "nan";
    if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), d);
    std::string s(buf, res.ptr);
    // integral floats print as "1.0", matching Python
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
        s += ".0";
    }
    return s;
}

std::string repr_string(const std::string& s) {
    const bool has_single = s.find('\'') != std::string::npos;
    const bool has_double = s.find('"') != std::string::npos;
    const char quote = (has_single && !has_double) ? '"' : '\'';
    std::string out;
    out.reserve(s.size() + 2);
    out += quote;
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c == quote) {
                    out += '\\';
                    out += c;
                } else {
                    out += c;
                }
        }
    }
    out += quote;
    return out;
}

std::string repr(const Value& v) {
    switch (v.index()) {
        case 0: return "None";
        case 1: return std::get<bool>(v) ? "True" : "False";
        case 2: return std::to_string(std::get<int64_t>(v));
        case 3: return repr_double(std::get<double>(v));
        default: return repr_string(std::get<std::string>(v));
    }
}

namespace {

// null > strings > numbers > booleans would also work; the rule just has to
// be total and fixed. We use: bool(0) < number(1) < string(2) < null(3).
int type_rank(const Value& v) {
    switch (v.index()) {
        case 1: return 0;
        case 2:
        case 3: return 1;
        case 4: return 2;
        default: return 3;
    }
}

}  // namespace

int compare_total(const Value& a, const Value& b) {
    const int ra = type_rank(a), rb = type_rank(b);
    if (ra != rb) return ra < rb ? -1 : 1;
    switch (ra) {
        case 0: {
            const bool x = std::get<bool>(a), y = std::get<bool>(b);
            if (x == y) return 0;
            return x < y ? -1 : 1;
        }
        case 1: {
            const auto* ia = std::get_if<int64_t>(&a);
            const auto* ib = std::get_if<int64_t>(&b);
            if (ia && ib) {
                if (*ia == *ib) return 0;
                return *ia < *ib ? -1 : 1;
            }
            const double x = as_double(a), y = as_double(b);
            if (x == y) return 0;
            return x < y ? -1 : 1;
        }
        case 2: {
            const int c = std::get<std::string>(a).compare(std::get<std::string>(b));
            return c < 0 ? -1 : (c > 0 ? 1 : 0);
        }
        default: return 0;  // null == null
    }
}

Value value_from_json(const nlohmann::json& j) {
    switch (j.type()) {
        case nlohmann::json::value_t::null: return Null{};
        case nlohmann::json::value_t::boolean: return j.get<bool>();
        case nlohmann::json::value_t::number_integer:
        case nlohmann::json::value_t::number_unsigned: return j.get<int64_t>();
        case nlohmann::json::value_t::number_float: return j.get<double>();
        case nlohmann::json::value_t::string: return j.get<std::string>();
        default: throw std::runtime_error("expected a scalar JSON value, got " + std::string(j.type_name()));
    }
}

nlohmann::json value_to_json(const Value& v) {
    switch (v.index()) {
        case 0: return nullptr;
        case 1: return std::get<bool>(v);
        case 2: return std::get<int64_t>(v);
        case 3: return std::get<double>(v);
        default: return std::get<std::string>(v);
    }
}

}  // namespace kgqa
