#include "kgqa/gql/render.hpp"

#include <sstream>

namespace kgqa::gql {

std::string render_row(const ResultTable& table, size_t row) {
    std::ostringstream os;
    os << '{';
    for (size_t c = 0; c < table.columns.size(); ++c) {
        if (c > 0) os << ", ";
        os << repr_string(table.columns[c]) << ": " << repr(table.rows[row][c]);
    }
    os << '}';
    return os.str();
}

std::string render_rows(const ResultTable& table, size_t max_chars) {
    std::vector<std::string> rendered;
    rendered.reserve(table.rows.size());
    for (size_t i = 0; i < table.rows.size(); ++i) rendered.push_back(render_row(table, i));

    auto assemble = [&](size_t keep) {
        std::string out = "[";
        for (size_t i = 0; i < keep; ++i) {
            if (i > 0) out += ",\n ";
            out += rendered[i];
        }
        if (keep < rendered.size()) {
            if (keep > 0) out += ",";
            out += " …(truncated, " + std::to_string(rendered.size() - keep) +
                   " rows omitted)";
        } else {
            out += "]";
        }
        return out;
    };

    std::string full = assemble(rendered.size());
    if (full.size() <= max_chars) return full;
    // each kept row costs at least 5 chars, so start well below max_chars
    size_t keep = std::min(rendered.size(), max_chars / 5 + 1);
    while (keep > 0) {
        std::string candidate = assemble(keep);
        if (candidate.size() <= max_chars) return candidate;
        --keep;
    }
    return assemble(0);
}

}  // namespace kgqa::gql
