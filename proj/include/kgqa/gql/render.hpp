#pragma once
// Canonical textual rendering of result tables: a Python-style list of
// per-row dicts, truncated at a row boundary when over budget.

#include <string>

#include "kgqa/gql/eval.hpp"

namespace kgqa::gql {

// max_chars must be >= 64. Full output when it fits; otherwise rows are
// dropped from the end and the text ends with
// " …(truncated, N rows omitted)".
std::string render_rows(const ResultTable& table, size_t max_chars);

// One row as {'col': value, …} in column order.
std::string render_row(const ResultTable& table, size_t row);

}  // namespace kgqa::gql
