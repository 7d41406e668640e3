#pragma once
// parse() turns query text into a QueryAst or throws. Syntax problems raise
// ParseError with position and the expected-token set; recognized Cypher
// features outside the subset raise UnsupportedError naming the construct.

#include <stdexcept>
#include <string>

#include "kgqa/gql/ast.hpp"

namespace kgqa::gql {

struct ParseError : std::runtime_error {
    ParseError(std::string msg, size_t line, size_t col)
        : std::runtime_error(std::move(msg)), line(line), col(col) {}
    size_t line;
    size_t col;
};

struct UnsupportedError : std::runtime_error {
    explicit UnsupportedError(const std::string& construct)
        : std::runtime_error("unsupported construct: " + construct),
          construct(construct) {}
    std::string construct;
};

QueryAst parse(const std::string& query_text);

}  // namespace kgqa::gql
