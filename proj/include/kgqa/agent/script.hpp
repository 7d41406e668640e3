#pragma once

#include <string>

#include "kgqa/graph.hpp"

namespace kgqa::agent {

struct ScriptResult {
    std::string output;
    bool failed = false;
};

// Interpret the constrained code_interpreter dialect: a sequence of
//   ident = cypher("...")     (single-, double-, or triple-quoted query,
//                              optional params={...} and limit=N keywords)
//   print(ident)
//   print(cypher("..."))
// statements plus '#' comments. Each print renders the result table within
// render_budget characters; prints are joined with newlines, or "(no output)"
// when nothing was printed. Any parse or query failure stops execution and
// returns a diagnostic as the whole output with failed=true.
ScriptResult run_script(const std::string& code, const PropertyGraph& graph,
                        size_t render_budget);

}  // namespace kgqa::agent
