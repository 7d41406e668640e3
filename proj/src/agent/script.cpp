#include "kgqa/agent/script.hpp"

#include <cctype>
#include <map>
#include <optional>
#include <vector>

#include "kgqa/gql/eval.hpp"
#include "kgqa/gql/parser.hpp"
#include "kgqa/gql/render.hpp"

namespace kgqa::agent {
namespace {

struct ScriptError {
    std::string message;
    size_t line;
};

// Character-level parser for the mini dialect. Statements are parsed and
// executed one at a time; the first failure aborts the run.
class Interpreter {
public:
    Interpreter(const std::string& code, const PropertyGraph& graph, size_t budget)
        : src_(code), graph_(graph), budget_(budget) {}

    ScriptResult run() {
        try {
            skip_blank();
            while (!eof()) {
                statement();
                skip_blank();
            }
        } catch (const ScriptError& e) {
            return {"script error at line " + std::to_string(e.line) + ": " + e.message, true};
        }
        if (prints_.empty()) return {"(no output)", false};
        std::string out;
        for (size_t i = 0; i < prints_.size(); ++i) {
            if (i) out += '\n';
            out += prints_[i];
        }
        return {out, false};
    }

private:
    [[noreturn]] void fail(const std::string& message, size_t line) const {
        throw ScriptError{message, line};
    }
    [[noreturn]] void fail(const std::string& message) const { fail(message, line_); }

    bool eof() const { return pos_ >= src_.size(); }
    char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }

    char advance() {
        char c = src_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }

    // Skip spaces, newlines, and '#' comments.
    void skip_blank() {
        while (!eof()) {
            char c = peek();
            if (c == '#') {
                while (!eof() && peek() != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    // Skip spaces and tabs only; statements end at a newline.
    void skip_inline() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) advance();
    }

    bool at_ident_start() const {
        char c = peek();
        return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
    }

    std::string ident() {
        std::string s;
        while (!eof()) {
            char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
                s += c;
                advance();
            } else {
                break;
            }
        }
        return s;
    }

    void expect(char c, const std::string& what) {
        skip_inline();
        if (eof() || peek() != c) fail("expected '" + std::string(1, c) + "' " + what);
        advance();
    }

    // The source line starting at the current statement, for diagnostics.
    std::string current_line_text() const {
        size_t start = src_.rfind('\n', pos_ == 0 ? 0 : pos_ - 1);
        start = (start == std::string::npos) ? 0 : start + 1;
        size_t end = src_.find('\n', start);
        if (end == std::string::npos) end = src_.size();
        std::string s = src_.substr(start, end - start);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
        return s;
    }

    std::string quoted_string() {
        skip_inline();
        size_t line = line_;
        char quote = peek();
        if (quote != '\'' && quote != '"') fail("expected a string literal");
        // Triple-quoted strings are taken verbatim up to the matching close.
        if (pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote) {
            advance(); advance(); advance();
            std::string close(3, quote);
            size_t end = src_.find(close, pos_);
            if (end == std::string::npos) fail("unterminated string", line);
            std::string body = src_.substr(pos_, end - pos_);
            while (pos_ < end + 3) advance();
            return body;
        }
        advance();
        std::string body;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string", line);
            char c = advance();
            if (c == quote) break;
            if (c == '\\') {
                if (eof()) fail("unterminated string", line);
                char e = advance();
                switch (e) {
                    case 'n': body += '\n'; break;
                    case 't': body += '\t'; break;
                    case 'r': body += '\r'; break;
                    case '\\': body += '\\'; break;
                    case '\'': body += '\''; break;
                    case '"': body += '"'; break;
                    default: fail(std::string("unknown escape '\\") + e + "'", line);
                }
            } else {
                body += c;
            }
        }
        return body;
    }

    Value literal() {
        skip_inline();
        char c = peek();
        if (c == '\'' || c == '"') return quoted_string();
        if (at_ident_start()) {
            size_t line = line_;
            std::string word = ident();
            if (word == "True") return true;
            if (word == "False") return false;
            if (word == "None") return Null{};
            fail("unknown literal '" + word + "'", line);
        }
        // Number: optional sign, digits, optional fraction.
        std::string num;
        if (c == '-' || c == '+') { num += c; advance(); }
        bool is_float = false;
        while (!eof() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.')) {
            if (peek() == '.') is_float = true;
            num += advance();
        }
        if (num.empty() || num == "-" || num == "+") fail("expected a literal value");
        try {
            if (is_float) return std::stod(num);
            return static_cast<int64_t>(std::stoll(num));
        } catch (const std::exception&) {
            fail("bad number '" + num + "'");
        }
    }

    gql::Params dict_literal() {
        gql::Params params;
        expect('{', "to open the params dict");
        skip_blank();
        if (peek() == '}') {
            advance();
            return params;
        }
        while (true) {
            skip_blank();
            std::string key = quoted_string();
            expect(':', "after the params key");
            params[key] = literal();
            skip_blank();
            if (peek() == ',') {
                advance();
                continue;
            }
            expect('}', "to close the params dict");
            break;
        }
        return params;
    }

    struct CypherCall {
        std::string query;
        gql::Params params;
        std::optional<size_t> limit;
        size_t line;
    };

    // cypher("...", params={...}, limit=N); keyword arguments may also be None.
    CypherCall cypher_call() {
        CypherCall call;
        call.line = line_;
        expect('(', "after cypher");
        skip_blank();
        call.query = quoted_string();
        skip_blank();
        while (peek() == ',') {
            advance();
            skip_blank();
            size_t line = line_;
            std::string kw = ident();
            expect('=', "after keyword '" + kw + "'");
            skip_blank();
            if (kw == "params") {
                if (at_ident_start()) {
                    if (std::string word = ident(); word != "None")
                        fail("params must be a dict or None, got '" + word + "'", line);
                } else {
                    call.params = dict_literal();
                }
            } else if (kw == "limit") {
                if (at_ident_start()) {
                    if (std::string word = ident(); word != "None")
                        fail("limit must be an integer or None, got '" + word + "'", line);
                } else {
                    Value v = literal();
                    if (!std::holds_alternative<int64_t>(v) || std::get<int64_t>(v) < 0)
                        fail("limit must be a non-negative integer", line);
                    call.limit = static_cast<size_t>(std::get<int64_t>(v));
                }
            } else {
                fail("unknown cypher() keyword '" + kw + "'", line);
            }
            skip_blank();
        }
        expect(')', "to close cypher(...)");
        return call;
    }

    gql::ResultTable run_cypher(const CypherCall& call) {
        try {
            gql::QueryAst ast = gql::parse(call.query);
            return gql::execute(ast, graph_, call.params, call.limit);
        } catch (const gql::ParseError& e) {
            throw ScriptError{std::string("cypher parse error: ") + e.what(), call.line};
        } catch (const gql::UnsupportedError& e) {
            throw ScriptError{e.what(), call.line};
        } catch (const gql::EvalError& e) {
            throw ScriptError{std::string("cypher error: ") + e.what(), call.line};
        }
    }

    void statement() {
        size_t line = line_;
        std::string text = current_line_text();
        if (!at_ident_start()) fail("unsupported statement '" + text + "'", line);
        std::string head = ident();
        skip_inline();
        if (head == "print") {
            if (peek() != '(') fail("expected '(' after print", line);
            advance();
            skip_blank();
            if (!at_ident_start()) fail("print() takes a variable or cypher(...)", line);
            size_t arg_line = line_;
            std::string arg = ident();
            skip_inline();
            if (arg == "cypher" && peek() == '(') {
                prints_.push_back(gql::render_rows(run_cypher(cypher_call()), budget_));
            } else {
                auto it = vars_.find(arg);
                if (it == vars_.end()) fail("undefined variable '" + arg + "'", arg_line);
                prints_.push_back(gql::render_rows(it->second, budget_));
            }
            expect(')', "to close print(...)");
            end_of_statement(line, text);
            return;
        }
        if (eof() || peek() != '=') fail("unsupported statement '" + text + "'", line);
        advance();
        skip_inline();
        if (!at_ident_start()) fail("only cypher(...) may be assigned", line);
        std::string fn = ident();
        skip_inline();
        if (fn != "cypher" || peek() != '(') fail("only cypher(...) may be assigned", line);
        vars_[head] = run_cypher(cypher_call());
        end_of_statement(line, text);
    }

    // After a statement only spaces, a comment, a newline, or eof may follow.
    void end_of_statement(size_t line, const std::string& text) {
        skip_inline();
        if (eof() || peek() == '\n' || peek() == '#' || peek() == '\r') return;
        fail("unexpected trailing text in '" + text + "'", line);
    }

    const std::string& src_;
    const PropertyGraph& graph_;
    size_t budget_;
    size_t pos_ = 0;
    size_t line_ = 1;
    std::map<std::string, gql::ResultTable> vars_;
    std::vector<std::string> prints_;
};

}  // namespace

ScriptResult run_script(const std::string& code, const PropertyGraph& graph,
                        size_t render_budget) {
    return Interpreter(code, graph, render_budget).run();
}

}  // namespace kgqa::agent
