#include "kgqa/gql/parser.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace kgqa::gql {

namespace {

enum class Tok {
    End, Ident, Param, String, Int, Float,
    LParen, RParen, LBracket, RBracket, LBrace, RBrace,
    Colon, Comma, Dot, Star,
    Dash, Lt, Gt, Eq, Le, Ge, Ne,
};

const char* tok_name(Tok t) {
    switch (t) {
        case Tok::End: return "end of input";
        case Tok::Ident: return "identifier";
        case Tok::Param: return "parameter";
        case Tok::String: return "string";
        case Tok::Int: return "integer";
        case Tok::Float: return "float";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::LBracket: return "'['";
        case Tok::RBracket: return "']'";
        case Tok::LBrace: return "'{'";
        case Tok::RBrace: return "'}'";
        case Tok::Colon: return "':'";
        case Tok::Comma: return "','";
        case Tok::Dot: return "'.'";
        case Tok::Star: return "'*'";
        case Tok::Dash: return "'-'";
        case Tok::Lt: return "'<'";
        case Tok::Gt: return "'>'";
        case Tok::Eq: return "'='";
        case Tok::Le: return "'<='";
        case Tok::Ge: return "'>='";
        case Tok::Ne: return "'<>'";
    }
    return "?";
}

struct Token {
    Tok kind;
    std::string text;   // identifier spelling (original case), string value, number spelling
    size_t line;
    size_t col;
};

std::string upper(const std::string& s) {
    std::string r = s;
    std::transform(r.begin(), r.end(), r.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    return r;
}

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_space();
            size_t line = line_, col = col_;
            if (pos_ >= text_.size()) {
                out.push_back({Tok::End, "", line, col});
                return out;
            }
            char c = text_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                out.push_back({Tok::Ident, ident(), line, col});
            } else if (std::isdigit(static_cast<unsigned char>(c))) {
                out.push_back(number(line, col));
            } else if (c == '\'' || c == '"') {
                out.push_back({Tok::String, string_lit(), line, col});
            } else if (c == '$') {
                advance();
                if (pos_ >= text_.size() ||
                    !(std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                    fail("expected parameter name after '$'", line, col);
                }
                out.push_back({Tok::Param, ident(), line, col});
            } else {
                out.push_back(punct(line, col));
            }
        }
    }

private:
    [[noreturn]] void fail(const std::string& msg, size_t line, size_t col) {
        throw ParseError("line " + std::to_string(line) + ", column " +
                         std::to_string(col) + ": " + msg, line, col);
    }

    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space() {
        while (pos_ < text_.size() &&
               std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            advance();
        }
        // // comments run to end of line
        if (pos_ + 1 < text_.size() && text_[pos_] == '/' && text_[pos_ + 1] == '/') {
            while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            skip_space();
        }
    }

    std::string ident() {
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            advance();
        }
        return text_.substr(start, pos_ - start);
    }

    Token number(size_t line, size_t col) {
        size_t start = pos_;
        bool is_float = false;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
        if (pos_ + 1 < text_.size() && text_[pos_] == '.' &&
            std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
            is_float = true;
            advance();
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            size_t save = pos_;
            advance();
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) advance();
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                is_float = true;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
            } else {
                pos_ = save;  // the 'e' starts an identifier, not an exponent
            }
        }
        return {is_float ? Tok::Float : Tok::Int, text_.substr(start, pos_ - start), line, col};
    }

    std::string string_lit() {
        size_t line = line_, col = col_;
        char quote = text_[pos_];
        advance();
        std::string out;
        while (true) {
            if (pos_ >= text_.size()) fail("unterminated string literal", line, col);
            char c = text_[pos_];
            if (c == quote) {
                advance();
                return out;
            }
            if (c == '\\') {
                advance();
                if (pos_ >= text_.size()) fail("unterminated string literal", line, col);
                char e = text_[pos_];
                switch (e) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case 'r': out += '\r'; break;
                    case '\\': out += '\\'; break;
                    case '\'': out += '\''; break;
                    case '"': out += '"'; break;
                    default:
                        fail(std::string("unknown escape '\\") + e + "'", line_, col_);
                }
                advance();
            } else {
                out += c;
                advance();
            }
        }
    }

    Token punct(size_t line, size_t col) {
        char c = text_[pos_];
        advance();
        switch (c) {
            case '(': return {Tok::LParen, "(", line, col};
            case ')': return {Tok::RParen, ")", line, col};
            case '[': return {Tok::LBracket, "[", line, col};
            case ']': return {Tok::RBracket, "]", line, col};
            case '{': return {Tok::LBrace, "{", line, col};
            case '}': return {Tok::RBrace, "}", line, col};
            case ':': return {Tok::Colon, ":", line, col};
            case ',': return {Tok::Comma, ",", line, col};
            case '.': return {Tok::Dot, ".", line, col};
            case '*': return {Tok::Star, "*", line, col};
            case '-': return {Tok::Dash, "-", line, col};
            case '=': return {Tok::Eq, "=", line, col};
            case '<':
                if (pos_ < text_.size() && text_[pos_] == '=') { advance(); return {Tok::Le, "<=", line, col}; }
                if (pos_ < text_.size() && text_[pos_] == '>') { advance(); return {Tok::Ne, "<>", line, col}; }
                return {Tok::Lt, "<", line, col};
            case '>':
                if (pos_ < text_.size() && text_[pos_] == '=') { advance(); return {Tok::Ge, ">=", line, col}; }
                return {Tok::Gt, ">", line, col};
            default:
                fail(std::string("unexpected character '") + c + "'", line, col);
        }
    }

    const std::string& text_;
    size_t pos_ = 0;
    size_t line_ = 1;
    size_t col_ = 1;
};

// Recognized keywords outside the subset, reported as unsupported constructs
// rather than generic syntax errors.
const std::map<std::string, std::string> kUnsupported = {
    {"CREATE", "write clause"},   {"MERGE", "write clause"},
    {"DELETE", "write clause"},   {"DETACH", "write clause"},
    {"SET", "write clause"},      {"REMOVE", "write clause"},
    {"OPTIONAL", "OPTIONAL MATCH"},
    {"WITH", "WITH pipeline"},
    {"UNWIND", "UNWIND"},
    {"CALL", "CALL procedure"},
    {"UNION", "UNION"},
    {"FOREACH", "write clause"},
};

const std::set<std::string> kReserved = {
    "MATCH", "WHERE", "RETURN", "ORDER", "BY", "SKIP", "LIMIT", "AS",
    "AND", "OR", "NOT", "ASC", "DESC", "DISTINCT", "TRUE", "FALSE",
    "CREATE", "MERGE", "DELETE", "DETACH", "SET", "REMOVE", "OPTIONAL",
    "WITH", "UNWIND", "CALL", "UNION", "FOREACH",
};

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    QueryAst query() {
        QueryAst ast;
        check_unsupported();
        expect_kw("MATCH");
        ast.matches.push_back(match_clause(ast));
        while (true) {
            check_unsupported();
            if (at_kw("MATCH")) {
                next();
                ast.matches.push_back(match_clause(ast));
            } else {
                break;
            }
        }
        expect_kw("RETURN");
        if (at_kw("DISTINCT")) throw UnsupportedError("RETURN DISTINCT");
        ast.returns.push_back(return_item());
        while (at(Tok::Comma)) {
            next();
            ast.returns.push_back(return_item());
        }
        if (at_kw("ORDER")) {
            next();
            expect_kw("BY");
            ast.order_by.push_back(order_item());
            while (at(Tok::Comma)) {
                next();
                ast.order_by.push_back(order_item());
            }
        }
        if (at_kw("SKIP")) {
            next();
            ast.skip = nonneg_int("SKIP");
        }
        if (at_kw("LIMIT")) {
            next();
            ast.limit = nonneg_int("LIMIT");
        }
        check_unsupported();
        expect(Tok::End);
        return ast;
    }

private:
    const Token& peek(size_t ahead = 0) const {
        size_t i = std::min(pos_ + ahead, toks_.size() - 1);
        return toks_[i];
    }

    const Token& next() { return toks_[pos_++]; }

    bool at(Tok kind) const { return peek().kind == kind; }

    bool at_kw(const char* kw) const {
        return peek().kind == Tok::Ident && upper(peek().text) == kw;
    }

    void check_unsupported() {
        if (peek().kind != Tok::Ident) return;
        auto it = kUnsupported.find(upper(peek().text));
        if (it != kUnsupported.end()) throw UnsupportedError(it->second);
    }

    [[noreturn]] void fail_expect(const std::string& expected) {
        const Token& t = peek();
        std::string got = t.kind == Tok::Ident ? "'" + t.text + "'" : tok_name(t.kind);
        throw ParseError("line " + std::to_string(t.line) + ", column " +
                         std::to_string(t.col) + ": expected " + expected +
                         ", got " + got, t.line, t.col);
    }

    Token expect(Tok kind) {
        if (!at(kind)) fail_expect(tok_name(kind));
        return next();
    }

    void expect_kw(const char* kw) {
        if (!at_kw(kw)) fail_expect(std::string(kw));
        next();
    }

    // Plain identifier; reserved words are rejected.
    std::string name(const char* what) {
        if (!at(Tok::Ident)) fail_expect(what);
        if (kReserved.count(upper(peek().text))) fail_expect(what);
        return next().text;
    }

    int64_t nonneg_int(const char* clause) {
        if (!at(Tok::Int)) fail_expect(std::string("non-negative integer after ") + clause);
        return std::stoll(next().text);
    }

    MatchClause match_clause(QueryAst& ast) {
        MatchClause clause;
        clause.paths.push_back(path());
        while (at(Tok::Comma)) {
            next();
            clause.paths.push_back(path());
        }
        if (at_kw("WHERE")) {
            next();
            ExprPtr w = expr();
            if (!ast.where) {
                ast.where = std::move(w);
            } else {
                auto combined = std::make_shared<Expr>();
                combined->kind = Expr::Kind::And;
                combined->lhs = ast.where;
                combined->rhs = std::move(w);
                ast.where = std::move(combined);
            }
        }
        return clause;
    }

    PathPattern path() {
        PathPattern p;
        p.nodes.push_back(node_pattern());
        while (at(Tok::Dash) || at(Tok::Lt)) {
            p.rels.push_back(rel_pattern());
            p.nodes.push_back(node_pattern());
        }
        return p;
    }

    NodePattern node_pattern() {
        expect(Tok::LParen);
        NodePattern n;
        if (at(Tok::Ident) && !kReserved.count(upper(peek().text))) n.var = next().text;
        if (at(Tok::Colon)) {
            next();
            n.label = name("label");
        }
        if (at(Tok::LBrace)) n.props = property_map();
        expect(Tok::RParen);
        return n;
    }

    std::vector<std::pair<std::string, ExprPtr>> property_map() {
        expect(Tok::LBrace);
        std::vector<std::pair<std::string, ExprPtr>> props;
        while (true) {
            std::string key = name("property name");
            expect(Tok::Colon);
            props.emplace_back(std::move(key), prop_value());
            if (at(Tok::Comma)) {
                next();
                continue;
            }
            break;
        }
        expect(Tok::RBrace);
        return props;
    }

    ExprPtr prop_value() {
        if (at(Tok::Param)) return make_param(next().text);
        return make_literal(literal("literal"));
    }

    Value literal(const char* what) {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::String: return Value{next().text};
            case Tok::Int: return Value{std::stoll(next().text)};
            case Tok::Float: return Value{std::stod(next().text)};
            case Tok::Dash: {
                next();
                if (at(Tok::Int)) return Value{-std::stoll(next().text)};
                if (at(Tok::Float)) return Value{-std::stod(next().text)};
                fail_expect("number after '-'");
            }
            case Tok::Ident: {
                std::string u = upper(t.text);
                if (u == "TRUE") { next(); return Value{true}; }
                if (u == "FALSE") { next(); return Value{false}; }
                fail_expect(what);
            }
            default:
                fail_expect(what);
        }
    }

    RelPattern rel_pattern() {
        RelPattern r;
        bool in_start = false;
        if (at(Tok::Lt)) {
            next();
            expect(Tok::Dash);
            in_start = true;
        } else {
            expect(Tok::Dash);
        }
        if (at(Tok::LBracket)) {
            next();
            if (at(Tok::Ident) && !kReserved.count(upper(peek().text))) r.var = next().text;
            if (at(Tok::Colon)) {
                next();
                r.type = name("relationship type");
            }
            if (at(Tok::Star)) throw UnsupportedError("variable-length path");
            expect(Tok::RBracket);
        }
        expect(Tok::Dash);
        bool out_end = false;
        if (at(Tok::Gt)) {
            next();
            out_end = true;
        }
        if (in_start && out_end) {
            const Token& t = peek();
            throw ParseError("line " + std::to_string(t.line) + ", column " +
                             std::to_string(t.col) +
                             ": relationship cannot point both ways", t.line, t.col);
        }
        r.dir = in_start ? RelDir::In : out_end ? RelDir::Out : RelDir::Undirected;
        return r;
    }

    ReturnItem return_item() {
        ReturnItem item;
        item.expr = expr();
        if (at_kw("AS")) {
            next();
            if (!at(Tok::Ident)) fail_expect("alias");
            item.alias = next().text;
        }
        return item;
    }

    OrderItem order_item() {
        OrderItem item;
        item.expr = expr();
        if (at_kw("ASC")) {
            next();
        } else if (at_kw("DESC")) {
            next();
            item.desc = true;
        }
        return item;
    }

    ExprPtr expr() { return or_expr(); }

    ExprPtr or_expr() {
        ExprPtr e = and_expr();
        while (at_kw("OR")) {
            next();
            auto node = std::make_shared<Expr>();
            node->kind = Expr::Kind::Or;
            node->lhs = std::move(e);
            node->rhs = and_expr();
            e = std::move(node);
        }
        return e;
    }

    ExprPtr and_expr() {
        ExprPtr e = not_expr();
        while (at_kw("AND")) {
            next();
            auto node = std::make_shared<Expr>();
            node->kind = Expr::Kind::And;
            node->lhs = std::move(e);
            node->rhs = not_expr();
            e = std::move(node);
        }
        return e;
    }

    ExprPtr not_expr() {
        if (at_kw("NOT")) {
            next();
            auto node = std::make_shared<Expr>();
            node->kind = Expr::Kind::Not;
            node->lhs = not_expr();
            return node;
        }
        return comparison();
    }

    ExprPtr comparison() {
        ExprPtr lhs = primary();
        Tok k = peek().kind;
        if (k == Tok::Eq || k == Tok::Ne || k == Tok::Lt || k == Tok::Le ||
            k == Tok::Gt || k == Tok::Ge) {
            auto node = std::make_shared<Expr>();
            node->kind = Expr::Kind::Compare;
            node->op = next().text;
            node->lhs = std::move(lhs);
            node->rhs = primary();
            return node;
        }
        return lhs;
    }

    ExprPtr primary() {
        check_unsupported();
        const Token& t = peek();
        switch (t.kind) {
            case Tok::String:
            case Tok::Int:
            case Tok::Float:
            case Tok::Dash:
                return make_literal(literal("expression"));
            case Tok::Param:
                return make_param(next().text);
            case Tok::LParen: {
                next();
                ExprPtr e = expr();
                expect(Tok::RParen);
                return e;
            }
            case Tok::Ident: {
                std::string u = upper(t.text);
                if (u == "TRUE" || u == "FALSE") return make_literal(literal("expression"));
                if (kReserved.count(u)) fail_expect("expression");
                std::string id = next().text;
                if (at(Tok::LParen)) return call(id);
                if (at(Tok::Dot)) {
                    next();
                    return make_prop(id, name("property name"));
                }
                return make_var(id);
            }
            default:
                fail_expect("expression");
        }
    }

    ExprPtr call(const std::string& fn) {
        std::string u = upper(fn);
        expect(Tok::LParen);
        auto node = std::make_shared<Expr>();
        if (u == "COUNT") {
            node->kind = Expr::Kind::Count;
            if (at(Tok::Star)) {
                next();
                node->star = true;
            } else {
                if (at_kw("DISTINCT")) {
                    next();
                    node->distinct = true;
                }
                node->lhs = expr();
                if (node->lhs->kind == Expr::Kind::Count) {
                    const Token& t = peek();
                    throw ParseError("line " + std::to_string(t.line) + ", column " +
                                     std::to_string(t.col) + ": nested count()",
                                     t.line, t.col);
                }
            }
        } else if (u == "TYPE") {
            node->kind = Expr::Kind::TypeOf;
            node->var = name("relationship variable");
        } else {
            throw UnsupportedError("function " + fn + "()");
        }
        expect(Tok::RParen);
        return node;
    }

    std::vector<Token> toks_;
    size_t pos_ = 0;
};

void print_expr_to(std::ostream& os, const Expr& e);

void print_operand(std::ostream& os, const Expr& e) {
    bool wrap = e.kind == Expr::Kind::And || e.kind == Expr::Kind::Or ||
                e.kind == Expr::Kind::Not || e.kind == Expr::Kind::Compare;
    if (wrap) os << '(';
    print_expr_to(os, e);
    if (wrap) os << ')';
}

void print_expr_to(std::ostream& os, const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Literal: os << repr(e.literal); break;
        case Expr::Kind::Param: os << '$' << e.name; break;
        case Expr::Kind::Var: os << e.name; break;
        case Expr::Kind::Prop: os << e.var << '.' << e.name; break;
        case Expr::Kind::TypeOf: os << "type(" << e.var << ')'; break;
        case Expr::Kind::Count:
            os << "count(";
            if (e.star) {
                os << '*';
            } else {
                if (e.distinct) os << "DISTINCT ";
                print_expr_to(os, *e.lhs);
            }
            os << ')';
            break;
        case Expr::Kind::Compare:
            print_operand(os, *e.lhs);
            os << ' ' << e.op << ' ';
            print_operand(os, *e.rhs);
            break;
        case Expr::Kind::And:
            print_operand(os, *e.lhs);
            os << " AND ";
            print_operand(os, *e.rhs);
            break;
        case Expr::Kind::Or:
            print_operand(os, *e.lhs);
            os << " OR ";
            print_operand(os, *e.rhs);
            break;
        case Expr::Kind::Not:
            os << "NOT ";
            print_operand(os, *e.lhs);
            break;
    }
}

void print_node(std::ostream& os, const NodePattern& n) {
    os << '(' << n.var;
    if (!n.label.empty()) os << ':' << n.label;
    if (!n.props.empty()) {
        os << (n.var.empty() && n.label.empty() ? "{" : " {");
        bool first = true;
        for (const auto& [k, v] : n.props) {
            if (!first) os << ", ";
            first = false;
            os << k << ": ";
            print_expr_to(os, *v);
        }
        os << '}';
    }
    os << ')';
}

void print_rel(std::ostream& os, const RelPattern& r) {
    os << (r.dir == RelDir::In ? "<-" : "-");
    if (!r.var.empty() || !r.type.empty()) {
        os << '[' << r.var;
        if (!r.type.empty()) os << ':' << r.type;
        os << ']';
    }
    os << (r.dir == RelDir::Out ? "->" : "-");
}

}  // namespace

ExprPtr make_literal(Value v) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::Literal;
    e->literal = std::move(v);
    return e;
}

ExprPtr make_param(std::string name) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::Param;
    e->name = std::move(name);
    return e;
}

ExprPtr make_var(std::string name) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::Var;
    e->name = std::move(name);
    return e;
}

ExprPtr make_prop(std::string var, std::string prop) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::Prop;
    e->var = std::move(var);
    e->name = std::move(prop);
    return e;
}

bool contains_aggregate(const Expr& e) {
    if (e.kind == Expr::Kind::Count) return true;
    if (e.lhs && contains_aggregate(*e.lhs)) return true;
    if (e.rhs && contains_aggregate(*e.rhs)) return true;
    return false;
}

QueryAst parse(const std::string& query_text) {
    Lexer lexer(query_text);
    Parser parser(lexer.run());
    return parser.query();
}

std::string print_expr(const Expr& e) {
    std::ostringstream os;
    print_expr_to(os, e);
    return os.str();
}

std::string print_query(const QueryAst& ast) {
    std::ostringstream os;
    for (const auto& m : ast.matches) {
        os << "MATCH ";
        bool first_path = true;
        for (const auto& p : m.paths) {
            if (!first_path) os << ", ";
            first_path = false;
            for (size_t i = 0; i < p.nodes.size(); ++i) {
                if (i > 0) print_rel(os, p.rels[i - 1]);
                print_node(os, p.nodes[i]);
            }
        }
        os << ' ';
    }
    if (ast.where) {
        os << "WHERE ";
        print_expr_to(os, *ast.where);
        os << ' ';
    }
    os << "RETURN ";
    bool first = true;
    for (const auto& item : ast.returns) {
        if (!first) os << ", ";
        first = false;
        print_expr_to(os, *item.expr);
        if (item.alias) os << " AS " << *item.alias;
    }
    if (!ast.order_by.empty()) {
        os << " ORDER BY ";
        first = true;
        for (const auto& key : ast.order_by) {
            if (!first) os << ", ";
            first = false;
            print_expr_to(os, *key.expr);
            os << (key.desc ? " DESC" : " ASC");
        }
    }
    if (ast.skip) os << " SKIP " << *ast.skip;
    if (ast.limit) os << " LIMIT " << *ast.limit;
    return os.str();
}

}  // namespace kgqa::gql
