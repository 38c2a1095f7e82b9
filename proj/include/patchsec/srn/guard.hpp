#pragma once

// Guard expressions over markings:
//
//   expr    := conj ('||' conj)*
//   conj    := primary ('&&' primary)*
//   primary := '(' expr ')' | atom | 'true' | 'false'
//   atom    := '#' ident cmp integer
//   cmp     := '==' | '!=' | '<' | '<=' | '>' | '>='
//
// Whitespace between tokens is ignored.

#include <patchsec/errors.hpp>

#include <cctype>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace patchsec::srn {

enum class Cmp { eq, ne, lt, le, gt, ge };

inline std::string_view to_string(Cmp c) {
    switch (c) {
    case Cmp::eq: return "==";
    case Cmp::ne: return "!=";
    case Cmp::lt: return "<";
    case Cmp::le: return "<=";
    case Cmp::gt: return ">";
    case Cmp::ge: return ">=";
    }
    return "?";
}

inline constexpr std::size_t unbound = std::numeric_limits<std::size_t>::max();

struct GuardExpr {
    enum class Kind { constant, atom, conjunction, disjunction };

    Kind kind = Kind::constant;
    bool constant = true;
    // atom
    std::string place;
    std::size_t place_index = unbound;
    Cmp cmp = Cmp::eq;
    int operand = 0;
    // conjunction / disjunction
    std::vector<GuardExpr> terms;

    static GuardExpr always() { return GuardExpr{}; }

    static GuardExpr atom(std::string place, Cmp cmp, int operand) {
        GuardExpr g;
        g.kind = Kind::atom;
        g.place = std::move(place);
        g.cmp = cmp;
        g.operand = operand;
        return g;
    }

    bool is_trivially_true() const { return kind == Kind::constant && constant; }

    /// Requires a bound expression.
    bool evaluate(std::span<const int> marking) const {
        switch (kind) {
        case Kind::constant: return constant;
        case Kind::atom: {
            const int n = marking[place_index];
            switch (cmp) {
            case Cmp::eq: return n == operand;
            case Cmp::ne: return n != operand;
            case Cmp::lt: return n < operand;
            case Cmp::le: return n <= operand;
            case Cmp::gt: return n > operand;
            case Cmp::ge: return n >= operand;
            }
            return false;
        }
        case Kind::conjunction:
            for (const auto& t : terms)
                if (!t.evaluate(marking)) return false;
            return true;
        case Kind::disjunction:
            for (const auto& t : terms)
                if (t.evaluate(marking)) return true;
            return false;
        }
        return false;
    }

    // Structural equality; binding is not compared.
    friend bool operator==(const GuardExpr& a, const GuardExpr& b) {
        if (a.kind != b.kind) return false;
        switch (a.kind) {
        case Kind::constant: return a.constant == b.constant;
        case Kind::atom: return a.place == b.place && a.cmp == b.cmp && a.operand == b.operand;
        default: return a.terms == b.terms;
        }
    }
};

namespace detail {

class GuardParser {
public:
    explicit GuardParser(std::string_view text) : text_(text) {}

    GuardExpr parse() {
        auto e = parse_or();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return e;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(pos_, what); }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(std::string_view tok) {
        skip_ws();
        if (text_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    GuardExpr parse_or() {
        auto first = parse_and();
        if (!peek("||")) return first;
        GuardExpr g;
        g.kind = GuardExpr::Kind::disjunction;
        g.terms.push_back(std::move(first));
        while (accept("||")) g.terms.push_back(parse_and());
        return g;
    }

    GuardExpr parse_and() {
        auto first = parse_primary();
        if (!peek("&&")) return first;
        GuardExpr g;
        g.kind = GuardExpr::Kind::conjunction;
        g.terms.push_back(std::move(first));
        while (accept("&&")) g.terms.push_back(parse_primary());
        return g;
    }

    bool peek(std::string_view tok) {
        skip_ws();
        return text_.substr(pos_, tok.size()) == tok;
    }

    GuardExpr parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        if (accept("(")) {
            auto e = parse_or();
            if (!accept(")")) fail("expected ')'");
            return e;
        }
        if (accept("#")) return parse_atom();
        auto word = ident();
        if (word == "true" || word == "false") {
            GuardExpr g;
            g.constant = word == "true";
            return g;
        }
        fail("expected '#<place>', '(' or a boolean literal");
    }

    std::string ident() {
        skip_ws();
        const auto start = pos_;
        auto is_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
        auto is_body = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
        if (pos_ < text_.size() && is_start(text_[pos_])) {
            ++pos_;
            while (pos_ < text_.size() && is_body(text_[pos_])) ++pos_;
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    GuardExpr parse_atom() {
        auto name = ident();
        if (name.empty()) fail("expected a place name after '#'");
        Cmp cmp;
        skip_ws();
        if (accept("==")) cmp = Cmp::eq;
        else if (accept("!=")) cmp = Cmp::ne;
        else if (accept("<=")) cmp = Cmp::le;
        else if (accept(">=")) cmp = Cmp::ge;
        else if (accept("<")) cmp = Cmp::lt;
        else if (accept(">")) cmp = Cmp::gt;
        else fail("expected a comparison operator");
        skip_ws();
        const auto start = pos_;
        if (pos_ < text_.size() && text_[pos_] == '-') ++pos_;
        const auto digits = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ == digits) {
            pos_ = start;
            fail("expected an integer");
        }
        int value = 0;
        try {
            value = std::stoi(std::string(text_.substr(start, pos_ - start)));
        } catch (const std::out_of_range&) {
            pos_ = start;
            fail("integer out of range");
        }
        return GuardExpr::atom(std::move(name), cmp, value);
    }
};

inline void print(const GuardExpr& g, std::string& out, bool nested) {
    switch (g.kind) {
    case GuardExpr::Kind::constant: out += g.constant ? "true" : "false"; return;
    case GuardExpr::Kind::atom:
        out += '#';
        out += g.place;
        out += to_string(g.cmp);
        out += std::to_string(g.operand);
        return;
    default: break;
    }
    const char* sep = g.kind == GuardExpr::Kind::conjunction ? " && " : " || ";
    if (nested) out += '(';
    for (std::size_t i = 0; i < g.terms.size(); ++i) {
        if (i) out += sep;
        print(g.terms[i], out, g.terms[i].kind == GuardExpr::Kind::conjunction ||
                                   g.terms[i].kind == GuardExpr::Kind::disjunction);
    }
    if (nested) out += ')';
}

} // namespace detail

/// Parses a guard. ParseError::offset() points at the offending byte.
inline GuardExpr parse_guard(std::string_view text) {
    return detail::GuardParser(text).parse();
}

/// Canonical text: atoms as "#P==1", binary operators surrounded by single
/// spaces, compound sub-terms parenthesized. parse_guard(to_string(g)) == g.
inline std::string to_string(const GuardExpr& g) {
    std::string out;
    detail::print(g, out, false);
    return out;
}

/// Resolves place names to indices. Throws ModelError on an unknown place.
inline void bind(GuardExpr& g, const std::function<std::optional<std::size_t>(std::string_view)>& lookup) {
    if (g.kind == GuardExpr::Kind::atom) {
        auto idx = lookup(g.place);
        if (!idx) throw ModelError("guard", "unknown place '" + g.place + "'");
        g.place_index = *idx;
        return;
    }
    for (auto& t : g.terms) bind(t, lookup);
}

} // namespace patchsec::srn
