#pragma once

// Line-oriented net description:
//
//   place <id> <tokens>
//   timed <id> rate=<float>[*#<place>] [guard="<expr>"] [in=<place>[:mult],...] [out=...]
//   immediate <id> [weight=<float>] [priority=<int>] [guard="<expr>"] [in=...] [out=...]
//   reward <name> "<guard expr>" = <float>
//
// Reward lines sharing a name form an ordered first-match-wins list. Blank
// lines and lines starting with "//" are ignored. Declaration order of places
// does not matter.

#include <patchsec/errors.hpp>
#include <patchsec/srn/guard.hpp>
#include <patchsec/srn/net.hpp>

#include <cctype>
#include <cstddef>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

namespace patchsec::srn {

namespace detail {

struct Token {
    std::string text;        // quotes removed
    std::size_t offset = 0;  // absolute offset of the token start
    std::size_t value_offset = 0;  // absolute offset of the first character after '=' or '"'
    bool quoted = false;
};

struct Statement {
    std::size_t line = 0;
    std::size_t offset = 0;
    std::vector<Token> tokens;
};

[[noreturn]] inline void fail_at(std::size_t line, std::size_t offset, const std::string& what) {
    throw ParseError(offset, "line " + std::to_string(line), what);
}

inline std::vector<Token> tokenize(std::string_view line, std::size_t base, std::size_t lineno) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        if (std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
            continue;
        }
        Token tok;
        tok.offset = base + i;
        tok.value_offset = tok.offset;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) {
            if (line[i] == '"') {
                const auto close = line.find('"', i + 1);
                if (close == std::string_view::npos) fail_at(lineno, base + i, "unterminated string");
                tok.quoted = true;
                tok.value_offset = base + i + 1;
                tok.text.append(line.substr(i + 1, close - i - 1));
                i = close + 1;
            } else {
                if (line[i] == '=' && !tok.quoted) tok.value_offset = base + i + 1;
                tok.text.push_back(line[i++]);
            }
        }
        out.push_back(std::move(tok));
    }
    return out;
}

inline double to_double(const std::string& s, std::size_t line, std::size_t offset) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail_at(line, offset, "expected a number, got '" + s + "'");
    }
}

inline int to_int(const std::string& s, std::size_t line, std::size_t offset) {
    try {
        std::size_t used = 0;
        int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail_at(line, offset, "expected an integer, got '" + s + "'");
    }
}

inline GuardExpr guard_at(const std::string& text, std::size_t line, std::size_t offset) {
    try {
        return parse_guard(text);
    } catch (const ParseError& e) {
        fail_at(line, offset + e.offset(), std::string("guard: ") + e.what());
    }
}

inline std::vector<ArcRef> arcs(const std::string& list, std::size_t line, std::size_t offset) {
    std::vector<ArcRef> out;
    std::size_t start = 0;
    while (start < list.size()) {
        auto end = list.find(',', start);
        if (end == std::string::npos) end = list.size();
        std::string item = list.substr(start, end - start);
        if (item.empty()) fail_at(line, offset + start, "empty arc");
        ArcRef a;
        if (auto colon = item.find(':'); colon != std::string::npos) {
            a.place = item.substr(0, colon);
            a.multiplicity = to_int(item.substr(colon + 1), line, offset + start + colon + 1);
        } else {
            a.place = item;
        }
        out.push_back(std::move(a));
        start = end + 1;
    }
    return out;
}

inline std::string number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/// Parses a textual net. Errors carry the absolute byte offset and line number.
inline Net parse_net(std::string_view text) {
    using namespace detail;
    std::vector<Statement> statements;
    std::size_t pos = 0, lineno = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        ++lineno;
        auto line = text.substr(pos, end - pos);
        auto first = line.find_first_not_of(" \t\r");
        if (first != std::string_view::npos && line.substr(first, 2) != "//") {
            Statement st{lineno, pos + first, tokenize(line, pos, lineno)};
            statements.push_back(std::move(st));
        }
        if (end == text.size()) break;
        pos = end + 1;
    }

    Net net;
    auto wrap = [](const Statement& st, auto&& fn) {
        try {
            fn();
        } catch (const ModelError& e) {
            fail_at(st.line, st.offset, e.what());
        }
    };

    for (const auto& st : statements) {
        const auto& kw = st.tokens[0].text;
        if (kw != "place") continue;
        if (st.tokens.size() != 3) fail_at(st.line, st.offset, "expected 'place <id> <tokens>'");
        const int tokens = to_int(st.tokens[2].text, st.line, st.tokens[2].offset);
        wrap(st, [&] { net.add_place(st.tokens[1].text, tokens); });
    }

    for (const auto& st : statements) {
        const auto& kw = st.tokens[0].text;
        if (kw == "place") continue;
        if (kw == "reward") {
            if (st.tokens.size() != 5 || !st.tokens[2].quoted || st.tokens[3].text != "=")
                fail_at(st.line, st.offset, "expected 'reward <name> \"<expr>\" = <value>'");
            RewardFunction r;
            r.name = st.tokens[1].text;
            r.clauses.push_back({guard_at(st.tokens[2].text, st.line, st.tokens[2].value_offset),
                                 to_double(st.tokens[4].text, st.line, st.tokens[4].offset)});
            wrap(st, [&] { net.add_reward(std::move(r)); });
            continue;
        }
        if (kw != "timed" && kw != "immediate")
            fail_at(st.line, st.offset, "unknown statement '" + kw + "'");
        if (st.tokens.size() < 2) fail_at(st.line, st.offset, "missing transition id");
        const std::string id = st.tokens[1].text;

        RateExpr rate;
        bool has_rate = false;
        double weight = 1.0;
        int priority = 0;
        GuardExpr guard;
        std::vector<ArcRef> in, out;
        for (std::size_t i = 2; i < st.tokens.size(); ++i) {
            const auto& tok = st.tokens[i];
            const auto eq = tok.text.find('=');
            if (eq == std::string::npos) fail_at(st.line, tok.offset, "expected key=value");
            const auto key = tok.text.substr(0, eq);
            const auto val = tok.text.substr(eq + 1);
            const auto voff = tok.value_offset;
            if (key == "rate" && kw == "timed") {
                has_rate = true;
                if (auto star = val.find('*'); star != std::string::npos) {
                    rate.constant = to_double(val.substr(0, star), st.line, voff);
                    auto ref = val.substr(star + 1);
                    if (ref.size() < 2 || ref[0] != '#')
                        fail_at(st.line, voff + star + 1, "expected '#<place>' after '*'");
                    rate.place = ref.substr(1);
                } else {
                    rate.constant = to_double(val, st.line, voff);
                }
            } else if (key == "weight" && kw == "immediate") {
                weight = to_double(val, st.line, voff);
            } else if (key == "priority" && kw == "immediate") {
                priority = to_int(val, st.line, voff);
            } else if (key == "guard") {
                guard = guard_at(val, st.line, voff);
            } else if (key == "in") {
                in = arcs(val, st.line, voff);
            } else if (key == "out") {
                out = arcs(val, st.line, voff);
            } else {
                fail_at(st.line, tok.offset, "unknown attribute '" + key + "' for " + kw);
            }
        }
        if (kw == "timed") {
            if (!has_rate) fail_at(st.line, st.offset, "timed transition '" + id + "' needs rate=");
            wrap(st, [&] { net.add_timed(id, rate, in, out, guard); });
        } else {
            wrap(st, [&] { net.add_immediate(id, in, out, guard, weight, priority); });
        }
    }
    return net;
}

/// Serializes a net; parse_net(to_text(n)) describes the same net.
inline std::string to_text(const Net& net) {
    using detail::number;
    std::string s;
    for (const auto& p : net.places()) s += "place " + p.id + " " + std::to_string(p.initial_tokens) + "\n";
    auto arc_list = [&](const std::vector<Arc>& arcs) {
        std::string out;
        for (const auto& a : arcs) {
            if (!out.empty()) out += ',';
            out += net.places()[a.place].id;
            if (a.multiplicity != 1) out += ":" + std::to_string(a.multiplicity);
        }
        return out;
    };
    for (const auto& t : net.transitions()) {
        if (t.is_timed()) {
            s += "timed " + t.id + " rate=" + number(t.timed().rate.constant);
            if (t.timed().rate.place) s += "*#" + *t.timed().rate.place;
        } else {
            s += "immediate " + t.id + " weight=" + number(t.immediate().weight) +
                 " priority=" + std::to_string(t.immediate().priority);
        }
        if (!t.guard.is_trivially_true()) s += " guard=\"" + to_string(t.guard) + "\"";
        if (!t.inputs.empty()) s += " in=" + arc_list(t.inputs);
        if (!t.outputs.empty()) s += " out=" + arc_list(t.outputs);
        s += "\n";
    }
    for (const auto& r : net.rewards())
        for (const auto& c : r.clauses)
            s += "reward " + r.name + " \"" + to_string(c.guard) + "\" = " + number(c.value) + "\n";
    return s;
}

} // namespace patchsec::srn
