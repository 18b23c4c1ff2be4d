#pragma once

// Line-agnostic structured text: ordered key/value entries where a value is
// a scalar token, a bracketed list of scalars, or a braced block of nested
// entries. Keys may repeat. '#' starts a comment. Numbers are written with
// std::to_chars shortest round-trip formatting, so parse(serialize(x))
// reproduces every finite double bit-exactly.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "doslb/errors.hpp"
#include "doslb/linalg.hpp"

namespace doslb {

struct DocNode {
    enum class Kind { Scalar, List, Block };
    Kind kind = Kind::Scalar;
    std::string scalar;
    std::vector<std::string> list;
    std::vector<std::pair<std::string, DocNode>> entries;

    bool operator==(const DocNode& o) const {
        return kind == o.kind && scalar == o.scalar && list == o.list && entries == o.entries;
    }
};

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const char* ctx) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e)
        throw ParseError(std::string(ctx) + ": not a number: '" + s + "'");
    return v;
}

namespace textdetail {

struct Token {
    std::string text;
    int line = 0;
    bool quoted = false;
};

inline std::vector<Token> tokenize(const std::string& src) {
    std::vector<Token> out;
    int line = 1;
    size_t i = 0;
    while (i < src.size()) {
        const char c = src[i];
        if (c == '\n') {
            ++line;
            ++i;
        } else if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
        } else if (c == '#') {
            while (i < src.size() && src[i] != '\n') ++i;
        } else if (c == '{' || c == '}' || c == '[' || c == ']') {
            out.push_back({std::string(1, c), line, false});
            ++i;
        } else if (c == '"') {
            std::string s;
            ++i;
            while (i < src.size() && src[i] != '"') {
                if (src[i] == '\n') ++line;
                s += src[i++];
            }
            if (i >= src.size()) throw ParseError("unterminated string literal");
            ++i;
            out.push_back({s, line, true});
        } else {
            std::string s;
            while (i < src.size() && src[i] != ' ' && src[i] != '\t' && src[i] != '\n' &&
                   src[i] != '\r' && src[i] != '{' && src[i] != '}' && src[i] != '[' &&
                   src[i] != ']' && src[i] != '#')
                s += src[i++];
            out.push_back({s, line, false});
        }
    }
    return out;
}

struct Parser {
    const std::vector<Token>& toks;
    size_t pos = 0;

    const Token& peek() const {
        if (pos >= toks.size()) throw ParseError("unexpected end of document");
        return toks[pos];
    }
    Token take() {
        const Token t = peek();
        ++pos;
        return t;
    }
    bool done() const { return pos >= toks.size(); }

    DocNode parse_value() {
        const Token t = take();
        DocNode n;
        if (!t.quoted && t.text == "{") {
            n.kind = DocNode::Kind::Block;
            while (true) {
                if (done()) throw ParseError("unterminated block");
                if (!peek().quoted && peek().text == "}") {
                    take();
                    break;
                }
                const Token key = take();
                if (key.text == "{" || key.text == "[" || key.text == "]" || key.text == "}")
                    throw ParseError("expected key at line " + std::to_string(key.line));
                n.entries.emplace_back(key.text, parse_value());
            }
        } else if (!t.quoted && t.text == "[") {
            n.kind = DocNode::Kind::List;
            while (true) {
                if (done()) throw ParseError("unterminated list");
                const Token item = take();
                if (!item.quoted && item.text == "]") break;
                if (!item.quoted && (item.text == "[" || item.text == "{"))
                    throw ParseError("nested list/block inside list at line " +
                                     std::to_string(item.line));
                n.list.push_back(item.text);
            }
        } else {
            n.kind = DocNode::Kind::Scalar;
            n.scalar = t.text;
        }
        return n;
    }
};

inline bool needs_quotes(const std::string& s) {
    if (s.empty()) return true;
    for (char c : s)
        if (c == ' ' || c == '\t' || c == '\n' || c == '{' || c == '}' || c == '[' ||
            c == ']' || c == '#' || c == '"')
            return true;
    return false;
}

inline void write_node(std::ostream& os, const DocNode& n, int indent) {
    const std::string pad(static_cast<size_t>(indent) * 2, ' ');
    switch (n.kind) {
        case DocNode::Kind::Scalar:
            if (needs_quotes(n.scalar))
                os << '"' << n.scalar << '"';
            else
                os << n.scalar;
            break;
        case DocNode::Kind::List: {
            os << "[";
            for (const std::string& s : n.list) os << ' ' << s;
            os << " ]";
            break;
        }
        case DocNode::Kind::Block: {
            os << "{\n";
            for (const auto& [k, v] : n.entries) {
                os << pad << "  " << k << ' ';
                write_node(os, v, indent + 1);
                os << '\n';
            }
            os << pad << "}";
            break;
        }
    }
}

} // namespace textdetail

// Parses a document; the result is a Block node holding the top level
// entries in order.
inline DocNode parse_doc(const std::string& src) {
    const std::vector<textdetail::Token> toks = textdetail::tokenize(src);
    textdetail::Parser p{toks};
    DocNode root;
    root.kind = DocNode::Kind::Block;
    while (!p.done()) {
        const textdetail::Token key = p.take();
        if (key.text == "{" || key.text == "[" || key.text == "]" || key.text == "}")
            throw ParseError("expected key at line " + std::to_string(key.line));
        root.entries.emplace_back(key.text, p.parse_value());
    }
    return root;
}

inline std::string serialize_doc(const DocNode& root) {
    std::ostringstream os;
    for (const auto& [k, v] : root.entries) {
        os << k << ' ';
        textdetail::write_node(os, v, 0);
        os << '\n';
    }
    return os.str();
}

// Entry accessors.

inline const DocNode* doc_find(const DocNode& block, const std::string& key) {
    for (const auto& [k, v] : block.entries)
        if (k == key) return &v;
    return nullptr;
}

inline std::vector<const DocNode*> doc_find_all(const DocNode& block, const std::string& key) {
    std::vector<const DocNode*> out;
    for (const auto& [k, v] : block.entries)
        if (k == key) out.push_back(&v);
    return out;
}

inline const DocNode& doc_require(const DocNode& block, const std::string& key) {
    const DocNode* n = doc_find(block, key);
    if (!n) throw ParseError("missing key '" + key + "'");
    return *n;
}

inline std::string doc_string(const DocNode& n, const char* ctx) {
    if (n.kind != DocNode::Kind::Scalar)
        throw ParseError(std::string(ctx) + ": expected scalar");
    return n.scalar;
}

inline double doc_double(const DocNode& n, const char* ctx) {
    return parse_double(doc_string(n, ctx), ctx);
}

inline long doc_long(const DocNode& n, const char* ctx) {
    const double v = doc_double(n, ctx);
    const long l = static_cast<long>(v);
    if (static_cast<double>(l) != v)
        throw ParseError(std::string(ctx) + ": expected integer");
    return l;
}

inline bool doc_bool(const DocNode& n, const char* ctx) {
    const std::string s = doc_string(n, ctx);
    if (s == "true") return true;
    if (s == "false") return false;
    throw ParseError(std::string(ctx) + ": expected true/false");
}

inline Vec doc_vec(const DocNode& n, const char* ctx) {
    if (n.kind != DocNode::Kind::List)
        throw ParseError(std::string(ctx) + ": expected list");
    Vec out;
    out.reserve(n.list.size());
    for (const std::string& s : n.list) out.push_back(parse_double(s, ctx));
    return out;
}

// Node builders for writers.

inline DocNode doc_scalar(const std::string& s) {
    DocNode n;
    n.kind = DocNode::Kind::Scalar;
    n.scalar = s;
    return n;
}

inline DocNode doc_number(double v) { return doc_scalar(format_double(v)); }

inline DocNode doc_integer(long v) { return doc_scalar(std::to_string(v)); }

inline DocNode doc_boolean(bool v) { return doc_scalar(v ? "true" : "false"); }

inline DocNode doc_numlist(const Vec& v) {
    DocNode n;
    n.kind = DocNode::Kind::List;
    for (double x : v) n.list.push_back(format_double(x));
    return n;
}

inline DocNode doc_block() {
    DocNode n;
    n.kind = DocNode::Kind::Block;
    return n;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << content;
}

} // namespace doslb
