#include "provdelta/xml.hpp"

#include <algorithm>
#include <map>
#include <optional>

namespace provdelta::xml {

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_name_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':' ||
           static_cast<unsigned char>(c) >= 0x80;
}

bool is_name_char(char c) {
    return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
}

// Raw parse tree: names still carry prefixes, xmlns attributes still present.
struct RawNode {
    enum class Kind { element, text };
    Kind kind = Kind::element;
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes; // document order
    std::string text;
    std::vector<RawNode> children;
};

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    RawNode parse_document() {
        skip_bom();
        skip_misc();
        if (eof() || peek() != '<') fail("expected root element");
        RawNode root = parse_element();
        skip_misc();
        if (!eof()) fail("content after root element");
        return root;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) {
        throw XmlError("XML error at byte " + std::to_string(pos_) + ": " + what);
    }

    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }
    bool starts_with(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }

    void expect(std::string_view s) {
        if (!starts_with(s)) fail("expected '" + std::string(s) + "'");
        pos_ += s.size();
    }

    void skip_ws() {
        while (!eof() && is_ws(peek())) ++pos_;
    }

    void skip_bom() {
        if (text_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = 3;
    }

    // Prolog, comments, PIs, doctype and whitespace between top-level markup.
    void skip_misc() {
        while (true) {
            skip_ws();
            if (starts_with("<?")) {
                skip_until("?>");
            } else if (starts_with("<!--")) {
                skip_until("-->");
            } else if (starts_with("<!DOCTYPE")) {
                skip_doctype();
            } else {
                return;
            }
        }
    }

    void skip_until(std::string_view end) {
        std::size_t found = text_.find(end, pos_);
        if (found == std::string_view::npos) fail("unterminated '" + std::string(end) + "' section");
        pos_ = found + end.size();
    }

    void skip_doctype() {
        pos_ += 9; // "<!DOCTYPE"
        int brackets = 0;
        while (!eof()) {
            char c = text_[pos_++];
            if (c == '[') ++brackets;
            else if (c == ']') --brackets;
            else if (c == '>' && brackets == 0) return;
        }
        fail("unterminated DOCTYPE");
    }

    std::string parse_name() {
        if (eof() || !is_name_start(peek())) fail("expected a name");
        std::size_t start = pos_;
        while (!eof() && is_name_char(peek())) ++pos_;
        return std::string(text_.substr(start, pos_ - start));
    }

    void append_char_ref(std::string& out, unsigned long code) {
        // Encode the code point back to UTF-8.
        if (code < 0x80) {
            out.push_back(static_cast<char>(code));
        } else if (code < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (code >> 6)));
            out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
        } else if (code < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (code >> 12)));
            out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
        } else if (code < 0x110000) {
            out.push_back(static_cast<char>(0xF0 | (code >> 18)));
            out.push_back(static_cast<char>(0x80 | ((code >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
        } else {
            fail("character reference out of range");
        }
    }

    void append_entity(std::string& out) {
        ++pos_; // '&'
        std::size_t semi = text_.find(';', pos_);
        if (semi == std::string_view::npos || semi - pos_ > 10) fail("unterminated entity");
        std::string_view name = text_.substr(pos_, semi - pos_);
        pos_ = semi + 1;
        if (name == "lt") out.push_back('<');
        else if (name == "gt") out.push_back('>');
        else if (name == "amp") out.push_back('&');
        else if (name == "apos") out.push_back('\'');
        else if (name == "quot") out.push_back('"');
        else if (!name.empty() && name[0] == '#') {
            std::string_view digits = name.substr(1);
            int base = 10;
            if (!digits.empty() && (digits[0] == 'x' || digits[0] == 'X')) {
                base = 16;
                digits.remove_prefix(1);
            }
            if (digits.empty()) fail("empty character reference");
            unsigned long code = 0;
            for (char c : digits) {
                int v;
                if (c >= '0' && c <= '9') v = c - '0';
                else if (base == 16 && c >= 'a' && c <= 'f') v = c - 'a' + 10;
                else if (base == 16 && c >= 'A' && c <= 'F') v = c - 'A' + 10;
                else { fail("bad character reference"); }
                code = code * base + static_cast<unsigned long>(v);
                if (code > 0x10FFFF) fail("character reference out of range");
            }
            append_char_ref(out, code);
        } else {
            fail("unknown entity '&" + std::string(name) + ";'");
        }
    }

    std::string parse_attribute_value() {
        if (eof() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
        char quote = peek();
        ++pos_;
        std::string value;
        while (!eof() && peek() != quote) {
            char c = peek();
            if (c == '&') {
                append_entity(value);
            } else if (c == '<') {
                fail("'<' in attribute value");
            } else if (c == '\t' || c == '\n' || c == '\r') {
                // Attribute-value normalization.
                value.push_back(' ');
                ++pos_;
            } else {
                value.push_back(c);
                ++pos_;
            }
        }
        if (eof()) fail("unterminated attribute value");
        ++pos_;
        return value;
    }

    RawNode parse_element() {
        expect("<");
        RawNode node;
        node.kind = RawNode::Kind::element;
        node.name = parse_name();
        while (true) {
            bool had_ws = !eof() && is_ws(peek());
            skip_ws();
            if (eof()) fail("unterminated start tag");
            if (starts_with("/>")) {
                pos_ += 2;
                return node;
            }
            if (peek() == '>') {
                ++pos_;
                break;
            }
            if (!had_ws) fail("expected whitespace before attribute");
            std::string attr = parse_name();
            skip_ws();
            expect("=");
            skip_ws();
            std::string value = parse_attribute_value();
            for (const auto& [existing, _] : node.attributes)
                if (existing == attr) fail("duplicate attribute '" + attr + "'");
            node.attributes.emplace_back(std::move(attr), std::move(value));
        }

        // Content until the matching end tag.
        std::string pending_text;
        auto flush_text = [&] {
            if (pending_text.empty()) return;
            RawNode t;
            t.kind = RawNode::Kind::text;
            t.text = std::move(pending_text);
            pending_text.clear();
            node.children.push_back(std::move(t));
        };
        while (true) {
            if (eof()) fail("unterminated element '" + node.name + "'");
            if (starts_with("</")) {
                flush_text();
                pos_ += 2;
                std::string closing = parse_name();
                if (closing != node.name)
                    fail("mismatched end tag '" + closing + "' for '" + node.name + "'");
                skip_ws();
                expect(">");
                return node;
            }
            if (starts_with("<![CDATA[")) {
                pos_ += 9;
                std::size_t end = text_.find("]]>", pos_);
                if (end == std::string_view::npos) fail("unterminated CDATA section");
                pending_text += text_.substr(pos_, end - pos_);
                pos_ = end + 3;
            } else if (starts_with("<!--")) {
                skip_until("-->");
            } else if (starts_with("<?")) {
                skip_until("?>");
            } else if (peek() == '<') {
                flush_text();
                node.children.push_back(parse_element());
            } else if (peek() == '&') {
                append_entity(pending_text);
            } else {
                pending_text.push_back(peek());
                ++pos_;
            }
        }
    }
};

std::string normalize_newlines(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\r') {
            out.push_back('\n');
            if (i + 1 < s.size() && s[i + 1] == '\n') ++i;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

bool whitespace_only(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return is_ws(c); });
}

using NsEnv = std::map<std::string, std::string>; // prefix -> uri; "" is the default ns

std::pair<std::string, std::string> split_qname(const std::string& qname) {
    std::size_t colon = qname.find(':');
    if (colon == std::string::npos) return {"", qname};
    return {qname.substr(0, colon), qname.substr(colon + 1)};
}

std::string expand(const std::string& prefix, const std::string& local, const NsEnv& env,
                   bool is_attribute) {
    if (prefix.empty()) {
        if (is_attribute) return local; // unprefixed attributes have no namespace
        auto it = env.find("");
        if (it == env.end() || it->second.empty()) return local;
        return "{" + it->second + "}" + local;
    }
    if (prefix == "xml") return "{http://www.w3.org/XML/1998/namespace}" + local;
    auto it = env.find(prefix);
    if (it == env.end()) throw XmlError("undeclared namespace prefix '" + prefix + "'");
    return "{" + it->second + "}" + local;
}

Node canonicalize(const RawNode& raw, NsEnv env) {
    if (raw.kind == RawNode::Kind::text) {
        Node t;
        t.kind = Node::Kind::text;
        t.text = normalize_newlines(raw.text);
        return t;
    }

    // Namespace declarations on this element extend the environment and are
    // dropped from the canonical attribute list.
    std::vector<std::pair<std::string, std::string>> plain_attrs;
    for (const auto& [name, value] : raw.attributes) {
        if (name == "xmlns") {
            env[""] = value;
        } else if (name.rfind("xmlns:", 0) == 0) {
            env[name.substr(6)] = value;
        } else {
            plain_attrs.emplace_back(name, value);
        }
    }

    Node out;
    out.kind = Node::Kind::element;
    auto [prefix, local] = split_qname(raw.name);
    out.name = expand(prefix, local, env, false);
    for (const auto& [name, value] : plain_attrs) {
        auto [aprefix, alocal] = split_qname(name);
        out.attributes.emplace_back(expand(aprefix, alocal, env, true), value);
    }
    std::sort(out.attributes.begin(), out.attributes.end());
    for (std::size_t i = 1; i < out.attributes.size(); ++i)
        if (out.attributes[i].first == out.attributes[i - 1].first)
            throw XmlError("duplicate attribute '" + out.attributes[i].first +
                           "' after namespace expansion");

    std::string pending;
    auto flush = [&] {
        if (pending.empty() || whitespace_only(pending)) {
            pending.clear();
            return;
        }
        Node t;
        t.kind = Node::Kind::text;
        t.text = std::move(pending);
        pending.clear();
        out.children.push_back(std::move(t));
    };
    for (const RawNode& child : raw.children) {
        if (child.kind == RawNode::Kind::text) {
            pending += normalize_newlines(child.text);
        } else {
            flush();
            out.children.push_back(canonicalize(child, env));
        }
    }
    flush();
    return out;
}

// Weight of the best order-preserving top-down alignment of the two trees.
std::size_t match_weight(const Node& left, const Node& right) {
    if (left.kind != right.kind) return 0;
    if (left.kind == Node::Kind::text) return left.text == right.text ? 1 : 0;
    if (left.name != right.name) return 0;

    std::size_t weight = 1;
    // Attributes: both lists are sorted; count identical (name, value) pairs.
    {
        std::size_t i = 0, j = 0;
        while (i < left.attributes.size() && j < right.attributes.size()) {
            if (left.attributes[i] == right.attributes[j]) {
                ++weight;
                ++i;
                ++j;
            } else if (left.attributes[i] < right.attributes[j]) {
                ++i;
            } else {
                ++j;
            }
        }
    }
    // Children: weighted LCS over the two ordered child sequences.
    const auto& L = left.children;
    const auto& R = right.children;
    std::vector<std::vector<std::size_t>> dp(L.size() + 1, std::vector<std::size_t>(R.size() + 1, 0));
    for (std::size_t i = 1; i <= L.size(); ++i)
        for (std::size_t j = 1; j <= R.size(); ++j) {
            std::size_t best = std::max(dp[i - 1][j], dp[i][j - 1]);
            std::size_t pair = match_weight(L[i - 1], R[j - 1]);
            if (pair > 0) best = std::max(best, dp[i - 1][j - 1] + pair);
            dp[i][j] = best;
        }
    return weight + dp[L.size()][R.size()];
}

} // namespace

Node parse_canonical(std::string_view text) {
    Parser parser(text);
    RawNode raw = parser.parse_document();
    return canonicalize(raw, NsEnv{});
}

std::size_t node_count(const Node& n) {
    if (n.kind == Node::Kind::text) return 1;
    std::size_t count = 1 + n.attributes.size();
    for (const Node& c : n.children) count += node_count(c);
    return count;
}

SimilarityScore xml_diff(std::string_view left, std::string_view right) {
    Node l = parse_canonical(left);
    Node r = parse_canonical(right);
    std::size_t denom = std::max(node_count(l), node_count(r));
    std::size_t matched = match_weight(l, r);
    return SimilarityScore(static_cast<double>(matched) / static_cast<double>(denom));
}

} // namespace provdelta::xml
