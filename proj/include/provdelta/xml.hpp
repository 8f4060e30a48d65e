#pragma once

#include "provdelta/text_diff.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace provdelta::xml {

struct XmlError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Canonical document node. Element names and attribute names are expanded
/// to "{namespace-uri}local" form, attributes are sorted, namespace
/// declarations removed, whitespace-only text dropped, comments and
/// processing instructions discarded.
struct Node {
    enum class Kind { element, text };

    Kind kind = Kind::element;
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::string text;
    std::vector<Node> children;
};

/// Parses a well-formed XML document into its canonical form.
/// Throws XmlError with a byte offset on malformed input.
Node parse_canonical(std::string_view text);

/// Elements + attributes + non-whitespace text nodes.
std::size_t node_count(const Node& n);

/// Structural similarity of the canonical trees: the weight of the best
/// top-down alignment divided by the larger node count. Attribute order,
/// namespace prefixes and insignificant whitespace do not affect the score.
SimilarityScore xml_diff(std::string_view left, std::string_view right);

} // namespace provdelta::xml
