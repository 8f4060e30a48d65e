#pragma once

#include "provdelta/md5.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace provdelta {

/// Similarity in [0,1]; 1 means indistinguishable under the comparator.
struct SimilarityScore {
    double value = 1.0;

    explicit SimilarityScore(double v) : value(v) {
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("similarity score " + std::to_string(v) +
                                        " outside [0,1]");
    }
};

struct TextDiffOptions {
    bool ignore_whitespace = false;
    bool ignore_case = false;
};

/// True when the digests differ: the crude mismatch test used for data whose
/// bytes were not retained.
bool hash_diff(const Md5Digest& left, const Md5Digest& right);

/// Splits on '\n'; a trailing "\r" per line is dropped so CRLF input compares
/// like LF input.
std::vector<std::string> split_lines(std::string_view text);

/// Fraction of lines left unchanged by a shortest line-level edit script:
/// |LCS(left, right)| / max(#lines left, #lines right). Two empty inputs
/// score 1. Options normalise lines before matching.
SimilarityScore text_diff(std::string_view left, std::string_view right,
                          const TextDiffOptions& opts = {});

} // namespace provdelta
