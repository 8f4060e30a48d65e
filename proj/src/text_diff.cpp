#include "provdelta/text_diff.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace provdelta {

bool hash_diff(const Md5Digest& left, const Md5Digest& right) { return !(left == right); }

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < text.size()) lines.emplace_back(text.substr(start));
            break;
        }
        std::string_view line = text.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        start = nl + 1;
    }
    return lines;
}

namespace {

std::string normalize_line(std::string line, const TextDiffOptions& opts) {
    if (opts.ignore_whitespace) {
        std::erase_if(line, [](unsigned char c) { return std::isspace(c); });
    }
    if (opts.ignore_case) {
        std::transform(line.begin(), line.end(), line.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    }
    return line;
}

// Myers greedy shortest-edit-script search over interned lines. Returns the
// number of kept (common) lines, i.e. (n + m - D) / 2.
std::size_t common_line_count(const std::vector<int>& a, const std::vector<int>& b) {
    const long n = static_cast<long>(a.size());
    const long m = static_cast<long>(b.size());
    const long max_d = n + m;
    if (max_d == 0) return 0;
    std::vector<long> v(2 * max_d + 1, 0);
    auto at = [&](long k) -> long& { return v[k + max_d]; };
    for (long d = 0; d <= max_d; ++d) {
        for (long k = -d; k <= d; k += 2) {
            long x;
            if (k == -d || (k != d && at(k - 1) < at(k + 1)))
                x = at(k + 1);
            else
                x = at(k - 1) + 1;
            long y = x - k;
            while (x < n && y < m && a[x] == b[y]) {
                ++x;
                ++y;
            }
            at(k) = x;
            if (x >= n && y >= m) return static_cast<std::size_t>((n + m - d) / 2);
        }
    }
    return 0; // unreachable: d = n + m always terminates
}

} // namespace

SimilarityScore text_diff(std::string_view left, std::string_view right,
                          const TextDiffOptions& opts) {
    std::vector<std::string> lines_l = split_lines(left);
    std::vector<std::string> lines_r = split_lines(right);
    if (lines_l.empty() && lines_r.empty()) return SimilarityScore(1.0);

    std::map<std::string, int> intern;
    auto to_ids = [&](const std::vector<std::string>& lines) {
        std::vector<int> ids;
        ids.reserve(lines.size());
        for (const auto& line : lines) {
            auto [it, _] = intern.try_emplace(normalize_line(line, opts),
                                              static_cast<int>(intern.size()));
            ids.push_back(it->second);
        }
        return ids;
    };
    std::vector<int> a = to_ids(lines_l);
    std::vector<int> b = to_ids(lines_r);

    std::size_t kept = common_line_count(a, b);
    double denom = static_cast<double>(std::max(a.size(), b.size()));
    return SimilarityScore(static_cast<double>(kept) / denom);
}

} // namespace provdelta
