#include "provdelta/ancova.hpp"

#include "provdelta/text_diff.hpp"

#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace provdelta {

namespace {

/// Residual sum of squares of the least-squares fit y ~ X, computed by
/// Householder QR. X is stored column-major; all columns must be independent.
double residual_sum_of_squares(std::vector<std::vector<double>> x, std::vector<double> y) {
    const std::size_t n = y.size();
    const std::size_t p = x.size();
    for (std::size_t k = 0; k < p; ++k) {
        double norm = 0.0;
        for (std::size_t i = k; i < n; ++i) norm += x[k][i] * x[k][i];
        norm = std::sqrt(norm);
        if (norm < 1e-12)
            throw std::invalid_argument("degenerate regression: design matrix is rank deficient");
        double alpha = x[k][k] > 0 ? -norm : norm;
        std::vector<double> v(n, 0.0);
        v[k] = x[k][k] - alpha;
        for (std::size_t i = k + 1; i < n; ++i) v[i] = x[k][i];
        double vnorm2 = 0.0;
        for (std::size_t i = k; i < n; ++i) vnorm2 += v[i] * v[i];
        if (vnorm2 < 1e-300) continue;
        auto reflect = [&](std::vector<double>& col) {
            double dot = 0.0;
            for (std::size_t i = k; i < n; ++i) dot += v[i] * col[i];
            double scale = 2.0 * dot / vnorm2;
            for (std::size_t i = k; i < n; ++i) col[i] -= scale * v[i];
        };
        for (std::size_t j = k; j < p; ++j) reflect(x[j]);
        reflect(y);
    }
    double sse = 0.0;
    for (std::size_t i = p; i < n; ++i) sse += y[i] * y[i];
    return sse;
}

double upper_tail_p(double f, double df1, double df2) {
    boost::math::fisher_f dist(df1, df2);
    return boost::math::cdf(boost::math::complement(dist, f));
}

} // namespace

void ModelPredictions::validate() const {
    if (pairs.size() < 3)
        throw std::invalid_argument("model predictions need at least 3 pairs, got " +
                                    std::to_string(pairs.size()));
    bool varied = false;
    for (const auto& [est, act] : pairs)
        if (act != pairs.front().second) varied = true;
    if (!varied) throw std::invalid_argument("model predictions have constant actual values");
}

AncovaResult ancova_model_diff(const ModelPredictions& left, const ModelPredictions& right,
                               double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("alpha must lie strictly between 0 and 1");
    left.validate();
    right.validate();

    for (const ModelPredictions* group : {&left, &right}) {
        bool varied = false;
        for (const auto& [est, act] : group->pairs)
            if (est != group->pairs.front().first) varied = true;
        if (!varied)
            throw std::invalid_argument("degenerate regression: zero variance in estimates");
    }

    const std::size_t n = left.pairs.size() + right.pairs.size();
    std::vector<double> ones, est, group, interaction, actual;
    for (const auto& [e, a] : left.pairs) {
        ones.push_back(1.0);
        est.push_back(e);
        group.push_back(0.0);
        interaction.push_back(0.0);
        actual.push_back(a);
    }
    for (const auto& [e, a] : right.pairs) {
        ones.push_back(1.0);
        est.push_back(e);
        group.push_back(1.0);
        interaction.push_back(e);
        actual.push_back(a);
    }

    double sse_full = residual_sum_of_squares({ones, est, group, interaction}, actual);
    double sse_equal_slopes = residual_sum_of_squares({ones, est, group}, actual);
    double sse_single_line = residual_sum_of_squares({ones, est}, actual);

    const double df_full = static_cast<double>(n) - 4.0;
    const double df_eq = static_cast<double>(n) - 3.0;
    if (df_full < 1.0)
        throw std::invalid_argument("too few observations for the interaction model");
    if (sse_full <= 0.0)
        throw std::invalid_argument("degenerate regression: zero residual variance");

    AncovaResult r;
    r.slope_f = std::max(0.0, (sse_equal_slopes - sse_full)) / (sse_full / df_full);
    r.slope_p = upper_tail_p(r.slope_f, 1.0, df_full);
    r.intercept_f = std::max(0.0, (sse_single_line - sse_equal_slopes)) / (sse_equal_slopes / df_eq);
    r.intercept_p = upper_tail_p(r.intercept_f, 1.0, df_eq);
    r.equivalent = r.slope_p >= alpha && r.intercept_p >= alpha;
    return r;
}

ModelPredictions parse_predictions_csv(std::string_view text) {
    auto parse_double = [](std::string_view field, double& out) {
        const char* begin = field.data();
        const char* end = begin + field.size();
        while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
        while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
        auto [ptr, ec] = std::from_chars(begin, end, out);
        return ec == std::errc{} && ptr == end && begin != end;
    };

    ModelPredictions m;
    bool first = true;
    for (const std::string& line : split_lines(text)) {
        if (line.empty()) continue;
        std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("prediction line lacks a comma: '" + line + "'");
        double e = 0.0, a = 0.0;
        bool ok = parse_double(std::string_view(line).substr(0, comma), e) &&
                  parse_double(std::string_view(line).substr(comma + 1), a);
        if (!ok) {
            if (first) {
                first = false; // header row
                continue;
            }
            throw std::invalid_argument("non-numeric prediction line: '" + line + "'");
        }
        first = false;
        m.pairs.emplace_back(e, a);
    }
    return m;
}

} // namespace provdelta
