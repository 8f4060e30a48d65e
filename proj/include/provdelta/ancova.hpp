#pragma once

#include <string_view>
#include <utility>
#include <vector>

namespace provdelta {

/// Paired (estimated, actual) values produced by one predictive model on a
/// common evaluation set.
struct ModelPredictions {
    std::vector<std::pair<double, double>> pairs;

    /// Throws std::invalid_argument unless there are at least 3 pairs and the
    /// actual values are not all equal.
    void validate() const;
};

/// Outcome of the two-stage regression-line comparison: are the slopes of
/// actual~estimated distinguishable, and failing that, are the intercepts?
struct AncovaResult {
    double slope_f = 0.0;
    double slope_p = 1.0;
    double intercept_f = 0.0;
    double intercept_p = 1.0;
    bool equivalent = true; // slope_p >= alpha and intercept_p >= alpha
};

/// Nested-model F-tests on the pooled regression:
///   slope test      interaction term in  actual ~ estimated * group
///   intercept test  group term in        actual ~ estimated + group
/// Both tests are computed and reported; equivalence requires both p-values
/// to reach alpha. Throws std::invalid_argument on degenerate inputs
/// (invalid alpha, zero variance in either group's estimates).
AncovaResult ancova_model_diff(const ModelPredictions& left, const ModelPredictions& right,
                               double alpha = 0.05);

/// Two numeric columns "estimated,actual" per line; one optional header line.
ModelPredictions parse_predictions_csv(std::string_view text);

} // namespace provdelta
