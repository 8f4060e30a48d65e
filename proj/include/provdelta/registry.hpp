#pragma once

#include "provdelta/text_diff.hpp"
#include "provdelta/trace.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>

namespace provdelta {

/// String-keyed options handed to comparator plugins (e.g. "ignoreCase",
/// "alpha"). Unknown keys are ignored by the built-in comparators.
using ComparatorOptions = std::map<std::string, std::string>;

using ComparatorFn =
    std::function<SimilarityScore(std::string_view, std::string_view, const ComparatorOptions&)>;

/// MIME-type-keyed table of data comparators plus the mismatch threshold.
/// Lookups for unregistered types fall back to byte equality.
class ComparatorRegistry {
public:
    void register_comparator(std::string mime_type, ComparatorFn fn);

    bool has(const std::string& mime_type) const;
    const ComparatorFn& lookup(const std::string& mime_type) const;

    double threshold() const { return threshold_; }
    void set_threshold(double t);

private:
    std::map<std::string, ComparatorFn> table_;
    double threshold_ = 0.999;
};

/// Registry with the built-in comparators: text/plain and text/csv (line
/// similarity), text/xml and application/xml (canonical structural
/// similarity), application/x-model-predictions (regression-line
/// equivalence, binary score).
ComparatorRegistry default_registry();

/// Resolves a contentRef to bytes. Throws on unresolvable references.
using ContentLoader = std::function<std::string(const std::string& ref)>;

/// Understands only "inline:<bytes>" references.
ContentLoader inline_content_loader();

/// Understands "inline:<bytes>" and "file:<path>", the latter resolved
/// against base when relative.
ContentLoader file_content_loader(std::filesystem::path base);

/// Type-aware boolean mismatch test between two data nodes. Transient pairs
/// compare digests; persisted pairs with loadable content compare through
/// the registry (mismatch when similarity < threshold); anything else falls
/// back to digest comparison. Comparator options may tune the comparison.
bool d_diff(const DataNode& left, const DataNode& right, const ComparatorRegistry& registry,
            const ContentLoader& loader, const ComparatorOptions& options = {});

} // namespace provdelta
