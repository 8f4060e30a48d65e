#include "provdelta/registry.hpp"

#include "provdelta/ancova.hpp"
#include "provdelta/xml.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace provdelta {

namespace {

bool option_flag(const ComparatorOptions& opts, const std::string& key) {
    auto it = opts.find(key);
    return it != opts.end() && (it->second == "true" || it->second == "1");
}

double option_double(const ComparatorOptions& opts, const std::string& key, double fallback) {
    auto it = opts.find(key);
    if (it == opts.end()) return fallback;
    return std::stod(it->second);
}

SimilarityScore byte_equality(std::string_view a, std::string_view b, const ComparatorOptions&) {
    return SimilarityScore(a == b ? 1.0 : 0.0);
}

} // namespace

void ComparatorRegistry::register_comparator(std::string mime_type, ComparatorFn fn) {
    table_[std::move(mime_type)] = std::move(fn);
}

bool ComparatorRegistry::has(const std::string& mime_type) const {
    return table_.contains(mime_type);
}

const ComparatorFn& ComparatorRegistry::lookup(const std::string& mime_type) const {
    static const ComparatorFn fallback = byte_equality;
    auto it = table_.find(mime_type);
    return it == table_.end() ? fallback : it->second;
}

void ComparatorRegistry::set_threshold(double t) {
    if (!(t >= 0.0 && t <= 1.0))
        throw std::invalid_argument("threshold must lie in [0,1]");
    threshold_ = t;
}

ComparatorRegistry default_registry() {
    ComparatorRegistry r;
    ComparatorFn text = [](std::string_view a, std::string_view b, const ComparatorOptions& o) {
        TextDiffOptions opts;
        opts.ignore_whitespace = option_flag(o, "ignoreWhitespace");
        opts.ignore_case = option_flag(o, "ignoreCase");
        return text_diff(a, b, opts);
    };
    r.register_comparator("text/plain", text);
    r.register_comparator("text/csv", text);

    ComparatorFn xml_cmp = [](std::string_view a, std::string_view b, const ComparatorOptions&) {
        return xml::xml_diff(a, b);
    };
    r.register_comparator("text/xml", xml_cmp);
    r.register_comparator("application/xml", xml_cmp);

    ComparatorFn model = [](std::string_view a, std::string_view b, const ComparatorOptions& o) {
        double alpha = option_double(o, "alpha", 0.05);
        AncovaResult res =
            ancova_model_diff(parse_predictions_csv(a), parse_predictions_csv(b), alpha);
        return SimilarityScore(res.equivalent ? 1.0 : 0.0);
    };
    r.register_comparator("application/x-model-predictions", model);
    return r;
}

ContentLoader inline_content_loader() {
    return [](const std::string& ref) -> std::string {
        if (ref.rfind("inline:", 0) == 0) return ref.substr(7);
        throw std::runtime_error("unresolvable content reference '" + ref + "'");
    };
}

ContentLoader file_content_loader(std::filesystem::path base) {
    return [base = std::move(base)](const std::string& ref) -> std::string {
        if (ref.rfind("inline:", 0) == 0) return ref.substr(7);
        if (ref.rfind("file:", 0) == 0) {
            std::filesystem::path p(ref.substr(5));
            if (p.is_relative()) p = base / p;
            std::ifstream in(p, std::ios::binary);
            if (!in) throw std::runtime_error("cannot open content file '" + p.string() + "'");
            std::ostringstream buf;
            buf << in.rdbuf();
            return buf.str();
        }
        throw std::runtime_error("unresolvable content reference '" + ref + "'");
    };
}

bool d_diff(const DataNode& left, const DataNode& right, const ComparatorRegistry& registry,
            const ContentLoader& loader, const ComparatorOptions& options) {
    const bool both_persisted =
        left.kind == DataKind::persisted && right.kind == DataKind::persisted;
    if (both_persisted && left.content_ref && right.content_ref) {
        std::string bytes_l = loader(*left.content_ref);
        std::string bytes_r = loader(*right.content_ref);
        const std::string mime = left.mime_type.value_or("");
        SimilarityScore s = registry.lookup(mime)(bytes_l, bytes_r, options);
        return s.value < registry.threshold();
    }
    // Transient pairs, mixed kinds, and persisted data whose bytes are out of
    // reach all reduce to the digest test.
    return hash_diff(left.content_hash, right.content_hash);
}

} // namespace provdelta
