#pragma once

#include "provdelta/delta.hpp"
#include "provdelta/pdiff.hpp"
#include "provdelta/registry.hpp"
#include "provdelta/trace.hpp"

#include <string>

namespace provdelta {

enum class Verdict { identical, divergent, noSyncPoint };

std::string to_string(Verdict v);

/// Delta plus summary: identical when the delta is empty, noSyncPoint when
/// some unmatched fragment pair spans the entire searched cones, divergent
/// otherwise.
struct DiffReport {
    DeltaGraph delta;
    std::map<DeltaKind, std::size_t> counts;
    Verdict verdict = Verdict::identical;
    PdiffStats stats;
};

/// Runs the divergence detection across whole runs. Outputs are paired by
/// their origin (producing service and port, per-run output identity); each
/// pair is diffed and the per-output deltas merged. An output present on one
/// side only becomes a one-sided fragment pair at the root.
DiffReport diff_traces(const ProvenanceTrace& left, const ProvenanceTrace& right,
                       const ComparatorRegistry& registry,
                       const ContentLoader& loader = inline_content_loader(),
                       const ComparatorOptions& options = {});

/// Plain-text rendering: verdict line, per-kind counts, step counters.
std::string render_text_report(const DiffReport& report);

/// Stable JSON rendering of the same information plus the delta nodes.
std::string render_json_report(const DiffReport& report);

} // namespace provdelta
