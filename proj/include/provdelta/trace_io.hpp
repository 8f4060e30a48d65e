#pragma once

#include "provdelta/delta.hpp"
#include "provdelta/trace.hpp"

#include <stdexcept>
#include <string>
#include <string_view>

namespace provdelta {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kTraceFormat = "provdelta-trace/1";

/// Parses a provdelta-trace/1 document and validates it. Throws ParseError
/// for malformed input and TraceError when the trace violates an invariant.
ProvenanceTrace parse_trace(std::string_view text);

/// Canonical serialization: nodes and edges are emitted in sorted order, so
/// structurally equal traces produce identical bytes.
std::string serialize_trace(const ProvenanceTrace& trace);

/// GraphML 1.0 rendering of a delta graph for external visualisation.
/// Attribute keys: kind, left, right, leftFragment, rightFragment, syncService.
std::string export_delta_graphml(const DeltaGraph& delta);

} // namespace provdelta
