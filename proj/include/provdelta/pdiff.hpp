#pragma once

#include "provdelta/delta.hpp"
#include "provdelta/registry.hpp"
#include "provdelta/trace.hpp"

#include <compare>
#include <cstddef>
#include <set>
#include <vector>

namespace provdelta {

enum class ActivityDiff { same, versionMismatch, serviceMismatch };

/// Compares two activities by service identifier, then version.
ActivityDiff a_diff(const ActivityNode& left, const ActivityNode& right);

/// Upward activity closure: from (inclusive) plus every activity reachable by
/// alternating used/genBy steps, in breadth-first order with siblings ordered
/// by input-port name.
std::vector<const ActivityNode*> upward_activities(const ProvenanceTrace& trace,
                                                   const ActivityNode& from);

/// Upward activity closure seen from a data node (its producer's closure).
std::vector<const ActivityNode*> upward_activities_from_data(const ProvenanceTrace& trace,
                                                             const DataNode& from);

/// Counters for the complexity guarantees: aligned lock-step comparisons and
/// activity-pair comparisons spent searching for sync points.
struct PdiffStats {
    std::size_t aligned_steps = 0;
    std::size_t findnode_comparisons = 0;
    std::size_t findnode_calls = 0;

    std::size_t total_steps() const { return aligned_steps + findnode_comparisons; }
};

/// Result of the bidirectional re-synchronisation search. Either both match
/// references are set, or neither is and the fragments cover the entire
/// upward closures.
struct FindNodeResult {
    std::vector<std::string> fragment_left;  // GL: activity ids skipped below the match
    std::vector<std::string> fragment_right; // GR
    const ActivityNode* match_left = nullptr;
    const ActivityNode* match_right = nullptr;
};

/// Searches both traces upward from a mismatching activity pair for the
/// closest pair of service-equal activities, preferring the lowest combined
/// depth. Corresponds to the search triggered by a service mismatch.
FindNodeResult find_node(const ProvenanceTrace& trace_left, const ProvenanceTrace& trace_right,
                         const ActivityNode& left, const ActivityNode& right,
                         PdiffStats* stats = nullptr);

/// Lock-step divergence detection between two traces, walking upward from one
/// output of each. Produces the delta graph of data, version, service and
/// structural mismatches; empty when no divergence is found.
///
/// start_left/start_right must be workflow outputs of their traces; the
/// traces themselves are expected to be valid (see ProvenanceTrace::validate).
DeltaGraph p_diff(const ProvenanceTrace& trace_left, const ProvenanceTrace& trace_right,
                  const DataNode& start_left, const DataNode& start_right,
                  const ComparatorRegistry& registry,
                  const ContentLoader& loader = inline_content_loader(),
                  PdiffStats* stats = nullptr, const ComparatorOptions& options = {});

/// Flat view of a delta used to compare against ground truth: aligned data
/// pairs found unequal, aligned same-service pairs with differing versions,
/// and activities skipped on either side.
struct MismatchRecord {
    enum class Kind { data, version, skipLeft, skipRight };
    Kind kind = Kind::data;
    std::string left;  // empty for skipRight
    std::string right; // empty for skipLeft

    auto operator<=>(const MismatchRecord&) const = default;
};

std::set<MismatchRecord> mismatch_records(const DeltaGraph& delta);

} // namespace provdelta
