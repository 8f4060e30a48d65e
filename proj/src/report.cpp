#include "provdelta/report.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <optional>
#include <sstream>

namespace provdelta {

using ordered_json = nlohmann::ordered_json;

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::identical: return "identical";
        case Verdict::divergent: return "divergent";
        case Verdict::noSyncPoint: return "noSyncPoint";
    }
    return "?";
}

namespace {

// Outputs are identified by the block and port that produced them; a data
// node that is both input and output falls back to its content hash.
std::string output_key(const ProvenanceTrace& trace, const DataNode& d) {
    for (const auto& e : trace.gen_by())
        if (e.data_id == d.id) {
            const ActivityNode* a = trace.find_activity(e.activity_id);
            return "out:" + (a ? a->service_id : "?") + ":" + e.port;
        }
    return "in:" + d.content_hash.to_hex();
}

std::vector<std::string> sorted_ids(const std::vector<const ActivityNode*>& nodes) {
    std::vector<std::string> ids;
    ids.reserve(nodes.size());
    for (const ActivityNode* a : nodes) ids.push_back(a->id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

bool covers_full_cones(const DeltaGraph& delta, const std::vector<std::string>& cone_left,
                       const std::vector<std::string>& cone_right) {
    for (DeltaGraph::NodeId i = 0; i < delta.size(); ++i) {
        const DeltaNode& n = delta.node(i);
        if (n.kind != DeltaKind::fragmentPair || n.sync_service) continue;
        std::vector<std::string> fl = n.fragment_left;
        std::vector<std::string> fr = n.fragment_right;
        std::sort(fl.begin(), fl.end());
        std::sort(fr.begin(), fr.end());
        if (fl == cone_left && fr == cone_right) return true;
    }
    return false;
}

} // namespace

DiffReport diff_traces(const ProvenanceTrace& left, const ProvenanceTrace& right,
                       const ComparatorRegistry& registry, const ContentLoader& loader,
                       const ComparatorOptions& options) {
    std::map<std::string, const DataNode*> outputs_left, outputs_right;
    for (const DataNode* d : left.workflow_outputs()) outputs_left[output_key(left, *d)] = d;
    for (const DataNode* d : right.workflow_outputs()) outputs_right[output_key(right, *d)] = d;

    DiffReport report;
    std::vector<DeltaGraph> per_output;
    bool no_sync = false;

    for (const auto& [key, dl] : outputs_left) {
        auto it = outputs_right.find(key);
        if (it == outputs_right.end()) continue;
        DeltaGraph delta =
            p_diff(left, right, *dl, *it->second, registry, loader, &report.stats, options);
        if (!delta.empty()) {
            auto cone_l = sorted_ids(upward_activities_from_data(left, *dl));
            auto cone_r = sorted_ids(upward_activities_from_data(right, *it->second));
            if (covers_full_cones(delta, cone_l, cone_r)) no_sync = true;
        }
        per_output.push_back(std::move(delta));
    }

    DeltaGraph merged = merge_deltas(per_output);

    // Outputs present on one side only become one-sided fragments at the root.
    for (const auto& [key, dl] : outputs_left) {
        if (outputs_right.contains(key)) continue;
        DeltaNode frag;
        frag.kind = DeltaKind::fragmentPair;
        frag.left_id = dl->id;
        frag.fragment_left = sorted_ids(upward_activities_from_data(left, *dl));
        merged.add_node(std::move(frag), std::nullopt);
    }
    for (const auto& [key, dr] : outputs_right) {
        if (outputs_left.contains(key)) continue;
        DeltaNode frag;
        frag.kind = DeltaKind::fragmentPair;
        frag.right_id = dr->id;
        frag.fragment_right = sorted_ids(upward_activities_from_data(right, *dr));
        merged.add_node(std::move(frag), std::nullopt);
    }

    report.delta = std::move(merged);
    report.counts = report.delta.counts_by_kind();
    if (report.delta.empty())
        report.verdict = Verdict::identical;
    else if (no_sync)
        report.verdict = Verdict::noSyncPoint;
    else
        report.verdict = Verdict::divergent;
    return report;
}

std::string render_text_report(const DiffReport& report) {
    std::ostringstream out;
    out << "verdict: " << to_string(report.verdict) << "\n";
    out << "deltaNodes: " << report.delta.size() << "\n";
    for (DeltaKind kind : {DeltaKind::dataMismatch, DeltaKind::serviceMismatch,
                           DeltaKind::versionMismatch, DeltaKind::fragmentPair}) {
        auto it = report.counts.find(kind);
        std::size_t n = it == report.counts.end() ? 0 : it->second;
        out << to_string(kind) << ": " << n << "\n";
    }
    out << "alignedSteps: " << report.stats.aligned_steps << "\n";
    out << "findNodeComparisons: " << report.stats.findnode_comparisons << "\n";
    return out.str();
}

std::string render_json_report(const DiffReport& report) {
    ordered_json doc;
    doc["verdict"] = to_string(report.verdict);
    ordered_json counts;
    for (DeltaKind kind : {DeltaKind::dataMismatch, DeltaKind::serviceMismatch,
                           DeltaKind::versionMismatch, DeltaKind::fragmentPair}) {
        auto it = report.counts.find(kind);
        counts[to_string(kind)] = it == report.counts.end() ? 0 : it->second;
    }
    doc["counts"] = std::move(counts);
    doc["stats"] = {{"alignedSteps", report.stats.aligned_steps},
                    {"findNodeComparisons", report.stats.findnode_comparisons},
                    {"findNodeCalls", report.stats.findnode_calls}};

    ordered_json nodes = ordered_json::array();
    for (DeltaGraph::NodeId i = 0; i < report.delta.size(); ++i) {
        const DeltaNode& n = report.delta.node(i);
        ordered_json j;
        j["id"] = i;
        j["kind"] = to_string(n.kind);
        if (!n.left_id.empty()) j["left"] = n.left_id;
        if (!n.right_id.empty()) j["right"] = n.right_id;
        if (!n.left_label.empty()) j["leftLabel"] = n.left_label;
        if (!n.right_label.empty()) j["rightLabel"] = n.right_label;
        if (!n.service.empty()) j["service"] = n.service;
        if (n.kind == DeltaKind::fragmentPair) {
            j["leftFragment"] = n.fragment_left;
            j["rightFragment"] = n.fragment_right;
            if (n.sync_service) j["syncService"] = *n.sync_service;
        }
        j["children"] = report.delta.children(i);
        nodes.push_back(std::move(j));
    }
    doc["delta"] = {{"roots", report.delta.roots()}, {"nodes", std::move(nodes)}};
    return doc.dump(2) + "\n";
}

} // namespace provdelta
