#include "provdelta/pdiff.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>

namespace provdelta {

ActivityDiff a_diff(const ActivityNode& left, const ActivityNode& right) {
    if (left.service_id != right.service_id) return ActivityDiff::serviceMismatch;
    if (compare_versions(left.service_version, right.service_version) != 0)
        return ActivityDiff::versionMismatch;
    return ActivityDiff::same;
}

namespace {

struct BfsEntry {
    const ActivityNode* activity;
    std::size_t depth;
};

// Breadth-first walk of the activities above `from`, following used edges to
// input data and genBy edges to their producers. Siblings expand in
// input-port order; revisits are dropped.
std::vector<BfsEntry> bfs_upward(const ProvenanceTrace& trace, const ActivityNode& from) {
    std::vector<BfsEntry> order;
    std::set<std::string> seen{from.id};
    order.push_back({&from, 0});
    for (std::size_t i = 0; i < order.size(); ++i) {
        const ActivityNode& a = *order[i].activity;
        for (const std::string& port : a.input_ports) {
            const DataNode& d = trace.up_s(a, port);
            const ActivityNode* producer = trace.up_d(d);
            if (producer && seen.insert(producer->id).second)
                order.push_back({producer, order[i].depth + 1});
        }
    }
    return order;
}

std::vector<std::string> fragment_below(const std::vector<BfsEntry>& bfs, std::size_t depth) {
    std::vector<std::string> ids;
    for (const BfsEntry& e : bfs)
        if (e.depth < depth) ids.push_back(e.activity->id);
    return ids;
}

std::vector<std::string> fragment_all(const std::vector<BfsEntry>& bfs) {
    std::vector<std::string> ids;
    ids.reserve(bfs.size());
    for (const BfsEntry& e : bfs) ids.push_back(e.activity->id);
    return ids;
}

struct SyncCandidate {
    const ActivityNode* left = nullptr;
    const ActivityNode* right = nullptr;
    std::size_t depth_left = 0;
    std::size_t depth_right = 0;
    std::size_t combined() const { return depth_left + depth_right; }
};

// One direction of the search: step candidates upward on the "candidate"
// side in BFS order, scanning the whole opposite BFS (its root included) for
// a service-equal activity. Stops at the first candidate with any match.
std::optional<SyncCandidate> directional_search(const std::vector<BfsEntry>& candidates,
                                                const std::vector<BfsEntry>& opposite,
                                                bool candidates_are_left, PdiffStats* stats) {
    for (const BfsEntry& cand : candidates) {
        if (cand.depth == 0) continue;
        for (const BfsEntry& target : opposite) {
            if (stats) ++stats->findnode_comparisons;
            if (cand.activity->service_id == target.activity->service_id) {
                SyncCandidate sc;
                if (candidates_are_left) {
                    sc.left = cand.activity;
                    sc.right = target.activity;
                    sc.depth_left = cand.depth;
                    sc.depth_right = target.depth;
                } else {
                    sc.left = target.activity;
                    sc.right = cand.activity;
                    sc.depth_left = target.depth;
                    sc.depth_right = cand.depth;
                }
                return sc;
            }
        }
    }
    return std::nullopt;
}

} // namespace

std::vector<const ActivityNode*> upward_activities(const ProvenanceTrace& trace,
                                                   const ActivityNode& from) {
    std::vector<const ActivityNode*> out;
    for (const BfsEntry& e : bfs_upward(trace, from)) out.push_back(e.activity);
    return out;
}

std::vector<const ActivityNode*> upward_activities_from_data(const ProvenanceTrace& trace,
                                                             const DataNode& from) {
    const ActivityNode* producer = trace.up_d(from);
    if (!producer) return {};
    return upward_activities(trace, *producer);
}

FindNodeResult find_node(const ProvenanceTrace& trace_left, const ProvenanceTrace& trace_right,
                         const ActivityNode& left, const ActivityNode& right, PdiffStats* stats) {
    std::vector<BfsEntry> bfs_left = bfs_upward(trace_left, left);
    std::vector<BfsEntry> bfs_right = bfs_upward(trace_right, right);

    std::optional<SyncCandidate> from_left =
        directional_search(bfs_left, bfs_right, /*candidates_are_left=*/true, stats);
    std::optional<SyncCandidate> from_right =
        directional_search(bfs_right, bfs_left, /*candidates_are_left=*/false, stats);

    std::optional<SyncCandidate> best;
    for (const auto& cand : {from_left, from_right}) {
        if (!cand) continue;
        if (!best) {
            best = cand;
            continue;
        }
        auto key = [](const SyncCandidate& c) {
            return std::tuple(c.combined(), c.depth_left, c.left->service_id);
        };
        if (key(*cand) < key(*best)) best = cand;
    }

    FindNodeResult result;
    if (!best) {
        result.fragment_left = fragment_all(bfs_left);
        result.fragment_right = fragment_all(bfs_right);
        return result;
    }
    result.match_left = best->left;
    result.match_right = best->right;
    result.fragment_left = fragment_below(bfs_left, best->depth_left);
    result.fragment_right = fragment_below(bfs_right, best->depth_right);
    return result;
}

namespace {

DeltaNode make_data_mismatch(const DataNode& l, const DataNode& r) {
    DeltaNode n;
    n.kind = DeltaKind::dataMismatch;
    n.left_id = l.id;
    n.right_id = r.id;
    return n;
}

DeltaNode make_service_mismatch(const ActivityNode& l, const ActivityNode& r) {
    DeltaNode n;
    n.kind = DeltaKind::serviceMismatch;
    n.left_id = l.id;
    n.right_id = r.id;
    n.left_label = l.service_id;
    n.right_label = r.service_id;
    return n;
}

DeltaNode make_version_mismatch(const ActivityNode& l, const ActivityNode& r) {
    DeltaNode n;
    n.kind = DeltaKind::versionMismatch;
    n.left_id = l.id;
    n.right_id = r.id;
    n.service = l.service_id;
    n.left_label = l.service_version;
    n.right_label = r.service_version;
    return n;
}

} // namespace

DeltaGraph p_diff(const ProvenanceTrace& trace_left, const ProvenanceTrace& trace_right,
                  const DataNode& start_left, const DataNode& start_right,
                  const ComparatorRegistry& registry, const ContentLoader& loader,
                  PdiffStats* stats, const ComparatorOptions& options) {
    auto is_output = [](const ProvenanceTrace& t, const DataNode& d) {
        auto outputs = t.workflow_outputs();
        return std::any_of(outputs.begin(), outputs.end(),
                           [&](const DataNode* o) { return o->id == d.id; });
    };
    if (!trace_left.find_data(start_left.id) || !is_output(trace_left, start_left))
        throw std::invalid_argument("start node '" + start_left.id +
                                    "' is not a workflow output of the left trace");
    if (!trace_right.find_data(start_right.id) || !is_output(trace_right, start_right))
        throw std::invalid_argument("start node '" + start_right.id +
                                    "' is not a workflow output of the right trace");

    DeltaGraph delta;
    SyncRegistry sync_registry;
    PdiffStats local_stats;
    if (!stats) stats = &local_stats;

    // One frame per pending aligned data pair. `live` tracks whether the
    // previously compared data pair on this branch diverged; a data mismatch
    // sitting above matching data did not contribute to the observed
    // divergence and is not recorded (the d1/d1' situation), while activity
    // mismatches are always worth reporting.
    struct Frame {
        const DataNode* left;
        const DataNode* right;
        std::optional<DeltaGraph::NodeId> parent;
        bool live;
    };
    std::vector<Frame> stack{{&start_left, &start_right, std::nullopt, true}};
    std::set<std::pair<std::string, std::string>> visited_data;
    std::set<std::pair<std::string, std::string>> visited_activities;

    auto push_ports = [&](const ActivityNode& al, const ActivityNode& ar,
                          std::optional<DeltaGraph::NodeId> parent, bool live) {
        // Reverse order so the explicit stack pops ports lexicographically.
        std::vector<std::string> ports;
        std::set_intersection(al.input_ports.begin(), al.input_ports.end(),
                              ar.input_ports.begin(), ar.input_ports.end(),
                              std::back_inserter(ports));
        for (auto it = ports.rbegin(); it != ports.rend(); ++it)
            stack.push_back(
                {&trace_left.up_s(al, *it), &trace_right.up_s(ar, *it), parent, live});
    };

    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        if (!visited_data.insert({f.left->id, f.right->id}).second) continue;

        ++stats->aligned_steps;
        bool mismatch = d_diff(*f.left, *f.right, registry, loader, options);
        std::optional<DeltaGraph::NodeId> parent = f.parent;
        if (mismatch && f.live)
            parent = add_delta(delta, make_data_mismatch(*f.left, *f.right), parent,
                               sync_registry);
        const bool live = mismatch;

        const ActivityNode* al = trace_left.up_d(*f.left);
        const ActivityNode* ar = trace_right.up_d(*f.right);
        if (!al && !ar) continue;
        if (!al || !ar) {
            // Only one side has history above this point; report the surviving
            // side's remaining structure as a one-sided fragment.
            DeltaNode frag;
            frag.kind = DeltaKind::fragmentPair;
            const ProvenanceTrace& t = al ? trace_left : trace_right;
            auto ids = fragment_all(bfs_upward(t, al ? *al : *ar));
            (al ? frag.fragment_left : frag.fragment_right) = std::move(ids);
            frag.left_id = f.left->id;
            frag.right_id = f.right->id;
            add_delta(delta, std::move(frag), parent, sync_registry);
            continue;
        }
        if (!visited_activities.insert({al->id, ar->id}).second) continue;

        ++stats->aligned_steps;
        ActivityDiff ad = a_diff(*al, *ar);
        const bool ports_equal = al->input_ports == ar->input_ports;
        if (ad == ActivityDiff::same && ports_equal) {
            push_ports(*al, *ar, parent, live);
            continue;
        }
        if (ad == ActivityDiff::versionMismatch && ports_equal) {
            parent = add_delta(delta, make_version_mismatch(*al, *ar), parent, sync_registry);
            push_ports(*al, *ar, parent, live);
            continue;
        }

        // Service mismatch (a shared service with divergent port sets is
        // treated the same way): record it, then try to re-synchronise.
        parent = add_delta(delta, make_service_mismatch(*al, *ar), parent, sync_registry);
        ++stats->findnode_calls;
        FindNodeResult found = find_node(trace_left, trace_right, *al, *ar, stats);

        DeltaNode frag;
        frag.kind = DeltaKind::fragmentPair;
        frag.left_id = al->id;
        frag.right_id = ar->id;
        frag.fragment_left = found.fragment_left;
        frag.fragment_right = found.fragment_right;
        if (!found.match_left) {
            add_delta(delta, std::move(frag), parent, sync_registry);
            continue; // no sync point anywhere above: this branch ends here
        }
        frag.sync_service = found.match_left->service_id;
        frag.left_label = found.match_left->id;
        frag.right_label = found.match_right->id;
        const std::string sync = *frag.sync_service;
        parent = add_delta(delta, std::move(frag), parent, sync_registry);
        if (is_delta_stop(delta, sync_registry, sync)) continue;

        const ActivityNode& ml = *found.match_left;
        const ActivityNode& mr = *found.match_right;
        if (!visited_activities.insert({ml.id, mr.id}).second) continue;
        if (compare_versions(ml.service_version, mr.service_version) != 0)
            parent = add_delta(delta, make_version_mismatch(ml, mr), parent, sync_registry);
        push_ports(ml, mr, parent, /*live=*/true);
    }

    return delta;
}

std::set<MismatchRecord> mismatch_records(const DeltaGraph& delta) {
    std::set<MismatchRecord> records;
    for (DeltaGraph::NodeId i = 0; i < delta.size(); ++i) {
        const DeltaNode& n = delta.node(i);
        switch (n.kind) {
            case DeltaKind::dataMismatch:
                records.insert({MismatchRecord::Kind::data, n.left_id, n.right_id});
                break;
            case DeltaKind::versionMismatch:
                records.insert({MismatchRecord::Kind::version, n.left_id, n.right_id});
                break;
            case DeltaKind::fragmentPair:
                for (const auto& id : n.fragment_left)
                    records.insert({MismatchRecord::Kind::skipLeft, id, ""});
                for (const auto& id : n.fragment_right)
                    records.insert({MismatchRecord::Kind::skipRight, "", id});
                break;
            default:
                break;
        }
    }
    return records;
}

} // namespace provdelta
