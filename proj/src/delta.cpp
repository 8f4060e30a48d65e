#include "provdelta/delta.hpp"

#include <algorithm>

namespace provdelta {

std::string to_string(DeltaKind k) {
    switch (k) {
        case DeltaKind::root: return "root";
        case DeltaKind::dataMismatch: return "dataMismatch";
        case DeltaKind::serviceMismatch: return "serviceMismatch";
        case DeltaKind::versionMismatch: return "versionMismatch";
        case DeltaKind::fragmentPair: return "fragmentPair";
    }
    return "?";
}

DeltaGraph::NodeId DeltaGraph::add_node(DeltaNode n, std::optional<NodeId> parent) {
    NodeId id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(std::move(n));
    children_.emplace_back();
    if (parent) {
        children_.at(*parent).push_back(id);
    } else {
        roots_.push_back(id);
    }
    return id;
}

void DeltaGraph::add_edge(NodeId parent, NodeId child) {
    (void)nodes_.at(child);
    children_.at(parent).push_back(child);
}

std::vector<DeltaGraph::NodeId> DeltaGraph::import_graph(const DeltaGraph& src,
                                                         std::optional<NodeId> attach_at) {
    const NodeId base = static_cast<NodeId>(nodes_.size());
    std::vector<char> is_root(src.size(), 0);
    for (NodeId r : src.roots_) is_root[r] = 1;

    for (NodeId i = 0; i < src.size(); ++i) {
        nodes_.push_back(src.nodes_[i]);
        children_.emplace_back();
        if (is_root[i]) {
            if (attach_at)
                children_.at(*attach_at).push_back(base + i);
            else
                roots_.push_back(base + i);
        }
    }
    for (NodeId i = 0; i < src.size(); ++i)
        for (NodeId c : src.children_[i]) children_[base + i].push_back(base + c);

    std::vector<NodeId> mapped_roots;
    mapped_roots.reserve(src.roots_.size());
    for (NodeId r : src.roots_) mapped_roots.push_back(base + r);
    return mapped_roots;
}

std::map<DeltaKind, std::size_t> DeltaGraph::counts_by_kind() const {
    std::map<DeltaKind, std::size_t> counts;
    for (const auto& n : nodes_) ++counts[n.kind];
    return counts;
}

std::size_t DeltaGraph::edge_count() const {
    std::size_t n = 0;
    for (const auto& c : children_) n += c.size();
    return n;
}

bool DeltaGraph::well_formed() const {
    // Reachability from the roots.
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<NodeId> stack(roots_.begin(), roots_.end());
    while (!stack.empty()) {
        NodeId id = stack.back();
        stack.pop_back();
        if (seen[id]) continue;
        seen[id] = 1;
        for (NodeId c : children_[id]) stack.push_back(c);
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) return false;

    // Acyclicity via DFS coloring.
    std::vector<int> state(nodes_.size(), 0);
    for (NodeId start = 0; start < nodes_.size(); ++start) {
        if (state[start] != 0) continue;
        std::vector<std::pair<NodeId, bool>> dfs{{start, false}};
        while (!dfs.empty()) {
            auto [id, closing] = dfs.back();
            dfs.pop_back();
            if (closing) {
                state[id] = 2;
                continue;
            }
            if (state[id] == 2) continue;
            state[id] = 1;
            dfs.push_back({id, true});
            for (NodeId c : children_[id]) {
                if (state[c] == 1) return false;
                if (state[c] == 0) dfs.push_back({c, false});
            }
        }
    }
    return true;
}

std::optional<DeltaGraph::NodeId> SyncRegistry::record(const std::string& service,
                                                       DeltaGraph::NodeId node) {
    auto [it, fresh] = entries_.try_emplace(service, Entry{node, 1});
    if (fresh) return std::nullopt;
    ++it->second.insertions;
    return it->second.node;
}

bool SyncRegistry::contains(const std::string& service) const {
    return entries_.contains(service);
}

std::optional<DeltaGraph::NodeId> SyncRegistry::node_for(const std::string& service) const {
    auto it = entries_.find(service);
    if (it == entries_.end()) return std::nullopt;
    return it->second.node;
}

int SyncRegistry::insertions(const std::string& service) const {
    auto it = entries_.find(service);
    return it == entries_.end() ? 0 : it->second.insertions;
}

DeltaGraph::NodeId add_delta(DeltaGraph& delta, DeltaNode element,
                             std::optional<DeltaGraph::NodeId> attach_at,
                             SyncRegistry& registry) {
    const bool synced = element.kind == DeltaKind::fragmentPair && element.sync_service;
    std::string sync = synced ? *element.sync_service : std::string{};
    DeltaGraph::NodeId id = delta.add_node(std::move(element), attach_at);
    if (synced) {
        if (auto prior = registry.record(sync, id)) {
            // Share everything already recorded above the first fragment pair
            // for this sync point instead of duplicating it.
            for (DeltaGraph::NodeId child : delta.children(*prior)) delta.add_edge(id, child);
        }
    }
    return id;
}

bool is_delta_stop(const DeltaGraph&, const SyncRegistry& registry, const std::string& last_sync) {
    return registry.insertions(last_sync) >= 2;
}

DeltaGraph merge_deltas(const std::vector<DeltaGraph>& deltas) {
    std::vector<const DeltaGraph*> survivors;
    for (const auto& d : deltas)
        if (!d.empty()) survivors.push_back(&d);
    if (survivors.empty()) return DeltaGraph{};
    if (survivors.size() == 1) return *survivors.front();

    DeltaGraph merged;
    DeltaGraph::NodeId root = merged.add_node(DeltaNode{.kind = DeltaKind::root}, std::nullopt);
    for (const DeltaGraph* src : survivors) merged.import_graph(*src, root);
    return merged;
}

} // namespace provdelta
