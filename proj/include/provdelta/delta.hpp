#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace provdelta {

enum class DeltaKind { root, dataMismatch, serviceMismatch, versionMismatch, fragmentPair };

std::string to_string(DeltaKind k);

/// One mismatch record. Which fields are meaningful depends on kind:
///   dataMismatch     left_id/right_id name the two data nodes
///   serviceMismatch  left_id/right_id name the activities, labels their services
///   versionMismatch  service is the shared id, labels are the version tokens
///   fragmentPair     fragment_left/right list skipped activity ids; sync_service
///                    is set when the search re-synchronised
struct DeltaNode {
    DeltaKind kind = DeltaKind::root;
    std::string left_id;
    std::string right_id;
    std::string left_label;
    std::string right_label;
    std::string service;
    std::vector<std::string> fragment_left;
    std::vector<std::string> fragment_right;
    std::optional<std::string> sync_service;
};

/// The delta: a DAG of mismatch records. Branches join only through
/// fragment pairs that share a sync-service annotation.
class DeltaGraph {
public:
    using NodeId = std::uint32_t;

    bool empty() const { return nodes_.empty(); }
    std::size_t size() const { return nodes_.size(); }

    NodeId add_node(DeltaNode n, std::optional<NodeId> parent);
    void add_edge(NodeId parent, NodeId child);

    /// Copies every node and edge of src into this graph; src's roots become
    /// children of attach_at (or roots here). Returns the remapped src roots.
    std::vector<NodeId> import_graph(const DeltaGraph& src, std::optional<NodeId> attach_at);

    const DeltaNode& node(NodeId id) const { return nodes_.at(id); }
    const std::vector<NodeId>& children(NodeId id) const { return children_.at(id); }
    const std::vector<NodeId>& roots() const { return roots_; }

    std::map<DeltaKind, std::size_t> counts_by_kind() const;

    /// Number of parent->child edges, joins included.
    std::size_t edge_count() const;

    /// True when the graph is acyclic and every node is reachable from a root.
    bool well_formed() const;

private:
    std::vector<DeltaNode> nodes_;
    std::vector<std::vector<NodeId>> children_;
    std::vector<NodeId> roots_;
};

/// Remembers which sync services already anchor a fragment pair, so later
/// branches reaching the same sync point join instead of re-traversing.
class SyncRegistry {
public:
    /// Records an insertion of a fragment pair annotated with service.
    /// Returns the previously registered node when one exists (a join),
    /// nothing on first registration.
    std::optional<DeltaGraph::NodeId> record(const std::string& service, DeltaGraph::NodeId node);

    bool contains(const std::string& service) const;
    std::optional<DeltaGraph::NodeId> node_for(const std::string& service) const;
    int insertions(const std::string& service) const;

private:
    struct Entry {
        DeltaGraph::NodeId node = 0;
        int insertions = 0;
    };
    std::map<std::string, Entry> entries_;
};

/// Appends element under attach_at (or as a new root). A fragment pair whose
/// sync service is already registered becomes a join: the subtree recorded
/// above the registered pair is shared by edge, not copied. Returns the id
/// of the inserted node.
DeltaGraph::NodeId add_delta(DeltaGraph& delta, DeltaNode element,
                             std::optional<DeltaGraph::NodeId> attach_at,
                             SyncRegistry& registry);

/// True when last_sync had already been registered before the most recent
/// insertion, i.e. the branch just joined an existing sync point.
bool is_delta_stop(const DeltaGraph& delta, const SyncRegistry& registry,
                   const std::string& last_sync);

/// Combines per-branch deltas: empties are dropped; zero remaining gives an
/// empty graph, one is returned unchanged, several become siblings under a
/// fresh root node.
DeltaGraph merge_deltas(const std::vector<DeltaGraph>& deltas);

} // namespace provdelta
