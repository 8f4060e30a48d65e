#pragma once

#include "provdelta/md5.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace provdelta {

struct TraceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class PortDirection { input, output };

struct Port {
    std::string name;
    PortDirection direction = PortDirection::input;
};

enum class DataKind { persisted, transient_ };

/// A data item observed during one workflow run. Persisted items keep their
/// bytes (reachable through content_ref) and a MIME type; transient items
/// keep only the digest.
struct DataNode {
    std::string id;
    DataKind kind = DataKind::transient_;
    Md5Digest content_hash;
    std::optional<std::string> mime_type;
    std::optional<std::string> content_ref;
};

/// One invocation of a service. Activities of the same service are expected
/// to expose identical port sets.
struct ActivityNode {
    std::string id;
    std::string service_id;
    std::string service_version;
    std::vector<std::string> input_ports;  // sorted, unique
    std::vector<std::string> output_ports; // sorted, unique
};

struct UsedEdge {
    std::string activity_id;
    std::string port;
    std::string data_id;
};

struct GenByEdge {
    std::string data_id;
    std::string activity_id;
    std::string port;
};

struct Violation {
    std::string rule;    // short identifier of the violated invariant
    std::string message; // human-readable, names the offending ids
};

/// Immutable bipartite DAG of data and activity nodes connected by ported
/// used/genBy edges. Build one with TraceBuilder; reads are thread-safe.
class ProvenanceTrace {
public:
    const std::string& run_id() const { return run_id_; }
    const std::vector<DataNode>& data_nodes() const { return data_nodes_; }
    const std::vector<ActivityNode>& activity_nodes() const { return activity_nodes_; }
    const std::vector<UsedEdge>& used() const { return used_; }
    const std::vector<GenByEdge>& gen_by() const { return gen_by_; }

    std::size_t node_count() const { return data_nodes_.size() + activity_nodes_.size(); }

    const DataNode* find_data(std::string_view id) const;
    const ActivityNode* find_activity(std::string_view id) const;

    /// Producer of d, or nullptr when d is a workflow input. Throws for a
    /// transient node with no producer: that is an invalid starting point.
    const ActivityNode* up_d(const DataNode& d) const;

    /// Data consumed by a on input port p. Throws when no used edge matches.
    const DataNode& up_s(const ActivityNode& a, std::string_view port) const;

    /// Data items with no generating activity (tr.I).
    std::vector<const DataNode*> workflow_inputs() const;

    /// Data items never consumed by an activity (tr.O).
    std::vector<const DataNode*> workflow_outputs() const;

    /// Consumers of d together with the ports they read it from.
    std::vector<std::pair<const ActivityNode*, std::string>> consumers(const DataNode& d) const;

    /// Empty when all structural invariants hold.
    std::vector<Violation> validate() const;

private:
    friend class TraceBuilder;

    std::string run_id_;
    std::vector<DataNode> data_nodes_;
    std::vector<ActivityNode> activity_nodes_;
    std::vector<UsedEdge> used_;
    std::vector<GenByEdge> gen_by_;

    // id -> index lookups and adjacency, built once.
    std::map<std::string, std::size_t, std::less<>> data_index_;
    std::map<std::string, std::size_t, std::less<>> activity_index_;
    std::map<std::string, std::size_t, std::less<>> producer_of_;           // data id -> genBy index
    std::map<std::pair<std::string, std::string>, std::size_t> used_by_port_; // (activity, port) -> used index
    std::multimap<std::string, std::size_t> uses_of_data_;                  // data id -> used indices
};

/// Accumulates nodes and edges, then freezes them into a ProvenanceTrace.
/// build() indexes the trace but does not reject invariant violations;
/// call validate() (or use build_validated()) for that.
class TraceBuilder {
public:
    explicit TraceBuilder(std::string run_id);

    TraceBuilder& add_data(DataNode n);
    TraceBuilder& add_activity(ActivityNode n);
    TraceBuilder& add_used(std::string activity_id, std::string port, std::string data_id);
    TraceBuilder& add_gen_by(std::string data_id, std::string activity_id, std::string port);

    ProvenanceTrace build();

    /// build() + validate(); throws TraceError listing the violations.
    ProvenanceTrace build_validated();

private:
    ProvenanceTrace trace_;
};

/// Total order on version tokens: numeric when every dotted component of
/// both tokens parses as an integer, lexicographic per component otherwise.
/// Returns <0, 0, >0.
int compare_versions(std::string_view a, std::string_view b);

} // namespace provdelta
