#include "provdelta/trace.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

namespace provdelta {

namespace {

std::vector<std::string_view> split_dotted(std::string_view v) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t dot = v.find('.', start);
        if (dot == std::string_view::npos) {
            parts.push_back(v.substr(start));
            return parts;
        }
        parts.push_back(v.substr(start, dot - start));
        start = dot + 1;
    }
}

bool parse_int(std::string_view s, long long& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

} // namespace

int compare_versions(std::string_view a, std::string_view b) {
    auto pa = split_dotted(a);
    auto pb = split_dotted(b);
    bool all_numeric = true;
    for (auto p : pa) {
        long long v;
        if (!parse_int(p, v)) { all_numeric = false; break; }
    }
    if (all_numeric)
        for (auto p : pb) {
            long long v;
            if (!parse_int(p, v)) { all_numeric = false; break; }
        }
    std::size_t n = std::max(pa.size(), pb.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= pa.size()) return -1;
        if (i >= pb.size()) return 1;
        if (all_numeric) {
            long long va = 0, vb = 0;
            parse_int(pa[i], va);
            parse_int(pb[i], vb);
            if (va != vb) return va < vb ? -1 : 1;
        } else {
            int c = pa[i].compare(pb[i]);
            if (c != 0) return c < 0 ? -1 : 1;
        }
    }
    return 0;
}

const DataNode* ProvenanceTrace::find_data(std::string_view id) const {
    auto it = data_index_.find(id);
    return it == data_index_.end() ? nullptr : &data_nodes_[it->second];
}

const ActivityNode* ProvenanceTrace::find_activity(std::string_view id) const {
    auto it = activity_index_.find(id);
    return it == activity_index_.end() ? nullptr : &activity_nodes_[it->second];
}

const ActivityNode* ProvenanceTrace::up_d(const DataNode& d) const {
    auto it = producer_of_.find(d.id);
    if (it == producer_of_.end()) {
        if (d.kind == DataKind::transient_)
            throw TraceError("transient data node '" + d.id +
                             "' has no producer; invalid traversal starting point");
        return nullptr;
    }
    const GenByEdge& e = gen_by_[it->second];
    const ActivityNode* a = find_activity(e.activity_id);
    if (!a) throw TraceError("genBy edge of '" + d.id + "' references unknown activity");
    return a;
}

const DataNode& ProvenanceTrace::up_s(const ActivityNode& a, std::string_view port) const {
    auto it = used_by_port_.find({a.id, std::string(port)});
    if (it == used_by_port_.end())
        throw TraceError("activity '" + a.id + "' has no used edge on port '" +
                         std::string(port) + "'");
    const DataNode* d = find_data(used_[it->second].data_id);
    if (!d) throw TraceError("used edge on '" + a.id + "' references unknown data");
    return *d;
}

std::vector<const DataNode*> ProvenanceTrace::workflow_inputs() const {
    std::vector<const DataNode*> out;
    for (const auto& d : data_nodes_)
        if (!producer_of_.contains(d.id)) out.push_back(&d);
    return out;
}

std::vector<const DataNode*> ProvenanceTrace::workflow_outputs() const {
    std::vector<const DataNode*> out;
    for (const auto& d : data_nodes_)
        if (uses_of_data_.find(d.id) == uses_of_data_.end()) out.push_back(&d);
    return out;
}

std::vector<std::pair<const ActivityNode*, std::string>>
ProvenanceTrace::consumers(const DataNode& d) const {
    std::vector<std::pair<const ActivityNode*, std::string>> out;
    auto [lo, hi] = uses_of_data_.equal_range(d.id);
    for (auto it = lo; it != hi; ++it) {
        const UsedEdge& e = used_[it->second];
        if (const ActivityNode* a = find_activity(e.activity_id))
            out.emplace_back(a, e.port);
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
        return std::tie(x.first->id, x.second) < std::tie(y.first->id, y.second);
    });
    return out;
}

std::vector<Violation> ProvenanceTrace::validate() const {
    std::vector<Violation> v;
    auto report = [&](std::string rule, std::string msg) {
        v.push_back({std::move(rule), std::move(msg)});
    };

    // Node kinds carry their own obligations.
    for (const auto& d : data_nodes_) {
        if (d.id.empty()) report("data-id", "data node with empty id");
        if (d.kind == DataKind::transient_ && d.content_ref)
            report("transient-no-content", "transient data '" + d.id + "' carries a contentRef");
        if (d.kind == DataKind::persisted && !d.mime_type)
            report("persisted-mime", "persisted data '" + d.id + "' lacks a mimeType");
    }

    std::map<std::string, const ActivityNode*> first_of_service;
    for (const auto& a : activity_nodes_) {
        if (a.id.empty()) report("activity-id", "activity node with empty id");
        for (const auto* ports : {&a.input_ports, &a.output_ports}) {
            std::set<std::string> seen;
            for (const auto& p : *ports) {
                if (p.empty()) report("port-name", "activity '" + a.id + "' has an empty port name");
                if (!seen.insert(p).second)
                    report("port-unique", "activity '" + a.id + "' declares port '" + p + "' twice");
            }
        }
        auto [it, fresh] = first_of_service.try_emplace(a.service_id, &a);
        if (!fresh) {
            const ActivityNode& other = *it->second;
            if (other.input_ports != a.input_ports || other.output_ports != a.output_ports)
                report("service-ports", "activities '" + other.id + "' and '" + a.id +
                                            "' share service '" + a.service_id +
                                            "' but have different port sets");
        }
    }

    // Referential integrity.
    for (const auto& e : used_) {
        if (!find_activity(e.activity_id))
            report("used-ref", "used edge references unknown activity '" + e.activity_id + "'");
        if (!find_data(e.data_id))
            report("used-ref", "used edge references unknown data '" + e.data_id + "'");
    }
    for (const auto& e : gen_by_) {
        if (!find_activity(e.activity_id))
            report("genby-ref", "genBy edge references unknown activity '" + e.activity_id + "'");
        if (!find_data(e.data_id))
            report("genby-ref", "genBy edge references unknown data '" + e.data_id + "'");
    }

    // Single producer per data item.
    std::map<std::string, int> producers;
    for (const auto& e : gen_by_) ++producers[e.data_id];
    for (const auto& [id, n] : producers)
        if (n > 1) report("single-producer", "data '" + id + "' has " + std::to_string(n) + " producers");

    // Exactly one used edge per declared input port, one genBy per output port,
    // and no edges on undeclared ports.
    for (const auto& a : activity_nodes_) {
        for (const auto& p : a.input_ports) {
            auto n = std::count_if(used_.begin(), used_.end(), [&](const UsedEdge& e) {
                return e.activity_id == a.id && e.port == p;
            });
            if (n != 1)
                report("input-port-edge", "activity '" + a.id + "' input port '" + p + "' has " +
                                              std::to_string(n) + " used edges (expected 1)");
        }
        for (const auto& p : a.output_ports) {
            auto n = std::count_if(gen_by_.begin(), gen_by_.end(), [&](const GenByEdge& e) {
                return e.activity_id == a.id && e.port == p;
            });
            if (n != 1)
                report("output-port-edge", "activity '" + a.id + "' output port '" + p + "' has " +
                                               std::to_string(n) + " genBy edges (expected 1)");
        }
    }
    for (const auto& e : used_)
        if (const ActivityNode* a = find_activity(e.activity_id))
            if (std::find(a->input_ports.begin(), a->input_ports.end(), e.port) ==
                a->input_ports.end())
                report("undeclared-port", "used edge on undeclared input port '" + e.port +
                                              "' of activity '" + e.activity_id + "'");
    for (const auto& e : gen_by_)
        if (const ActivityNode* a = find_activity(e.activity_id))
            if (std::find(a->output_ports.begin(), a->output_ports.end(), e.port) ==
                a->output_ports.end())
                report("undeclared-port", "genBy edge on undeclared output port '" + e.port +
                                              "' of activity '" + e.activity_id + "'");

    // A workflow input retained only as a hash could never be re-examined;
    // reject the combination.
    for (const auto& d : data_nodes_)
        if (d.kind == DataKind::transient_ && !producers.contains(d.id))
            report("transient-input", "transient data '" + d.id + "' has no producer");

    // Acyclicity of the used+genBy graph. Edges point upward: consumer
    // activity -> data (used), data -> producer activity (genBy).
    {
        std::map<std::string, std::vector<std::string>> adj; // node key -> upward neighbors
        auto dkey = [](const std::string& id) { return "d:" + id; };
        auto akey = [](const std::string& id) { return "a:" + id; };
        for (const auto& e : used_) adj[akey(e.activity_id)].push_back(dkey(e.data_id));
        for (const auto& e : gen_by_) adj[dkey(e.data_id)].push_back(akey(e.activity_id));

        std::map<std::string, int> state; // 0 unseen, 1 in progress, 2 done
        bool cyclic = false;
        // Iterative DFS with an explicit stack; second visit closes the node.
        for (const auto& [start, _] : adj) {
            if (state[start] != 0) continue;
            std::vector<std::pair<std::string, bool>> stack{{start, false}};
            while (!stack.empty() && !cyclic) {
                auto [node, closing] = stack.back();
                stack.pop_back();
                if (closing) {
                    state[node] = 2;
                    continue;
                }
                if (state[node] == 1) continue;
                state[node] = 1;
                stack.push_back({node, true});
                for (const auto& next : adj[node]) {
                    if (state[next] == 1) { cyclic = true; break; }
                    if (state[next] == 0) stack.push_back({next, false});
                }
            }
            if (cyclic) break;
        }
        if (cyclic) report("acyclic", "used/genBy edges form a cycle");
    }

    return v;
}

TraceBuilder::TraceBuilder(std::string run_id) { trace_.run_id_ = std::move(run_id); }

TraceBuilder& TraceBuilder::add_data(DataNode n) {
    trace_.data_nodes_.push_back(std::move(n));
    return *this;
}

TraceBuilder& TraceBuilder::add_activity(ActivityNode n) {
    std::sort(n.input_ports.begin(), n.input_ports.end());
    std::sort(n.output_ports.begin(), n.output_ports.end());
    trace_.activity_nodes_.push_back(std::move(n));
    return *this;
}

TraceBuilder& TraceBuilder::add_used(std::string activity_id, std::string port,
                                     std::string data_id) {
    trace_.used_.push_back({std::move(activity_id), std::move(port), std::move(data_id)});
    return *this;
}

TraceBuilder& TraceBuilder::add_gen_by(std::string data_id, std::string activity_id,
                                       std::string port) {
    trace_.gen_by_.push_back({std::move(data_id), std::move(activity_id), std::move(port)});
    return *this;
}

ProvenanceTrace TraceBuilder::build() {
    ProvenanceTrace t = std::move(trace_);
    trace_ = ProvenanceTrace{};
    t.data_index_.clear();
    t.activity_index_.clear();
    t.producer_of_.clear();
    t.used_by_port_.clear();
    t.uses_of_data_.clear();
    for (std::size_t i = 0; i < t.data_nodes_.size(); ++i)
        t.data_index_.emplace(t.data_nodes_[i].id, i);
    for (std::size_t i = 0; i < t.activity_nodes_.size(); ++i)
        t.activity_index_.emplace(t.activity_nodes_[i].id, i);
    for (std::size_t i = 0; i < t.gen_by_.size(); ++i)
        t.producer_of_.emplace(t.gen_by_[i].data_id, i);
    for (std::size_t i = 0; i < t.used_.size(); ++i) {
        t.used_by_port_.emplace(std::make_pair(t.used_[i].activity_id, t.used_[i].port), i);
        t.uses_of_data_.emplace(t.used_[i].data_id, i);
    }
    return t;
}

ProvenanceTrace TraceBuilder::build_validated() {
    ProvenanceTrace t = build();
    auto violations = t.validate();
    if (!violations.empty()) {
        std::ostringstream msg;
        msg << "trace '" << t.run_id() << "' is invalid:";
        for (const auto& v : violations) msg << "\n  [" << v.rule << "] " << v.message;
        throw TraceError(msg.str());
    }
    return t;
}

} // namespace provdelta
