#include "provdelta/trace_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <sstream>

namespace provdelta {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string lower(std::string s) {
    for (char& c : s)
        if (c >= 'A' && c <= 'Z') c += 'a' - 'A';
    return s;
}

std::string require_string(const ordered_json& obj, const char* key, const char* where) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string())
        throw ParseError(std::string(where) + ": missing or non-string field '" + key + "'");
    return it->get<std::string>();
}

} // namespace

ProvenanceTrace parse_trace(std::string_view text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("trace document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("trace document must be a JSON object");
    if (require_string(doc, "format", "document") != kTraceFormat)
        throw ParseError("unsupported trace format '" + doc["format"].get<std::string>() +
                         "', expected '" + std::string(kTraceFormat) + "'");

    TraceBuilder builder(require_string(doc, "runId", "document"));

    auto nodes = doc.find("nodes");
    if (nodes == doc.end() || !nodes->is_array())
        throw ParseError("document: missing 'nodes' array");
    for (const auto& n : *nodes) {
        if (!n.is_object()) throw ParseError("node entries must be objects");
        std::string type = require_string(n, "type", "node");
        if (type == "data") {
            DataNode d;
            d.id = require_string(n, "id", "data node");
            std::string kind = require_string(n, "kind", "data node");
            if (kind == "persisted")
                d.kind = DataKind::persisted;
            else if (kind == "transient")
                d.kind = DataKind::transient_;
            else
                throw ParseError("data node '" + d.id + "': unknown kind '" + kind + "'");
            try {
                d.content_hash = Md5Digest::from_hex(lower(require_string(n, "hash", "data node")));
            } catch (const std::invalid_argument& e) {
                throw ParseError("data node '" + d.id + "': " + e.what());
            }
            if (n.contains("mimeType")) d.mime_type = require_string(n, "mimeType", "data node");
            if (n.contains("contentRef")) d.content_ref = require_string(n, "contentRef", "data node");
            builder.add_data(std::move(d));
        } else if (type == "activity") {
            ActivityNode a;
            a.id = require_string(n, "id", "activity node");
            a.service_id = require_string(n, "serviceId", "activity node");
            a.service_version = require_string(n, "serviceVersion", "activity node");
            for (const char* key : {"inPorts", "outPorts"}) {
                auto it = n.find(key);
                if (it == n.end() || !it->is_array())
                    throw ParseError("activity node '" + a.id + "': missing '" + key + "' array");
                auto& ports = std::string(key) == "inPorts" ? a.input_ports : a.output_ports;
                for (const auto& p : *it) {
                    if (!p.is_string())
                        throw ParseError("activity node '" + a.id + "': port names must be strings");
                    ports.push_back(p.get<std::string>());
                }
            }
            builder.add_activity(std::move(a));
        } else {
            throw ParseError("unknown node type '" + type + "'");
        }
    }

    auto edges = doc.find("edges");
    if (edges == doc.end() || !edges->is_array())
        throw ParseError("document: missing 'edges' array");
    for (const auto& e : *edges) {
        if (!e.is_object()) throw ParseError("edge entries must be objects");
        std::string rel = require_string(e, "rel", "edge");
        std::string activity = require_string(e, "activity", "edge");
        std::string data = require_string(e, "data", "edge");
        std::string port = require_string(e, "port", "edge");
        if (rel == "used")
            builder.add_used(activity, port, data);
        else if (rel == "genBy")
            builder.add_gen_by(data, activity, port);
        else
            throw ParseError("edge: unknown rel '" + rel + "'");
    }

    return builder.build_validated();
}

std::string serialize_trace(const ProvenanceTrace& trace) {
    ordered_json doc;
    doc["format"] = kTraceFormat;
    doc["runId"] = trace.run_id();

    struct NodeRef {
        const DataNode* data = nullptr;
        const ActivityNode* activity = nullptr;
        const std::string& id() const { return data ? data->id : activity->id; }
    };
    std::vector<NodeRef> nodes;
    for (const auto& d : trace.data_nodes()) nodes.push_back({&d, nullptr});
    for (const auto& a : trace.activity_nodes()) nodes.push_back({nullptr, &a});
    std::sort(nodes.begin(), nodes.end(),
              [](const NodeRef& x, const NodeRef& y) { return x.id() < y.id(); });

    doc["nodes"] = ordered_json::array();
    for (const NodeRef& ref : nodes) {
        ordered_json n;
        if (ref.data) {
            const DataNode& d = *ref.data;
            n["id"] = d.id;
            n["type"] = "data";
            n["kind"] = d.kind == DataKind::persisted ? "persisted" : "transient";
            n["hash"] = d.content_hash.to_hex();
            if (d.mime_type) n["mimeType"] = *d.mime_type;
            if (d.content_ref) n["contentRef"] = *d.content_ref;
        } else {
            const ActivityNode& a = *ref.activity;
            n["id"] = a.id;
            n["type"] = "activity";
            n["serviceId"] = a.service_id;
            n["serviceVersion"] = a.service_version;
            n["inPorts"] = a.input_ports;
            n["outPorts"] = a.output_ports;
        }
        doc["nodes"].push_back(std::move(n));
    }

    struct EdgeRec {
        std::string rel, activity, data, port;
    };
    std::vector<EdgeRec> edges;
    for (const auto& e : trace.used()) edges.push_back({"used", e.activity_id, e.data_id, e.port});
    for (const auto& e : trace.gen_by())
        edges.push_back({"genBy", e.activity_id, e.data_id, e.port});
    std::sort(edges.begin(), edges.end(), [](const EdgeRec& x, const EdgeRec& y) {
        return std::tie(x.rel, x.activity, x.port, x.data) <
               std::tie(y.rel, y.activity, y.port, y.data);
    });

    doc["edges"] = ordered_json::array();
    for (const EdgeRec& e : edges) {
        ordered_json j;
        j["rel"] = e.rel;
        j["activity"] = e.activity;
        j["data"] = e.data;
        j["port"] = e.port;
        doc["edges"].push_back(std::move(j));
    }

    return doc.dump(2) + "\n";
}

namespace {

std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.push_back(' ');
        out += parts[i];
    }
    return out;
}

std::pair<std::string, std::string> node_labels(const DeltaNode& n) {
    switch (n.kind) {
        case DeltaKind::dataMismatch: return {n.left_id, n.right_id};
        case DeltaKind::serviceMismatch: return {n.left_label, n.right_label};
        case DeltaKind::versionMismatch:
            return {n.service + "@" + n.left_label, n.service + "@" + n.right_label};
        default: return {"", ""};
    }
}

} // namespace

std::string export_delta_graphml(const DeltaGraph& delta) {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\"\n"
        << "         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\"\n"
        << "         xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns "
           "http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n";
    const std::pair<const char*, const char*> keys[] = {
        {"k_kind", "kind"},           {"k_left", "left"},
        {"k_right", "right"},         {"k_leftFragment", "leftFragment"},
        {"k_rightFragment", "rightFragment"}, {"k_syncService", "syncService"},
    };
    for (auto [id, name] : keys)
        out << "  <key id=\"" << id << "\" for=\"node\" attr.name=\"" << name
            << "\" attr.type=\"string\"/>\n";
    out << "  <graph id=\"delta\" edgedefault=\"directed\">\n";

    for (DeltaGraph::NodeId i = 0; i < delta.size(); ++i) {
        const DeltaNode& n = delta.node(i);
        auto [left, right] = node_labels(n);
        out << "    <node id=\"n" << i << "\">\n";
        out << "      <data key=\"k_kind\">" << to_string(n.kind) << "</data>\n";
        if (!left.empty()) out << "      <data key=\"k_left\">" << xml_escape(left) << "</data>\n";
        if (!right.empty())
            out << "      <data key=\"k_right\">" << xml_escape(right) << "</data>\n";
        if (n.kind == DeltaKind::fragmentPair) {
            out << "      <data key=\"k_leftFragment\">" << xml_escape(join(n.fragment_left))
                << "</data>\n";
            out << "      <data key=\"k_rightFragment\">" << xml_escape(join(n.fragment_right))
                << "</data>\n";
            if (n.sync_service)
                out << "      <data key=\"k_syncService\">" << xml_escape(*n.sync_service)
                    << "</data>\n";
        }
        out << "    </node>\n";
    }
    std::size_t edge_id = 0;
    for (DeltaGraph::NodeId i = 0; i < delta.size(); ++i)
        for (DeltaGraph::NodeId c : delta.children(i))
            out << "    <edge id=\"e" << edge_id++ << "\" source=\"n" << i << "\" target=\"n" << c
                << "\"/>\n";
    out << "  </graph>\n</graphml>\n";
    return out.str();
}

} // namespace provdelta
