#include "provdelta/simulate.hpp"

#include "provdelta/md5.hpp"
#include "provdelta/trace_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <random>
#include <sstream>
#include <stdexcept>

namespace provdelta {

using ordered_json = nlohmann::ordered_json;

std::string to_string(ScenarioClass c) {
    switch (c) {
        case ScenarioClass::repeat: return "repeat";
        case ScenarioClass::methodEvolution: return "methodEvolution";
        case ScenarioClass::dataEvolution: return "dataEvolution";
        case ScenarioClass::methodAndDataEvolution: return "methodAndDataEvolution";
        case ScenarioClass::externalDecay: return "externalDecay";
        case ScenarioClass::engineChange: return "engineChange";
    }
    return "?";
}

std::string to_string(EvolutionOp::Kind k) {
    switch (k) {
        case EvolutionOp::Kind::replaceService: return "replaceService";
        case EvolutionOp::Kind::insertService: return "insertService";
        case EvolutionOp::Kind::deleteService: return "deleteService";
        case EvolutionOp::Kind::bumpVersion: return "bumpVersion";
        case EvolutionOp::Kind::changeInput: return "changeInput";
        case EvolutionOp::Kind::mutateExternalState: return "mutateExternalState";
        case EvolutionOp::Kind::bumpEngine: return "bumpEngine";
    }
    return "?";
}

void WorkflowSpec::validate() const {
    auto port_exists = [&](const PortRef& ref, bool output) {
        auto it = tasks.find(ref.task);
        if (it == tasks.end()) return false;
        const auto& ports = output ? it->second.out_ports : it->second.in_ports;
        return std::find(ports.begin(), ports.end(), ref.port) != ports.end();
    };

    for (const auto& [id, t] : tasks) {
        if (id != t.id) throw std::invalid_argument("task map key '" + id + "' != task id");
        if (t.in_ports.empty() && t.out_ports.empty())
            throw std::invalid_argument("task '" + id + "' has no ports");
        if (t.behavior.kind == BehaviorKind::externalState && !t.behavior.state_key)
            throw std::invalid_argument("task '" + id + "' reads external state but has no key");
    }

    std::map<PortRef, int> feeds;
    for (const auto& [from, to] : edges) {
        if (!port_exists(from, true))
            throw std::invalid_argument("edge from unknown output port " + from.str());
        if (!port_exists(to, false))
            throw std::invalid_argument("edge into unknown input port " + to.str());
        ++feeds[to];
    }
    for (const auto& [name, to] : input_bindings) {
        if (!port_exists(to, false))
            throw std::invalid_argument("input '" + name + "' bound to unknown port " + to.str());
        ++feeds[to];
    }
    for (const auto& [id, t] : tasks)
        for (const auto& p : t.in_ports) {
            int n = feeds.count({id, p}) ? feeds.at({id, p}) : 0;
            if (n != 1)
                throw std::invalid_argument("input port " + PortRef{id, p}.str() + " fed " +
                                            std::to_string(n) + " times (expected 1)");
        }
    for (const auto& [from, name] : output_bindings)
        if (!port_exists(from, true))
            throw std::invalid_argument("output '" + name + "' bound to unknown port " +
                                        from.str());

    // Task DAG check via Kahn's algorithm.
    std::map<std::string, std::set<std::string>> succ;
    std::map<std::string, int> indegree;
    for (const auto& [id, t] : tasks) indegree[id] = 0;
    for (const auto& [from, to] : edges)
        if (succ[from.task].insert(to.task).second) ++indegree[to.task];
    std::set<std::string> ready;
    for (const auto& [id, n] : indegree)
        if (n == 0) ready.insert(id);
    std::size_t done = 0;
    while (!ready.empty()) {
        std::string id = *ready.begin();
        ready.erase(ready.begin());
        ++done;
        for (const auto& next : succ[id])
            if (--indegree[next] == 0) ready.insert(next);
    }
    if (done != tasks.size()) throw std::invalid_argument("workflow task graph is cyclic");
}

namespace {

std::string generated_content(const Md5Digest& digest, const std::optional<std::string>& mime) {
    if (mime && (*mime == "text/csv" || *mime == "application/x-model-predictions")) {
        std::ostringstream out;
        out << "c0,c1\n";
        for (int row = 0; row < 4; ++row)
            out << static_cast<int>(digest.bytes[2 * row]) << ","
                << static_cast<int>(digest.bytes[2 * row + 1]) << "\n";
        return out.str();
    }
    return digest.to_hex() + "\n";
}

} // namespace

ExecutionResult execute_workflow(const ExecutionContext& ctx, const std::string& run_id) {
    const WorkflowSpec& wf = ctx.workflow;
    wf.validate();

    TraceBuilder builder(run_id);
    ExecutionResult result{ProvenanceTrace{}, {}, {}};

    std::map<PortRef, std::string> data_at;   // producing port -> data id
    std::map<std::string, Md5Digest> hash_of; // data id -> digest
    std::map<PortRef, std::string> feed;      // consuming port -> data id

    for (const auto& [name, to] : wf.input_bindings) {
        auto content_it = ctx.inputs.find(name);
        if (content_it == ctx.inputs.end())
            throw std::invalid_argument("no content provided for workflow input '" + name + "'");
        std::string id = run_id + "/in/" + name;
        DataNode d;
        d.id = id;
        d.kind = DataKind::persisted;
        d.content_hash = md5(content_it->second);
        d.mime_type = "text/plain";
        d.content_ref = "inline:" + content_it->second;
        builder.add_data(std::move(d));
        hash_of[id] = md5(content_it->second);
        feed[to] = id;
        result.input_data_ids[name] = id;
    }
    for (const auto& [from, to] : wf.edges)
        feed[to]; // reserve; filled once the producer runs

    // Kahn order over tasks, deterministic by task id.
    std::map<std::string, std::set<std::string>> succ;
    std::map<std::string, int> indegree;
    for (const auto& [id, t] : wf.tasks) indegree[id] = 0;
    for (const auto& [from, to] : wf.edges)
        if (succ[from.task].insert(to.task).second) ++indegree[to.task];
    std::set<std::string> ready;
    for (const auto& [id, n] : indegree)
        if (n == 0) ready.insert(id);

    std::map<PortRef, std::vector<PortRef>> consumers_of;
    for (const auto& [from, to] : wf.edges) consumers_of[from].push_back(to);

    while (!ready.empty()) {
        const std::string task_id = *ready.begin();
        ready.erase(ready.begin());
        const TaskSpec& task = wf.tasks.at(task_id);
        const std::string activity_id = run_id + "/" + task_id;

        ActivityNode a;
        a.id = activity_id;
        a.service_id = task.service_id;
        a.service_version = task.version;
        a.input_ports = task.in_ports;
        a.output_ports = task.out_ports;
        builder.add_activity(std::move(a));

        std::vector<std::string> input_hashes;
        for (const auto& p : task.in_ports) {
            auto it = feed.find({task_id, p});
            if (it == feed.end() || it->second.empty())
                throw std::invalid_argument("input port " + PortRef{task_id, p}.str() +
                                            " was never fed");
            builder.add_used(activity_id, p, it->second);
            input_hashes.push_back(hash_of.at(it->second).to_hex());
        }
        std::sort(input_hashes.begin(), input_hashes.end());

        for (const auto& p : task.out_ports) {
            std::ostringstream recipe;
            recipe << task.service_id << "|" << task.version << "|" << p;
            for (const auto& h : input_hashes) recipe << "|" << h;
            if (task.behavior.kind == BehaviorKind::externalState) {
                auto it = ctx.external_state.find(*task.behavior.state_key);
                if (it == ctx.external_state.end())
                    throw std::invalid_argument("external state key '" + *task.behavior.state_key +
                                                "' has no value");
                recipe << "|state=" << it->second;
            }
            if (task.behavior.kind == BehaviorKind::nondeterministic)
                recipe << "|run=" << run_id;
            Md5Digest digest = md5(recipe.str());

            std::string data_id = run_id + "/" + task_id + "." + p;
            PortRef port_ref{task_id, p};
            auto bound = wf.output_bindings.find(port_ref);

            DataNode d;
            d.id = data_id;
            if (bound != wf.output_bindings.end()) {
                std::string content = generated_content(digest, task.behavior.emit_mime);
                d.kind = DataKind::persisted;
                d.content_hash = md5(content);
                d.mime_type = task.behavior.emit_mime.value_or("text/plain");
                d.content_ref = "inline:" + content;
                result.output_data_ids[bound->second] = data_id;
            } else {
                d.kind = DataKind::transient_;
                d.content_hash = digest;
            }
            hash_of[data_id] = d.content_hash;
            builder.add_data(std::move(d));
            builder.add_gen_by(data_id, activity_id, p);
            for (const auto& to : consumers_of[port_ref]) feed[to] = data_id;
        }

        for (const auto& next : succ[task_id])
            if (--indegree[next] == 0) ready.insert(next);
    }

    result.trace = builder.build_validated();
    return result;
}

ExecutionContext apply_evolution(const ExecutionContext& ctx, const EvolutionOp& op) {
    ExecutionContext out = ctx;
    out.time = ctx.time + 1;
    WorkflowSpec& wf = out.workflow;

    auto require_task = [&](const std::string& id) -> TaskSpec& {
        auto it = wf.tasks.find(id);
        if (it == wf.tasks.end()) throw std::invalid_argument("no task '" + id + "'");
        return it->second;
    };

    switch (op.kind) {
        case EvolutionOp::Kind::replaceService: {
            require_task(op.task).service_id = op.service_id;
            out.workflow_index = ctx.time;
            break;
        }
        case EvolutionOp::Kind::insertService: {
            if (wf.tasks.contains(op.new_task.id))
                throw std::invalid_argument("task '" + op.new_task.id + "' already exists");
            if (op.new_task.in_ports.size() != 1 || op.new_task.out_ports.size() != 1)
                throw std::invalid_argument("inserted task must have one input and one output");
            auto edge = std::find(wf.edges.begin(), wf.edges.end(),
                                  std::make_pair(op.edge_from, op.edge_to));
            if (edge == wf.edges.end())
                throw std::invalid_argument("no edge " + op.edge_from.str() + " -> " +
                                            op.edge_to.str());
            PortRef into{op.new_task.id, op.new_task.in_ports.front()};
            PortRef from{op.new_task.id, op.new_task.out_ports.front()};
            edge->second = into;
            wf.edges.emplace_back(from, op.edge_to);
            wf.tasks.emplace(op.new_task.id, op.new_task);
            out.workflow_index = ctx.time;
            break;
        }
        case EvolutionOp::Kind::deleteService: {
            const TaskSpec t = require_task(op.task);
            if (t.in_ports.size() != 1)
                throw std::invalid_argument("can only delete a single-input task");
            PortRef sink{t.id, t.in_ports.front()};

            // Where the deleted task's input came from.
            std::optional<PortRef> source_port;
            std::optional<std::string> source_input;
            for (const auto& [from, to] : wf.edges)
                if (to == sink) source_port = from;
            for (const auto& [name, to] : wf.input_bindings)
                if (to == sink) source_input = name;

            std::vector<PortRef> consumer_ports;
            std::vector<std::string> consumer_outputs;
            for (const auto& [from, to] : wf.edges)
                if (from.task == t.id) consumer_ports.push_back(to);
            for (const auto& [from, name] : wf.output_bindings)
                if (from.task == t.id) consumer_outputs.push_back(name);

            std::erase_if(wf.edges, [&](const auto& e) {
                return e.first.task == t.id || e.second == sink;
            });
            std::erase_if(wf.output_bindings,
                          [&](const auto& b) { return b.first.task == t.id; });
            wf.tasks.erase(t.id);

            if (source_port) {
                for (const auto& to : consumer_ports) wf.edges.emplace_back(*source_port, to);
                for (const auto& name : consumer_outputs) wf.output_bindings[*source_port] = name;
            } else if (source_input) {
                if (consumer_ports.size() + consumer_outputs.size() > 1)
                    throw std::invalid_argument(
                        "cannot delete '" + t.id +
                        "': a workflow input cannot be rewired to several consumers");
                if (!consumer_outputs.empty())
                    throw std::invalid_argument("cannot delete '" + t.id +
                                                "': would wire an input straight to an output");
                if (!consumer_ports.empty()) wf.input_bindings[*source_input] = consumer_ports.front();
            }
            out.workflow_index = ctx.time;
            break;
        }
        case EvolutionOp::Kind::bumpVersion: {
            TaskSpec& t = require_task(op.task);
            long long v = 0;
            try {
                v = std::stoll(t.version);
                t.version = std::to_string(v + 1);
            } catch (...) {
                t.version += ".1";
            }
            out.external_index = ctx.time; // service versions live with the platform state
            break;
        }
        case EvolutionOp::Kind::changeInput: {
            if (!out.inputs.contains(op.input_name))
                throw std::invalid_argument("no workflow input '" + op.input_name + "'");
            out.inputs[op.input_name] = op.content;
            out.data_index = ctx.time;
            break;
        }
        case EvolutionOp::Kind::mutateExternalState: {
            auto it = out.external_state.find(op.state_key);
            if (it == out.external_state.end())
                throw std::invalid_argument("no external state key '" + op.state_key + "'");
            it->second += "'";
            out.external_index = ctx.time;
            break;
        }
        case EvolutionOp::Kind::bumpEngine: {
            long long v = 0;
            try {
                v = std::stoll(out.engine_version);
                out.engine_version = std::to_string(v + 1);
            } catch (...) {
                out.engine_version += ".1";
            }
            out.engine_index = ctx.time;
            break;
        }
    }
    return out;
}

ScenarioClass classify_scenario(const ExecutionContext& a, const ExecutionContext& b) {
    if (a.external_index != b.external_index) return ScenarioClass::externalDecay;
    if (a.engine_index != b.engine_index) return ScenarioClass::engineChange;
    const bool w = a.workflow_index != b.workflow_index;
    const bool d = a.data_index != b.data_index;
    if (w && d) return ScenarioClass::methodAndDataEvolution;
    if (w) return ScenarioClass::methodEvolution;
    if (d) return ScenarioClass::dataEvolution;
    return ScenarioClass::repeat;
}

namespace {

struct AlignResult {
    std::size_t score = 0;
    std::set<MismatchRecord> records;
    std::set<std::string> aligned_left;
    std::set<std::string> aligned_right;

    void merge(const AlignResult& other) {
        score += other.score;
        records.insert(other.records.begin(), other.records.end());
        aligned_left.insert(other.aligned_left.begin(), other.aligned_left.end());
        aligned_right.insert(other.aligned_right.begin(), other.aligned_right.end());
    }
};

/// Exhaustive alignment search used as the testing oracle. Descends the two
/// traces in lock step; at every service mismatch it tries each service-equal
/// activity pair in the upward cones as a resumption point (and the option of
/// not resuming at all) and keeps whichever alignment covers the most nodes.
class Aligner {
public:
    Aligner(const ProvenanceTrace& tl, const ProvenanceTrace& tr,
            const ComparatorRegistry& registry, const ContentLoader& loader,
            const ComparatorOptions& options)
        : tl_(tl), tr_(tr), registry_(registry), loader_(loader), options_(options) {}

    AlignResult align_data(const DataNode& dl, const DataNode& dr, bool live) {
        auto key = std::tuple(dl.id, dr.id, live);
        if (auto it = memo_data_.find(key); it != memo_data_.end()) return it->second;

        AlignResult res;
        res.score = 1;
        const bool mismatch = d_diff(dl, dr, registry_, loader_, options_);
        if (mismatch && live)
            res.records.insert({MismatchRecord::Kind::data, dl.id, dr.id});

        const ActivityNode* pl = tl_.up_d(dl);
        const ActivityNode* pr = tr_.up_d(dr);
        if (pl && pr) {
            if (pl->service_id == pr->service_id) {
                res.merge(align_activity(*pl, *pr, mismatch));
            } else {
                res.merge(best_resync(*pl, *pr));
            }
        }
        memo_data_.emplace(key, res);
        return res;
    }

    AlignResult align_activity(const ActivityNode& al, const ActivityNode& ar, bool live) {
        auto key = std::tuple(al.id, ar.id, live);
        if (auto it = memo_act_.find(key); it != memo_act_.end()) return it->second;

        AlignResult res;
        res.score = 1;
        res.aligned_left.insert(al.id);
        res.aligned_right.insert(ar.id);
        if (compare_versions(al.service_version, ar.service_version) != 0)
            res.records.insert({MismatchRecord::Kind::version, al.id, ar.id});

        std::vector<std::string> ports;
        std::set_intersection(al.input_ports.begin(), al.input_ports.end(),
                              ar.input_ports.begin(), ar.input_ports.end(),
                              std::back_inserter(ports));
        for (const auto& p : ports)
            res.merge(align_data(tl_.up_s(al, p), tr_.up_s(ar, p), live));

        memo_act_.emplace(key, res);
        return res;
    }

private:
    AlignResult best_resync(const ActivityNode& pl, const ActivityNode& pr) {
        std::vector<const ActivityNode*> cone_l = upward_activities(tl_, pl);
        std::vector<const ActivityNode*> cone_r = upward_activities(tr_, pr);

        AlignResult best; // the no-resync option: nothing above gets aligned
        std::vector<std::pair<const ActivityNode*, const ActivityNode*>> candidates;
        for (const ActivityNode* cl : cone_l)
            for (const ActivityNode* cr : cone_r)
                if (cl->service_id == cr->service_id && !(cl == &pl && cr == &pr))
                    candidates.emplace_back(cl, cr);
        std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
            return std::tie(a.first->id, a.second->id) < std::tie(b.first->id, b.second->id);
        });
        for (const auto& [cl, cr] : candidates) {
            AlignResult option = align_activity(*cl, *cr, /*live=*/true);
            if (option.score > best.score) best = option;
        }
        return best;
    }

    const ProvenanceTrace& tl_;
    const ProvenanceTrace& tr_;
    const ComparatorRegistry& registry_;
    const ContentLoader& loader_;
    const ComparatorOptions& options_;
    std::map<std::tuple<std::string, std::string, bool>, AlignResult> memo_data_;
    std::map<std::tuple<std::string, std::string, bool>, AlignResult> memo_act_;
};

} // namespace

std::set<MismatchRecord> brute_force_delta(const ProvenanceTrace& trace_left,
                                           const ProvenanceTrace& trace_right,
                                           const DataNode& start_left, const DataNode& start_right,
                                           const ComparatorRegistry& registry,
                                           const ContentLoader& loader,
                                           const ComparatorOptions& options) {
    constexpr std::size_t kMaxActivities = 20;
    if (trace_left.activity_nodes().size() > kMaxActivities ||
        trace_right.activity_nodes().size() > kMaxActivities)
        throw std::invalid_argument("brute-force alignment is limited to 20 activities per trace");

    Aligner aligner(trace_left, trace_right, registry, loader, options);
    AlignResult res = aligner.align_data(start_left, start_right, /*live=*/true);

    std::set<MismatchRecord> records = res.records;
    for (const ActivityNode* a : upward_activities_from_data(trace_left, start_left))
        if (!res.aligned_left.contains(a->id))
            records.insert({MismatchRecord::Kind::skipLeft, a->id, ""});
    for (const ActivityNode* a : upward_activities_from_data(trace_right, start_right))
        if (!res.aligned_right.contains(a->id))
            records.insert({MismatchRecord::Kind::skipRight, "", a->id});
    return records;
}

namespace {

struct Source {
    bool is_input = false;
    std::string input_name;
    PortRef port;
};

WorkflowSpec try_random_workflow(std::uint64_t seed, int core_tasks) {
    std::mt19937_64 rng(seed);
    auto uniform = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };

    WorkflowSpec wf;
    std::vector<Source> sources;
    const int n_inputs = uniform(1, 3);
    for (int i = 0; i < n_inputs; ++i)
        sources.push_back({true, "in" + std::to_string(i), {}});

    auto consume = [&](const std::string& task_id, const std::string& port, const Source& src) {
        if (src.is_input)
            wf.input_bindings[src.input_name] = {task_id, port};
        else
            wf.edges.emplace_back(src.port, PortRef{task_id, port});
    };

    for (int i = 1; i <= core_tasks; ++i) {
        TaskSpec t;
        t.id = "t" + std::to_string(i);
        t.service_id = "svc" + std::to_string(i);
        if (uniform(0, 99) < 15) {
            t.behavior.kind = BehaviorKind::externalState;
            t.behavior.state_key = "db" + std::to_string(uniform(0, 1));
        }
        int want = uniform(1, 3);
        // Keep the dangling-source pool small so the collector stage stays cheap.
        if (sources.size() > 4) want = std::max(want, 2);
        int k = std::min<int>(want, static_cast<int>(sources.size()));
        for (int j = 0; j < k; ++j) {
            std::string port = "p" + std::to_string(j);
            t.in_ports.push_back(port);
            int pick = uniform(0, static_cast<int>(sources.size()) - 1);
            consume(t.id, port, sources[pick]);
            sources.erase(sources.begin() + pick);
        }
        t.out_ports.push_back("o0");
        if (uniform(0, 99) < 15) t.out_ports.push_back("o1");
        for (const auto& p : t.out_ports) sources.push_back({false, "", {t.id, p}});
        wf.tasks.emplace(t.id, std::move(t));
    }

    // Sweep leftovers into a single bound output with fan-in <= 3 collectors.
    int collector = 0;
    while (sources.size() > 1) {
        TaskSpec c;
        c.id = "c" + std::to_string(collector);
        c.service_id = "csvc" + std::to_string(collector);
        ++collector;
        int k = std::min<std::size_t>(3, sources.size());
        for (int j = 0; j < k; ++j) {
            std::string port = "p" + std::to_string(j);
            c.in_ports.push_back(port);
            consume(c.id, port, sources.front());
            sources.erase(sources.begin());
        }
        c.out_ports.push_back("o0");
        sources.push_back({false, "", {c.id, "o0"}});
        wf.tasks.emplace(c.id, std::move(c));
    }
    if (sources.front().is_input) {
        TaskSpec f;
        f.id = "c0";
        f.service_id = "csvc0";
        f.in_ports.push_back("p0");
        f.out_ports.push_back("o0");
        consume(f.id, "p0", sources.front());
        sources.front() = {false, "", {f.id, "o0"}};
        wf.tasks.emplace(f.id, std::move(f));
    }
    wf.output_bindings[sources.front().port] = "out";
    return wf;
}

} // namespace

WorkflowSpec random_workflow(std::uint64_t seed, int max_tasks) {
    if (max_tasks < 3) throw std::invalid_argument("need room for at least 3 tasks");
    std::mt19937_64 rng(seed);
    int core = std::uniform_int_distribution<int>(2, std::max(2, max_tasks - 2))(rng);
    for (;; --core) {
        WorkflowSpec wf = try_random_workflow(seed, std::max(1, core));
        if (static_cast<int>(wf.tasks.size()) <= max_tasks) {
            wf.validate();
            return wf;
        }
    }
}

ExecutionContext random_context(std::uint64_t seed, WorkflowSpec workflow) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    ExecutionContext ctx;
    ctx.workflow = std::move(workflow);
    for (const auto& [name, _] : ctx.workflow.input_bindings) {
        std::ostringstream content;
        content << "c0,c1\n";
        for (int row = 0; row < 3; ++row)
            content << rng() % 1000 << "," << rng() % 1000 << "\n";
        ctx.inputs[name] = content.str();
    }
    for (const auto& [id, t] : ctx.workflow.tasks)
        if (t.behavior.state_key)
            ctx.external_state.try_emplace(*t.behavior.state_key,
                                           "state-" + std::to_string(rng() % 100000));
    return ctx;
}

EvolutionOp random_evolution(std::uint64_t seed, const ExecutionContext& ctx) {
    std::mt19937_64 rng(seed ^ 0xda3e39cb94b95bdbull);
    auto pick_index = [&](std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    };
    const WorkflowSpec& wf = ctx.workflow;

    std::vector<std::string> task_ids;
    for (const auto& [id, _] : wf.tasks) task_ids.push_back(id);

    // Deletable: one input, exactly one consumer of its single output, and no
    // rewiring that would fan a workflow input out or surface it as an output.
    std::vector<std::string> deletable;
    for (const auto& [id, t] : wf.tasks) {
        if (t.in_ports.size() != 1 || t.out_ports.size() != 1) continue;
        int consumers = 0;
        for (const auto& [from, to] : wf.edges)
            if (from.task == id) ++consumers;
        int bindings = 0;
        for (const auto& [from, name] : wf.output_bindings)
            if (from.task == id) ++bindings;
        if (consumers + bindings != 1) continue;
        bool fed_by_input = false;
        for (const auto& [name, to] : wf.input_bindings)
            if (to.task == id) fed_by_input = true;
        if (fed_by_input && bindings > 0) continue;
        deletable.push_back(id);
    }

    std::vector<EvolutionOp::Kind> kinds{EvolutionOp::Kind::bumpVersion,
                                         EvolutionOp::Kind::replaceService,
                                         EvolutionOp::Kind::bumpEngine};
    if (!ctx.inputs.empty()) kinds.push_back(EvolutionOp::Kind::changeInput);
    if (!wf.edges.empty()) kinds.push_back(EvolutionOp::Kind::insertService);
    if (!deletable.empty()) kinds.push_back(EvolutionOp::Kind::deleteService);
    if (!ctx.external_state.empty()) kinds.push_back(EvolutionOp::Kind::mutateExternalState);

    EvolutionOp op;
    op.kind = kinds[pick_index(kinds.size())];
    switch (op.kind) {
        case EvolutionOp::Kind::bumpVersion:
            op.task = task_ids[pick_index(task_ids.size())];
            break;
        case EvolutionOp::Kind::replaceService:
            op.task = task_ids[pick_index(task_ids.size())];
            op.service_id = "xsvc" + std::to_string(rng() % 100000);
            break;
        case EvolutionOp::Kind::insertService: {
            const auto& edge = wf.edges[pick_index(wf.edges.size())];
            op.edge_from = edge.first;
            op.edge_to = edge.second;
            op.new_task.id = "xt" + std::to_string(rng() % 100000);
            op.new_task.service_id = "xsvc" + std::to_string(rng() % 100000);
            op.new_task.in_ports = {"p0"};
            op.new_task.out_ports = {"o0"};
            break;
        }
        case EvolutionOp::Kind::deleteService:
            op.task = deletable[pick_index(deletable.size())];
            break;
        case EvolutionOp::Kind::changeInput: {
            std::vector<std::string> names;
            for (const auto& [name, _] : ctx.inputs) names.push_back(name);
            op.input_name = names[pick_index(names.size())];
            std::ostringstream content;
            content << "c0,c1\n";
            for (int row = 0; row < 3; ++row)
                content << rng() % 1000 << "," << rng() % 1000 << "\n";
            op.content = content.str();
            break;
        }
        case EvolutionOp::Kind::mutateExternalState: {
            std::vector<std::string> keys;
            for (const auto& [key, _] : ctx.external_state) keys.push_back(key);
            op.state_key = keys[pick_index(keys.size())];
            break;
        }
        case EvolutionOp::Kind::bumpEngine:
            break;
    }
    return op;
}

namespace {

PortRef parse_port_ref(const std::string& text) {
    std::size_t dot = text.rfind('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == text.size())
        throw ParseError("port reference '" + text + "' is not of the form task.port");
    return {text.substr(0, dot), text.substr(dot + 1)};
}

TaskSpec parse_task(const ordered_json& j) {
    TaskSpec t;
    t.id = j.at("id").get<std::string>();
    t.service_id = j.at("serviceId").get<std::string>();
    if (j.contains("version")) t.version = j.at("version").get<std::string>();
    for (const auto& p : j.value("inPorts", ordered_json::array()))
        t.in_ports.push_back(p.get<std::string>());
    for (const auto& p : j.value("outPorts", ordered_json::array()))
        t.out_ports.push_back(p.get<std::string>());
    if (j.contains("behavior")) {
        const auto& b = j.at("behavior");
        std::string kind = b.value("kind", "deterministicHash");
        if (kind == "deterministicHash")
            t.behavior.kind = BehaviorKind::deterministicHash;
        else if (kind == "nondeterministic")
            t.behavior.kind = BehaviorKind::nondeterministic;
        else if (kind == "externalState")
            t.behavior.kind = BehaviorKind::externalState;
        else
            throw ParseError("unknown behavior kind '" + kind + "'");
        if (b.contains("stateKey")) t.behavior.state_key = b.at("stateKey").get<std::string>();
        if (b.contains("emitMime")) t.behavior.emit_mime = b.at("emitMime").get<std::string>();
    }
    return t;
}

EvolutionOp parse_op(const ordered_json& j) {
    EvolutionOp op;
    std::string kind = j.at("op").get<std::string>();
    if (kind == "replaceService") {
        op.kind = EvolutionOp::Kind::replaceService;
        op.task = j.at("task").get<std::string>();
        op.service_id = j.at("serviceId").get<std::string>();
    } else if (kind == "insertService") {
        op.kind = EvolutionOp::Kind::insertService;
        op.edge_from = parse_port_ref(j.at("edge").at("from").get<std::string>());
        op.edge_to = parse_port_ref(j.at("edge").at("to").get<std::string>());
        op.new_task = parse_task(j.at("task"));
        if (op.new_task.in_ports.empty()) op.new_task.in_ports = {"p0"};
        if (op.new_task.out_ports.empty()) op.new_task.out_ports = {"o0"};
    } else if (kind == "deleteService") {
        op.kind = EvolutionOp::Kind::deleteService;
        op.task = j.at("task").get<std::string>();
    } else if (kind == "bumpVersion") {
        op.kind = EvolutionOp::Kind::bumpVersion;
        op.task = j.at("task").get<std::string>();
    } else if (kind == "changeInput") {
        op.kind = EvolutionOp::Kind::changeInput;
        op.input_name = j.at("input").get<std::string>();
        op.content = j.at("content").get<std::string>();
    } else if (kind == "mutateExternalState") {
        op.kind = EvolutionOp::Kind::mutateExternalState;
        op.state_key = j.at("key").get<std::string>();
    } else if (kind == "bumpEngine") {
        op.kind = EvolutionOp::Kind::bumpEngine;
    } else {
        throw ParseError("unknown evolution op '" + kind + "'");
    }
    return op;
}

} // namespace

Scenario parse_scenario(std::string_view text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("scenario is not valid JSON: ") + e.what());
    }

    Scenario s;
    s.seed = doc.value("seed", 0ull);

    const auto& wfj = doc.at("baseWorkflow");
    WorkflowSpec wf;
    for (const auto& tj : wfj.at("tasks")) {
        TaskSpec t = parse_task(tj);
        std::string id = t.id;
        wf.tasks.emplace(id, std::move(t));
    }
    for (const auto& ej : wfj.value("edges", ordered_json::array()))
        wf.edges.emplace_back(parse_port_ref(ej.at("from").get<std::string>()),
                              parse_port_ref(ej.at("to").get<std::string>()));
    if (wfj.contains("inputs"))
        for (const auto& [name, port] : wfj.at("inputs").items())
            wf.input_bindings[name] = parse_port_ref(port.get<std::string>());
    if (wfj.contains("outputs"))
        for (const auto& [port, name] : wfj.at("outputs").items())
            wf.output_bindings[parse_port_ref(port)] = name.get<std::string>();
    wf.validate();

    // Explicit context entries win; anything missing is seeded.
    ExecutionContext seeded = random_context(s.seed, wf);
    s.base = std::move(seeded);
    if (doc.contains("context")) {
        const auto& cj = doc.at("context");
        if (cj.contains("inputs"))
            for (const auto& [name, content] : cj.at("inputs").items())
                s.base.inputs[name] = content.get<std::string>();
        if (cj.contains("externalState"))
            for (const auto& [key, value] : cj.at("externalState").items())
                s.base.external_state[key] = value.get<std::string>();
        if (cj.contains("engineVersion"))
            s.base.engine_version = cj.at("engineVersion").get<std::string>();
    }

    for (const auto& oj : doc.value("ops", ordered_json::array())) s.ops.push_back(parse_op(oj));
    return s;
}

std::string serialize_mismatch_records(const std::set<MismatchRecord>& records) {
    ordered_json doc;
    doc["format"] = "provdelta-mismatches/1";
    doc["records"] = ordered_json::array();
    for (const auto& r : records) {
        ordered_json j;
        switch (r.kind) {
            case MismatchRecord::Kind::data:
                j["kind"] = "data";
                j["left"] = r.left;
                j["right"] = r.right;
                break;
            case MismatchRecord::Kind::version:
                j["kind"] = "version";
                j["left"] = r.left;
                j["right"] = r.right;
                break;
            case MismatchRecord::Kind::skipLeft:
                j["kind"] = "skipLeft";
                j["id"] = r.left;
                break;
            case MismatchRecord::Kind::skipRight:
                j["kind"] = "skipRight";
                j["id"] = r.right;
                break;
        }
        doc["records"].push_back(std::move(j));
    }
    return doc.dump(2) + "\n";
}

std::set<MismatchRecord> parse_mismatch_records(std::string_view text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("mismatch file is not valid JSON: ") + e.what());
    }
    if (doc.value("format", "") != "provdelta-mismatches/1")
        throw ParseError("unsupported mismatch file format");
    std::set<MismatchRecord> records;
    for (const auto& j : doc.at("records")) {
        std::string kind = j.at("kind").get<std::string>();
        if (kind == "data")
            records.insert({MismatchRecord::Kind::data, j.at("left").get<std::string>(),
                            j.at("right").get<std::string>()});
        else if (kind == "version")
            records.insert({MismatchRecord::Kind::version, j.at("left").get<std::string>(),
                            j.at("right").get<std::string>()});
        else if (kind == "skipLeft")
            records.insert({MismatchRecord::Kind::skipLeft, j.at("id").get<std::string>(), ""});
        else if (kind == "skipRight")
            records.insert({MismatchRecord::Kind::skipRight, "", j.at("id").get<std::string>()});
        else
            throw ParseError("unknown mismatch record kind '" + kind + "'");
    }
    return records;
}

} // namespace provdelta
