#pragma once

#include "provdelta/pdiff.hpp"
#include "provdelta/registry.hpp"
#include "provdelta/trace.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace provdelta {

enum class BehaviorKind { deterministicHash, nondeterministic, externalState };

/// How a simulated task derives its outputs. deterministicHash digests
/// (service, version, port, input hashes); externalState additionally folds
/// in a bound external value; nondeterministic folds in the run id, so
/// repeated runs of the same context diverge.
struct TaskBehavior {
    BehaviorKind kind = BehaviorKind::deterministicHash;
    std::optional<std::string> state_key; // externalState only
    std::optional<std::string> emit_mime; // persisted outputs carry generated bytes of this type
};

struct TaskSpec {
    std::string id;
    std::string service_id;
    std::string version = "1";
    std::vector<std::string> in_ports;
    std::vector<std::string> out_ports;
    TaskBehavior behavior;
};

struct PortRef {
    std::string task;
    std::string port;

    auto operator<=>(const PortRef&) const = default;
    std::string str() const { return task + "." + port; }
};

/// The workflow graph handed to the simulator: tasks wired port-to-port,
/// with named workflow inputs and outputs.
struct WorkflowSpec {
    std::map<std::string, TaskSpec> tasks;
    std::vector<std::pair<PortRef, PortRef>> edges; // producer port -> consumer port
    std::map<std::string, PortRef> input_bindings;  // input name -> consuming port
    std::map<PortRef, std::string> output_bindings; // producing port -> output name

    /// Throws std::invalid_argument when the spec violates its invariants
    /// (cycle, unfed or doubly-fed input port, dangling references).
    void validate() const;
};

/// The versioned 4-tuple one execution depends on, with explicit version
/// indices per element and the logical time of the next execution.
struct ExecutionContext {
    WorkflowSpec workflow;
    std::map<std::string, std::string> external_state;
    std::map<std::string, std::string> inputs; // input name -> content bytes
    std::string engine_version = "1";

    int workflow_index = 1; // i
    int external_index = 1; // j
    int data_index = 1;     // h
    int engine_index = 1;   // k
    int time = 2;           // t, always > every index
};

enum class ScenarioClass {
    repeat,
    methodEvolution,
    dataEvolution,
    methodAndDataEvolution,
    externalDecay,
    engineChange,
};

std::string to_string(ScenarioClass c);

struct EvolutionOp {
    enum class Kind {
        replaceService,
        insertService,
        deleteService,
        bumpVersion,
        changeInput,
        mutateExternalState,
        bumpEngine,
    };

    Kind kind = Kind::bumpEngine;
    std::string task;          // replaceService, deleteService, bumpVersion
    std::string service_id;    // replaceService
    PortRef edge_from, edge_to; // insertService: the edge to splice
    TaskSpec new_task;         // insertService: single-input single-output task
    std::string input_name;    // changeInput
    std::string content;       // changeInput
    std::string state_key;     // mutateExternalState
};

std::string to_string(EvolutionOp::Kind k);

struct ExecutionResult {
    ProvenanceTrace trace;
    std::map<std::string, std::string> input_data_ids;  // input name -> data node id
    std::map<std::string, std::string> output_data_ids; // output name -> data node id
};

/// Evaluates the workflow in topological order, recording one activity per
/// task and used/genBy edges per wire. Workflow inputs and bound outputs are
/// persisted with inline content; everything else is transient.
ExecutionResult execute_workflow(const ExecutionContext& ctx, const std::string& run_id);

/// Returns a copy of ctx with exactly one element evolved, its version index
/// advanced and the time tick incremented. Throws std::invalid_argument when
/// the op references something that does not exist or cannot be rewired.
ExecutionContext apply_evolution(const ExecutionContext& ctx, const EvolutionOp& op);

/// Names the reproducibility scenario spanned by two contexts, from the
/// version indices alone. External decay outranks an engine change, which
/// outranks the experimenter-controlled combinations.
ScenarioClass classify_scenario(const ExecutionContext& a, const ExecutionContext& b);

/// Ground-truth mismatch set by exhaustive alignment search: descends the two
/// traces from the given outputs, enumerating every re-synchronisation choice
/// at service mismatches, and keeps the alignment of maximal size. Emits
/// aligned-but-unequal data pairs, aligned version mismatches, and every
/// activity in the searched cones left unaligned. Traces are limited to 20
/// activities each.
std::set<MismatchRecord> brute_force_delta(const ProvenanceTrace& trace_left,
                                           const ProvenanceTrace& trace_right,
                                           const DataNode& start_left,
                                           const DataNode& start_right,
                                           const ComparatorRegistry& registry,
                                           const ContentLoader& loader = inline_content_loader(),
                                           const ComparatorOptions& options = {});

/// Seeded random workflow: a connected DAG of up to max_tasks tasks with
/// unique services, fan-in <= 3, single-consumer data flow and one bound
/// output named "out".
WorkflowSpec random_workflow(std::uint64_t seed, int max_tasks);

/// Seeded context for a workflow: input contents and external state values.
ExecutionContext random_context(std::uint64_t seed, WorkflowSpec workflow);

/// Seeded applicable evolution op for the context.
EvolutionOp random_evolution(std::uint64_t seed, const ExecutionContext& ctx);

/// Scenario description file: seed, base workflow, optional explicit context
/// pieces, and the ops to apply in order.
struct Scenario {
    std::uint64_t seed = 0;
    ExecutionContext base;
    std::vector<EvolutionOp> ops;
};

Scenario parse_scenario(std::string_view text);
std::string serialize_mismatch_records(const std::set<MismatchRecord>& records);
std::set<MismatchRecord> parse_mismatch_records(std::string_view text);

} // namespace provdelta
