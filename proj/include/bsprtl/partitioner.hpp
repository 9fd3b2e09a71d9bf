#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bsprtl/depgraph.hpp"
#include "bsprtl/hypergraph.hpp"
#include "bsprtl/node_set.hpp"
#include "bsprtl/profile.hpp"

namespace bsprtl {

enum class SingleChipStrategy : std::uint8_t { BottomUp, Hypergraph };
enum class MultiChipStrategy : std::uint8_t { Pre, Post, None };

/// How stage 3 ranks the communicating partners of the seed process.
/// Ascending tries the cheapest merged result first; BestFit tries the
/// merged result closest to (but not above) the straggler first.
enum class CandidateOrder : std::uint8_t { Ascending, BestFit };

std::string_view to_string(SingleChipStrategy s);
std::string_view to_string(MultiChipStrategy s);
std::string_view to_string(CandidateOrder o);
SingleChipStrategy parse_single_chip(std::string_view s);
MultiChipStrategy parse_multi_chip(std::string_view s);
CandidateOrder parse_candidate_order(std::string_view s);

struct Process {
  std::uint32_t id = 0;
  std::vector<FiberId> fibers;
  NodeSet cone;
  std::uint64_t cost = 0;
  std::uint64_t data_mem = 0;
  std::uint64_t code_mem = 0;
  std::uint32_t chip = 0;
};

struct PartitionStrategy {
  SingleChipStrategy single = SingleChipStrategy::BottomUp;
  MultiChipStrategy multi = MultiChipStrategy::Pre;
};

struct PartitionOptions {
  PartitionStrategy strategy;
  std::uint64_t array_threshold = 128 * 1024;
  double epsilon = 0.05;
  /// Processes allowed per chip; 0 means profile.tiles_per_chip.
  std::uint32_t target_tiles_per_chip = 0;
  /// Balance stage 2 by fiber cost instead of fiber count.
  bool cost_weighted_balance = false;
  CandidateOrder stage3_order = CandidateOrder::BestFit;
  HypergraphConfig hypergraph;
};

struct PartitionStats {
  /// Per chip: straggler entering stage 3 and the maximum cost leaving it.
  std::vector<std::uint64_t> stage3_straggler_before;
  std::vector<std::uint64_t> stage3_straggler_after;
  std::vector<std::uint32_t> processes_after_stage3;
  std::uint64_t off_chip_cut = 0;
};

struct Partition {
  std::vector<Process> processes;
  std::vector<std::uint32_t> fiber_owner;
  std::vector<std::uint32_t> chip_of;
  std::uint32_t chips = 1;
  PartitionStrategy strategy;
  PartitionStats stats;

  std::uint64_t max_cost() const;
};

/// State elements as hyperedges over fibers: one per register (weight
/// ceil(w/32)) and one per array (ceil(w/32) * depth). Pins are the reading
/// fibers plus the writing fiber(s).
struct FiberHypergraph {
  Hypergraph hg;
  std::vector<std::string> edge_names;
  /// Fiber -> hyperedges it is a pin of (sorted).
  std::vector<std::vector<std::uint32_t>> fiber_edges;
};

FiberHypergraph build_fiber_hypergraph(std::span<const Fiber> fibers, const DepGraph& g);

/// τ(a ∪ b): deduplicated cost of two cones.
std::uint64_t process_cost(const NodeSet& a, const NodeSet& b, const DepGraph& g);
/// τ of a fiber set, via the union of its cones.
std::uint64_t fiber_set_cost(std::span<const FiberId> set, std::span<const Fiber> fibers, const DepGraph& g);

Process make_process(std::span<const FiberId> members, std::span<const Fiber> fibers, const DepGraph& g);

/// Groups of fibers that must share a tile because they touch an array of at
/// least `threshold` bytes; every other fiber is a singleton. Groups are
/// ordered by smallest fiber id. Throws GroupExceedsMemory.
std::vector<std::vector<FiberId>> stage1_array_colocate(std::span<const Fiber> fibers, const DepGraph& g,
                                                         std::uint64_t threshold, const MachineProfile& profile);

/// Chip of every group. Hypernode weight is the fiber count (or cost when
/// `cost_weighted`); hyperedges are the fiber hyperedges contracted onto groups.
/// Throws InfeasibleBalance.
std::vector<std::uint32_t> stage2_chip_partition(std::span<const std::vector<FiberId>> groups,
                                                 std::span<const Fiber> fibers, const FiberHypergraph& fhg,
                                                 std::uint32_t k, double epsilon, bool cost_weighted,
                                                 const HypergraphConfig& cfg);

/// Merges processes while keeping the maximum cost unchanged and memory within
/// budget. Stops once the count is at most `target`.
std::vector<Process> stage3_conservative_merge(std::vector<Process> procs, std::span<const Fiber> fibers,
                                               const FiberHypergraph& fhg, const DepGraph& g,
                                               const MachineProfile& profile, std::uint32_t target,
                                               CandidateOrder order = CandidateOrder::BestFit);

/// Merges under memory limits only until the count is at most `target`.
/// Throws DesignTooLarge if it cannot get there.
std::vector<Process> stage4_relaxed_merge(std::vector<Process> procs, std::span<const Fiber> fibers,
                                          const FiberHypergraph& fhg, const DepGraph& g,
                                          const MachineProfile& profile, std::uint32_t target);

/// Balanced k-way partition of processes over shared computation: hypernodes
/// are processes weighted by cost, hyperedges are clusters of nodes with the
/// same process membership weighted by their cost. Returns merged processes.
std::vector<Process> hypergraph_merge(std::vector<Process> procs, std::span<const Fiber> fibers, const DepGraph& g,
                                      const MachineProfile& profile, std::uint32_t target, double epsilon,
                                      const HypergraphConfig& cfg);

Partition partition(std::span<const Fiber> fibers, const DepGraph& g, const MachineProfile& profile,
                    const PartitionOptions& options = {});

/// Builds a partition from an explicit fiber -> process map (process ids
/// dense from 0) and per-process chips. Memory budgets are not enforced.
Partition partition_from_assignment(std::span<const Fiber> fibers, const DepGraph& g,
                                    std::span<const std::uint32_t> fiber_to_process,
                                    std::span<const std::uint32_t> process_chip, std::uint32_t chips);

/// Weighted cut of the fiber hypergraph with each fiber labelled by its chip.
std::uint64_t off_chip_cut(const Partition& p, const FiberHypergraph& fhg);

/// Recomputes cost and memory of every process from its fibers' cones and
/// returns one message per inconsistency or budget violation.
std::vector<std::string> verify_partition(const Partition& p, std::span<const Fiber> fibers, const DepGraph& g,
                                          const MachineProfile& profile);

/// JSON document (schema "bsprtl.partition/1").
std::string partition_to_json(const Partition& p, std::string_view netlist_hash);
/// Rebuilds a partition from JSON; throws FormatError on schema or fiber mismatch.
Partition partition_from_json(std::string_view text, std::span<const Fiber> fibers, const DepGraph& g,
                              std::string_view expected_hash = {});

}  // namespace bsprtl
