#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace bsprtl {

struct Hypergraph {
  std::vector<std::uint64_t> node_weight;
  std::vector<std::vector<std::uint32_t>> edges;
  std::vector<std::uint64_t> edge_weight;

  std::size_t num_nodes() const { return node_weight.size(); }
  std::uint64_t total_weight() const;
  /// Adds a hyperedge; duplicate pins are removed. Edges with fewer than two
  /// pins are kept (they never contribute to a cut).
  void add_edge(std::vector<std::uint32_t> pins, std::uint64_t weight);
};

struct HypergraphConfig {
  double epsilon = 0.05;
  int fm_passes = 10;
  int initial_trials = 8;
  std::uint32_t coarsen_to = 64;
  /// Independent multilevel runs per bisection; the smallest feasible cut wins.
  int restarts = 4;
  std::uint64_t seed = 0;
};

/// Largest admissible part weight: floor((1 + eps) * ceil(total / k)).
std::uint64_t balanced_part_cap(std::uint64_t total, std::uint32_t k, double epsilon);

/// k-way partition by recursive multilevel bisection (heavy-edge coarsening,
/// greedy/random initial bisections, boundary FM refinement). `caps[i]` bounds
/// the weight of part i. Throws InfeasibleBalance if the caps cannot be met.
std::vector<std::uint32_t> partition_hypergraph(const Hypergraph& hg, std::uint32_t k,
                                                std::span<const std::uint64_t> caps,
                                                const HypergraphConfig& cfg);

/// Sum of weights of edges whose pins span more than one part.
std::uint64_t cut_weight(const Hypergraph& hg, std::span<const std::uint32_t> parts);
/// Sum over edges of weight * (number of parts spanned - 1).
std::uint64_t connectivity_cost(const Hypergraph& hg, std::span<const std::uint32_t> parts);

}  // namespace bsprtl
