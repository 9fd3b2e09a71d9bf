#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bsprtl/bsp.hpp"
#include "bsprtl/depgraph.hpp"
#include "bsprtl/partitioner.hpp"
#include "bsprtl/profile.hpp"

namespace bsprtl {

struct ProcessCost {
  std::uint32_t id = 0;
  std::uint32_t chip = 0;
  std::uint64_t tau = 0;
  std::uint64_t on_chip_bytes = 0;
  std::uint64_t off_chip_bytes = 0;
};

/// Per-cycle latency decomposition in machine cycles.
struct CostReport {
  double t_sync = 0;
  double t_comm_on_chip = 0;
  double t_comm_off_chip = 0;
  /// Fixed per-cycle message cost, charged once whenever any route carries bytes.
  double t_comm_overhead = 0;
  double t_comp = 0;
  double rate = 0;
  std::uint32_t active_tiles = 0;
  std::vector<ProcessCost> per_process;
  std::uint64_t m_crit = 0;
  FiberId straggler_fiber = 0;
  std::uint64_t straggler_cost = 0;

  double t_comm() const { return t_comm_on_chip + t_comm_off_chip + t_comm_overhead; }
  double total() const { return t_sync + t_comm() + t_comp; }
};

CostReport estimate(const Partition& p, const ExchangeSchedule& s, const MachineProfile& profile,
                    std::span<const Fiber> fibers);

struct StragglerAnalysis {
  /// Fiber costs, descending.
  std::vector<std::uint64_t> sorted_costs;
  FiberId straggler = 0;
  std::uint64_t straggler_cost = 0;
  /// Smallest tile count whose LPT makespan equals the straggler cost.
  std::uint64_t m_crit = 0;
};

/// Longest-processing-time-first makespan of `costs` on `m` machines.
std::uint64_t lpt_makespan(std::span<const std::uint64_t> costs, std::uint64_t m);

StragglerAnalysis straggler_analysis(std::span<const Fiber> fibers);

/// Tile budget for a sweep point: a fraction of each chip (`1/8`, `full`) or
/// an absolute total tile count split evenly over the chips.
struct TileSpec {
  std::string label = "full";
  std::uint32_t num = 1;
  std::uint32_t den = 1;
  std::uint64_t total = 0;

  static TileSpec parse(std::string_view text);
  std::uint32_t per_chip(const MachineProfile& profile) const;
  double fraction(const MachineProfile& profile) const;
};

struct SweepPoint {
  TileSpec tiles;
  PartitionStrategy strategy;
  bool ok = false;
  std::string error;
  CostReport report;
  std::uint32_t processes = 0;
  std::uint64_t off_chip_cut = 0;
};

/// One cost report per (tile budget, strategy). Partitioner failures are
/// recorded on the point and the sweep continues.
std::vector<SweepPoint> scaling_sweep(const DepGraph& g, std::span<const Fiber> fibers, const MachineProfile& profile,
                                      std::span<const TileSpec> tiles, std::span<const PartitionStrategy> strategies,
                                      const PartitionOptions& base = {});

/// `fraction,strategy,tsync,tcomm_on,tcomm_off,tcomp,rate` followed by extra
/// columns (message overhead, process count, off-chip cut, and the three terms
/// normalised to the smallest configuration of the same strategy).
std::string sweep_csv(std::span<const SweepPoint> points, const MachineProfile& profile);
std::string sweep_json(std::span<const SweepPoint> points, const MachineProfile& profile);

std::string report_json(const CostReport& r);

}  // namespace bsprtl
