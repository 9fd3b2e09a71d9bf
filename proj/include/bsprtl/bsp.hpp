#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bsprtl/depgraph.hpp"
#include "bsprtl/netlist.hpp"
#include "bsprtl/partitioner.hpp"
#include "bsprtl/sim.hpp"

namespace bsprtl {

constexpr std::uint64_t kDiffIndexBytes = 4;

struct RegisterRoute {
  std::uint32_t reg = 0;
  std::uint32_t producer = 0;
  std::vector<std::uint32_t> consumers;
  std::uint64_t bytes = 0;
};

/// One route per array write port. With diff exchange each enabled port sends
/// one (index, value) entry per consumer and every port sends a presence bit.
struct ArrayRoute {
  std::uint32_t port = 0;
  std::uint32_t array = 0;
  std::uint32_t producer = 0;
  std::vector<std::uint32_t> consumers;
  std::uint32_t max_updates_per_cycle = 0;
  std::uint64_t entry_bytes = 0;
};

/// Full-array copy used when diff exchange is off and every write port of
/// the array lives in one process.
struct ArrayCopyRoute {
  std::uint32_t array = 0;
  std::uint32_t producer = 0;
  std::vector<std::uint32_t> consumers;
  std::uint64_t bytes = 0;
};

/// Static per-cycle worst-case traffic of one process.
struct ProcessTraffic {
  std::uint64_t sent_on_chip = 0;
  std::uint64_t sent_off_chip = 0;
  std::uint64_t recv_on_chip = 0;
  std::uint64_t recv_off_chip = 0;
  std::uint64_t presence_bits_sent = 0;
  std::uint64_t presence_bits_recv = 0;
};

struct ExchangeOptions {
  bool diff_exchange = true;
};

struct ExchangeSchedule {
  std::vector<RegisterRoute> register_routes;
  std::vector<ArrayRoute> array_routes;
  std::vector<ArrayCopyRoute> copy_routes;
  std::vector<ProcessTraffic> per_process;
  std::uint64_t on_chip_bytes = 0;
  std::uint64_t off_chip_bytes = 0;
  std::uint64_t presence_bits = 0;

  /// Producer process of each register / write port.
  std::vector<std::uint32_t> register_producer;
  std::vector<std::uint32_t> port_producer;
  /// Processes holding a replica of each array, ascending; home is the first reader
  /// (or the first port's producer for write-only arrays).
  std::vector<std::vector<std::uint32_t>> array_holders;
  std::vector<std::uint32_t> array_home;
  /// Arrays exchanged by full copy (diff exchange off and a single producer).
  std::vector<std::uint8_t> array_copied;

  std::uint64_t total_bytes() const { return on_chip_bytes + off_chip_bytes; }
  /// Static bound on bytes one consumer receives for `array` in a cycle.
  std::uint64_t array_bytes_bound(const DepGraph& g, std::uint32_t array) const;
};

ExchangeSchedule build_exchange_schedule(const Partition& p, const DepGraph& g, std::span<const Fiber> fibers,
                                         const ExchangeOptions& options = {});

struct ProcessCounters {
  /// Evaluated nodes per cycle (current reads, compute, array ports, next writes).
  std::uint64_t node_evals_per_cycle = 0;
  std::uint64_t node_evals = 0;
  std::uint64_t bytes_sent_on_chip = 0;
  std::uint64_t bytes_sent_off_chip = 0;
  std::uint64_t bytes_recv_on_chip = 0;
  std::uint64_t bytes_recv_off_chip = 0;
  std::uint64_t presence_bits_sent = 0;
  std::uint64_t presence_bits_recv = 0;
  std::uint64_t diff_entries = 0;
  std::uint64_t max_bytes_sent_cycle = 0;
  std::uint64_t max_bytes_recv_cycle = 0;
};

struct ExecCounters {
  std::vector<ProcessCounters> processes;
  std::uint64_t cycles = 0;
  std::uint64_t barriers = 0;
  /// Largest number of bytes any single consumer received for each array in one cycle.
  std::vector<std::uint64_t> array_max_bytes_per_consumer;
  std::uint64_t max_cycle_bytes = 0;
  std::uint64_t total_bytes = 0;
};

struct BspOptions {
  std::uint32_t workers = 1;
  ExchangeOptions exchange;
  SimOptions sim;
};

struct BspResult {
  SimState state;
  ExecCounters counters;
  ExchangeSchedule schedule;
};

/// Two-superstep BSP execution of a partition: compute, barrier, exchange, barrier.
BspResult simulate_bsp(const Partition& p, const Netlist& n, const DepGraph& g, std::span<const Fiber> fibers,
                       const Stimulus& stim, std::uint64_t cycles, const BspOptions& options = {});

}  // namespace bsprtl
