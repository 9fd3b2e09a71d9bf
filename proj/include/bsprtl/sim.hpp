#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bsprtl/netlist.hpp"

namespace bsprtl {

/// Per-cycle input values, one row per cycle, columns in netlist input order.
struct Stimulus {
  std::vector<std::string> input_names;
  std::vector<std::vector<std::uint64_t>> rows;

  /// One line per cycle of `input=value` pairs (decimal or 0x hex); blank
  /// lines and `#` comments are skipped. A row missing an input throws
  /// StimulusExhausted; unknown names or oversized values throw FormatError.
  static Stimulus parse(std::string_view text, const Netlist& n);
  /// Uniformly random values masked to each input width.
  static Stimulus random(const Netlist& n, std::uint64_t cycles, std::uint64_t seed);
  static Stimulus zeros(const Netlist& n, std::uint64_t cycles);

  /// Throws StimulusExhausted unless every cycle in [1, cycles] has a row.
  void require(std::uint64_t cycles) const;
  std::span<const std::uint64_t> row(std::uint64_t cycle) const;
};

/// Output values after each cycle's commit: value(c, o) for cycles 1..cycles.
struct Trace {
  std::vector<std::string> output_names;
  std::uint64_t cycles = 0;
  std::vector<std::uint64_t> values;

  std::uint64_t value(std::uint64_t cycle, std::size_t output) const {
    return values[(cycle - 1) * output_names.size() + output];
  }

  /// `cycle,output,value` header plus one row per cycle and output.
  std::string to_csv() const;
  /// Little-endian dump: "BSPT", u32 version, u32 outputs, names, u64 cycles, u64 values.
  std::string to_binary() const;
  static Trace from_binary(std::string_view bytes);

  friend bool operator==(const Trace&, const Trace&) = default;
};

struct StateView {
  std::uint64_t cycle = 0;
  std::span<const std::uint64_t> registers;
  std::vector<const std::vector<std::uint64_t>*> arrays;
};

/// Called after every commit with the state that cycle produced.
using StateObserver = std::function<void(const StateView&)>;

struct SimOptions {
  /// Initial array contents per array (empty entries mean all zeros).
  std::vector<std::vector<std::uint64_t>> array_init;
  StateObserver observer;
};

struct SimState {
  std::vector<std::uint64_t> registers;
  std::vector<std::vector<std::uint64_t>> arrays;
  std::uint64_t cycle = 0;
  Trace trace;
};

/// An out-of-range array access observed during one cycle. Simulators report
/// the smallest (array, index) pair when several occur in the same cycle.
struct IndexFault {
  std::uint32_t array = 0;
  std::uint64_t index = 0;

  friend auto operator<=>(const IndexFault&, const IndexFault&) = default;
};

Error index_fault_error(const Netlist& n, const IndexFault& fault, std::uint64_t cycle);

/// Wires reachable from `roots`, dependencies first.
std::vector<std::uint32_t> wires_needed(const Netlist& n, std::span<const Expr* const> roots);

/// Sequential full-cycle simulation over the expression trees.
SimState simulate_reference(const Netlist& n, const Stimulus& stim, std::uint64_t cycles,
                            const SimOptions& options = {});

/// Whitespace-separated element values (decimal or 0x hex) for an array preload;
/// missing trailing elements are zero. Throws FormatError.
std::vector<std::uint64_t> parse_preload(std::string_view text, unsigned width, std::uint64_t depth);

/// Evaluates wires and output expressions against a committed state. Shared by
/// the simulators to produce trace rows.
class OutputEvaluator {
 public:
  explicit OutputEvaluator(const Netlist& n);
  /// Appends one row of output values. Throws IndexOutOfRange.
  void evaluate(std::uint64_t cycle, std::span<const std::uint64_t> inputs, std::span<const std::uint64_t> registers,
                std::span<const std::vector<std::uint64_t>* const> arrays, std::vector<std::uint64_t>& out);

 private:
  const Netlist& n_;
  std::vector<std::uint32_t> wires_;
  std::vector<std::uint64_t> wire_values_;
};

}  // namespace bsprtl
