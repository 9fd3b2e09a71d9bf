#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bsprtl/netlist.hpp"
#include "bsprtl/node_set.hpp"

namespace bsprtl {

using NodeId = std::uint32_t;
using FiberId = std::uint32_t;

enum class NodeKind : std::uint8_t {
  Input,
  Const,
  CurrentRead,
  ArrayState,
  Compute,
  ArrayReadPort,
  ArrayWritePort,
  NextWrite,
};

enum class ComputeOp : std::uint8_t {
  None,
  Not,
  Neg,
  Add,
  Sub,
  Mul,
  And,
  Or,
  Xor,
  Shl,
  Shr,
  Eq,
  Ne,
  Lt,
  Le,
  Mux,
  Slice,
  Concat,
};

std::string_view to_string(NodeKind kind);
std::string_view to_string(ComputeOp op);
ComputeOp compute_op_of(UnaryOp op);
ComputeOp compute_op_of(BinaryOp op);

/// Machine-cycle cost per node kind / compute op, plus the code-size estimate
/// charged per executable node. Keys are the lower-case op names (add, mul, ...)
/// and the node kinds current_read, next_write, const, input, array_state,
/// array_read, array_write.
struct CostTable {
  std::map<std::string, std::uint64_t> costs;
  std::uint64_t code_bytes_per_node = 16;

  static CostTable defaults();
  static CostTable zeros();
  /// Parses `key=value` lines (`#` comments) on top of the defaults. Throws UnknownOp.
  static CostTable parse(std::string_view text);

  void set(const std::string& key, std::uint64_t cost);
};

using NodeCostFn = std::function<std::uint64_t(NodeKind, ComputeOp)>;

/// Validates the table and returns the per-node cost function. Throws UnknownOp
/// for unrecognised keys and for ops the table leaves unpriced.
NodeCostFn node_cost_table(const CostTable& table);

struct DepNode {
  NodeKind kind = NodeKind::Const;
  ComputeOp op = ComputeOp::None;
  unsigned width = 1;
  /// Input / register / array index, depending on kind.
  std::uint32_t ref = 0;
  /// Write statement index for ArrayWritePort nodes.
  std::uint32_t port = 0;
  std::uint64_t value = 0;
  unsigned hi = 0;
  unsigned lo = 0;
  std::vector<NodeId> operands;
  std::uint64_t cost = 0;
  std::uint64_t mem = 0;
  std::uint64_t code_bytes = 0;
};

/// Data-dependence graph with every register split into a current-read source
/// and a next-write sink. Node ids are already a topological order.
struct DepGraph {
  std::vector<DepNode> nodes;
  std::vector<std::vector<NodeId>> consumers;
  std::vector<NodeId> topo_order;
  /// NextWrite nodes in register order, then ArrayWritePort nodes in statement order.
  std::vector<NodeId> sinks;

  std::vector<NodeId> input_node;
  std::vector<NodeId> current_read;
  std::vector<NodeId> next_write;
  std::vector<NodeId> array_state;
  std::vector<NodeId> write_port;

  // Per-node weights laid out for NodeSet::weighted_sum.
  std::vector<std::uint64_t> cost_weights;
  std::vector<std::uint64_t> mem_weights;
  std::vector<std::uint64_t> code_weights;

  // State element facts copied from the netlist.
  std::string design;
  std::vector<std::string> input_names;
  std::vector<std::string> register_names;
  std::vector<unsigned> register_widths;
  std::vector<std::string> array_names;
  std::vector<unsigned> array_widths;
  std::vector<std::uint64_t> array_depths;
  std::vector<std::uint32_t> write_port_array;

  /// Declarations that feed no sink (never elaborated or with unused state nodes).
  std::vector<std::string> unreferenced;

  std::size_t edge_count() const;
  std::uint64_t array_bytes(std::uint32_t array) const;
  std::string sink_name(NodeId sink) const;
  /// `node <id> <kind> <width> <cost>` / `edge <src> <dst>` lines.
  std::string dump() const;
};

DepGraph elaborate(const Netlist& n, const CostTable& costs = CostTable::defaults());

struct Fiber {
  FiberId id = 0;
  NodeId sink = 0;
  NodeSet cone;
  std::uint64_t cost = 0;
  std::uint64_t data_mem = 0;
  std::uint64_t code_mem = 0;
  std::vector<std::uint32_t> read_registers;
  std::vector<std::uint32_t> read_arrays;
  /// Arrays read or written by this fiber.
  std::vector<std::uint32_t> touched_arrays;
};

/// One fiber per sink (fiber id == sink position), cones by reverse traversal.
std::vector<Fiber> extract_fibers(const DepGraph& g);

}  // namespace bsprtl
