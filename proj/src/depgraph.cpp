#include "bsprtl/depgraph.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

namespace bsprtl {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Input: return "Input";
    case NodeKind::Const: return "Const";
    case NodeKind::CurrentRead: return "CurrentRead";
    case NodeKind::ArrayState: return "ArrayState";
    case NodeKind::Compute: return "Compute";
    case NodeKind::ArrayReadPort: return "ArrayReadPort";
    case NodeKind::ArrayWritePort: return "ArrayWritePort";
    case NodeKind::NextWrite: return "NextWrite";
  }
  return "?";
}

std::string_view to_string(ComputeOp op) {
  switch (op) {
    case ComputeOp::None: return "none";
    case ComputeOp::Not: return "not";
    case ComputeOp::Neg: return "neg";
    case ComputeOp::Add: return "add";
    case ComputeOp::Sub: return "sub";
    case ComputeOp::Mul: return "mul";
    case ComputeOp::And: return "and";
    case ComputeOp::Or: return "or";
    case ComputeOp::Xor: return "xor";
    case ComputeOp::Shl: return "shl";
    case ComputeOp::Shr: return "shr";
    case ComputeOp::Eq: return "eq";
    case ComputeOp::Ne: return "ne";
    case ComputeOp::Lt: return "lt";
    case ComputeOp::Le: return "le";
    case ComputeOp::Mux: return "mux";
    case ComputeOp::Slice: return "slice";
    case ComputeOp::Concat: return "concat";
  }
  return "?";
}

ComputeOp compute_op_of(UnaryOp op) { return op == UnaryOp::Not ? ComputeOp::Not : ComputeOp::Neg; }

ComputeOp compute_op_of(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return ComputeOp::Add;
    case BinaryOp::Sub: return ComputeOp::Sub;
    case BinaryOp::Mul: return ComputeOp::Mul;
    case BinaryOp::And: return ComputeOp::And;
    case BinaryOp::Or: return ComputeOp::Or;
    case BinaryOp::Xor: return ComputeOp::Xor;
    case BinaryOp::Shl: return ComputeOp::Shl;
    case BinaryOp::Shr: return ComputeOp::Shr;
    case BinaryOp::Eq: return ComputeOp::Eq;
    case BinaryOp::Ne: return ComputeOp::Ne;
    case BinaryOp::Lt: return ComputeOp::Lt;
    case BinaryOp::Le: return ComputeOp::Le;
  }
  return ComputeOp::None;
}

namespace {

constexpr std::string_view kKindKeys[] = {"input",      "const",       "current_read", "array_state",
                                          "array_read", "array_write", "next_write"};
constexpr std::string_view kOpKeys[] = {"not", "neg", "add", "sub", "mul", "and", "or",    "xor",   "shl",
                                        "shr", "eq",  "ne",  "lt",  "le",  "mux", "slice", "concat"};

bool known_key(std::string_view key) {
  return std::find(std::begin(kKindKeys), std::end(kKindKeys), key) != std::end(kKindKeys) ||
         std::find(std::begin(kOpKeys), std::end(kOpKeys), key) != std::end(kOpKeys);
}

std::string_view key_of(NodeKind kind, ComputeOp op) {
  switch (kind) {
    case NodeKind::Input: return "input";
    case NodeKind::Const: return "const";
    case NodeKind::CurrentRead: return "current_read";
    case NodeKind::ArrayState: return "array_state";
    case NodeKind::ArrayReadPort: return "array_read";
    case NodeKind::ArrayWritePort: return "array_write";
    case NodeKind::NextWrite: return "next_write";
    case NodeKind::Compute: return to_string(op);
  }
  return "?";
}

std::uint64_t bytes_of(unsigned width) { return (width + 7) / 8; }

}  // namespace

CostTable CostTable::defaults() {
  CostTable t;
  for (auto key : kOpKeys) t.costs[std::string(key)] = 1;
  t.costs["mul"] = 4;
  t.costs["array_read"] = 2;
  t.costs["array_write"] = 2;
  t.costs["current_read"] = 1;
  t.costs["next_write"] = 1;
  t.costs["const"] = 0;
  t.costs["input"] = 0;
  t.costs["array_state"] = 0;
  return t;
}

CostTable CostTable::zeros() {
  CostTable t = defaults();
  for (auto& [key, cost] : t.costs) cost = 0;
  return t;
}

void CostTable::set(const std::string& key, std::uint64_t cost) {
  if (key == "code_bytes") {
    code_bytes_per_node = cost;
    return;
  }
  if (!known_key(key)) throw Error(ErrorCode::UnknownOp, fmt::format("unknown cost table key '{}'", key));
  costs[key] = cost;
}

CostTable CostTable::parse(std::string_view text) {
  CostTable t = defaults();
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) throw Error(ErrorCode::FormatError, fmt::format("expected key=value: '{}'", line));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      t.set(key, std::stoull(value));
    } catch (const std::invalid_argument&) {
      throw Error(ErrorCode::FormatError, fmt::format("bad cost value '{}' for '{}'", value, key));
    }
  }
  return t;
}

NodeCostFn node_cost_table(const CostTable& table) {
  for (const auto& [key, cost] : table.costs) {
    if (!known_key(key)) throw Error(ErrorCode::UnknownOp, fmt::format("unknown cost table key '{}'", key));
  }
  auto costs = table.costs;
  return [costs = std::move(costs)](NodeKind kind, ComputeOp op) -> std::uint64_t {
    const auto key = key_of(kind, op);
    auto it = costs.find(std::string(key));
    if (it == costs.end()) throw Error(ErrorCode::UnknownOp, fmt::format("no cost for '{}'", key));
    return it->second;
  };
}

namespace {

class Elaborator {
 public:
  Elaborator(const Netlist& n, const CostTable& costs) : n_(n), cost_fn_(node_cost_table(costs)), costs_(costs) {}

  DepGraph run() {
    g_.design = n_.name;
    for (const auto& d : n_.inputs) g_.input_names.push_back(d.name);
    for (const auto& d : n_.registers) {
      g_.register_names.push_back(d.name);
      g_.register_widths.push_back(d.width);
    }
    for (const auto& d : n_.arrays) {
      g_.array_names.push_back(d.name);
      g_.array_widths.push_back(d.width);
      g_.array_depths.push_back(d.depth);
    }
    for (const auto& w : n_.array_writes) g_.write_port_array.push_back(w.array_index);

    for (std::uint32_t i = 0; i < n_.inputs.size(); ++i) {
      g_.input_node.push_back(add(NodeKind::Input, ComputeOp::None, n_.inputs[i].width, {}, i));
    }
    for (std::uint32_t r = 0; r < n_.registers.size(); ++r) {
      g_.current_read.push_back(add(NodeKind::CurrentRead, ComputeOp::None, n_.registers[r].width, {}, r));
    }
    for (std::uint32_t a = 0; a < n_.arrays.size(); ++a) {
      g_.array_state.push_back(add(NodeKind::ArrayState, ComputeOp::None, n_.arrays[a].width, {}, a));
    }

    wire_node_.assign(n_.wires.size(), UINT32_MAX);
    for (std::uint32_t r = 0; r < n_.registers.size(); ++r) {
      const auto& stmt = n_.next_statements[n_.next_of_register[r]];
      elaborate_wires_for(stmt.expr);
      const NodeId v = expr(stmt.expr);
      const NodeId sink = add(NodeKind::NextWrite, ComputeOp::None, n_.registers[r].width, {v}, r);
      g_.next_write.push_back(sink);
      g_.sinks.push_back(sink);
    }
    for (std::uint32_t p = 0; p < n_.array_writes.size(); ++p) {
      const auto& w = n_.array_writes[p];
      elaborate_wires_for(w.index);
      elaborate_wires_for(w.value);
      elaborate_wires_for(w.enable);
      const NodeId idx = expr(w.index);
      const NodeId val = expr(w.value);
      const NodeId en = expr(w.enable);
      const NodeId sink =
          add(NodeKind::ArrayWritePort, ComputeOp::None, n_.arrays[w.array_index].width, {idx, val, en}, w.array_index);
      g_.nodes[sink].port = p;
      g_.write_port.push_back(sink);
      g_.sinks.push_back(sink);
    }

    g_.consumers.assign(g_.nodes.size(), {});
    for (NodeId id = 0; id < g_.nodes.size(); ++id) {
      for (NodeId op : g_.nodes[id].operands) g_.consumers[op].push_back(id);
    }
    g_.topo_order.resize(g_.nodes.size());
    for (NodeId id = 0; id < g_.nodes.size(); ++id) g_.topo_order[id] = id;

    for (std::uint32_t w = 0; w < n_.wires.size(); ++w) {
      if (wire_node_[w] == UINT32_MAX) g_.unreferenced.push_back("wire " + n_.wires[w].name);
    }
    for (std::uint32_t i = 0; i < n_.inputs.size(); ++i) {
      if (g_.consumers[g_.input_node[i]].empty()) g_.unreferenced.push_back("input " + n_.inputs[i].name);
    }
    for (std::uint32_t r = 0; r < n_.registers.size(); ++r) {
      if (g_.consumers[g_.current_read[r]].empty()) g_.unreferenced.push_back("reg " + n_.registers[r].name);
    }
    for (std::uint32_t a = 0; a < n_.arrays.size(); ++a) {
      if (g_.consumers[g_.array_state[a]].empty()) g_.unreferenced.push_back("array " + n_.arrays[a].name);
    }
    return std::move(g_);
  }

 private:
  NodeId add(NodeKind kind, ComputeOp op, unsigned width, std::vector<NodeId> operands, std::uint32_t ref = 0) {
    DepNode node;
    node.kind = kind;
    node.op = op;
    node.width = width;
    node.ref = ref;
    node.operands = std::move(operands);
    node.cost = cost_fn_(kind, op);
    switch (kind) {
      case NodeKind::CurrentRead:
      case NodeKind::NextWrite:
        node.mem = bytes_of(width);
        break;
      case NodeKind::ArrayState:
        node.mem = n_.arrays[ref].depth * bytes_of(width);
        break;
      case NodeKind::Compute:
      case NodeKind::ArrayReadPort:
      case NodeKind::ArrayWritePort:
        node.code_bytes = costs_.code_bytes_per_node;
        break;
      default:
        break;
    }
    g_.cost_weights.push_back(node.cost);
    g_.mem_weights.push_back(node.mem);
    g_.code_weights.push_back(node.code_bytes);
    g_.nodes.push_back(std::move(node));
    return static_cast<NodeId>(g_.nodes.size() - 1);
  }

  static void wire_refs(const Expr& e, std::vector<std::uint32_t>& out) {
    if (e.kind == ExprKind::Ref && e.sym.kind == SymbolKind::Wire) out.push_back(e.sym.index);
    for (const auto& op : e.operands) wire_refs(op, out);
  }

  // Elaborates every not-yet-built wire that `root` depends on, dependencies first.
  void elaborate_wires_for(const Expr& root) {
    std::vector<std::uint32_t> direct;
    wire_refs(root, direct);
    std::vector<std::pair<std::uint32_t, bool>> stack;
    for (auto it = direct.rbegin(); it != direct.rend(); ++it) stack.push_back({*it, false});
    while (!stack.empty()) {
      auto [w, expanded] = stack.back();
      stack.pop_back();
      if (wire_node_[w] != UINT32_MAX && wire_node_[w] != kPending) continue;
      if (expanded) {
        wire_node_[w] = expr(n_.wires[w].expr);
        continue;
      }
      if (wire_node_[w] == kPending) continue;
      wire_node_[w] = kPending;
      stack.push_back({w, true});
      std::vector<std::uint32_t> deps;
      wire_refs(n_.wires[w].expr, deps);
      for (auto it = deps.rbegin(); it != deps.rend(); ++it) {
        if (wire_node_[*it] == UINT32_MAX) stack.push_back({*it, false});
      }
    }
  }

  NodeId expr(const Expr& e) {
    switch (e.kind) {
      case ExprKind::Const: {
        const NodeId id = add(NodeKind::Const, ComputeOp::None, e.width, {});
        g_.nodes[id].value = e.value;
        return id;
      }
      case ExprKind::Ref:
        switch (e.sym.kind) {
          case SymbolKind::Input: return g_.input_node[e.sym.index];
          case SymbolKind::Register: return g_.current_read[e.sym.index];
          case SymbolKind::Wire: return wire_node_[e.sym.index];
          default: break;
        }
        throw Error(ErrorCode::UnresolvedRef, fmt::format("unresolved reference '{}'", e.name), e.loc);
      case ExprKind::Unary: {
        const NodeId a = expr(e.operands[0]);
        return add(NodeKind::Compute, compute_op_of(e.unary), e.width, {a});
      }
      case ExprKind::Binary: {
        const NodeId a = expr(e.operands[0]);
        const NodeId b = expr(e.operands[1]);
        return add(NodeKind::Compute, compute_op_of(e.binary), e.width, {a, b});
      }
      case ExprKind::Mux: {
        const NodeId c = expr(e.operands[0]);
        const NodeId a = expr(e.operands[1]);
        const NodeId b = expr(e.operands[2]);
        return add(NodeKind::Compute, ComputeOp::Mux, e.width, {c, a, b});
      }
      case ExprKind::Slice: {
        const NodeId a = expr(e.operands[0]);
        const NodeId id = add(NodeKind::Compute, ComputeOp::Slice, e.width, {a});
        g_.nodes[id].hi = e.hi;
        g_.nodes[id].lo = e.lo;
        return id;
      }
      case ExprKind::Concat: {
        std::vector<NodeId> parts;
        for (const auto& p : e.operands) parts.push_back(expr(p));
        return add(NodeKind::Compute, ComputeOp::Concat, e.width, std::move(parts));
      }
      case ExprKind::ArrayRead: {
        const NodeId idx = expr(e.operands[0]);
        return add(NodeKind::ArrayReadPort, ComputeOp::None, e.width, {g_.array_state[e.sym.index], idx},
                   e.sym.index);
      }
    }
    return 0;
  }

  static constexpr std::uint32_t kPending = UINT32_MAX - 1;

  const Netlist& n_;
  NodeCostFn cost_fn_;
  const CostTable& costs_;
  DepGraph g_;
  std::vector<NodeId> wire_node_;
};

}  // namespace

DepGraph elaborate(const Netlist& n, const CostTable& costs) { return Elaborator(n, costs).run(); }

std::size_t DepGraph::edge_count() const {
  std::size_t total = 0;
  for (const auto& node : nodes) total += node.operands.size();
  return total;
}

std::uint64_t DepGraph::array_bytes(std::uint32_t array) const {
  return array_depths[array] * ((array_widths[array] + 7) / 8);
}

std::string DepGraph::sink_name(NodeId sink) const {
  const auto& node = nodes[sink];
  if (node.kind == NodeKind::NextWrite) return "next " + register_names[node.ref];
  return fmt::format("write {}#{}", array_names[node.ref], node.port);
}

std::string DepGraph::dump() const {
  std::ostringstream out;
  for (NodeId id = 0; id < nodes.size(); ++id) {
    const auto& node = nodes[id];
    if (node.kind == NodeKind::Compute) {
      out << fmt::format("node {} Compute:{} {} {}\n", id, to_string(node.op), node.width, node.cost);
    } else {
      out << fmt::format("node {} {} {} {}\n", id, to_string(node.kind), node.width, node.cost);
    }
  }
  for (NodeId id = 0; id < nodes.size(); ++id) {
    for (NodeId op : nodes[id].operands) out << fmt::format("edge {} {}\n", op, id);
  }
  return out.str();
}

std::vector<Fiber> extract_fibers(const DepGraph& g) {
  std::vector<Fiber> fibers;
  fibers.reserve(g.sinks.size());
  std::vector<std::uint32_t> mark(g.nodes.size(), UINT32_MAX);
  std::vector<NodeId> stack;
  std::vector<std::uint32_t> ids;
  for (FiberId f = 0; f < g.sinks.size(); ++f) {
    Fiber fiber;
    fiber.id = f;
    fiber.sink = g.sinks[f];
    ids.clear();
    stack.assign(1, fiber.sink);
    mark[fiber.sink] = f;
    while (!stack.empty()) {
      const NodeId id = stack.back();
      stack.pop_back();
      ids.push_back(id);
      const auto& node = g.nodes[id];
      if (node.kind == NodeKind::CurrentRead) fiber.read_registers.push_back(node.ref);
      if (node.kind == NodeKind::ArrayState) fiber.read_arrays.push_back(node.ref);
      for (NodeId op : node.operands) {
        if (mark[op] != f) {
          mark[op] = f;
          stack.push_back(op);
        }
      }
    }
    fiber.cone = NodeSet::from_ids(std::move(ids));
    ids = {};
    fiber.cost = fiber.cone.weighted_sum(g.cost_weights);
    fiber.data_mem = fiber.cone.weighted_sum(g.mem_weights);
    fiber.code_mem = fiber.cone.weighted_sum(g.code_weights);
    std::sort(fiber.read_registers.begin(), fiber.read_registers.end());
    std::sort(fiber.read_arrays.begin(), fiber.read_arrays.end());
    fiber.touched_arrays = fiber.read_arrays;
    if (g.nodes[fiber.sink].kind == NodeKind::ArrayWritePort) {
      const auto a = g.nodes[fiber.sink].ref;
      if (!std::binary_search(fiber.touched_arrays.begin(), fiber.touched_arrays.end(), a)) {
        fiber.touched_arrays.insert(
            std::lower_bound(fiber.touched_arrays.begin(), fiber.touched_arrays.end(), a), a);
      }
    }
    fibers.push_back(std::move(fiber));
  }
  return fibers;
}

}  // namespace bsprtl
