#include <algorithm>
#include <bit>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "bsprtl/netlist.hpp"

namespace bsprtl {

std::string_view to_string(UnaryOp op) { return op == UnaryOp::Not ? "not" : "neg"; }

std::string_view symbol_of(UnaryOp op) { return op == UnaryOp::Not ? "~" : "-"; }

std::string_view to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "add";
    case BinaryOp::Sub: return "sub";
    case BinaryOp::Mul: return "mul";
    case BinaryOp::And: return "and";
    case BinaryOp::Or: return "or";
    case BinaryOp::Xor: return "xor";
    case BinaryOp::Shl: return "shl";
    case BinaryOp::Shr: return "shr";
    case BinaryOp::Eq: return "eq";
    case BinaryOp::Ne: return "ne";
    case BinaryOp::Lt: return "lt";
    case BinaryOp::Le: return "le";
  }
  return "?";
}

std::string_view symbol_of(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::And: return "&";
    case BinaryOp::Or: return "|";
    case BinaryOp::Xor: return "^";
    case BinaryOp::Shl: return "<<";
    case BinaryOp::Shr: return ">>";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
  }
  return "?";
}

bool is_comparison(BinaryOp op) {
  return op == BinaryOp::Eq || op == BinaryOp::Ne || op == BinaryOp::Lt || op == BinaryOp::Le;
}

bool is_shift(BinaryOp op) { return op == BinaryOp::Shl || op == BinaryOp::Shr; }

std::uint64_t width_mask(unsigned width) {
  return width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
}

unsigned min_width(std::uint64_t value) {
  return value == 0 ? 1u : static_cast<unsigned>(std::bit_width(value));
}

Expr Expr::constant(std::uint64_t value, unsigned width) {
  Expr e;
  e.kind = ExprKind::Const;
  e.value = value;
  e.width = width;
  return e;
}

Expr Expr::ref(std::string name) {
  Expr e;
  e.kind = ExprKind::Ref;
  e.name = std::move(name);
  return e;
}

Expr Expr::unary_op(UnaryOp op, Expr a) {
  Expr e;
  e.kind = ExprKind::Unary;
  e.unary = op;
  e.operands.push_back(std::move(a));
  return e;
}

Expr Expr::binary_op(BinaryOp op, Expr a, Expr b) {
  Expr e;
  e.kind = ExprKind::Binary;
  e.binary = op;
  e.operands.push_back(std::move(a));
  e.operands.push_back(std::move(b));
  return e;
}

Expr Expr::mux(Expr cond, Expr then_expr, Expr else_expr) {
  Expr e;
  e.kind = ExprKind::Mux;
  e.operands.push_back(std::move(cond));
  e.operands.push_back(std::move(then_expr));
  e.operands.push_back(std::move(else_expr));
  return e;
}

Expr Expr::slice(Expr a, unsigned hi, unsigned lo) {
  Expr e;
  e.kind = ExprKind::Slice;
  e.hi = hi;
  e.lo = lo;
  e.operands.push_back(std::move(a));
  return e;
}

Expr Expr::concat(std::vector<Expr> parts) {
  Expr e;
  e.kind = ExprKind::Concat;
  e.operands = std::move(parts);
  return e;
}

Expr Expr::array_read(std::string array, Expr index) {
  Expr e;
  e.kind = ExprKind::ArrayRead;
  e.name = std::move(array);
  e.operands.push_back(std::move(index));
  return e;
}

bool same_structure(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.width != b.width || a.operands.size() != b.operands.size()) return false;
  switch (a.kind) {
    case ExprKind::Const:
      if (a.value != b.value) return false;
      break;
    case ExprKind::Ref:
    case ExprKind::ArrayRead:
      if (a.name != b.name) return false;
      break;
    case ExprKind::Unary:
      if (a.unary != b.unary) return false;
      break;
    case ExprKind::Binary:
      if (a.binary != b.binary) return false;
      break;
    case ExprKind::Slice:
      if (a.hi != b.hi || a.lo != b.lo) return false;
      break;
    default:
      break;
  }
  for (std::size_t i = 0; i < a.operands.size(); ++i) {
    if (!same_structure(a.operands[i], b.operands[i])) return false;
  }
  return true;
}

SymbolRef Netlist::lookup(std::string_view id) const {
  auto it = symbols_.find(std::string(id));
  return it == symbols_.end() ? SymbolRef{} : it->second;
}

void Netlist::rebuild_symbols() {
  symbols_.clear();
  auto add = [&](const std::string& name, SymbolKind kind, std::size_t i) {
    symbols_.try_emplace(name, SymbolRef{kind, static_cast<std::uint32_t>(i)});
  };
  for (std::size_t i = 0; i < inputs.size(); ++i) add(inputs[i].name, SymbolKind::Input, i);
  for (std::size_t i = 0; i < registers.size(); ++i) add(registers[i].name, SymbolKind::Register, i);
  for (std::size_t i = 0; i < arrays.size(); ++i) add(arrays[i].name, SymbolKind::Array, i);
  for (std::size_t i = 0; i < wires.size(); ++i) add(wires[i].name, SymbolKind::Wire, i);
}

std::uint32_t Netlist::write_ports_of(std::uint32_t array) const {
  return static_cast<std::uint32_t>(
      std::count_if(array_writes.begin(), array_writes.end(),
                    [&](const ArrayWrite& w) { return w.array_index == array; }));
}

namespace {

class WidthChecker {
 public:
  explicit WidthChecker(Netlist& n) : n_(n) {}

  std::vector<Diagnostic> run() {
    check_declarations();
    for (auto& w : n_.wires) {
      stmt_ = w.loc;
      const unsigned got = check(w.expr, w.width);
      if (got != w.width) mismatch(w.width, got, fmt::format("wire '{}'", w.name));
    }
    n_.next_of_register.assign(n_.registers.size(), UINT32_MAX);
    for (std::size_t i = 0; i < n_.next_statements.size(); ++i) {
      auto& s = n_.next_statements[i];
      stmt_ = s.loc;
      const SymbolRef sym = n_.lookup(s.reg);
      if (sym.kind == SymbolKind::None) {
        diag(ErrorCode::UnresolvedRef, fmt::format("next for unknown register '{}'", s.reg));
        continue;
      }
      if (sym.kind != SymbolKind::Register) {
        diag(ErrorCode::KindMismatch, fmt::format("'{}' is not a register", s.reg));
        continue;
      }
      s.reg_index = sym.index;
      if (n_.next_of_register[sym.index] != UINT32_MAX) {
        diag(ErrorCode::MultipleNext, fmt::format("register '{}' has more than one next statement", s.reg));
      }
      n_.next_of_register[sym.index] = static_cast<std::uint32_t>(i);
      const unsigned want = n_.registers[sym.index].width;
      const unsigned got = check(s.expr, want);
      if (got != want) mismatch(want, got, fmt::format("next '{}'", s.reg));
    }
    for (std::size_t r = 0; r < n_.registers.size(); ++r) {
      if (n_.next_of_register[r] == UINT32_MAX) {
        stmt_ = n_.registers[r].loc;
        diag(ErrorCode::MissingNext, fmt::format("register '{}' has no next statement", n_.registers[r].name));
      }
    }
    for (auto& w : n_.array_writes) {
      stmt_ = w.loc;
      const SymbolRef sym = n_.lookup(w.array);
      if (sym.kind == SymbolKind::None) {
        diag(ErrorCode::UnresolvedRef, fmt::format("write to unknown array '{}'", w.array));
        continue;
      }
      if (sym.kind != SymbolKind::Array) {
        diag(ErrorCode::KindMismatch, fmt::format("'{}' is not an array", w.array));
        continue;
      }
      w.array_index = sym.index;
      check(w.index, std::nullopt);
      const unsigned want = n_.arrays[sym.index].width;
      const unsigned got = check(w.value, want);
      if (got != want) mismatch(want, got, fmt::format("write value for '{}'", w.array));
      const unsigned en = check(w.enable, 1u);
      if (en != 1) mismatch(1, en, fmt::format("write enable for '{}'", w.array));
    }
    std::vector<std::string> output_names;
    for (auto& o : n_.outputs) {
      stmt_ = o.loc;
      if (std::find(output_names.begin(), output_names.end(), o.name) != output_names.end()) {
        diag(ErrorCode::DuplicateId, fmt::format("duplicate output '{}'", o.name));
      }
      output_names.push_back(o.name);
      check(o.expr, std::nullopt);
    }
    return std::move(diags_);
  }

 private:
  void check_declarations() {
    std::unordered_map<std::string, SourceLoc> seen;
    auto unique = [&](const std::string& name, SourceLoc loc) {
      stmt_ = loc;
      if (!seen.emplace(name, loc).second) diag(ErrorCode::DuplicateId, fmt::format("duplicate identifier '{}'", name));
    };
    auto width_ok = [&](unsigned w, const std::string& name, SourceLoc loc) {
      stmt_ = loc;
      if (w < 1 || w > kMaxWidth) {
        diag(ErrorCode::InvalidDeclaration, fmt::format("width of '{}' must be in 1..64, got {}", name, w));
      }
    };
    for (auto& d : n_.inputs) {
      unique(d.name, d.loc);
      width_ok(d.width, d.name, d.loc);
    }
    for (auto& d : n_.registers) {
      unique(d.name, d.loc);
      width_ok(d.width, d.name, d.loc);
      if (d.width >= 1 && d.width <= kMaxWidth && (d.init & ~width_mask(d.width)) != 0) {
        diag(ErrorCode::LiteralOverflow, fmt::format("init value {} does not fit u{}", d.init, d.width));
      }
    }
    for (auto& d : n_.arrays) {
      unique(d.name, d.loc);
      width_ok(d.width, d.name, d.loc);
      if (d.depth < 1) diag(ErrorCode::InvalidDeclaration, fmt::format("array '{}' needs depth >= 1", d.name));
    }
    for (auto& d : n_.wires) {
      unique(d.name, d.loc);
      width_ok(d.width, d.name, d.loc);
    }
    n_.rebuild_symbols();
  }

  unsigned declared_width(SymbolRef s) const {
    switch (s.kind) {
      case SymbolKind::Input: return n_.inputs[s.index].width;
      case SymbolKind::Register: return n_.registers[s.index].width;
      case SymbolKind::Array: return n_.arrays[s.index].width;
      case SymbolKind::Wire: return n_.wires[s.index].width;
      case SymbolKind::None: break;
    }
    return 0;
  }

  // Width an expression has on its own; nullopt if it is built only from unsized literals.
  std::optional<unsigned> self_width(const Expr& e) const {
    switch (e.kind) {
      case ExprKind::Const:
        return e.width == 0 ? std::nullopt : std::optional<unsigned>(e.width);
      case ExprKind::Ref: {
        const SymbolRef s = n_.lookup(e.name);
        if (s.kind == SymbolKind::None || s.kind == SymbolKind::Array) return std::nullopt;
        return declared_width(s);
      }
      case ExprKind::ArrayRead: {
        const SymbolRef s = n_.lookup(e.name);
        if (s.kind == SymbolKind::Array) return n_.arrays[s.index].width;
        if (s.kind == SymbolKind::None) return std::nullopt;
        return 1u;
      }
      case ExprKind::Unary:
        return self_width(e.operands[0]);
      case ExprKind::Binary:
        if (is_comparison(e.binary)) return 1u;
        if (is_shift(e.binary)) return self_width(e.operands[0]);
        if (auto w = self_width(e.operands[0])) return w;
        return self_width(e.operands[1]);
      case ExprKind::Mux:
        if (auto w = self_width(e.operands[1])) return w;
        return self_width(e.operands[2]);
      case ExprKind::Slice:
        return e.hi >= e.lo ? e.hi - e.lo + 1 : 1u;
      case ExprKind::Concat: {
        unsigned sum = 0;
        for (const auto& p : e.operands) {
          auto w = self_width(p);
          sum += w ? *w : min_width(p.value);
        }
        return sum;
      }
    }
    return std::nullopt;
  }

  // Common width for two operands that must agree, sized from context when both are unsized.
  std::optional<unsigned> operand_width(const Expr& a, const Expr& b, std::optional<unsigned> ctx) const {
    if (auto w = self_width(a)) return w;
    if (auto w = self_width(b)) return w;
    if (ctx) return ctx;
    Expr ca = a;
    Expr cb = b;
    WidthChecker probe(n_);
    return std::max(probe.check(ca, std::nullopt), probe.check(cb, std::nullopt));
  }

  unsigned check(Expr& e, std::optional<unsigned> ctx) {
    switch (e.kind) {
      case ExprKind::Const: {
        if (e.width != 0) {
          if ((e.value & ~width_mask(e.width)) != 0) {
            diag(ErrorCode::LiteralOverflow, fmt::format("literal {} does not fit u{}", e.value, e.width));
          }
          return e.width;
        }
        if (ctx) {
          if (min_width(e.value) > *ctx) {
            diag(ErrorCode::LiteralOverflow, fmt::format("literal {} does not fit u{}", e.value, *ctx));
          }
          e.width = *ctx;
        } else {
          e.width = min_width(e.value);
        }
        return e.width;
      }
      case ExprKind::Ref: {
        const SymbolRef s = n_.lookup(e.name);
        if (s.kind == SymbolKind::None) {
          diag(ErrorCode::UnresolvedRef, fmt::format("unresolved reference '{}'", e.name));
          e.width = ctx.value_or(1);
          return e.width;
        }
        if (s.kind == SymbolKind::Array) {
          diag(ErrorCode::KindMismatch, fmt::format("array '{}' used without an index", e.name));
          e.width = n_.arrays[s.index].width;
          return e.width;
        }
        e.sym = s;
        e.width = declared_width(s);
        return e.width;
      }
      case ExprKind::ArrayRead: {
        const SymbolRef s = n_.lookup(e.name);
        if (s.kind == SymbolKind::None) {
          diag(ErrorCode::UnresolvedRef, fmt::format("unresolved reference '{}'", e.name));
          check(e.operands[0], std::nullopt);
          e.width = ctx.value_or(1);
          return e.width;
        }
        if (s.kind != SymbolKind::Array) {
          if (e.operands[0].kind != ExprKind::Const) {
            diag(ErrorCode::KindMismatch, fmt::format("'{}' is not an array", e.name));
            e.width = 1;
            return 1;
          }
          const auto bit = static_cast<unsigned>(std::min<std::uint64_t>(e.operands[0].value, kMaxWidth));
          Expr base = Expr::ref(e.name);
          base.loc = e.loc;
          Expr sl = Expr::slice(std::move(base), bit, bit);
          sl.loc = e.loc;
          e = std::move(sl);
          return check(e, ctx);
        }
        e.sym = s;
        check(e.operands[0], std::nullopt);
        e.width = n_.arrays[s.index].width;
        return e.width;
      }
      case ExprKind::Unary:
        e.width = check(e.operands[0], ctx);
        return e.width;
      case ExprKind::Binary: {
        if (is_shift(e.binary)) {
          const auto lw = self_width(e.operands[0]);
          e.width = check(e.operands[0], lw ? lw : ctx);
          check(e.operands[1], self_width(e.operands[1]));
          return e.width;
        }
        const auto w = operand_width(e.operands[0], e.operands[1], is_comparison(e.binary) ? std::nullopt : ctx);
        const unsigned wa = check(e.operands[0], w);
        const unsigned wb = check(e.operands[1], w);
        if (wa != wb) mismatch(wa, wb, fmt::format("operands of '{}'", symbol_of(e.binary)));
        e.width = is_comparison(e.binary) ? 1 : wa;
        return e.width;
      }
      case ExprKind::Mux: {
        const unsigned wc = check(e.operands[0], 1u);
        if (wc != 1) mismatch(1, wc, "mux condition");
        const auto w = operand_width(e.operands[1], e.operands[2], ctx);
        const unsigned wa = check(e.operands[1], w);
        const unsigned wb = check(e.operands[2], w);
        if (wa != wb) mismatch(wa, wb, "mux branches");
        e.width = wa;
        return e.width;
      }
      case ExprKind::Slice: {
        const unsigned w = check(e.operands[0], std::nullopt);
        if (e.hi < e.lo || e.hi >= w) {
          diag(ErrorCode::SliceOutOfRange, fmt::format("slice [{}:{}] out of range for width {}", e.hi, e.lo, w));
          e.width = e.hi >= e.lo ? e.hi - e.lo + 1 : 1;
          return e.width;
        }
        e.width = e.hi - e.lo + 1;
        return e.width;
      }
      case ExprKind::Concat: {
        unsigned sum = 0;
        for (auto& p : e.operands) sum += check(p, std::nullopt);
        if (sum > kMaxWidth) {
          diag(ErrorCode::WidthOverflow, fmt::format("concatenation is {} bits wide (max 64)", sum));
          sum = kMaxWidth;
        }
        e.width = sum;
        return e.width;
      }
    }
    return 0;
  }

  void mismatch(unsigned expected, unsigned got, std::string_view what) {
    diag(ErrorCode::WidthMismatch, fmt::format("{}: expected width {}, got {}", what, expected, got));
  }

  void diag(ErrorCode code, std::string msg) { diags_.push_back({code, std::move(msg), stmt_}); }

  Netlist& n_;
  SourceLoc stmt_;
  std::vector<Diagnostic> diags_;
};

void collect_wire_refs(const Expr& e, const Netlist& n, std::vector<std::uint32_t>& out) {
  if (e.kind == ExprKind::Ref) {
    const SymbolRef s = e.sym.kind != SymbolKind::None ? e.sym : n.lookup(e.name);
    if (s.kind == SymbolKind::Wire) out.push_back(s.index);
  }
  for (const auto& op : e.operands) collect_wire_refs(op, n, out);
}

}  // namespace

std::vector<Diagnostic> resolve_and_check(Netlist& n) { return WidthChecker(n).run(); }

std::vector<Diagnostic> validate_widths(const Netlist& n) {
  Netlist copy = n;
  copy.rebuild_symbols();
  return resolve_and_check(copy);
}

namespace {

// DFS over the wire dependency relation; returns a cycle path if one exists.
std::vector<std::uint32_t> topo_wires(const Netlist& n, std::vector<std::uint32_t>* cycle) {
  const std::size_t count = n.wires.size();
  std::vector<std::vector<std::uint32_t>> deps(count);
  for (std::size_t i = 0; i < count; ++i) collect_wire_refs(n.wires[i].expr, n, deps[i]);

  enum : std::uint8_t { White, Grey, Black };
  std::vector<std::uint8_t> color(count, White);
  std::vector<std::uint32_t> order;
  std::vector<std::uint32_t> stack;
  order.reserve(count);

  // Iterative DFS: frames of (node, next dep index).
  std::vector<std::pair<std::uint32_t, std::size_t>> frames;
  for (std::uint32_t root = 0; root < count; ++root) {
    if (color[root] != White) continue;
    frames.push_back({root, 0});
    color[root] = Grey;
    stack.push_back(root);
    while (!frames.empty()) {
      auto& [node, next] = frames.back();
      if (next < deps[node].size()) {
        const std::uint32_t d = deps[node][next++];
        if (color[d] == Grey) {
          if (cycle) {
            auto it = std::find(stack.begin(), stack.end(), d);
            cycle->assign(it, stack.end());
            cycle->push_back(d);
          }
          return {};
        }
        if (color[d] == White) {
          color[d] = Grey;
          stack.push_back(d);
          frames.push_back({d, 0});
        }
      } else {
        color[node] = Black;
        order.push_back(node);
        stack.pop_back();
        frames.pop_back();
      }
    }
  }
  return order;
}

}  // namespace

void check_combinational_loops(const Netlist& n) {
  std::vector<std::uint32_t> cycle;
  topo_wires(n, &cycle);
  if (cycle.empty()) return;
  std::string path;
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    if (i) path += " -> ";
    path += n.wires[cycle[i]].name;
  }
  throw Error(ErrorCode::CombinationalLoop, fmt::format("combinational loop: {}", path), n.wires[cycle.front()].loc);
}

std::vector<std::uint32_t> wire_order(const Netlist& n) {
  std::vector<std::uint32_t> cycle;
  auto order = topo_wires(n, &cycle);
  if (!cycle.empty()) check_combinational_loops(n);
  return order;
}

std::string to_source(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Const:
      return std::to_string(e.value);
    case ExprKind::Ref:
      return e.name;
    case ExprKind::Unary:
      return fmt::format("{}({})", symbol_of(e.unary), to_source(e.operands[0]));
    case ExprKind::Binary:
      return fmt::format("({} {} {})", to_source(e.operands[0]), symbol_of(e.binary), to_source(e.operands[1]));
    case ExprKind::Mux:
      return fmt::format("mux({}, {}, {})", to_source(e.operands[0]), to_source(e.operands[1]),
                         to_source(e.operands[2]));
    case ExprKind::Slice: {
      const auto& a = e.operands[0];
      if (a.kind == ExprKind::Ref) return fmt::format("{}[{}:{}]", a.name, e.hi, e.lo);
      return fmt::format("({})[{}:{}]", to_source(a), e.hi, e.lo);
    }
    case ExprKind::Concat: {
      std::string out = "{";
      for (std::size_t i = 0; i < e.operands.size(); ++i) {
        if (i) out += ", ";
        out += to_source(e.operands[i]);
      }
      return out + "}";
    }
    case ExprKind::ArrayRead:
      return fmt::format("{}[{}]", e.name, to_source(e.operands[0]));
  }
  return {};
}

std::string to_source(const Netlist& n) {
  std::ostringstream out;
  out << "design " << n.name << "\n";
  for (const auto& d : n.inputs) out << fmt::format("input {} : u{}\n", d.name, d.width);
  for (const auto& d : n.registers) out << fmt::format("reg {} : u{} init {}\n", d.name, d.width, d.init);
  for (const auto& d : n.arrays) out << fmt::format("array {} : u{}[{}]\n", d.name, d.width, d.depth);
  for (const auto& d : n.wires) out << fmt::format("wire {} : u{} = {}\n", d.name, d.width, to_source(d.expr));
  for (const auto& s : n.next_statements) out << fmt::format("next {} = {}\n", s.reg, to_source(s.expr));
  for (const auto& w : n.array_writes) {
    out << fmt::format("write {}[{}] = {} when {}\n", w.array, to_source(w.index), to_source(w.value),
                       to_source(w.enable));
  }
  for (const auto& o : n.outputs) out << fmt::format("output {} = {}\n", o.name, to_source(o.expr));
  return out.str();
}

bool same_structure(const Netlist& a, const Netlist& b) {
  auto eq_all = [](const auto& xs, const auto& ys, auto pred) {
    return xs.size() == ys.size() && std::equal(xs.begin(), xs.end(), ys.begin(), pred);
  };
  return a.name == b.name &&
         eq_all(a.inputs, b.inputs, [](auto& x, auto& y) { return x.name == y.name && x.width == y.width; }) &&
         eq_all(a.registers, b.registers,
                [](auto& x, auto& y) { return x.name == y.name && x.width == y.width && x.init == y.init; }) &&
         eq_all(a.arrays, b.arrays,
                [](auto& x, auto& y) { return x.name == y.name && x.width == y.width && x.depth == y.depth; }) &&
         eq_all(a.wires, b.wires,
                [](auto& x, auto& y) {
                  return x.name == y.name && x.width == y.width && same_structure(x.expr, y.expr);
                }) &&
         eq_all(a.next_statements, b.next_statements,
                [](auto& x, auto& y) { return x.reg == y.reg && same_structure(x.expr, y.expr); }) &&
         eq_all(a.array_writes, b.array_writes,
                [](auto& x, auto& y) {
                  return x.array == y.array && same_structure(x.index, y.index) &&
                         same_structure(x.value, y.value) && same_structure(x.enable, y.enable);
                }) &&
         eq_all(a.outputs, b.outputs,
                [](auto& x, auto& y) { return x.name == y.name && same_structure(x.expr, y.expr); });
}

std::string source_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace bsprtl
