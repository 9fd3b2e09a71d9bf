#include "bsprtl/sim.hpp"

#include <algorithm>
#include <cstring>
#include <random>

#include <fmt/format.h>

#include "bsprtl/ops.hpp"

namespace bsprtl {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_uint(std::string_view text, std::uint64_t& out) {
  int base = 10;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    base = 16;
    text.remove_prefix(2);
  }
  if (text.empty()) return false;
  std::uint64_t v = 0;
  for (char c : text) {
    if (c == '_') continue;
    unsigned d;
    if (c >= '0' && c <= '9') d = static_cast<unsigned>(c - '0');
    else if (base == 16 && c >= 'a' && c <= 'f') d = static_cast<unsigned>(c - 'a' + 10);
    else if (base == 16 && c >= 'A' && c <= 'F') d = static_cast<unsigned>(c - 'A' + 10);
    else return false;
    if (d >= static_cast<unsigned>(base)) return false;
    if (v > (UINT64_MAX - d) / static_cast<unsigned>(base)) return false;
    v = v * static_cast<unsigned>(base) + d;
  }
  out = v;
  return true;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const auto start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

struct EvalContext {
  std::span<const std::uint64_t> inputs;
  std::span<const std::uint64_t> registers;
  std::span<const std::vector<std::uint64_t>* const> arrays;
  const std::uint64_t* wires = nullptr;
  std::vector<IndexFault>* faults = nullptr;
};

std::uint64_t eval(const Expr& e, const EvalContext& ctx) {
  switch (e.kind) {
    case ExprKind::Const:
      return e.value;
    case ExprKind::Ref:
      switch (e.sym.kind) {
        case SymbolKind::Input: return ctx.inputs[e.sym.index];
        case SymbolKind::Register: return ctx.registers[e.sym.index];
        case SymbolKind::Wire: return ctx.wires[e.sym.index];
        default: return 0;
      }
    case ExprKind::Unary:
      return ops::unary(e.unary, e.width, eval(e.operands[0], ctx));
    case ExprKind::Binary: {
      const auto a = eval(e.operands[0], ctx);
      const auto b = eval(e.operands[1], ctx);
      return ops::binary(e.binary, e.width, a, b);
    }
    case ExprKind::Mux: {
      const auto c = eval(e.operands[0], ctx);
      const auto a = eval(e.operands[1], ctx);
      const auto b = eval(e.operands[2], ctx);
      return c ? a : b;
    }
    case ExprKind::Slice:
      return ops::slice(eval(e.operands[0], ctx), e.hi, e.lo);
    case ExprKind::Concat: {
      std::uint64_t v = 0;
      for (const auto& part : e.operands) {
        const auto p = eval(part, ctx);
        v = part.width >= 64 ? p : (v << part.width) | p;
      }
      return v;
    }
    case ExprKind::ArrayRead: {
      const auto idx = eval(e.operands[0], ctx);
      const auto& arr = *ctx.arrays[e.sym.index];
      if (idx >= arr.size()) {
        ctx.faults->push_back({e.sym.index, idx});
        return 0;
      }
      return arr[idx];
    }
  }
  return 0;
}

void collect_wire_refs(const Expr& e, std::vector<std::uint32_t>& out) {
  if (e.kind == ExprKind::Ref && e.sym.kind == SymbolKind::Wire) out.push_back(e.sym.index);
  for (const auto& op : e.operands) collect_wire_refs(op, out);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint64_t get(int n) {
    if (pos_ + static_cast<std::size_t>(n) > bytes_.size()) throw Error(ErrorCode::FormatError, "truncated trace file");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{static_cast<unsigned char>(bytes_[pos_++])} << (8 * i);
    return v;
  }

  std::string str(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw Error(ErrorCode::FormatError, "truncated trace file");
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Stimulus Stimulus::parse(std::string_view text, const Netlist& n) {
  Stimulus s;
  for (const auto& in : n.inputs) s.input_names.push_back(in.name);
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::uint64_t> row(n.inputs.size(), 0);
    std::vector<std::uint8_t> seen(n.inputs.size(), 0);
    for (auto tok : split_ws(line)) {
      const auto eq = tok.find('=');
      if (eq == std::string_view::npos) {
        throw Error(ErrorCode::FormatError, fmt::format("stimulus line {}: expected input=value, got '{}'", line_no, tok));
      }
      const auto name = tok.substr(0, eq);
      const auto sym = n.lookup(name);
      if (sym.kind != SymbolKind::Input) {
        throw Error(ErrorCode::FormatError, fmt::format("stimulus line {}: '{}' is not an input", line_no, name));
      }
      std::uint64_t v = 0;
      if (!parse_uint(tok.substr(eq + 1), v)) {
        throw Error(ErrorCode::FormatError, fmt::format("stimulus line {}: bad value for '{}'", line_no, name));
      }
      if (v & ~width_mask(n.inputs[sym.index].width)) {
        throw Error(ErrorCode::FormatError, fmt::format("stimulus line {}: value {} does not fit input '{}' (u{})",
                                                        line_no, v, name, n.inputs[sym.index].width));
      }
      row[sym.index] = v;
      seen[sym.index] = 1;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (!seen[i]) {
        throw Error(ErrorCode::StimulusExhausted,
                    fmt::format("stimulus row for cycle {} has no value for input '{}'", s.rows.size() + 1,
                                n.inputs[i].name));
      }
    }
    s.rows.push_back(std::move(row));
  }
  return s;
}

Stimulus Stimulus::random(const Netlist& n, std::uint64_t cycles, std::uint64_t seed) {
  Stimulus s;
  std::mt19937_64 rng(seed);
  for (const auto& in : n.inputs) s.input_names.push_back(in.name);
  s.rows.resize(cycles);
  for (auto& row : s.rows) {
    for (const auto& in : n.inputs) row.push_back(rng() & width_mask(in.width));
  }
  return s;
}

Stimulus Stimulus::zeros(const Netlist& n, std::uint64_t cycles) {
  Stimulus s;
  for (const auto& in : n.inputs) s.input_names.push_back(in.name);
  s.rows.assign(cycles, std::vector<std::uint64_t>(n.inputs.size(), 0));
  return s;
}

void Stimulus::require(std::uint64_t cycles) const {
  if (input_names.empty()) return;
  if (rows.size() < cycles) {
    throw Error(ErrorCode::StimulusExhausted,
                fmt::format("stimulus has {} rows but {} cycles were requested", rows.size(), cycles));
  }
}

std::span<const std::uint64_t> Stimulus::row(std::uint64_t cycle) const {
  if (input_names.empty()) return {};
  return rows[cycle - 1];
}

std::string Trace::to_csv() const {
  std::string out = "cycle,output,value\n";
  for (std::uint64_t c = 1; c <= cycles; ++c) {
    for (std::size_t o = 0; o < output_names.size(); ++o) {
      out += fmt::format("{},{},{}\n", c, output_names[o], value(c, o));
    }
  }
  return out;
}

std::string Trace::to_binary() const {
  std::string out = "BSPT";
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(output_names.size()));
  for (const auto& name : output_names) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
  }
  put_u64(out, cycles);
  for (auto v : values) put_u64(out, v);
  return out;
}

Trace Trace::from_binary(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.str(4) != "BSPT") throw Error(ErrorCode::FormatError, "not a binary trace");
  if (r.get(4) != 1) throw Error(ErrorCode::FormatError, "unsupported binary trace version");
  Trace t;
  const auto outputs = r.get(4);
  for (std::uint64_t i = 0; i < outputs; ++i) t.output_names.push_back(r.str(r.get(4)));
  t.cycles = r.get(8);
  t.values.resize(t.cycles * outputs);
  for (auto& v : t.values) v = r.get(8);
  if (!r.done()) throw Error(ErrorCode::FormatError, "trailing bytes in binary trace");
  return t;
}

Error index_fault_error(const Netlist& n, const IndexFault& fault, std::uint64_t cycle) {
  const auto& a = n.arrays[fault.array];
  return Error(ErrorCode::IndexOutOfRange, fmt::format("array '{}' index {} is out of range (depth {}) in cycle {}",
                                                       a.name, fault.index, a.depth, cycle));
}

std::vector<std::uint32_t> wires_needed(const Netlist& n, std::span<const Expr* const> roots) {
  std::vector<std::uint8_t> needed(n.wires.size(), 0);
  std::vector<std::uint32_t> stack;
  for (const auto* e : roots) collect_wire_refs(*e, stack);
  while (!stack.empty()) {
    const auto w = stack.back();
    stack.pop_back();
    if (needed[w]) continue;
    needed[w] = 1;
    collect_wire_refs(n.wires[w].expr, stack);
  }
  std::vector<std::uint32_t> out;
  for (auto w : wire_order(n)) {
    if (needed[w]) out.push_back(w);
  }
  return out;
}

std::vector<std::uint64_t> parse_preload(std::string_view text, unsigned width, std::uint64_t depth) {
  std::vector<std::uint64_t> values(depth, 0);
  std::uint64_t i = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    for (auto tok : split_ws(line)) {
      std::uint64_t v = 0;
      if (!parse_uint(tok, v) || (v & ~width_mask(width))) {
        throw Error(ErrorCode::FormatError, fmt::format("preload line {}: bad element '{}'", line_no, tok));
      }
      if (i >= depth) throw Error(ErrorCode::FormatError, fmt::format("preload has more than {} elements", depth));
      values[i++] = v;
    }
  }
  return values;
}

OutputEvaluator::OutputEvaluator(const Netlist& n) : n_(n), wire_values_(n.wires.size(), 0) {
  std::vector<const Expr*> roots;
  for (const auto& o : n.outputs) roots.push_back(&o.expr);
  wires_ = wires_needed(n, roots);
}

void OutputEvaluator::evaluate(std::uint64_t cycle, std::span<const std::uint64_t> inputs,
                               std::span<const std::uint64_t> registers,
                               std::span<const std::vector<std::uint64_t>* const> arrays,
                               std::vector<std::uint64_t>& out) {
  std::vector<IndexFault> faults;
  EvalContext ctx{inputs, registers, arrays, wire_values_.data(), &faults};
  for (auto w : wires_) wire_values_[w] = eval(n_.wires[w].expr, ctx);
  for (const auto& o : n_.outputs) out.push_back(eval(o.expr, ctx));
  if (!faults.empty()) throw index_fault_error(n_, *std::min_element(faults.begin(), faults.end()), cycle);
}

SimState simulate_reference(const Netlist& n, const Stimulus& stim, std::uint64_t cycles, const SimOptions& options) {
  stim.require(cycles);
  SimState st;
  for (const auto& r : n.registers) st.registers.push_back(r.init);
  for (std::size_t a = 0; a < n.arrays.size(); ++a) {
    if (a < options.array_init.size() && !options.array_init[a].empty()) {
      st.arrays.push_back(options.array_init[a]);
      st.arrays.back().resize(n.arrays[a].depth, 0);
    } else {
      st.arrays.emplace_back(n.arrays[a].depth, 0);
    }
  }
  for (const auto& o : n.outputs) st.trace.output_names.push_back(o.name);

  std::vector<const Expr*> roots;
  for (const auto& s : n.next_statements) roots.push_back(&s.expr);
  for (const auto& w : n.array_writes) {
    roots.push_back(&w.index);
    roots.push_back(&w.value);
    roots.push_back(&w.enable);
  }
  const auto sink_wires = wires_needed(n, roots);
  std::vector<std::uint64_t> wire_values(n.wires.size(), 0);
  std::vector<const std::vector<std::uint64_t>*> array_ptrs;
  for (const auto& a : st.arrays) array_ptrs.push_back(&a);
  OutputEvaluator outputs(n);

  std::vector<std::uint64_t> next(n.registers.size(), 0);
  struct PendingWrite {
    bool enabled;
    std::uint64_t index;
    std::uint64_t value;
  };
  std::vector<PendingWrite> writes(n.array_writes.size());
  std::vector<IndexFault> faults;

  for (std::uint64_t c = 1; c <= cycles; ++c) {
    const auto inputs = stim.row(c);
    faults.clear();
    EvalContext ctx{inputs, st.registers, array_ptrs, wire_values.data(), &faults};
    for (auto w : sink_wires) wire_values[w] = eval(n.wires[w].expr, ctx);
    for (std::size_t r = 0; r < n.registers.size(); ++r) {
      next[r] = eval(n.next_statements[n.next_of_register[r]].expr, ctx);
    }
    for (std::size_t p = 0; p < n.array_writes.size(); ++p) {
      const auto& w = n.array_writes[p];
      writes[p].index = eval(w.index, ctx);
      writes[p].value = eval(w.value, ctx);
      writes[p].enabled = eval(w.enable, ctx) != 0;
      if (writes[p].enabled && writes[p].index >= n.arrays[w.array_index].depth) {
        faults.push_back({w.array_index, writes[p].index});
      }
    }
    if (!faults.empty()) throw index_fault_error(n, *std::min_element(faults.begin(), faults.end()), c);

    st.registers = next;
    for (std::size_t p = 0; p < n.array_writes.size(); ++p) {
      if (writes[p].enabled) st.arrays[n.array_writes[p].array_index][writes[p].index] = writes[p].value;
    }
    st.cycle = c;
    outputs.evaluate(c, inputs, st.registers, array_ptrs, st.trace.values);
    st.trace.cycles = c;
    if (options.observer) options.observer(StateView{c, st.registers, array_ptrs});
  }
  return st;
}

}  // namespace bsprtl
