#include "bsprtl/bsp.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <exception>
#include <optional>
#include <thread>

#include <fmt/format.h>

#include "bsprtl/ops.hpp"

namespace bsprtl {

namespace {

std::uint64_t bytes_of(unsigned width) { return (width + 7) / 8; }

std::vector<std::uint32_t> sink_to_fiber(const DepGraph& g, std::span<const Fiber> fibers) {
  std::vector<std::uint32_t> map(g.nodes.size(), UINT32_MAX);
  for (const auto& f : fibers) map[f.sink] = f.id;
  return map;
}

}  // namespace

std::uint64_t ExchangeSchedule::array_bytes_bound(const DepGraph& g, std::uint32_t array) const {
  if (array_copied[array]) return g.array_depths[array] * bytes_of(g.array_widths[array]);
  std::uint64_t ports = 0;
  for (auto a : g.write_port_array) ports += a == array;
  return ports * (kDiffIndexBytes + bytes_of(g.array_widths[array]));
}

ExchangeSchedule build_exchange_schedule(const Partition& p, const DepGraph& g, std::span<const Fiber> fibers,
                                         const ExchangeOptions& options) {
  ExchangeSchedule s;
  const auto procs = static_cast<std::uint32_t>(p.processes.size());
  const auto regs = static_cast<std::uint32_t>(g.register_names.size());
  const auto arrays = static_cast<std::uint32_t>(g.array_names.size());
  const auto ports = static_cast<std::uint32_t>(g.write_port.size());
  const auto fiber_of = sink_to_fiber(g, fibers);

  s.register_producer.resize(regs);
  for (std::uint32_t r = 0; r < regs; ++r) s.register_producer[r] = p.fiber_owner[fiber_of[g.next_write[r]]];
  s.port_producer.resize(ports);
  for (std::uint32_t q = 0; q < ports; ++q) s.port_producer[q] = p.fiber_owner[fiber_of[g.write_port[q]]];

  std::vector<std::vector<std::uint32_t>> reg_readers(regs);
  std::vector<std::vector<std::uint32_t>> array_readers(arrays);
  for (const auto& proc : p.processes) {
    std::vector<std::uint32_t> rr;
    std::vector<std::uint32_t> ar;
    for (auto f : proc.fibers) {
      rr.insert(rr.end(), fibers[f].read_registers.begin(), fibers[f].read_registers.end());
      ar.insert(ar.end(), fibers[f].read_arrays.begin(), fibers[f].read_arrays.end());
    }
    std::sort(rr.begin(), rr.end());
    rr.erase(std::unique(rr.begin(), rr.end()), rr.end());
    std::sort(ar.begin(), ar.end());
    ar.erase(std::unique(ar.begin(), ar.end()), ar.end());
    for (auto r : rr) reg_readers[r].push_back(proc.id);
    for (auto a : ar) array_readers[a].push_back(proc.id);
  }

  s.per_process.assign(procs, {});
  auto account = [&](std::uint32_t from, std::uint32_t to, std::uint64_t bytes, std::uint64_t bits) {
    const bool off = p.chip_of[from] != p.chip_of[to];
    auto& src = s.per_process[from];
    auto& dst = s.per_process[to];
    (off ? src.sent_off_chip : src.sent_on_chip) += bytes;
    (off ? dst.recv_off_chip : dst.recv_on_chip) += bytes;
    (off ? s.off_chip_bytes : s.on_chip_bytes) += bytes;
    src.presence_bits_sent += bits;
    dst.presence_bits_recv += bits;
    s.presence_bits += bits;
  };

  for (std::uint32_t r = 0; r < regs; ++r) {
    RegisterRoute route;
    route.reg = r;
    route.producer = s.register_producer[r];
    route.bytes = bytes_of(g.register_widths[r]);
    for (auto c : reg_readers[r]) {
      if (c != route.producer) route.consumers.push_back(c);
    }
    if (route.consumers.empty()) continue;
    for (auto c : route.consumers) account(route.producer, c, route.bytes, 0);
    s.register_routes.push_back(std::move(route));
  }

  s.array_holders.assign(arrays, {});
  s.array_home.assign(arrays, UINT32_MAX);
  s.array_copied.assign(arrays, 0);
  for (std::uint32_t a = 0; a < arrays; ++a) {
    std::vector<std::uint32_t> my_ports;
    for (std::uint32_t q = 0; q < ports; ++q) {
      if (g.write_port_array[q] == a) my_ports.push_back(q);
    }
    auto holders = array_readers[a];
    if (!holders.empty()) {
      s.array_home[a] = holders.front();
    } else if (!my_ports.empty()) {
      s.array_home[a] = s.port_producer[my_ports.front()];
      holders.push_back(s.array_home[a]);
    }
    bool single_producer = !my_ports.empty();
    for (auto q : my_ports) single_producer = single_producer && s.port_producer[q] == s.port_producer[my_ports.front()];
    if (!options.diff_exchange && single_producer) {
      s.array_copied[a] = 1;
      const auto prod = s.port_producer[my_ports.front()];
      if (!std::binary_search(holders.begin(), holders.end(), prod)) {
        holders.insert(std::lower_bound(holders.begin(), holders.end(), prod), prod);
      }
      ArrayCopyRoute route;
      route.array = a;
      route.producer = prod;
      route.bytes = g.array_depths[a] * bytes_of(g.array_widths[a]);
      for (auto h : holders) {
        if (h != prod) route.consumers.push_back(h);
      }
      for (auto c : route.consumers) account(prod, c, route.bytes, 0);
      if (!route.consumers.empty()) s.copy_routes.push_back(std::move(route));
    } else {
      for (auto q : my_ports) {
        ArrayRoute route;
        route.port = q;
        route.array = a;
        route.producer = s.port_producer[q];
        route.max_updates_per_cycle = 1;
        route.entry_bytes = kDiffIndexBytes + bytes_of(g.array_widths[a]);
        for (auto h : holders) {
          if (h != route.producer) route.consumers.push_back(h);
        }
        for (auto c : route.consumers) account(route.producer, c, route.entry_bytes, 1);
        if (!route.consumers.empty()) s.array_routes.push_back(std::move(route));
      }
    }
    s.array_holders[a] = std::move(holders);
  }
  return s;
}

namespace {

enum class Op : std::uint8_t {
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
  ArrayRead,
  ArrayWrite,
  NextWrite,
};

struct Instr {
  Op op;
  std::uint8_t width = 0;
  std::uint32_t dst = 0;
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  std::uint32_t c = 0;
  std::uint32_t aux = 0;
  std::uint64_t imm = 0;
};

struct PortOut {
  std::uint64_t enabled = 0;
  std::uint64_t index = 0;
  std::uint64_t value = 0;
};

struct RegPull {
  std::uint32_t slot;
  std::uint32_t producer;
  std::uint32_t out_index;
  std::uint32_t bytes;
  bool off_chip;
};

struct PortRef {
  std::uint32_t producer;
  std::uint32_t out_index;
  bool remote;
  bool off_chip;
};

struct ArrayPull {
  std::uint32_t array;
  std::uint32_t replica;
  bool copied;
  std::uint32_t copy_producer;
  std::uint32_t copy_slot;
  bool copy_remote;
  bool copy_off_chip;
  std::vector<PortRef> ports;
};

struct RegSend {
  std::uint32_t bytes_on;
  std::uint32_t bytes_off;
};

struct PortSend {
  std::uint32_t out_index;
  std::uint64_t entry_bytes;
  std::uint32_t consumers_on;
  std::uint32_t consumers_off;
};

struct Proc {
  std::vector<std::uint64_t> slots;
  std::vector<Instr> code;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> concat_parts;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> input_loads;
  std::vector<std::vector<std::uint64_t>> replicas;
  std::vector<std::uint32_t> replica_array;

  std::vector<std::uint64_t> reg_out;
  std::vector<PortOut> port_out;
  /// Full next-array buffers for copied arrays this process produces.
  std::vector<std::vector<std::uint64_t>> copy_out;
  std::vector<std::uint32_t> copy_out_array;
  std::uint64_t stamp = 0;

  std::vector<RegPull> reg_pulls;
  std::vector<ArrayPull> array_pulls;
  std::uint64_t static_sent_on = 0;
  std::uint64_t static_sent_off = 0;
  std::vector<PortSend> port_sends;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> copy_sends;

  std::vector<IndexFault> faults;
  bool stale_read = false;
  ProcessCounters counters;
  std::vector<std::uint64_t> array_max_recv;
  std::uint64_t cycle_sent = 0;
};

Op op_of(ComputeOp op) {
  switch (op) {
    case ComputeOp::Not: return Op::Not;
    case ComputeOp::Neg: return Op::Neg;
    case ComputeOp::Add: return Op::Add;
    case ComputeOp::Sub: return Op::Sub;
    case ComputeOp::Mul: return Op::Mul;
    case ComputeOp::And: return Op::And;
    case ComputeOp::Or: return Op::Or;
    case ComputeOp::Xor: return Op::Xor;
    case ComputeOp::Shl: return Op::Shl;
    case ComputeOp::Shr: return Op::Shr;
    case ComputeOp::Eq: return Op::Eq;
    case ComputeOp::Ne: return Op::Ne;
    case ComputeOp::Lt: return Op::Lt;
    case ComputeOp::Le: return Op::Le;
    case ComputeOp::Mux: return Op::Mux;
    case ComputeOp::Slice: return Op::Slice;
    case ComputeOp::Concat: return Op::Concat;
    case ComputeOp::None: break;
  }
  throw Error(ErrorCode::UnknownOp, "compute node without an operation");
}

BinaryOp binary_of(Op op) {
  switch (op) {
    case Op::Add: return BinaryOp::Add;
    case Op::Sub: return BinaryOp::Sub;
    case Op::Mul: return BinaryOp::Mul;
    case Op::And: return BinaryOp::And;
    case Op::Or: return BinaryOp::Or;
    case Op::Xor: return BinaryOp::Xor;
    case Op::Shl: return BinaryOp::Shl;
    case Op::Shr: return BinaryOp::Shr;
    case Op::Eq: return BinaryOp::Eq;
    case Op::Ne: return BinaryOp::Ne;
    case Op::Lt: return BinaryOp::Lt;
    default: return BinaryOp::Le;
  }
}

class Executor {
 public:
  Executor(const Partition& p, const Netlist& n, const DepGraph& g, std::span<const Fiber> fibers,
           const Stimulus& stim, const BspOptions& options)
      : p_(p), n_(n), g_(g), stim_(stim), options_(options), outputs_(n) {
    sched_ = build_exchange_schedule(p, g, fibers, options.exchange);
    compile();
  }

  BspResult run(std::uint64_t cycles) {
    stim_.require(cycles);
    BspResult result;
    for (const auto& o : n_.outputs) result.state.trace.output_names.push_back(o.name);
    trace_ = &result.state.trace;
    host_regs_.resize(n_.registers.size());
    for (std::size_t r = 0; r < n_.registers.size(); ++r) host_regs_[r] = n_.registers[r].init;
    host_arrays_.resize(n_.arrays.size());
    for (std::uint32_t a = 0; a < n_.arrays.size(); ++a) {
      const auto home = sched_.array_home[a];
      host_arrays_[a] = home == UINT32_MAX ? &static_arrays_[a] : &procs_[home].replicas[replica_of(home, a)];
    }
    cycles_ = cycles;

    const auto nprocs = static_cast<std::uint32_t>(procs_.size());
    const std::uint32_t workers = std::clamp<std::uint32_t>(options_.workers, 1, std::max<std::uint32_t>(nprocs, 1));
    auto after_compute = [this]() noexcept { finish_compute(); };
    auto after_exchange = [this]() noexcept { finish_exchange(); };
    std::barrier compute_done(static_cast<std::ptrdiff_t>(workers), after_compute);
    std::barrier exchange_done(static_cast<std::ptrdiff_t>(workers), after_exchange);

    auto worker = [&](std::uint32_t w) {
      for (std::uint64_t c = 1; c <= cycles; ++c) {
        const auto inputs = stim_.row(c);
        for (std::uint32_t i = w; i < nprocs; i += workers) compute(procs_[i], c, inputs);
        compute_done.arrive_and_wait();
        if (halt_) break;
        for (std::uint32_t i = w; i < nprocs; i += workers) exchange(procs_[i], c);
        exchange_done.arrive_and_wait();
        if (halt_) break;
      }
    };
    if (workers == 1) {
      worker(0);
    } else {
      std::vector<std::jthread> pool;
      for (std::uint32_t w = 0; w < workers; ++w) pool.emplace_back(worker, w);
    }
    if (failure_) std::rethrow_exception(failure_);

    result.state.cycle = host_cycle_;
    result.state.registers = host_regs_;
    for (auto* a : host_arrays_) result.state.arrays.push_back(*a);
    result.counters.cycles = host_cycle_;
    result.counters.barriers = barriers_;
    result.counters.max_cycle_bytes = max_cycle_bytes_;
    result.counters.array_max_bytes_per_consumer.assign(n_.arrays.size(), 0);
    for (auto& pr : procs_) {
      result.counters.processes.push_back(pr.counters);
      const auto& c = pr.counters;
      result.counters.total_bytes += c.bytes_sent_on_chip + c.bytes_sent_off_chip;
      for (std::size_t a = 0; a < n_.arrays.size(); ++a) {
        result.counters.array_max_bytes_per_consumer[a] =
            std::max(result.counters.array_max_bytes_per_consumer[a], pr.array_max_recv[a]);
      }
    }
    result.schedule = std::move(sched_);
    return result;
  }

 private:
  std::uint32_t replica_of(std::uint32_t proc, std::uint32_t array) const {
    const auto& ra = procs_[proc].replica_array;
    return static_cast<std::uint32_t>(std::find(ra.begin(), ra.end(), array) - ra.begin());
  }

  std::vector<std::uint64_t> initial_array(std::uint32_t a) const {
    std::vector<std::uint64_t> v(n_.arrays[a].depth, 0);
    if (a < options_.sim.array_init.size() && !options_.sim.array_init[a].empty()) {
      const auto& init = options_.sim.array_init[a];
      std::copy_n(init.begin(), std::min<std::size_t>(init.size(), v.size()), v.begin());
    }
    return v;
  }

  void compile() {
    const auto nprocs = p_.processes.size();
    procs_.resize(nprocs);
    static_arrays_.resize(n_.arrays.size());
    for (std::uint32_t a = 0; a < n_.arrays.size(); ++a) {
      if (sched_.array_home[a] == UINT32_MAX) static_arrays_[a] = initial_array(a);
    }
    reg_loc_.assign(n_.registers.size(), {UINT32_MAX, 0});
    port_loc_.assign(g_.write_port.size(), {UINT32_MAX, 0});
    copy_loc_.assign(n_.arrays.size(), {UINT32_MAX, 0});

    for (std::uint32_t i = 0; i < nprocs; ++i) {
      auto& pr = procs_[i];
      for (std::uint32_t a = 0; a < n_.arrays.size(); ++a) {
        if (std::binary_search(sched_.array_holders[a].begin(), sched_.array_holders[a].end(), i)) {
          pr.replica_array.push_back(a);
          pr.replicas.push_back(initial_array(a));
        }
      }
      pr.array_max_recv.assign(n_.arrays.size(), 0);
      const auto nodes = p_.processes[i].cone.to_vector();
      std::vector<std::uint32_t> slot(g_.nodes.size(), UINT32_MAX);
      pr.slots.assign(nodes.size(), 0);
      for (std::uint32_t s = 0; s < nodes.size(); ++s) slot[nodes[s]] = s;
      std::uint64_t evals = 0;
      for (std::uint32_t s = 0; s < nodes.size(); ++s) {
        const auto id = nodes[s];
        const auto& node = g_.nodes[id];
        auto opnd = [&](std::size_t k) { return slot[node.operands[k]]; };
        Instr in;
        in.dst = s;
        in.width = static_cast<std::uint8_t>(node.width);
        switch (node.kind) {
          case NodeKind::Input:
            pr.input_loads.push_back({node.ref, s});
            continue;
          case NodeKind::Const:
            pr.slots[s] = node.value;
            continue;
          case NodeKind::CurrentRead:
            ++evals;
            pr.slots[s] = n_.registers[node.ref].init;
            continue;
          case NodeKind::ArrayState:
            continue;
          case NodeKind::Compute:
            in.op = op_of(node.op);
            if (in.op == Op::Slice) {
              in.a = opnd(0);
              in.b = node.hi;
              in.c = node.lo;
            } else if (in.op == Op::Concat) {
              in.a = static_cast<std::uint32_t>(pr.concat_parts.size());
              in.b = static_cast<std::uint32_t>(node.operands.size());
              for (auto o : node.operands) pr.concat_parts.push_back({slot[o], g_.nodes[o].width});
            } else {
              in.a = opnd(0);
              if (node.operands.size() > 1) in.b = opnd(1);
              if (node.operands.size() > 2) in.c = opnd(2);
            }
            break;
          case NodeKind::ArrayReadPort:
            in.op = Op::ArrayRead;
            in.a = replica_of(i, node.ref);
            in.b = opnd(1);
            in.aux = node.ref;
            if (in.a >= pr.replicas.size()) {
              throw Error(ErrorCode::ScheduleIncomplete,
                          fmt::format("process {} reads array '{}' without a replica", i, n_.arrays[node.ref].name));
            }
            break;
          case NodeKind::ArrayWritePort:
            in.op = Op::ArrayWrite;
            in.a = opnd(0);
            in.b = opnd(1);
            in.c = opnd(2);
            in.aux = node.ref;
            in.imm = n_.arrays[node.ref].depth;
            in.dst = static_cast<std::uint32_t>(pr.port_out.size());
            port_loc_[node.port] = {i, in.dst};
            pr.port_out.push_back({});
            break;
          case NodeKind::NextWrite:
            in.op = Op::NextWrite;
            in.a = opnd(0);
            in.dst = static_cast<std::uint32_t>(pr.reg_out.size());
            reg_loc_[node.ref] = {i, in.dst};
            pr.reg_out.push_back(n_.registers[node.ref].init);
            break;
        }
        ++evals;
        pr.code.push_back(in);
      }
      pr.counters.node_evals_per_cycle = evals;
      node_slots_.push_back(std::move(slot));
    }

    for (std::uint32_t a = 0; a < n_.arrays.size(); ++a) {
      if (!sched_.array_copied[a]) continue;
      std::uint32_t prod = UINT32_MAX;
      for (std::uint32_t q = 0; q < g_.write_port.size(); ++q) {
        if (g_.write_port_array[q] == a) prod = sched_.port_producer[q];
      }
      auto& pr = procs_[prod];
      copy_loc_[a] = {prod, static_cast<std::uint32_t>(pr.copy_out.size())};
      pr.copy_out.push_back(initial_array(a));
      pr.copy_out_array.push_back(a);
    }

    for (std::uint32_t i = 0; i < nprocs; ++i) {
      auto& pr = procs_[i];
      const auto my_chip = p_.chip_of[i];
      const auto nodes = p_.processes[i].cone.to_vector();
      for (auto id : nodes) {
        const auto& node = g_.nodes[id];
        if (node.kind != NodeKind::CurrentRead) continue;
        const auto [prod, idx] = reg_loc_[node.ref];
        if (prod == UINT32_MAX) {
          throw Error(ErrorCode::ScheduleIncomplete,
                      fmt::format("register '{}' has no producing process", n_.registers[node.ref].name));
        }
        pr.reg_pulls.push_back({node_slots_[i][id], prod, idx,
                                static_cast<std::uint32_t>(prod == i ? 0 : bytes_of(node.width)),
                                p_.chip_of[prod] != my_chip});
      }
      for (std::uint32_t k = 0; k < pr.replica_array.size(); ++k) {
        const auto a = pr.replica_array[k];
        ArrayPull pull{};
        pull.array = a;
        pull.replica = k;
        pull.copied = sched_.array_copied[a] != 0;
        if (pull.copied) {
          pull.copy_producer = copy_loc_[a].first;
          pull.copy_slot = copy_loc_[a].second;
          pull.copy_remote = pull.copy_producer != i;
          pull.copy_off_chip = p_.chip_of[pull.copy_producer] != my_chip;
        } else {
          for (std::uint32_t q = 0; q < g_.write_port.size(); ++q) {
            if (g_.write_port_array[q] != a) continue;
            const auto [prod, idx] = port_loc_[q];
            pull.ports.push_back({prod, idx, prod != i, p_.chip_of[prod] != my_chip});
          }
        }
        pr.array_pulls.push_back(std::move(pull));
      }
    }

    for (const auto& route : sched_.register_routes) {
      auto& pr = procs_[route.producer];
      for (auto c : route.consumers) {
        (p_.chip_of[c] != p_.chip_of[route.producer] ? pr.static_sent_off : pr.static_sent_on) += route.bytes;
      }
    }
    for (const auto& route : sched_.array_routes) {
      auto& pr = procs_[route.producer];
      PortSend ps{port_loc_[route.port].second, route.entry_bytes, 0, 0};
      for (auto c : route.consumers) {
        (p_.chip_of[c] != p_.chip_of[route.producer] ? ps.consumers_off : ps.consumers_on) += 1;
      }
      pr.port_sends.push_back(ps);
    }
    for (const auto& route : sched_.copy_routes) {
      auto& pr = procs_[route.producer];
      std::uint64_t on = 0;
      std::uint64_t off = 0;
      for (auto c : route.consumers) (p_.chip_of[c] != p_.chip_of[route.producer] ? off : on) += route.bytes;
      pr.copy_sends.push_back({on, off});
    }
  }

  void compute(Proc& pr, std::uint64_t cycle, std::span<const std::uint64_t> inputs) {
    pr.stamp = 0;
    pr.faults.clear();
    std::uint64_t* v = pr.slots.data();
    for (const auto& [in, s] : pr.input_loads) v[s] = inputs[in];
    for (const auto& I : pr.code) {
      switch (I.op) {
        case Op::Not: v[I.dst] = ops::unary(UnaryOp::Not, I.width, v[I.a]); break;
        case Op::Neg: v[I.dst] = ops::unary(UnaryOp::Neg, I.width, v[I.a]); break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::And:
        case Op::Or:
        case Op::Xor:
        case Op::Shl:
        case Op::Shr:
        case Op::Eq:
        case Op::Ne:
        case Op::Lt:
        case Op::Le: v[I.dst] = ops::binary(binary_of(I.op), I.width, v[I.a], v[I.b]); break;
        case Op::Mux: v[I.dst] = v[I.a] ? v[I.b] : v[I.c]; break;
        case Op::Slice: v[I.dst] = ops::slice(v[I.a], I.b, I.c); break;
        case Op::Concat: {
          std::uint64_t x = 0;
          for (std::uint32_t k = 0; k < I.b; ++k) {
            const auto [s, w] = pr.concat_parts[I.a + k];
            x = w >= 64 ? v[s] : (x << w) | v[s];
          }
          v[I.dst] = x;
          break;
        }
        case Op::ArrayRead: {
          const auto& arr = pr.replicas[I.a];
          const auto idx = v[I.b];
          if (idx < arr.size()) {
            v[I.dst] = arr[idx];
          } else {
            pr.faults.push_back({I.aux, idx});
            v[I.dst] = 0;
          }
          break;
        }
        case Op::ArrayWrite: {
          auto& out = pr.port_out[I.dst];
          out.enabled = v[I.c] != 0;
          out.index = v[I.a];
          out.value = v[I.b];
          if (out.enabled && out.index >= I.imm) {
            pr.faults.push_back({I.aux, out.index});
            out.enabled = 0;
          }
          break;
        }
        case Op::NextWrite: pr.reg_out[I.dst] = v[I.a]; break;
      }
    }
    for (std::size_t k = 0; k < pr.copy_out.size(); ++k) {
      const auto a = pr.copy_out_array[k];
      auto& buf = pr.copy_out[k];
      const auto& current = pr.replicas[static_cast<std::size_t>(
          std::find(pr.replica_array.begin(), pr.replica_array.end(), a) - pr.replica_array.begin())];
      std::copy(current.begin(), current.end(), buf.begin());
      for (const auto& I : pr.code) {
        if (I.op == Op::ArrayWrite && I.aux == a && pr.port_out[I.dst].enabled) {
          buf[pr.port_out[I.dst].index] = pr.port_out[I.dst].value;
        }
      }
    }

    auto& c = pr.counters;
    c.node_evals += c.node_evals_per_cycle;
    std::uint64_t on = pr.static_sent_on;
    std::uint64_t off = pr.static_sent_off;
    for (const auto& ps : pr.port_sends) {
      const auto& out = pr.port_out[ps.out_index];
      c.presence_bits_sent += ps.consumers_on + ps.consumers_off;
      if (out.enabled) {
        on += ps.entry_bytes * ps.consumers_on;
        off += ps.entry_bytes * ps.consumers_off;
        ++c.diff_entries;
      }
    }
    for (const auto& [con, coff] : pr.copy_sends) {
      on += con;
      off += coff;
    }
    c.bytes_sent_on_chip += on;
    c.bytes_sent_off_chip += off;
    c.max_bytes_sent_cycle = std::max(c.max_bytes_sent_cycle, on + off);
    pr.cycle_sent = on + off;
    pr.stamp = cycle;
  }

  void exchange(Proc& pr, std::uint64_t cycle) {
    std::uint64_t recv = 0;
    auto& c = pr.counters;
    for (const auto& pull : pr.reg_pulls) {
      const auto& src = procs_[pull.producer];
      if (src.stamp != cycle) pr.stale_read = true;
      pr.slots[pull.slot] = src.reg_out[pull.out_index];
      if (pull.bytes) {
        (pull.off_chip ? c.bytes_recv_off_chip : c.bytes_recv_on_chip) += pull.bytes;
        recv += pull.bytes;
      }
    }
    for (const auto& pull : pr.array_pulls) {
      auto& replica = pr.replicas[pull.replica];
      std::uint64_t array_bytes = 0;
      if (pull.copied) {
        const auto& src = procs_[pull.copy_producer];
        if (src.stamp != cycle) pr.stale_read = true;
        const auto& buf = src.copy_out[pull.copy_slot];
        std::copy(buf.begin(), buf.end(), replica.begin());
        if (pull.copy_remote) {
          array_bytes = buf.size() * bytes_of(n_.arrays[pull.array].width);
          (pull.copy_off_chip ? c.bytes_recv_off_chip : c.bytes_recv_on_chip) += array_bytes;
        }
      } else {
        const auto entry = kDiffIndexBytes + bytes_of(n_.arrays[pull.array].width);
        for (const auto& ref : pull.ports) {
          const auto& src = procs_[ref.producer];
          if (src.stamp != cycle) pr.stale_read = true;
          const auto& out = src.port_out[ref.out_index];
          if (ref.remote) ++c.presence_bits_recv;
          if (!out.enabled) continue;
          replica[out.index] = out.value;
          if (ref.remote) {
            array_bytes += entry;
            (ref.off_chip ? c.bytes_recv_off_chip : c.bytes_recv_on_chip) += entry;
          }
        }
      }
      pr.array_max_recv[pull.array] = std::max(pr.array_max_recv[pull.array], array_bytes);
      recv += array_bytes;
    }
    c.max_bytes_recv_cycle = std::max(c.max_bytes_recv_cycle, recv);
  }

  void finish_compute() noexcept {
    ++barriers_;
    const auto cycle = host_cycle_ + 1;
    std::optional<IndexFault> worst;
    for (const auto& pr : procs_) {
      for (const auto& f : pr.faults) {
        if (!worst || f < *worst) worst = f;
      }
    }
    if (worst) fail(std::make_exception_ptr(index_fault_error(n_, *worst, cycle)));
  }

  void finish_exchange() noexcept {
    ++barriers_;
    const auto cycle = ++host_cycle_;
    try {
      std::uint64_t total = 0;
      for (const auto& pr : procs_) {
        if (pr.stale_read) {
          throw Error(ErrorCode::ScheduleIncomplete,
                      fmt::format("a process consumed a value its producer had not published in cycle {}", cycle));
        }
        total += pr.cycle_sent;
      }
      max_cycle_bytes_ = std::max(max_cycle_bytes_, total);
      for (std::size_t r = 0; r < host_regs_.size(); ++r) {
        const auto [prod, idx] = reg_loc_[r];
        host_regs_[r] = procs_[prod].reg_out[idx];
      }
      outputs_.evaluate(cycle, stim_.row(cycle), host_regs_, host_arrays_, trace_->values);
      trace_->cycles = cycle;
      if (options_.sim.observer) options_.sim.observer(StateView{cycle, host_regs_, host_arrays_});
    } catch (...) {
      fail(std::current_exception());
    }
    if (cycle >= cycles_) halt_ = true;
  }

  void fail(std::exception_ptr e) noexcept {
    if (!failure_) failure_ = e;
    halt_ = true;
  }

  const Partition& p_;
  const Netlist& n_;
  const DepGraph& g_;
  const Stimulus& stim_;
  const BspOptions& options_;
  OutputEvaluator outputs_;
  ExchangeSchedule sched_;
  std::vector<Proc> procs_;
  std::vector<std::vector<std::uint32_t>> node_slots_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> reg_loc_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> port_loc_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> copy_loc_;
  std::vector<std::vector<std::uint64_t>> static_arrays_;

  Trace* trace_ = nullptr;
  std::vector<std::uint64_t> host_regs_;
  std::vector<const std::vector<std::uint64_t>*> host_arrays_;
  std::uint64_t host_cycle_ = 0;
  std::uint64_t cycles_ = 0;
  std::uint64_t barriers_ = 0;
  std::uint64_t max_cycle_bytes_ = 0;
  bool halt_ = false;
  std::exception_ptr failure_;
};

}  // namespace

BspResult simulate_bsp(const Partition& p, const Netlist& n, const DepGraph& g, std::span<const Fiber> fibers,
                       const Stimulus& stim, std::uint64_t cycles, const BspOptions& options) {
  Executor ex(p, n, g, fibers, stim, options);
  return ex.run(cycles);
}

}  // namespace bsprtl
