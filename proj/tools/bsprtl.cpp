#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "bsprtl/bench_gen.hpp"
#include "bsprtl/bsp.hpp"
#include "bsprtl/costmodel.hpp"
#include "bsprtl/depgraph.hpp"
#include "bsprtl/netlist.hpp"
#include "bsprtl/partitioner.hpp"
#include "bsprtl/profile.hpp"
#include "bsprtl/sim.hpp"

#ifndef BSPRTL_VERSION
#define BSPRTL_VERSION "0.0.0"
#endif

using namespace bsprtl;
using ojson = nlohmann::ordered_json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Options {
  std::string verb;
  std::string netlist;
  std::string profile = "ipu-m2000";
  std::uint32_t chips = 0;
  std::string tiles = "full";
  std::vector<std::string> tile_list;
  std::vector<std::string> strategy_list;
  std::string strategy = "bottomup";
  std::string multichip = "pre";
  std::uint64_t array_threshold = 128 * 1024;
  double epsilon = 0.05;
  bool cost_balance = false;
  std::string stage3_order = "bestfit";
  std::string costs;
  std::string partition_in;
  std::string dump_graph;
  std::string report_out;
  std::uint64_t seed = 0;
  std::uint32_t workers = std::max(1u, std::thread::hardware_concurrency());
  bool json = false;
  std::string manifest;
  std::string output;

  // simulate
  std::string stimulus;
  std::uint64_t cycles = 100;
  std::string diff_exchange = "on";
  bool check_reference = false;
  bool binary_trace = false;
  std::vector<std::string> preload;
  std::string counters_out;

  // compare
  std::string compare;

  // gen-bench
  BenchSpec bench;
};

/// Everything written by a run, recorded into the manifest.
struct Run {
  const Options& opt;
  std::vector<std::string> args;
  std::vector<std::string> outputs;
  std::string netlist_hash;
  std::optional<MachineProfile> profile;

  void write(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", path));
    out << content;
    if (!out) throw Error(ErrorCode::IoError, fmt::format("write failed for '{}'", path));
    outputs.push_back(path);
  }

  // Writes to `path`, or to stdout when it is empty.
  void emit(const std::string& path, const std::string& content) {
    if (path.empty()) {
      std::fwrite(content.data(), 1, content.size(), stdout);
    } else {
      write(path, content);
    }
  }

  void finish() {
    if (opt.manifest.empty()) return;
    ojson m;
    m["schema"] = "bsprtl.manifest/1";
    m["toolVersion"] = BSPRTL_VERSION;
    m["verb"] = opt.verb;
    m["netlistHash"] = netlist_hash;
    m["profile"] = profile ? profile->to_text() : "";
    m["strategy"] = {{"singleChip", opt.strategy}, {"multiChip", opt.multichip}};
    m["seed"] = opt.seed;
    m["flags"] = args;
    m["outputs"] = outputs;
    std::ofstream out(opt.manifest, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", opt.manifest));
    out << m.dump(1) << "\n";
  }
};

MachineProfile load_profile(const Options& opt) {
  auto p = MachineProfile::load(opt.profile);
  if (opt.chips > 0) p.chips = opt.chips;
  p.validate();
  return p;
}

PartitionOptions partition_options(const Options& opt, const MachineProfile& profile) {
  PartitionOptions po;
  po.strategy.single = parse_single_chip(opt.strategy);
  po.strategy.multi = parse_multi_chip(opt.multichip);
  po.array_threshold = opt.array_threshold;
  po.epsilon = opt.epsilon;
  po.cost_weighted_balance = opt.cost_balance;
  po.stage3_order = parse_candidate_order(opt.stage3_order);
  po.hypergraph.seed = opt.seed;
  po.target_tiles_per_chip = TileSpec::parse(opt.tiles).per_chip(profile);
  return po;
}

struct Design {
  std::string source;
  Netlist netlist;
  DepGraph graph;
  std::vector<Fiber> fibers;
};

Design load_design(Run& run) {
  Design d;
  d.source = read_file(run.opt.netlist);
  run.netlist_hash = source_hash(d.source);
  d.netlist = parse_netlist(d.source);
  d.graph = elaborate(d.netlist, run.opt.costs.empty() ? CostTable::defaults() : CostTable::parse(read_file(run.opt.costs)));
  d.fibers = extract_fibers(d.graph);
  if (!run.opt.dump_graph.empty()) run.write(run.opt.dump_graph, d.graph.dump());
  return d;
}

Partition obtain_partition(Run& run, const Design& d, const MachineProfile& profile) {
  if (!run.opt.partition_in.empty()) {
    return partition_from_json(read_file(run.opt.partition_in), d.fibers, d.graph, run.netlist_hash);
  }
  return partition(d.fibers, d.graph, profile, partition_options(run.opt, profile));
}

std::string summary(const Design& d, const Partition& p, const CostReport& r) {
  std::string s;
  s += fmt::format("design {}: {} nodes, {} edges, {} fibers\n", d.netlist.name, d.graph.nodes.size(),
                   d.graph.edge_count(), d.fibers.size());
  s += fmt::format("partition: {} processes on {} chips ({}/{}), off-chip cut {}\n", p.processes.size(), p.chips,
                   to_string(p.strategy.single), to_string(p.strategy.multi), p.stats.off_chip_cut);
  s += fmt::format("cost: tSync {:.3f}  tComm {:.3f} (on {:.3f}, off {:.3f}, msg {:.3f})  tComp {:.3f}  total {:.3f}\n",
                   r.t_sync, r.t_comm(), r.t_comm_on_chip, r.t_comm_off_chip, r.t_comm_overhead, r.t_comp, r.total());
  s += fmt::format("rate: {:.9g} RTL cycles per machine cycle\n", r.rate);
  s += fmt::format("straggler: fiber {} ({}) cost {}, mCrit {}\n", r.straggler_fiber,
                   d.fibers.empty() ? std::string("-") : d.graph.sink_name(d.fibers[r.straggler_fiber].sink),
                   r.straggler_cost, r.m_crit);
  return s;
}

int cmd_compile(Run& run) {
  const auto& opt = run.opt;
  const auto d = load_design(run);
  run.profile = load_profile(opt);
  const auto p = obtain_partition(run, d, *run.profile);
  const auto sched = build_exchange_schedule(p, d.graph, d.fibers);
  const auto r = estimate(p, sched, *run.profile, d.fibers);
  const auto pjson = partition_to_json(p, run.netlist_hash);
  if (!opt.output.empty()) run.write(opt.output, pjson);
  if (!opt.report_out.empty()) run.write(opt.report_out, report_json(r));
  if (opt.json) {
    ojson j;
    j["schema"] = "bsprtl.compile/1";
    j["partition"] = ojson::parse(pjson);
    j["report"] = ojson::parse(report_json(r))["report"];
    run.emit("", j.dump(1) + "\n");
  } else {
    run.emit("", summary(d, p, r));
  }
  return 0;
}

std::vector<std::vector<std::uint64_t>> load_preloads(const Options& opt, const Netlist& n) {
  std::vector<std::vector<std::uint64_t>> init(n.arrays.size());
  for (const auto& spec : opt.preload) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::UsageError, fmt::format("--preload expects arr=file, got '{}'", spec));
    const auto name = spec.substr(0, eq);
    auto it = std::find_if(n.arrays.begin(), n.arrays.end(), [&](const ArrayDecl& a) { return a.name == name; });
    if (it == n.arrays.end()) throw Error(ErrorCode::UsageError, fmt::format("--preload: no array named '{}'", name));
    init[it - n.arrays.begin()] = parse_preload(read_file(spec.substr(eq + 1)), it->width, it->depth);
  }
  return init;
}

ojson counters_json(const ExecCounters& c) {
  ojson j;
  j["cycles"] = c.cycles;
  j["barriers"] = c.barriers;
  j["totalBytes"] = c.total_bytes;
  j["maxCycleBytes"] = c.max_cycle_bytes;
  j["arrayMaxBytesPerConsumer"] = c.array_max_bytes_per_consumer;
  auto procs = ojson::array();
  for (std::size_t i = 0; i < c.processes.size(); ++i) {
    const auto& p = c.processes[i];
    procs.push_back({{"id", i},
                     {"nodeEvalsPerCycle", p.node_evals_per_cycle},
                     {"nodeEvals", p.node_evals},
                     {"bytesSentOnChip", p.bytes_sent_on_chip},
                     {"bytesSentOffChip", p.bytes_sent_off_chip},
                     {"bytesRecvOnChip", p.bytes_recv_on_chip},
                     {"bytesRecvOffChip", p.bytes_recv_off_chip},
                     {"presenceBitsSent", p.presence_bits_sent},
                     {"diffEntries", p.diff_entries}});
  }
  j["processes"] = std::move(procs);
  return j;
}

// First difference between two simulation states, or empty when identical.
std::string first_difference(const SimState& ref, const SimState& bsp) {
  const auto& a = ref.trace;
  const auto& b = bsp.trace;
  const auto outs = a.output_names.size();
  for (std::uint64_t c = 1; c <= std::min(a.cycles, b.cycles); ++c) {
    for (std::size_t o = 0; o < outs; ++o) {
      if (a.value(c, o) != b.value(c, o)) {
        return fmt::format("cycle {} output {}: reference {} bsp {}", c, a.output_names[o], a.value(c, o), b.value(c, o));
      }
    }
  }
  if (a.cycles != b.cycles) return fmt::format("trace length {} vs {}", a.cycles, b.cycles);
  if (ref.registers != bsp.registers) return "final register state differs";
  if (ref.arrays != bsp.arrays) return "final array contents differ";
  return {};
}

int cmd_simulate(Run& run) {
  const auto& opt = run.opt;
  if (opt.binary_trace && opt.output.empty()) throw Error(ErrorCode::UsageError, "--binary-trace needs -o FILE");
  const auto d = load_design(run);
  run.profile = load_profile(opt);
  const auto p = obtain_partition(run, d, *run.profile);

  const auto stim = opt.stimulus.empty() ? Stimulus::random(d.netlist, opt.cycles, opt.seed)
                                         : Stimulus::parse(read_file(opt.stimulus), d.netlist);
  stim.require(opt.cycles);

  BspOptions bo;
  bo.workers = std::max(1u, opt.workers);
  if (opt.diff_exchange != "on" && opt.diff_exchange != "off") {
    throw Error(ErrorCode::UsageError, "--diff-exchange takes on or off");
  }
  bo.exchange.diff_exchange = opt.diff_exchange == "on";
  bo.sim.array_init = load_preloads(opt, d.netlist);
  const auto result = simulate_bsp(p, d.netlist, d.graph, d.fibers, stim, opt.cycles, bo);

  std::string status;
  std::string diff;
  if (opt.check_reference) {
    SimOptions so;
    so.array_init = bo.sim.array_init;
    const auto ref = simulate_reference(d.netlist, stim, opt.cycles, so);
    diff = first_difference(ref, result.state);
    status = diff.empty() ? "MATCH" : "MISMATCH";
  }

  const auto& trace = result.state.trace;
  if (!opt.output.empty()) run.write(opt.output, opt.binary_trace ? trace.to_binary() : trace.to_csv());
  if (!opt.counters_out.empty()) run.write(opt.counters_out, counters_json(result.counters).dump(1) + "\n");

  if (opt.json) {
    ojson j;
    j["schema"] = "bsprtl.simulate/1";
    j["design"] = d.netlist.name;
    j["cycles"] = opt.cycles;
    j["workers"] = bo.workers;
    j["processes"] = p.processes.size();
    j["reference"] = status.empty() ? ojson(nullptr) : ojson(status);
    if (!diff.empty()) j["difference"] = diff;
    j["counters"] = counters_json(result.counters);
    if (opt.output.empty()) {
      j["outputs"] = trace.output_names;
      auto rows = ojson::array();
      for (std::uint64_t c = 1; c <= trace.cycles; ++c) {
        auto row = ojson::array();
        for (std::size_t o = 0; o < trace.output_names.size(); ++o) row.push_back(trace.value(c, o));
        rows.push_back(std::move(row));
      }
      j["trace"] = std::move(rows);
    } else {
      j["traceFile"] = opt.output;
    }
    run.emit("", j.dump(1) + "\n");
  } else if (opt.output.empty()) {
    run.emit("", trace.to_csv());
  }
  if (!status.empty()) {
    const auto line = status + (diff.empty() ? "" : ": " + diff) + "\n";
    std::fflush(stdout);
    (!opt.json && !opt.output.empty() ? std::cout : std::cerr) << line;
  }
  return diff.empty() ? 0 : 1;
}

std::vector<PartitionStrategy> parse_strategies(const std::vector<std::string>& items) {
  std::vector<PartitionStrategy> out;
  for (const auto& s : items) {
    if (s.empty()) continue;
    const auto slash = s.find('/');
    PartitionStrategy ps;
    ps.single = parse_single_chip(s.substr(0, slash));
    if (slash != std::string::npos) ps.multi = parse_multi_chip(s.substr(slash + 1));
    out.push_back(ps);
  }
  return out;
}

std::vector<TileSpec> parse_tiles(const std::vector<std::string>& items) {
  std::vector<TileSpec> out;
  for (const auto& t : items) {
    if (!t.empty()) out.push_back(TileSpec::parse(t));
  }
  return out;
}

int cmd_sweep(Run& run) {
  const auto& opt = run.opt;
  const auto d = load_design(run);
  run.profile = load_profile(opt);
  const auto tiles = parse_tiles(opt.tile_list);
  const auto strategies = parse_strategies(opt.strategy_list);
  const auto base = partition_options(run.opt, *run.profile);
  const auto points = scaling_sweep(d.graph, d.fibers, *run.profile, tiles, strategies, base);
  run.emit(opt.output, opt.json ? sweep_json(points, *run.profile) : sweep_csv(points, *run.profile));
  return 0;
}

int cmd_compare(Run& run) {
  const auto& opt = run.opt;
  if (opt.compare != "multichip" && opt.compare != "singlechip") {
    throw Error(ErrorCode::UsageError, "--compare needs an axis: multichip or singlechip");
  }
  const auto d = load_design(run);
  run.profile = load_profile(opt);
  const auto tiles = parse_tiles(opt.tile_list);
  const auto base = partition_options(run.opt, *run.profile);
  std::vector<PartitionStrategy> strategies;
  if (opt.compare == "multichip") {
    for (auto m : {MultiChipStrategy::Pre, MultiChipStrategy::Post, MultiChipStrategy::None}) {
      strategies.push_back({base.strategy.single, m});
    }
  } else {
    for (auto s : {SingleChipStrategy::BottomUp, SingleChipStrategy::Hypergraph}) {
      strategies.push_back({s, base.strategy.multi});
    }
  }
  const auto points = scaling_sweep(d.graph, d.fibers, *run.profile, tiles, strategies, base);

  if (opt.json) {
    ojson j;
    j["schema"] = "bsprtl.compare/1";
    j["axis"] = opt.compare;
    j["sweep"] = ojson::parse(sweep_json(points, *run.profile));
    run.emit(opt.output, j.dump(1) + "\n");
    return 0;
  }
  std::string csv = "axis,strategy,tiles,tiles_per_chip,processes,offchip_cut,tsync,tcomm,tcomp,cycles_per_rtl_cycle,rate,status\n";
  for (const auto& pt : points) {
    const auto label = opt.compare == "multichip" ? std::string(to_string(pt.strategy.multi))
                                                  : std::string(to_string(pt.strategy.single));
    if (!pt.ok) {
      csv += fmt::format("{},{},{},{},,,,,,,,\"{}\"\n", opt.compare, label, pt.tiles.label,
                         pt.tiles.per_chip(*run.profile), pt.error);
      continue;
    }
    const auto& r = pt.report;
    csv += fmt::format("{},{},{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.9g},ok\n", opt.compare, label, pt.tiles.label,
                       pt.tiles.per_chip(*run.profile), pt.processes, pt.off_chip_cut, r.t_sync, r.t_comm(), r.t_comp,
                       r.total(), r.rate);
  }
  run.emit(opt.output, csv);
  return 0;
}

int cmd_gen_bench(Run& run) {
  const auto& opt = run.opt;
  const auto text = generate(opt.bench);
  run.netlist_hash = source_hash(text);
  if (opt.json) {
    ojson j;
    j["schema"] = "bsprtl.bench/1";
    j["kind"] = std::string(to_string(opt.bench.kind));
    j["seed"] = opt.bench.seed;
    j["estimatedNodes"] = estimate_nodes(opt.bench);
    j["netlistHash"] = run.netlist_hash;
    if (opt.output.empty()) {
      j["netlist"] = text;
    } else {
      run.write(opt.output, text);
      j["netlistFile"] = opt.output;
    }
    run.emit("", j.dump(1) + "\n");
  } else {
    run.emit(opt.output, text);
  }
  return 0;
}

int cmd_report(Run& run) {
  const auto& opt = run.opt;
  const auto d = load_design(run);
  run.profile = load_profile(opt);
  const auto p = obtain_partition(run, d, *run.profile);
  const auto sched = build_exchange_schedule(p, d.graph, d.fibers);
  const auto r = estimate(p, sched, *run.profile, d.fibers);
  const auto problems = verify_partition(p, d.fibers, d.graph, *run.profile);

  if (opt.json) {
    auto j = ojson::parse(report_json(r));
    j["schema"] = "bsprtl.report/1";
    j["design"] = {{"name", d.netlist.name},
                   {"netlistHash", run.netlist_hash},
                   {"nodes", d.graph.nodes.size()},
                   {"edges", d.graph.edge_count()},
                   {"fibers", d.fibers.size()}};
    j["processes"] = p.processes.size();
    j["offChipCut"] = p.stats.off_chip_cut;
    j["exchange"] = {{"onChipBytes", sched.on_chip_bytes},
                     {"offChipBytes", sched.off_chip_bytes},
                     {"presenceBits", sched.presence_bits}};
    j["problems"] = problems;
    run.emit(opt.output, j.dump(1) + "\n");
  } else {
    std::string s = summary(d, p, r);
    s += fmt::format("exchange: {} bytes on chip, {} bytes off chip, {} presence bits per cycle\n", sched.on_chip_bytes,
                     sched.off_chip_bytes, sched.presence_bits);
    s += "process,chip,fibers,cost,data_mem,code_mem,on_chip_bytes,off_chip_bytes\n";
    for (std::size_t i = 0; i < p.processes.size(); ++i) {
      const auto& proc = p.processes[i];
      const auto& pc = r.per_process[i];
      s += fmt::format("{},{},{},{},{},{},{},{}\n", proc.id, proc.chip, proc.fibers.size(), proc.cost, proc.data_mem,
                       proc.code_mem, pc.on_chip_bytes, pc.off_chip_bytes);
    }
    for (const auto& msg : problems) s += fmt::format("problem: {}\n", msg);
    run.emit(opt.output, s);
  }
  return problems.empty() ? 0 : 1;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.seed, "Seed for every random choice")->capture_default_str();
  cmd->add_flag("--json", o.json, "Machine-readable output");
  cmd->add_option("--manifest", o.manifest, "Write a run manifest to FILE");
  cmd->add_option("-o,--output", o.output, "Output file (default stdout)");
}

void add_design(CLI::App* cmd, Options& o) {
  cmd->add_option("netlist", o.netlist, "Netlist source file")->required();
  cmd->add_option("--profile", o.profile, "Machine profile preset or file")->capture_default_str();
  cmd->add_option("--chips", o.chips, "Override the profile chip count");
  cmd->add_option("--strategy", o.strategy, "Single-chip strategy: bottomup|hypergraph")->capture_default_str();
  cmd->add_option("--multichip", o.multichip, "Multi-chip strategy: pre|post|none")->capture_default_str();
  cmd->add_option("--array-threshold", o.array_threshold, "Co-locate fibers sharing arrays of at least BYTES")
      ->capture_default_str();
  cmd->add_option("--epsilon", o.epsilon, "Chip balance tolerance")->capture_default_str();
  cmd->add_flag("--cost-balance", o.cost_balance, "Balance chips by fiber cost instead of fiber count");
  cmd->add_option("--stage3-order", o.stage3_order, "Stage-3 candidate order: bestfit|ascending")->capture_default_str();
  cmd->add_option("--costs", o.costs, "Per-op cost table file");
  cmd->add_option("--dump-graph", o.dump_graph, "Write the dependence graph to FILE");
}

void add_bench_common(CLI::App* cmd, Options& o) {
  add_common(cmd, o);
  cmd->add_option("--node-cap", o.bench.node_cap, "Refuse specs above this node estimate")->capture_default_str();
}

std::vector<std::string> split_args(int argc, char** argv) {
  std::vector<std::string> v;
  for (int i = 1; i < argc; ++i) v.emplace_back(argv[i]);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"BSP partitioning compiler and simulator for cycle-accurate RTL"};
  app.set_version_flag("--version", BSPRTL_VERSION);
  app.require_subcommand(1);

  auto* compile = app.add_subcommand("compile", "Partition a netlist and print its cost report");
  add_design(compile, o);
  add_common(compile, o);
  compile->add_option("--tiles", o.tiles, "Tiles: N total, 1/8, 1/4, 1/2 or full")->capture_default_str();
  compile->add_option("--partition", o.partition_in, "Use this partition JSON instead of partitioning");
  compile->add_option("--report", o.report_out, "Write the cost report JSON to FILE");

  auto* simulate = app.add_subcommand("simulate", "Run the BSP executor");
  add_design(simulate, o);
  add_common(simulate, o);
  simulate->add_option("--tiles", o.tiles, "Tiles: N total, 1/8, 1/4, 1/2 or full")->capture_default_str();
  simulate->add_option("--partition", o.partition_in, "Partition JSON from compile");
  simulate->add_option("--stimulus", o.stimulus, "Stimulus file (default random from --seed)");
  simulate->add_option("--cycles", o.cycles, "Cycles to simulate")->capture_default_str();
  simulate->add_option("--workers", o.workers, "Worker threads")->capture_default_str();
  simulate->add_option("--diff-exchange", o.diff_exchange, "Differential array exchange: on|off")
      ->capture_default_str();
  simulate->add_flag("--check-against-reference", o.check_reference, "Compare with the sequential simulator");
  simulate->add_flag("--binary-trace", o.binary_trace, "Write the trace in binary form");
  simulate->add_option("--preload", o.preload, "Initial array contents: ARRAY=FILE");
  simulate->add_option("--counters", o.counters_out, "Write execution counters JSON to FILE");

  o.tile_list = {"1/8", "1/4", "1/2", "full"};
  o.strategy_list = {"bottomup/pre"};
  auto* sweep = app.add_subcommand("sweep", "Model cycle time across tile budgets and strategies");
  add_design(sweep, o);
  add_common(sweep, o);
  sweep->add_option("--tiles", o.tile_list, "Comma-separated tile budgets")->delimiter(',')->capture_default_str();
  sweep->add_option("--strategies", o.strategy_list, "Comma-separated single/multi strategy pairs")
      ->delimiter(',')
      ->capture_default_str();

  auto* compare = app.add_subcommand("compare", "Compare partitioning strategies on one axis");
  add_design(compare, o);
  add_common(compare, o);
  compare->add_option("--compare", o.compare, "Axis: multichip|singlechip");
  compare->add_option("--tiles", o.tile_list, "Comma-separated tile budgets")->delimiter(',');

  auto* gen = app.add_subcommand("gen-bench", "Generate a synthetic benchmark netlist");
  gen->require_subcommand(1);
  auto* prng = gen->add_subcommand("prng", "Independent xorshift generators");
  add_bench_common(prng, o);
  prng->add_option("--count", o.bench.count, "Generators")->required();
  auto* hasher = gen->add_subcommand("hasher", "Pipelined hash rounds");
  add_bench_common(hasher, o);
  hasher->add_option("--rounds", o.bench.rounds, "Rounds per lane")->capture_default_str();
  hasher->add_option("--lanes", o.bench.lanes, "Lanes")->capture_default_str();
  auto* imbalanced = gen->add_subcommand("imbalanced", "Few heavy fibers among many light ones");
  add_bench_common(imbalanced, o);
  imbalanced->add_option("--big", o.bench.big_fibers, "Heavy fibers")->capture_default_str();
  imbalanced->add_option("--small", o.bench.small_fibers, "Light fibers")->capture_default_str();
  imbalanced->add_option("--ratio", o.bench.ratio, "Heavy to light cost ratio")->capture_default_str();
  auto* mesh = gen->add_subcommand("mesh", "Grid of small cores with neighbour links");
  add_bench_common(mesh, o);
  mesh->add_option("--rows", o.bench.rows, "Rows")->capture_default_str();
  mesh->add_option("--cols", o.bench.cols, "Columns")->capture_default_str();
  mesh->add_option("--array-kib", o.bench.array_kib, "Register file KiB per core")->capture_default_str();
  mesh->add_option("--link-bits", o.bench.link_width, "Link register width")->capture_default_str();
  mesh->add_option("--core-regs", o.bench.core_regs, "Extra registers per core")->capture_default_str();

  auto* report = app.add_subcommand("report", "Detailed cost and partition report");
  add_design(report, o);
  add_common(report, o);
  report->add_option("--tiles", o.tiles, "Tiles: N total, 1/8, 1/4, 1/2 or full")->capture_default_str();
  report->add_option("--partition", o.partition_in, "Partition JSON from compile");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  Run run{o, split_args(argc, argv), {}, {}, {}};
  try {
    int rc = 0;
    if (compile->parsed()) {
      o.verb = "compile";
      rc = cmd_compile(run);
    } else if (simulate->parsed()) {
      o.verb = "simulate";
      rc = cmd_simulate(run);
    } else if (sweep->parsed()) {
      o.verb = "sweep";
      rc = cmd_sweep(run);
    } else if (compare->parsed()) {
      o.verb = "compare";
      if (compare->count("--tiles") == 0) o.tile_list = {"full"};
      rc = cmd_compare(run);
    } else if (gen->parsed()) {
      o.verb = "gen-bench";
      o.bench.seed = o.seed;
      if (prng->parsed()) o.bench.kind = BenchKind::PrngBank;
      if (hasher->parsed()) o.bench.kind = BenchKind::HasherChain;
      if (imbalanced->parsed()) o.bench.kind = BenchKind::ImbalancedMix;
      if (mesh->parsed()) o.bench.kind = BenchKind::CoreMesh;
      rc = cmd_gen_bench(run);
    } else if (report->parsed()) {
      o.verb = "report";
      rc = cmd_report(run);
    }
    std::fflush(stdout);
    run.finish();
    return rc;
  } catch (const Error& e) {
    std::fflush(stdout);
    std::cerr << "error: " << e.what() << "\n";
    return is_capacity_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::fflush(stdout);
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
