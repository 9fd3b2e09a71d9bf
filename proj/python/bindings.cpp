#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>

#include "bsprtl/bench_gen.hpp"
#include "bsprtl/bsp.hpp"
#include "bsprtl/costmodel.hpp"
#include "bsprtl/depgraph.hpp"
#include "bsprtl/netlist.hpp"
#include "bsprtl/partitioner.hpp"
#include "bsprtl/profile.hpp"
#include "bsprtl/sim.hpp"

namespace py = pybind11;
using namespace bsprtl;

namespace {

/// A parsed, elaborated netlist with its fibers.
struct Design {
  std::string source;
  Netlist netlist;
  DepGraph graph;
  std::vector<Fiber> fibers;

  Design(std::string text, std::optional<std::string> costs) : source(std::move(text)) {
    netlist = parse_netlist(source);
    graph = elaborate(netlist, costs ? CostTable::parse(*costs) : CostTable::defaults());
    fibers = extract_fibers(graph);
  }

  std::vector<std::uint64_t> fiber_costs() const {
    std::vector<std::uint64_t> out;
    for (const auto& f : fibers) out.push_back(f.cost);
    return out;
  }
};

MachineProfile make_profile(const std::string& profile, std::optional<std::uint32_t> chips,
                            std::optional<std::uint32_t> tiles_per_chip) {
  auto p = profile.find('=') != std::string::npos ? MachineProfile::parse(profile) : MachineProfile::load(profile);
  if (chips) p.chips = *chips;
  if (tiles_per_chip) p.tiles_per_chip = *tiles_per_chip;
  p.validate();
  return p;
}

Stimulus make_stimulus(const Design& d, const std::optional<std::string>& text, std::uint64_t cycles,
                       std::uint64_t seed) {
  return text ? Stimulus::parse(*text, d.netlist) : Stimulus::random(d.netlist, cycles, seed);
}

py::dict report_dict(const CostReport& r) {
  py::dict out;
  out["t_sync"] = r.t_sync;
  out["t_comm_on_chip"] = r.t_comm_on_chip;
  out["t_comm_off_chip"] = r.t_comm_off_chip;
  out["t_comm_overhead"] = r.t_comm_overhead;
  out["t_comm"] = r.t_comm();
  out["t_comp"] = r.t_comp;
  out["total"] = r.total();
  out["rate"] = r.rate;
  out["active_tiles"] = r.active_tiles;
  out["m_crit"] = r.m_crit;
  out["straggler_fiber"] = r.straggler_fiber;
  out["straggler_cost"] = r.straggler_cost;
  return out;
}

py::dict trace_dict(const Trace& t) {
  py::dict out;
  out["outputs"] = t.output_names;
  std::vector<std::vector<std::uint64_t>> rows;
  for (std::uint64_t c = 1; c <= t.cycles; ++c) {
    std::vector<std::uint64_t> row;
    for (std::size_t o = 0; o < t.output_names.size(); ++o) row.push_back(t.value(c, o));
    rows.push_back(std::move(row));
  }
  out["rows"] = rows;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "BSP partitioning compiler and executor for cycle-accurate RTL simulation";

  static py::handle error_type = py::exception<Error>(m, "BsprtlError").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(std::string(e.what()));
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<Design, std::shared_ptr<Design>>(m, "Design")
      .def(py::init<std::string, std::optional<std::string>>(), py::arg("source"), py::arg("costs") = py::none())
      .def_property_readonly("name", [](const Design& d) { return d.netlist.name; })
      .def_property_readonly("num_nodes", [](const Design& d) { return d.graph.nodes.size(); })
      .def_property_readonly("num_fibers", [](const Design& d) { return d.fibers.size(); })
      .def_property_readonly("fiber_costs", &Design::fiber_costs)
      .def_property_readonly("hash", [](const Design& d) { return source_hash(d.source); })
      .def("canonical_source", [](const Design& d) { return to_source(d.netlist); })
      .def("dump_graph", [](const Design& d) { return d.graph.dump(); })
      .def("fiber_set_cost",
           [](const Design& d, const std::vector<FiberId>& set) { return fiber_set_cost(set, d.fibers, d.graph); });

  py::class_<Partition>(m, "Partition")
      .def_property_readonly("processes",
                             [](const Partition& p) {
                               std::vector<std::vector<FiberId>> out;
                               for (const auto& proc : p.processes) out.push_back(proc.fibers);
                               return out;
                             })
      .def_property_readonly("chip_of", [](const Partition& p) { return p.chip_of; })
      .def_property_readonly("costs",
                             [](const Partition& p) {
                               std::vector<std::uint64_t> out;
                               for (const auto& proc : p.processes) out.push_back(proc.cost);
                               return out;
                             })
      .def_property_readonly("chips", [](const Partition& p) { return p.chips; })
      .def_property_readonly("off_chip_cut", [](const Partition& p) { return p.stats.off_chip_cut; })
      .def_property_readonly("max_cost", &Partition::max_cost);

  m.def(
      "partition",
      [](const Design& d, const std::string& profile, std::optional<std::uint32_t> chips,
         std::optional<std::uint32_t> tiles_per_chip, const std::string& single, const std::string& multi,
         const std::string& tiles) {
        const auto prof = make_profile(profile, chips, tiles_per_chip);
        PartitionOptions o;
        o.strategy = {parse_single_chip(single), parse_multi_chip(multi)};
        o.target_tiles_per_chip = TileSpec::parse(tiles).per_chip(prof);
        return partition(d.fibers, d.graph, prof, o);
      },
      py::arg("design"), py::arg("profile") = "ipu-m2000", py::arg("chips") = py::none(),
      py::arg("tiles_per_chip") = py::none(), py::arg("single") = "bottomup", py::arg("multi") = "pre",
      py::arg("tiles") = "full");

  m.def(
      "partition_to_json", [](const Design& d, const Partition& p) { return partition_to_json(p, source_hash(d.source)); },
      py::arg("design"), py::arg("partition"));
  m.def(
      "partition_from_json",
      [](const Design& d, const std::string& text) {
        return partition_from_json(text, d.fibers, d.graph, source_hash(d.source));
      },
      py::arg("design"), py::arg("text"));

  m.def(
      "estimate",
      [](const Design& d, const Partition& p, const std::string& profile, std::optional<std::uint32_t> chips,
         std::optional<std::uint32_t> tiles_per_chip, bool diff_exchange) {
        const auto prof = make_profile(profile, chips, tiles_per_chip);
        const auto s = build_exchange_schedule(p, d.graph, d.fibers, {.diff_exchange = diff_exchange});
        return report_dict(estimate(p, s, prof, d.fibers));
      },
      py::arg("design"), py::arg("partition"), py::arg("profile") = "ipu-m2000", py::arg("chips") = py::none(),
      py::arg("tiles_per_chip") = py::none(), py::arg("diff_exchange") = true);

  m.def(
      "simulate",
      [](const Design& d, const Partition& p, std::uint64_t cycles, std::optional<std::string> stimulus,
         std::uint64_t seed, std::uint32_t workers, bool diff_exchange) {
        const auto stim = make_stimulus(d, stimulus, cycles, seed);
        BspOptions o;
        o.workers = workers;
        o.exchange.diff_exchange = diff_exchange;
        BspResult r;
        {
          py::gil_scoped_release release;
          r = simulate_bsp(p, d.netlist, d.graph, d.fibers, stim, cycles, o);
        }
        auto out = trace_dict(r.state.trace);
        out["barriers"] = r.counters.barriers;
        out["total_bytes"] = r.counters.total_bytes;
        return out;
      },
      py::arg("design"), py::arg("partition"), py::arg("cycles") = 100, py::arg("stimulus") = py::none(),
      py::arg("seed") = 0, py::arg("workers") = 1, py::arg("diff_exchange") = true);

  m.def(
      "simulate_reference",
      [](const Design& d, std::uint64_t cycles, std::optional<std::string> stimulus, std::uint64_t seed) {
        return trace_dict(simulate_reference(d.netlist, make_stimulus(d, stimulus, cycles, seed), cycles).trace);
      },
      py::arg("design"), py::arg("cycles") = 100, py::arg("stimulus") = py::none(), py::arg("seed") = 0);

  m.def(
      "sweep",
      [](const Design& d, const std::vector<std::string>& tiles, const std::vector<std::string>& strategies,
         const std::string& profile, std::optional<std::uint32_t> chips, bool json) {
        const auto prof = make_profile(profile, chips, std::nullopt);
        std::vector<TileSpec> ts;
        for (const auto& t : tiles) ts.push_back(TileSpec::parse(t));
        std::vector<PartitionStrategy> ss;
        for (const auto& s : strategies) ss.push_back({SingleChipStrategy::BottomUp, parse_multi_chip(s)});
        const auto pts = scaling_sweep(d.graph, d.fibers, prof, ts, ss);
        return json ? sweep_json(pts, prof) : sweep_csv(pts, prof);
      },
      py::arg("design"), py::arg("tiles") = std::vector<std::string>{"1/8", "1/4", "1/2", "full"},
      py::arg("strategies") = std::vector<std::string>{"pre"}, py::arg("profile") = "ipu-m2000",
      py::arg("chips") = py::none(), py::arg("json") = false);

  m.def(
      "gen_bench",
      [](const std::string& kind, std::uint32_t count, std::uint32_t rounds, std::uint32_t lanes, std::uint32_t big,
         std::uint32_t small, double ratio, std::uint32_t rows, std::uint32_t cols, std::uint64_t seed) {
        BenchSpec s;
        if (kind == "prng") {
          s = BenchSpec::prng(count, seed);
        } else if (kind == "hasher") {
          s = BenchSpec::hasher(rounds, lanes, seed);
        } else if (kind == "imbalanced") {
          s = BenchSpec::imbalanced(big, small, ratio, seed);
        } else if (kind == "mesh") {
          s = BenchSpec::mesh(rows, cols, 2, 1, 16, seed);
        } else {
          throw Error(ErrorCode::UsageError, "unknown benchmark kind '" + kind + "'");
        }
        return generate(s);
      },
      py::arg("kind"), py::arg("count") = 1, py::arg("rounds") = 4, py::arg("lanes") = 4, py::arg("big") = 1,
      py::arg("small") = 8, py::arg("ratio") = 4.0, py::arg("rows") = 2, py::arg("cols") = 2, py::arg("seed") = 0);

  m.attr("__version__") = BSPRTL_VERSION;
}
