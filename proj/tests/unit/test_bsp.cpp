#include <doctest.h>

#include <numeric>
#include <random>

#include "bsprtl/bsp.hpp"
#include "bsprtl/sim.hpp"
#include "common.hpp"

using namespace bsprtl;

namespace {

Partition singletons(const fx::Compiled& c, std::uint32_t chips = 1) {
  std::vector<std::uint32_t> owner(c.fibers.size());
  std::iota(owner.begin(), owner.end(), 0u);
  std::vector<std::uint32_t> chip(c.fibers.size());
  for (std::size_t i = 0; i < chip.size(); ++i) chip[i] = static_cast<std::uint32_t>(i % chips);
  return partition_from_assignment(c.fibers, c.graph, owner, chip, chips);
}

Partition from_groups(const fx::Compiled& c, const std::vector<std::uint32_t>& owner, std::uint32_t procs) {
  return partition_from_assignment(c.fibers, c.graph, owner, std::vector<std::uint32_t>(procs, 0), 1);
}

ErrorCode error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("counter trace is post-commit") {
  const auto c = fx::compile_fixture("counter.nl");
  const auto s = simulate_reference(c.netlist, Stimulus::zeros(c.netlist, 300), 300);
  CHECK(s.trace.output_names == std::vector<std::string>{"r"});
  for (std::uint64_t cyc = 1; cyc <= 300; ++cyc) CHECK(s.trace.value(cyc, 0) == cyc % 256);
  CHECK(s.trace.to_csv().rfind("cycle,output,value\n1,r,1\n2,r,2\n", 0) == 0);
}

TEST_CASE("xorshift32 matches an independent scalar loop") {
  const auto c = fx::compile_fixture("xorshift32.nl");
  const auto stim = Stimulus::zeros(c.netlist, 1000);
  const auto ref = simulate_reference(c.netlist, stim, 1000);
  const auto bsp = simulate_bsp(singletons(c), c.netlist, c.graph, c.fibers, stim, 1000);
  std::uint32_t x = 1;
  for (std::uint64_t cyc = 1; cyc <= 1000; ++cyc) {
    x ^= x << 13;
    x ^= x >> 17;
    x ^= x << 5;
    CHECK(ref.trace.value(cyc, 0) == x);
  }
  CHECK(ref.trace.value(1, 0) == 270369);
  CHECK(bsp.state.trace == ref.trace);
  REQUIRE(bsp.counters.processes.size() == 1);
  CHECK(bsp.counters.processes[0].node_evals_per_cycle == 8);
  CHECK(bsp.counters.total_bytes == 0);
}

TEST_CASE("the later write statement wins") {
  const auto c = fx::compile_fixture("write_order.nl");
  const auto stim = Stimulus::zeros(c.netlist, 3);
  const auto ref = simulate_reference(c.netlist, stim, 3);
  CHECK(ref.trace.value(1, 0) == 7);
  CHECK(ref.arrays[0][2] == 7);
  const auto bsp = simulate_bsp(singletons(c), c.netlist, c.graph, c.fibers, stim, 3);
  CHECK(bsp.state.arrays[0][2] == 7);
  CHECK(bsp.state.trace == ref.trace);
}

TEST_CASE("a u32 register read by three remote processes moves 12 bytes") {
  const auto c = fx::compile(
      "design d\nreg a : u32 init 0\nreg b : u32 init 0\nreg e : u32 init 0\nreg f : u32 init 0\n"
      "next a = a + 1\nnext b = a\nnext e = a ^ e\nnext f = a - f\n");
  const auto p = singletons(c);
  const auto sched = build_exchange_schedule(p, c.graph, c.fibers);
  REQUIRE(sched.register_routes.size() == 1);
  CHECK(sched.register_routes[0].reg == 0);
  CHECK(sched.register_routes[0].consumers.size() == 3);
  CHECK(sched.register_routes[0].bytes == 4);
  CHECK(sched.on_chip_bytes == 12);
  CHECK(sched.off_chip_bytes == 0);

  const auto r = simulate_bsp(p, c.netlist, c.graph, c.fibers, Stimulus::zeros(c.netlist, 10), 10);
  CHECK(r.counters.total_bytes == 120);
  CHECK(r.counters.processes[0].bytes_sent_on_chip == 120);

  const auto two = build_exchange_schedule(singletons(c, 2), c.graph, c.fibers);
  // Processes alternate chips, so readers 1 and 3 sit across the link.
  CHECK(two.off_chip_bytes == 8);
  CHECK(two.on_chip_bytes == 4);
}

TEST_CASE("co-located reader and writer exchange nothing") {
  const auto c = fx::compile("design d; reg a:u32 init 0; reg b:u32 init 0; next a = a + 1; next b = a;");
  const auto p = from_groups(c, {0, 0}, 1);
  CHECK(build_exchange_schedule(p, c.graph, c.fibers).total_bytes() == 0);
}

TEST_CASE("array exchange bound with and without diff exchange") {
  const auto c = fx::compile_fixture("array1.nl");
  const auto p = singletons(c);
  const auto diff = build_exchange_schedule(p, c.graph, c.fibers);
  CHECK(diff.array_bytes_bound(c.graph, 0) == 8);
  const auto full = build_exchange_schedule(p, c.graph, c.fibers, {.diff_exchange = false});
  CHECK(full.array_bytes_bound(c.graph, 0) == 4096);
}

TEST_CASE("shared nodes are evaluated in every process that needs them") {
  const auto c = fx::compile_fixture("fig2.nl");
  const auto stim = Stimulus::parse(fx::fixture("fig2.stim"), c.netlist);
  const auto ref = simulate_reference(c.netlist, stim, 8);
  const auto split = from_groups(c, {0, 1, 1}, 2);
  const auto whole = from_groups(c, {0, 0, 0}, 1);
  const auto a = simulate_bsp(split, c.netlist, c.graph, c.fibers, stim, 8);
  const auto b = simulate_bsp(whole, c.netlist, c.graph, c.fibers, stim, 8);
  CHECK(a.state.trace == ref.trace);
  CHECK(b.state.trace == ref.trace);
  const auto split_evals = a.counters.processes[0].node_evals_per_cycle + a.counters.processes[1].node_evals_per_cycle;
  CHECK(split_evals > b.counters.processes[0].node_evals_per_cycle);
  CHECK(a.counters.processes[0].node_evals == 8 * a.counters.processes[0].node_evals_per_cycle);
}

TEST_CASE("two barriers per cycle and worker-count determinism") {
  const auto c = fx::compile_fixture("array3.nl");
  const auto stim = Stimulus::random(c.netlist, 200, 7);
  const auto ref = simulate_reference(c.netlist, stim, 200);
  const auto p = singletons(c, 2);
  for (std::uint32_t workers : {1u, 2u, 3u, 8u}) {
    CAPTURE(workers);
    BspOptions o;
    o.workers = workers;
    const auto r = simulate_bsp(p, c.netlist, c.graph, c.fibers, stim, 200, o);
    CHECK(r.counters.barriers == 400);
    CHECK(r.counters.cycles == 200);
    CHECK(r.state.trace == ref.trace);
    CHECK(r.state.arrays == ref.arrays);
    CHECK(r.state.registers == ref.registers);
  }
}

TEST_CASE("stimulus errors") {
  const auto c = fx::compile_fixture("fig2.nl");
  const auto stim = Stimulus::parse(fx::fixture("fig2.stim"), c.netlist);
  CHECK(error_of([&] { simulate_reference(c.netlist, stim, 9); }) == ErrorCode::StimulusExhausted);
  CHECK(error_of([&] { simulate_bsp(singletons(c), c.netlist, c.graph, c.fibers, stim, 9); }) ==
        ErrorCode::StimulusExhausted);
  CHECK(error_of([&] { Stimulus::parse("i=1\nj=2\n", c.netlist); }) == ErrorCode::FormatError);
  CHECK(error_of([&] { Stimulus::parse("i=256\n", c.netlist); }) == ErrorCode::FormatError);
  CHECK(error_of([&] { Stimulus::parse("\n# nothing\n\n", c.netlist).require(1); }) == ErrorCode::StimulusExhausted);
  const auto parsed = Stimulus::parse("# c\ni=0x10\n\ni=3\n", c.netlist);
  REQUIRE(parsed.rows.size() == 2);
  CHECK(parsed.row(1)[0] == 16);
  CHECK(parsed.row(2)[0] == 3);
}

TEST_CASE("out-of-range array reads fault in both simulators") {
  const auto c = fx::compile(
      "design d\nreg k : u3 init 0\narray m : u8[5]\nnext k = k + 1\noutput v = m[k]\n"
      "write m[k] = 9 when k < 5\n");
  const auto stim = Stimulus::zeros(c.netlist, 10);
  std::string ref_msg;
  try {
    simulate_reference(c.netlist, stim, 10);
    FAIL("no fault");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IndexOutOfRange);
    ref_msg = e.what();
  }
  try {
    simulate_bsp(singletons(c), c.netlist, c.graph, c.fibers, stim, 10);
    FAIL("no fault");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IndexOutOfRange);
    CHECK(std::string(e.what()) == ref_msg);
  }
  CHECK(ref_msg.find("m") != std::string::npos);
}

TEST_CASE("array preload") {
  const auto c = fx::compile_fixture("array1.nl");
  const auto init = parse_preload("1 2 0x10", 32, 1024);
  REQUIRE(init.size() == 1024);
  CHECK(init[2] == 16);
  CHECK(init[3] == 0);
  CHECK(error_of([] { parse_preload("1 2 3", 8, 2); }) == ErrorCode::FormatError);
  CHECK(error_of([] { parse_preload("300", 8, 2); }) == ErrorCode::FormatError);

  SimOptions o;
  o.array_init = {init};
  const auto stim = Stimulus::zeros(c.netlist, 4);
  const auto ref = simulate_reference(c.netlist, stim, 4, o);
  // ptr is 1 after the first commit, so the output reads element 1.
  CHECK(ref.trace.value(1, 0) == 2);
  CHECK(ref.trace.value(2, 0) == 16);
  BspOptions bo;
  bo.sim = o;
  CHECK(simulate_bsp(singletons(c), c.netlist, c.graph, c.fibers, stim, 4, bo).state.trace == ref.trace);
}

TEST_CASE("binary trace round trip") {
  const auto c = fx::compile_fixture("array2.nl");
  const auto ref = simulate_reference(c.netlist, Stimulus::random(c.netlist, 50, 3), 50);
  const auto bytes = ref.trace.to_binary();
  CHECK(bytes.substr(0, 4) == "BSPT");
  CHECK(Trace::from_binary(bytes) == ref.trace);
  CHECK(error_of([&] { Trace::from_binary(bytes.substr(0, bytes.size() - 3)); }) == ErrorCode::FormatError);
}

TEST_CASE("observer sees every committed state") {
  const auto c = fx::compile_fixture("counter.nl");
  std::vector<std::uint64_t> seen;
  SimOptions o;
  o.observer = [&](const StateView& v) { seen.push_back(v.registers[0]); };
  simulate_reference(c.netlist, Stimulus::zeros(c.netlist, 5), 5, o);
  CHECK(seen == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
}

TEST_CASE("every fixture matches the reference under several partitions") {
  for (const std::string name : {"counter.nl", "xorshift32.nl", "fig2.nl", "array1.nl", "array2.nl", "array3.nl",
                                 "write_order.nl", "mesh_2x2_s0.nl", "mesh_3x3_s1.nl"}) {
    CAPTURE(name);
    const auto c = fx::compile_fixture(name);
    const auto stim = Stimulus::random(c.netlist, 120, 11);
    const auto ref = simulate_reference(c.netlist, stim, 120);
    MachineProfile prof;
    prof.chips = 2;
    prof.tiles_per_chip = 3;
    for (const auto& p : {singletons(c, 2), partition(c.fibers, c.graph, prof)}) {
      for (bool diff : {true, false}) {
        BspOptions o;
        o.workers = 2;
        o.exchange.diff_exchange = diff;
        const auto r = simulate_bsp(p, c.netlist, c.graph, c.fibers, stim, 120, o);
        CHECK(r.state.trace == ref.trace);
        CHECK(r.state.arrays == ref.arrays);
      }
    }
  }
}

TEST_CASE("random netlists and partitions match the reference") {
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    std::mt19937_64 rng(seed);
    const auto src = testing::random_netlist(rng);
    CAPTURE(src);
    const auto c = fx::compile(src);
    const auto p = testing::random_partition(rng, c.fibers, c.graph, 1 + static_cast<std::uint32_t>(rng() % 3));
    const auto stim = Stimulus::random(c.netlist, 60, seed);
    SimState ref;
    std::optional<ErrorCode> ref_err;
    try {
      ref = simulate_reference(c.netlist, stim, 60);
    } catch (const Error& e) {
      ref_err = e.code();
    }
    BspOptions o;
    o.workers = 1 + static_cast<std::uint32_t>(seed % 3);
    o.exchange.diff_exchange = seed % 2 == 0;
    try {
      const auto r = simulate_bsp(p, c.netlist, c.graph, c.fibers, stim, 60, o);
      CHECK_FALSE(ref_err.has_value());
      CHECK(r.state.trace == ref.trace);
      CHECK(r.state.registers == ref.registers);
    } catch (const Error& e) {
      REQUIRE(ref_err.has_value());
      CHECK(e.code() == *ref_err);
    }
  }
}
