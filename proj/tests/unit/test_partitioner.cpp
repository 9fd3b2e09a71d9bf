#include <doctest.h>

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <set>

#include <fmt/format.h>

#include "bsprtl/bench_gen.hpp"
#include "bsprtl/partitioner.hpp"
#include "common.hpp"

using namespace bsprtl;

namespace {

std::vector<Process> singletons(const fx::Compiled& c) {
  std::vector<Process> out;
  for (const auto& f : c.fibers) {
    const FiberId id = f.id;
    out.push_back(make_process(std::span<const FiberId>(&id, 1), c.fibers, c.graph));
  }
  return out;
}

std::vector<std::uint64_t> sorted_costs(const std::vector<Process>& ps) {
  std::vector<std::uint64_t> c;
  for (const auto& p : ps) c.push_back(p.cost);
  std::sort(c.begin(), c.end());
  return c;
}

MachineProfile small_profile(std::uint32_t chips, std::uint32_t tiles) {
  MachineProfile p;
  p.chips = chips;
  p.tiles_per_chip = tiles;
  return p;
}

std::string prng_bank(int n) {
  std::string src = "design bank\n";
  for (int i = 0; i < n; ++i) {
    src += fmt::format("reg x{0} : u32 init {1}\nwire a{0} : u32 = x{0} ^ (x{0} << 13)\n", i, i + 1);
    src += fmt::format("wire b{0} : u32 = a{0} ^ (a{0} >> 17)\nnext x{0} = b{0} ^ (b{0} << 5)\n", i);
  }
  return src;
}

// Cost table where reading a register is free, so readers of a shared
// register have cost-disjoint cones.
CostTable free_reads() {
  auto t = CostTable::defaults();
  t.set("current_read", 0);
  return t;
}

}  // namespace

TEST_CASE("process_cost examples") {
  SUBCASE("disjoint 8 + 5") {
    const auto c = fx::compile(fx::fixture("xorshift32.nl").substr(0) + "reg c : u8 init 0\nnext c = c + 1 + 2 + 3\n");
    REQUIRE(c.fibers.size() == 2);
    CHECK(c.fibers[0].cost == 8);
    CHECK(c.fibers[1].cost == 5);
    CHECK(process_cost(c.fibers[0].cone, c.fibers[1].cone, c.graph) == 13);
  }
  SUBCASE("identical") {
    const auto c = fx::compile_fixture("xorshift32.nl");
    CHECK(process_cost(c.fibers[0].cone, c.fibers[0].cone, c.graph) == 8);
  }
  SUBCASE("10 + 8 sharing 3") {
    const auto c = fx::compile(
        "design d\ninput i : u8\nreg p : u8 init 0\nreg q : u8 init 0\n"
        "wire s : u8 = ((i + 1) + 2) + 3\n"
        "next p = (s * 2 + 1) + 2\n"
        "next q = s + 1 + 2 + 3 + 4\n");
    CHECK(c.fibers[0].cost == 10);
    CHECK(c.fibers[1].cost == 8);
    CHECK(NodeSet::intersection_weight(c.fibers[0].cone, c.fibers[1].cone, c.graph.cost_weights) == 3);
    CHECK(process_cost(c.fibers[0].cone, c.fibers[1].cone, c.graph) == 15);
  }
}

TEST_CASE("deduplication is monotone and exact for disjoint cones") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    std::mt19937_64 rng(seed);
    testing::RandomNetlistOptions opt;
    opt.max_sinks = 8;
    const auto c = fx::compile(testing::random_netlist(rng, opt));
    for (const auto& a : c.fibers) {
      for (const auto& b : c.fibers) {
        const auto u = process_cost(a.cone, b.cone, c.graph);
        CHECK(u <= a.cost + b.cost);
        const bool disjoint_cost = NodeSet::intersection_weight(a.cone, b.cone, c.graph.cost_weights) == 0;
        CHECK((u == a.cost + b.cost) == disjoint_cost);
      }
    }
  }
}

TEST_CASE("stage 1 array co-location") {
  const std::string five_readers =
      "design d\narray m : u32[65536]\n"
      "reg r0 : u16 init 0\nreg r1 : u16 init 1\nreg r2 : u16 init 2\nreg r3 : u16 init 3\nreg r4 : u16 init 4\n"
      "reg z : u8 init 0\nnext z = z + 1\n"
      "next r0 = r0 + m[r0][15:0]\nnext r1 = r1 + m[r1][15:0]\nnext r2 = r2 + m[r2][15:0]\n"
      "next r3 = r3 + m[r3][15:0]\nnext r4 = r4 + m[r4][15:0]\n";
  const auto c = fx::compile(five_readers);
  MachineProfile big;
  big.data_mem_per_tile = 1 << 20;

  SUBCASE("256 KiB array, 128 KiB threshold: one group") {
    const auto groups = stage1_array_colocate(c.fibers, c.graph, 128 * 1024, big);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0] == std::vector<FiberId>{0, 1, 2, 3, 4});
    CHECK(groups[1] == std::vector<FiberId>{5});
  }
  SUBCASE("512 KiB threshold: singletons") {
    const auto groups = stage1_array_colocate(c.fibers, c.graph, 512 * 1024, big);
    CHECK(groups.size() == 6);
  }
  SUBCASE("two large arrays sharing a fiber merge transitively") {
    const auto d = fx::compile(
        "design d\narray a : u32[65536]\narray b : u32[65536]\n"
        "reg p : u16 init 0\nreg q : u16 init 0\nreg s : u16 init 0\nreg t : u8 init 0\n"
        "next p = a[p][15:0]\nnext q = (a[q] ^ b[q])[15:0]\nnext s = b[s][15:0]\nnext t = t\n");
    const auto groups = stage1_array_colocate(d.fibers, d.graph, 128 * 1024, big);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0] == std::vector<FiberId>{0, 1, 2});
  }
  SUBCASE("a forced group larger than a tile") {
    const auto d = fx::compile(
        "design d\narray a : u32[65536]\narray b : u32[65536]\n"
        "reg p : u16 init 0\nreg q : u16 init 0\nnext p = a[p][15:0]\nnext q = (a[q] ^ b[q])[15:0]\n");
    try {
      stage1_array_colocate(d.fibers, d.graph, 128 * 1024, MachineProfile{});
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::GroupExceedsMemory);
      CHECK(std::string(e.what()).find("a, b") != std::string::npos);
    }
  }
}

TEST_CASE("stage 2 chip partition") {
  HypergraphConfig cfg;
  SUBCASE("independent PRNGs cut nothing") {
    const auto c = fx::compile(prng_bank(8));
    const auto fhg = build_fiber_hypergraph(c.fibers, c.graph);
    const auto groups = stage1_array_colocate(c.fibers, c.graph, 128 * 1024, MachineProfile{});
    const auto chips = stage2_chip_partition(groups, c.fibers, fhg, 2, 0.05, false, cfg);
    std::vector<std::uint32_t> label(c.fibers.size());
    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (auto f : groups[i]) label[f] = chips[i];
    }
    CHECK(cut_weight(fhg.hg, label) == 0);
    CHECK(std::count(label.begin(), label.end(), 0u) == 4);
  }
  SUBCASE("two-node chain is forced across") {
    const auto c = fx::compile("design d; reg a:u8 init 0; reg b:u8 init 0; next a = a + 1; next b = a;");
    const auto fhg = build_fiber_hypergraph(c.fibers, c.graph);
    CHECK(fhg.hg.edge_weight[0] == 1);
    const std::vector<std::vector<FiberId>> groups = {{0}, {1}};
    const auto chips = stage2_chip_partition(groups, c.fibers, fhg, 2, 0.05, false, cfg);
    CHECK(chips[0] != chips[1]);
    CHECK(cut_weight(fhg.hg, chips) == 1);
  }
  SUBCASE("4x4 mesh beats random balanced assignments") {
    const auto c = fx::compile(generate(BenchSpec::mesh(4, 4)));
    const auto fhg = build_fiber_hypergraph(c.fibers, c.graph);
    const auto groups = stage1_array_colocate(c.fibers, c.graph, 128 * 1024, MachineProfile{});
    const auto chips = stage2_chip_partition(groups, c.fibers, fhg, 2, 0.05, false, cfg);
    std::vector<std::uint32_t> label(c.fibers.size());
    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (auto f : groups[i]) label[f] = chips[i];
    }
    const auto cut = cut_weight(fhg.hg, label);
    std::mt19937_64 rng(1);
    double total = 0;
    for (int r = 0; r < 100; ++r) {
      std::vector<std::uint32_t> rand(c.fibers.size());
      for (std::size_t i = 0; i < rand.size(); ++i) rand[i] = i < rand.size() / 2 ? 0 : 1;
      std::shuffle(rand.begin(), rand.end(), rng);
      total += static_cast<double>(cut_weight(fhg.hg, rand));
    }
    CHECK(static_cast<double>(cut) < total / 100.0);
  }
  SUBCASE("fiber hypergraph weights count 32-bit words") {
    const auto c = fx::compile_fixture("array1.nl");
    const auto fhg = build_fiber_hypergraph(c.fibers, c.graph);
    REQUIRE(fhg.edge_names.size() == 2);
    CHECK(fhg.edge_names[0] == "ptr");
    CHECK(fhg.hg.edge_weight[0] == 1);
    CHECK(fhg.edge_names[1] == "mem");
    CHECK(fhg.hg.edge_weight[1] == 1024);
  }
}

TEST_CASE("stage 3 conservative merge") {
  const auto profile = small_profile(1, 2);
  SUBCASE("[10, 3, 3, 3] all communicating") {
    const auto c = fx::compile(
        "design d\nreg a : u8 init 1\nreg b : u8 init 0\nreg c : u8 init 0\nreg e : u8 init 0\n"
        "next a = a * 3 * 5 + 1\nnext b = a + 1 + 2\nnext c = a ^ 3 ^ 4\nnext e = a - 1 - 2\n",
        free_reads());
    REQUIRE(c.fibers.size() == 4);
    CHECK(c.fibers[0].cost == 10);
    for (int i = 1; i < 4; ++i) CHECK(c.fibers[i].cost == 3);
    const auto fhg = build_fiber_hypergraph(c.fibers, c.graph);
    for (auto order : {CandidateOrder::Ascending, CandidateOrder::BestFit}) {
      const auto out = stage3_conservative_merge(singletons(c), c.fibers, fhg, c.graph, profile, 2, order);
      REQUIRE(out.size() == 2);
      CHECK(sorted_costs(out) == std::vector<std::uint64_t>{9, 10});
      for (const auto& p : out) {
        if (p.cost == 9) CHECK(p.fibers == std::vector<FiberId>{1, 2, 3});
      }
    }
  }
  SUBCASE("equal disjoint fibers never merge") {
    const auto c = fx::compile(prng_bank(4));
    const auto fhg = build_fiber_hypergraph(c.fibers, c.graph);
    const auto out = stage3_conservative_merge(singletons(c), c.fibers, fhg, c.graph, profile, 2);
    CHECK(out.size() == 4);
  }
  SUBCASE("fully overlapping fibers merge without cost growth") {
    auto table = CostTable::defaults();
    table.set("next_write", 0);
    const auto c = fx::compile(
        "design d\ninput i : u8\nreg x : u8 init 0\nreg y : u8 init 0\n"
        "wire w : u8 = (i * 3) * 5 + 1 + 1\nnext x = w\nnext y = w\n",
        table);
    CHECK(c.fibers[0].cost == 10);
    CHECK(c.fibers[1].cost == 10);
    const auto fhg = build_fiber_hypergraph(c.fibers, c.graph);
    const auto out = stage3_conservative_merge(singletons(c), c.fibers, fhg, c.graph, small_profile(1, 1), 1);
    REQUIRE(out.size() == 1);
    CHECK(out[0].cost == 10);
  }
}

TEST_CASE("stage 4 relaxed merge") {
  auto table = CostTable::defaults();
  table.set("next_write", 3);
  SUBCASE("three disjoint tens into two") {
    const auto c = fx::compile(prng_bank(3), table);
    for (const auto& f : c.fibers) CHECK(f.cost == 10);
    const auto fhg = build_fiber_hypergraph(c.fibers, c.graph);
    const auto out = stage4_relaxed_merge(singletons(c), c.fibers, fhg, c.graph, small_profile(1, 2), 2);
    CHECK(sorted_costs(out) == std::vector<std::uint64_t>{10, 20});
  }
  SUBCASE("already small enough") {
    const auto c = fx::compile(prng_bank(3), table);
    const auto fhg = build_fiber_hypergraph(c.fibers, c.graph);
    const auto in = singletons(c);
    const auto out = stage4_relaxed_merge(in, c.fibers, fhg, c.graph, small_profile(1, 8), 8);
    REQUIRE(out.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(out[i].fibers == in[i].fibers);
  }
  SUBCASE("memory forbids the only merge") {
    const auto c = fx::compile("design d; reg a:u64 init 0; reg b:u64 init 0; next a = a + 1; next b = b + 1;");
    auto profile = small_profile(1, 1);
    profile.data_mem_per_tile = 20;
    const auto fhg = build_fiber_hypergraph(c.fibers, c.graph);
    try {
      stage4_relaxed_merge(singletons(c), c.fibers, fhg, c.graph, profile, 1);
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DesignTooLarge);
    }
  }
}

TEST_CASE("one fiber per tile when fibers fit") {
  const auto c = fx::compile(generate(BenchSpec::prng(1472)));
  const auto p = partition(c.fibers, c.graph, small_profile(1, 1472));
  CHECK(p.processes.size() == 1472);
  CHECK(p.max_cost() == 8);
  for (const auto& proc : p.processes) CHECK(proc.fibers.size() == 1);
}

TEST_CASE("strategy none on a PRNG bank has no cut") {
  const auto c = fx::compile(prng_bank(12));
  PartitionOptions o;
  o.strategy.multi = MultiChipStrategy::None;
  const auto p = partition(c.fibers, c.graph, small_profile(4, 2), o);
  CHECK(p.stats.off_chip_cut == 0);
  CHECK(p.processes.size() <= 8);
}

TEST_CASE("every strategy yields a valid partition") {
  for (const std::string name : {"counter.nl", "fig2.nl", "array1.nl", "array2.nl", "array3.nl", "mesh_2x2_s0.nl",
                           "mesh_3x3_s1.nl"}) {
    const auto c = fx::compile_fixture(name);
    for (auto single : {SingleChipStrategy::BottomUp, SingleChipStrategy::Hypergraph}) {
      for (auto multi : {MultiChipStrategy::Pre, MultiChipStrategy::Post, MultiChipStrategy::None}) {
        for (std::uint32_t tiles : {1u, 3u, 64u}) {
          CAPTURE(name);
          CAPTURE(to_string(single));
          CAPTURE(to_string(multi));
          CAPTURE(tiles);
          PartitionOptions o;
          o.strategy = {single, multi};
          const auto profile = small_profile(2, tiles);
          const auto p = partition(c.fibers, c.graph, profile, o);
          CHECK(verify_partition(p, c.fibers, c.graph, profile).empty());
          std::vector<std::uint32_t> per_chip(2, 0);
          for (const auto& proc : p.processes) ++per_chip[proc.chip];
          CHECK(per_chip[0] <= tiles);
          CHECK(per_chip[1] <= tiles);
          std::vector<int> owned(c.fibers.size(), 0);
          for (const auto& proc : p.processes) {
            for (auto f : proc.fibers) {
              ++owned[f];
              CHECK(p.fiber_owner[f] == proc.id);
            }
          }
          for (auto o2 : owned) CHECK(o2 == 1);
        }
      }
    }
  }
}

TEST_CASE("multi-chip cut ordering on a 2-chip mesh") {
  const auto c = fx::compile_fixture("mesh_3x3_s1.nl");
  std::uint64_t cut[3];
  int i = 0;
  for (auto multi : {MultiChipStrategy::Pre, MultiChipStrategy::Post, MultiChipStrategy::None}) {
    PartitionOptions o;
    o.strategy.multi = multi;
    cut[i++] = partition(c.fibers, c.graph, small_profile(2, 8), o).stats.off_chip_cut;
  }
  CHECK(cut[0] <= cut[1]);
  CHECK(cut[1] <= cut[2]);
}

TEST_CASE("stage 3 keeps the straggler on fixtures") {
  for (const std::string name : {"fig2.nl", "array3.nl", "mesh_2x2_s0.nl", "mesh_4x4_s2.nl"}) {
    const auto c = fx::compile_fixture(name);
    const auto p = partition(c.fibers, c.graph, small_profile(2, 4));
    REQUIRE(p.stats.stage3_straggler_before.size() == 2);
    for (std::size_t chip = 0; chip < 2; ++chip) {
      CHECK(p.stats.stage3_straggler_after[chip] == p.stats.stage3_straggler_before[chip]);
    }
  }
}

TEST_CASE("pipeline makespan never beats the exhaustive optimum") {
  // Tiny instances: every assignment of <= 8 fibers to <= 3 tiles.
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    std::mt19937_64 rng(seed);
    testing::RandomNetlistOptions opt;
    opt.max_sinks = 8;
    opt.max_arrays = 1;
    const auto c = fx::compile(testing::random_netlist(rng, opt));
    const auto n = static_cast<std::uint32_t>(c.fibers.size());
    const std::uint32_t m = 1 + static_cast<std::uint32_t>(rng() % 3);
    std::uint64_t best = UINT64_MAX;
    std::vector<std::uint32_t> assign(n, 0);
    std::function<void(std::uint32_t)> rec = [&](std::uint32_t i) {
      if (i == n) {
        std::uint64_t worst = 0;
        for (std::uint32_t t = 0; t < m; ++t) {
          std::vector<FiberId> members;
          for (std::uint32_t f = 0; f < n; ++f) {
            if (assign[f] == t) members.push_back(f);
          }
          worst = std::max(worst, fiber_set_cost(members, c.fibers, c.graph));
        }
        best = std::min(best, worst);
        return;
      }
      for (std::uint32_t t = 0; t < m; ++t) {
        assign[i] = t;
        rec(i + 1);
      }
    };
    rec(0);
    const auto p = partition(c.fibers, c.graph, small_profile(1, m));
    CHECK(best <= p.max_cost());
  }
}

TEST_CASE("partition JSON round trip") {
  const auto c = fx::compile_fixture("mesh_2x2_s0.nl");
  const auto p = partition(c.fibers, c.graph, small_profile(2, 3));
  const auto text = partition_to_json(p, "abc");
  const auto q = partition_from_json(text, c.fibers, c.graph, "abc");
  REQUIRE(q.processes.size() == p.processes.size());
  for (std::size_t i = 0; i < p.processes.size(); ++i) {
    CHECK(q.processes[i].fibers == p.processes[i].fibers);
    CHECK(q.processes[i].chip == p.processes[i].chip);
    CHECK(q.processes[i].cost == p.processes[i].cost);
  }
  CHECK(partition_to_json(q, "abc") == text);
  CHECK_THROWS_AS(partition_from_json(text, c.fibers, c.graph, "other"), Error);
  CHECK_THROWS_AS(partition_from_json("{\"schema\":\"nope\"}", c.fibers, c.graph), Error);
  const auto other = fx::compile_fixture("counter.nl");
  CHECK_THROWS_AS(partition_from_json(text, other.fibers, other.graph), Error);
}

TEST_CASE("strategy names") {
  CHECK(parse_single_chip("bottomup") == SingleChipStrategy::BottomUp);
  CHECK(parse_single_chip("H") == SingleChipStrategy::Hypergraph);
  CHECK(parse_multi_chip("post") == MultiChipStrategy::Post);
  CHECK(parse_candidate_order("ascending") == CandidateOrder::Ascending);
  CHECK_THROWS_AS(parse_multi_chip("sideways"), Error);
}
