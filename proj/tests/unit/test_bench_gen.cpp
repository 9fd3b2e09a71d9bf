#include <doctest.h>

#include <algorithm>
#include <regex>

#include "bsprtl/bench_gen.hpp"
#include "common.hpp"

using namespace bsprtl;

namespace {

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  return std::regex_replace(s, std::regex(from), to);
}

}  // namespace

TEST_CASE("a one-generator bank is the xorshift32 fixture up to naming") {
  auto src = generate(BenchSpec::prng(1));
  src = replace_all(src, "prng_bank_1", "xorshift32");
  src = replace_all(src, "x0_s", "s");
  src = replace_all(src, "\\bx0\\b", "x");
  const auto a = parse_netlist(src);
  const auto b = parse_netlist(fx::fixture("xorshift32.nl"));
  CHECK(same_structure(a, b));
}

TEST_CASE("PRNG banks have disjoint equal cones") {
  const auto c = fx::compile(generate(BenchSpec::prng(64, 9)));
  REQUIRE(c.fibers.size() == 64);
  for (const auto& f : c.fibers) CHECK(f.cost == 8);
  for (std::size_t i = 0; i < c.fibers.size(); ++i) {
    for (std::size_t j = i + 1; j < c.fibers.size(); ++j) CHECK_FALSE(NodeSet::intersects(c.fibers[i].cone, c.fibers[j].cone));
  }
}

TEST_CASE("imbalanced mix hits its cost ratio") {
  for (double ratio : {2.0, 4.0, 10.0, 25.0}) {
    CAPTURE(ratio);
    const auto spec = BenchSpec::imbalanced(2, 10, ratio, 3);
    const auto c = fx::compile(generate(spec));
    std::vector<std::uint64_t> costs;
    for (const auto& f : c.fibers) costs.push_back(f.cost);
    std::sort(costs.begin(), costs.end());
    const auto small = costs.front();
    const auto big = costs.back();
    CHECK(small == kImbalancedSmallCost);
    const auto got = static_cast<double>(big) / static_cast<double>(small);
    CHECK(got >= 0.8 * ratio);
    CHECK(got <= 1.2 * ratio);
    CHECK(std::count(costs.begin(), costs.end(), big) == 2);
  }
}

TEST_CASE("hasher chains widen with lanes") {
  const auto narrow = fx::compile(generate(BenchSpec::hasher(4, 2)));
  const auto wide = fx::compile(generate(BenchSpec::hasher(4, 8)));
  CHECK(wide.fibers.size() > narrow.fibers.size());
}

TEST_CASE("core mesh shape") {
  const auto c = fx::compile(generate(BenchSpec::mesh(3, 2, 2, 1, 16, 4)));
  CHECK(c.netlist.arrays.size() == 6);
  for (const auto& a : c.netlist.arrays) CHECK(a.depth * ((a.width + 7) / 8) == 1024);
  CHECK(fx::fixture("mesh_2x2_s0.nl") == generate(BenchSpec::mesh(2, 2, 2, 1, 16, 0)));
}

TEST_CASE("generation is deterministic in the seed") {
  for (const auto& spec : {BenchSpec::prng(5, 1), BenchSpec::hasher(3, 3, 1), BenchSpec::imbalanced(1, 4, 3.0, 1),
                           BenchSpec::mesh(2, 3, 2, 1, 16, 1)}) {
    CAPTURE(to_string(spec.kind));
    CHECK(generate(spec) == generate(spec));
    auto other = spec;
    other.seed = 2;
    if (spec.kind != BenchKind::PrngBank) CHECK(generate(spec) != generate(other));
    CHECK(estimate_nodes(spec) >= fx::compile(generate(spec)).graph.nodes.size());
  }
}

TEST_CASE("node estimates bound the elaborated size") {
  std::vector<BenchSpec> specs;
  for (std::uint32_t n : {1u, 2u, 7u, 30u}) specs.push_back(BenchSpec::prng(n));
  for (std::uint32_t r : {1u, 3u, 8u}) {
    for (std::uint32_t l : {1u, 4u}) specs.push_back(BenchSpec::hasher(r, l));
  }
  for (double ratio : {1.0, 3.0, 40.0}) specs.push_back(BenchSpec::imbalanced(3, 5, ratio));
  for (std::uint32_t k : {1u, 4u}) specs.push_back(BenchSpec::mesh(2, 3, k, 2, 64));
  specs.push_back(BenchSpec::mesh(1, 1, 1, 0, 1));
  for (const auto& spec : specs) {
    CAPTURE(generate(spec));
    CHECK(estimate_nodes(spec) >= fx::compile(generate(spec)).graph.nodes.size());
  }
}

TEST_CASE("oversized specs are refused") {
  auto spec = BenchSpec::prng(100000);
  spec.node_cap = 1000;
  try {
    generate(spec);
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SpecTooLarge);
  }
  CHECK_THROWS_AS(generate(BenchSpec::prng(0)), Error);
  CHECK_THROWS_AS(generate(BenchSpec::mesh(0, 2)), Error);
}
