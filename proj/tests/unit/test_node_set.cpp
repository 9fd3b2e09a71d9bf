#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "bsprtl/node_set.hpp"

using bsprtl::NodeSet;

namespace {

std::set<std::uint32_t> random_ids(std::mt19937_64& rng, std::uint32_t universe, std::size_t n) {
  std::set<std::uint32_t> s;
  std::uniform_int_distribution<std::uint32_t> d(0, universe - 1);
  while (s.size() < n) s.insert(d(rng));
  return s;
}

NodeSet make(const std::set<std::uint32_t>& s) { return NodeSet::from_ids({s.begin(), s.end()}); }

}  // namespace

TEST_CASE("empty set") {
  NodeSet s;
  CHECK(s.empty());
  CHECK(s.count() == 0);
  CHECK_FALSE(s.contains(0));
  CHECK(s.to_vector().empty());
}

TEST_CASE("duplicates and order do not matter") {
  const auto a = NodeSet::from_ids({5, 1, 900, 5, 64, 63});
  const auto b = NodeSet::from_ids({63, 64, 1, 5, 900});
  CHECK(a == b);
  CHECK(a.count() == 5);
  CHECK(a.to_vector() == std::vector<std::uint32_t>{1, 5, 63, 64, 900});
  CHECK(a.word_count() == 3);
}

TEST_CASE("set algebra agrees with std::set") {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 200; ++round) {
    const std::uint32_t universe = 1 + static_cast<std::uint32_t>(rng() % 5000);
    const auto sa = random_ids(rng, universe, rng() % std::min<std::uint32_t>(universe, 300));
    const auto sb = random_ids(rng, universe, rng() % std::min<std::uint32_t>(universe, 300));
    std::vector<std::uint64_t> w(universe);
    for (auto& x : w) x = rng() % 17;

    std::set<std::uint32_t> su;
    std::set<std::uint32_t> si;
    std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::inserter(su, su.end()));
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::inserter(si, si.end()));
    auto weight = [&](const std::set<std::uint32_t>& s) {
      std::uint64_t t = 0;
      for (auto v : s) t += w[v];
      return t;
    };

    const auto a = make(sa);
    const auto b = make(sb);
    CHECK(NodeSet::unite(a, b) == make(su));
    CHECK(NodeSet::intersect(a, b) == make(si));
    CHECK(NodeSet::intersects(a, b) == !si.empty());
    CHECK(a.weighted_sum(w) == weight(sa));
    CHECK(NodeSet::union_weight(a, b, w) == weight(su));
    CHECK(NodeSet::intersection_weight(a, b, w) == weight(si));
    for (std::uint32_t v = 0; v < universe; v += 7) CHECK(a.contains(v) == (sa.count(v) > 0));
    std::vector<std::uint32_t> seen;
    a.for_each([&](std::uint32_t v) { seen.push_back(v); });
    CHECK(seen == std::vector<std::uint32_t>(sa.begin(), sa.end()));
  }
}
