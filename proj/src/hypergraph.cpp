#include "bsprtl/hypergraph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <queue>
#include <random>
#include <tuple>

#include <fmt/format.h>

#include "bsprtl/error.hpp"

namespace bsprtl {

std::uint64_t Hypergraph::total_weight() const {
  return std::accumulate(node_weight.begin(), node_weight.end(), std::uint64_t{0});
}

void Hypergraph::add_edge(std::vector<std::uint32_t> pins, std::uint64_t weight) {
  std::sort(pins.begin(), pins.end());
  pins.erase(std::unique(pins.begin(), pins.end()), pins.end());
  edges.push_back(std::move(pins));
  edge_weight.push_back(weight);
}

std::uint64_t balanced_part_cap(std::uint64_t total, std::uint32_t k, double epsilon) {
  const std::uint64_t avg = (total + k - 1) / k;
  return static_cast<std::uint64_t>(std::floor((1.0 + epsilon) * static_cast<double>(avg)));
}

std::uint64_t cut_weight(const Hypergraph& hg, std::span<const std::uint32_t> parts) {
  std::uint64_t cut = 0;
  for (std::size_t e = 0; e < hg.edges.size(); ++e) {
    const auto& pins = hg.edges[e];
    for (std::size_t i = 1; i < pins.size(); ++i) {
      if (parts[pins[i]] != parts[pins[0]]) {
        cut += hg.edge_weight[e];
        break;
      }
    }
  }
  return cut;
}

std::uint64_t connectivity_cost(const Hypergraph& hg, std::span<const std::uint32_t> parts) {
  std::uint64_t cost = 0;
  std::vector<std::uint32_t> seen;
  for (std::size_t e = 0; e < hg.edges.size(); ++e) {
    seen.clear();
    for (auto p : hg.edges[e]) seen.push_back(parts[p]);
    std::sort(seen.begin(), seen.end());
    const auto lambda = static_cast<std::uint64_t>(std::unique(seen.begin(), seen.end()) - seen.begin());
    if (lambda > 1) cost += (lambda - 1) * hg.edge_weight[e];
  }
  return cost;
}

namespace {

constexpr std::size_t kLargeEdge = 256;

using Incidence = std::vector<std::vector<std::uint32_t>>;

Incidence incidence_of(const Hypergraph& hg) {
  Incidence inc(hg.num_nodes());
  for (std::uint32_t e = 0; e < hg.edges.size(); ++e) {
    if (hg.edges[e].size() < 2) continue;
    for (auto v : hg.edges[e]) inc[v].push_back(e);
  }
  return inc;
}

struct Coarsening {
  Hypergraph coarse;
  std::vector<std::uint32_t> map;
};

Coarsening coarsen(const Hypergraph& hg, const Incidence& inc, std::uint64_t max_cluster, std::mt19937_64& rng) {
  const auto n = static_cast<std::uint32_t>(hg.num_nodes());
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::shuffle(order.begin(), order.end(), rng);

  constexpr std::uint32_t kUnmatched = UINT32_MAX;
  std::vector<std::uint32_t> match(n, kUnmatched);
  std::vector<double> score(n, 0.0);
  std::vector<std::uint32_t> touched;
  for (auto u : order) {
    if (match[u] != kUnmatched) continue;
    touched.clear();
    for (auto e : inc[u]) {
      const auto& pins = hg.edges[e];
      if (pins.size() > kLargeEdge) continue;
      const double r = static_cast<double>(hg.edge_weight[e]) / static_cast<double>(pins.size() - 1);
      for (auto v : pins) {
        if (v == u || match[v] != kUnmatched) continue;
        if (score[v] == 0.0) touched.push_back(v);
        score[v] += r;
      }
    }
    std::uint32_t best = kUnmatched;
    double best_score = 0.0;
    for (auto v : touched) {
      if (hg.node_weight[u] + hg.node_weight[v] <= max_cluster) {
        if (score[v] > best_score ||
            (score[v] == best_score && best != kUnmatched && hg.node_weight[v] < hg.node_weight[best])) {
          best = v;
          best_score = score[v];
        }
      }
    }
    for (auto v : touched) score[v] = 0.0;
    if (best != kUnmatched) {
      match[u] = best;
      match[best] = u;
    } else {
      match[u] = u;
    }
  }

  Coarsening c;
  c.map.assign(n, kUnmatched);
  std::uint32_t next = 0;
  for (std::uint32_t u = 0; u < n; ++u) {
    if (c.map[u] != kUnmatched) continue;
    c.map[u] = next;
    if (match[u] != u && match[u] != kUnmatched) c.map[match[u]] = next;
    ++next;
  }
  c.coarse.node_weight.assign(next, 0);
  for (std::uint32_t u = 0; u < n; ++u) c.coarse.node_weight[c.map[u]] += hg.node_weight[u];
  std::vector<std::uint32_t> pins;
  for (std::size_t e = 0; e < hg.edges.size(); ++e) {
    pins.clear();
    for (auto v : hg.edges[e]) pins.push_back(c.map[v]);
    std::sort(pins.begin(), pins.end());
    pins.erase(std::unique(pins.begin(), pins.end()), pins.end());
    if (pins.size() >= 2) {
      c.coarse.edges.push_back(pins);
      c.coarse.edge_weight.push_back(hg.edge_weight[e]);
    }
  }
  return c;
}

class Bisection {
 public:
  Bisection(const Hypergraph& hg, const Incidence& inc, std::uint64_t cap_a, std::uint64_t cap_b, std::mt19937_64& rng)
      : hg_(hg), inc_(inc), rng_(rng) {
    cap_[0] = cap_a;
    cap_[1] = cap_b;
    const std::uint64_t total = hg.total_weight();
    const double ratio = static_cast<double>(cap_a) / static_cast<double>(std::max<std::uint64_t>(1, cap_a + cap_b));
    target_a_ = static_cast<std::uint64_t>(std::llround(ratio * static_cast<double>(total)));
  }

  std::vector<std::uint8_t> greedy_grow() {
    const auto n = static_cast<std::uint32_t>(hg_.num_nodes());
    std::vector<std::uint8_t> side(n, 1);
    std::vector<double> score(n, 0.0);
    std::priority_queue<std::pair<double, std::uint32_t>> frontier;
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::shuffle(order.begin(), order.end(), rng_);
    std::size_t next_random = 0;
    std::uint64_t wa = 0;
    while (wa < target_a_) {
      std::uint32_t v = UINT32_MAX;
      while (!frontier.empty()) {
        auto [s, cand] = frontier.top();
        frontier.pop();
        if (side[cand] == 1 && s == score[cand] && wa + hg_.node_weight[cand] <= cap_[0]) {
          v = cand;
          break;
        }
      }
      while (v == UINT32_MAX && next_random < n) {
        const auto cand = order[next_random++];
        if (side[cand] == 1 && wa + hg_.node_weight[cand] <= cap_[0]) v = cand;
      }
      if (v == UINT32_MAX) break;
      side[v] = 0;
      wa += hg_.node_weight[v];
      for (auto e : inc_[v]) {
        const auto& pins = hg_.edges[e];
        if (pins.size() > kLargeEdge) continue;
        for (auto u : pins) {
          if (side[u] == 1) {
            score[u] += static_cast<double>(hg_.edge_weight[e]) / static_cast<double>(pins.size() - 1);
            frontier.push({score[u], u});
          }
        }
      }
    }
    return side;
  }

  std::vector<std::uint8_t> random_fill() {
    const auto n = static_cast<std::uint32_t>(hg_.num_nodes());
    std::vector<std::uint8_t> side(n, 1);
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::shuffle(order.begin(), order.end(), rng_);
    std::uint64_t wa = 0;
    for (auto v : order) {
      if (wa >= target_a_) break;
      if (wa + hg_.node_weight[v] <= cap_[0]) {
        side[v] = 0;
        wa += hg_.node_weight[v];
      }
    }
    return side;
  }

  // Moves nodes out of an overloaded side, best gain first, while they fit.
  void repair(std::vector<std::uint8_t>& side) {
    std::uint64_t w[2] = {0, 0};
    for (std::size_t v = 0; v < side.size(); ++v) w[side[v]] += hg_.node_weight[v];
    for (int s = 0; s < 2; ++s) {
      const int o = 1 - s;
      while (w[s] > cap_[s]) {
        auto counts = pin_counts(side);
        std::int64_t best_gain = INT64_MIN;
        std::uint32_t best = UINT32_MAX;
        for (std::uint32_t v = 0; v < side.size(); ++v) {
          if (side[v] != s || w[o] + hg_.node_weight[v] > cap_[o]) continue;
          const auto g = gain(v, side, counts);
          if (g > best_gain) {
            best_gain = g;
            best = v;
          }
        }
        if (best == UINT32_MAX) return;
        side[best] = static_cast<std::uint8_t>(o);
        w[s] -= hg_.node_weight[best];
        w[o] += hg_.node_weight[best];
      }
    }
  }

  std::uint64_t cut(const std::vector<std::uint8_t>& side) const {
    std::uint64_t c = 0;
    for (std::size_t e = 0; e < hg_.edges.size(); ++e) {
      const auto& pins = hg_.edges[e];
      for (std::size_t i = 1; i < pins.size(); ++i) {
        if (side[pins[i]] != side[pins[0]]) {
          c += hg_.edge_weight[e];
          break;
        }
      }
    }
    return c;
  }

  std::uint64_t imbalance(const std::vector<std::uint8_t>& side) const {
    std::uint64_t wa = 0;
    for (std::size_t v = 0; v < side.size(); ++v) {
      if (side[v] == 0) wa += hg_.node_weight[v];
    }
    return wa > target_a_ ? wa - target_a_ : target_a_ - wa;
  }

  bool feasible(const std::vector<std::uint8_t>& side) const {
    std::uint64_t w[2] = {0, 0};
    for (std::size_t v = 0; v < side.size(); ++v) w[side[v]] += hg_.node_weight[v];
    return w[0] <= cap_[0] && w[1] <= cap_[1];
  }

  // Moves may overshoot a cap by one node weight so that swaps under a tight
  // balance are reachable; only prefixes ending within both caps are kept.
  void fm(std::vector<std::uint8_t>& side, int passes) {
    if (hg_.edges.empty()) return;
    const auto n = static_cast<std::uint32_t>(side.size());
    const std::uint64_t slack = *std::max_element(hg_.node_weight.begin(), hg_.node_weight.end());
    std::vector<std::uint32_t> key(n);
    for (int pass = 0; pass < passes; ++pass) {
      auto counts = pin_counts(side);
      std::uint64_t w[2] = {0, 0};
      for (std::uint32_t v = 0; v < n; ++v) w[side[v]] += hg_.node_weight[v];
      for (auto& k : key) k = static_cast<std::uint32_t>(rng_());

      using Entry = std::tuple<std::int64_t, std::uint32_t, std::uint32_t>;
      std::priority_queue<Entry> heap;
      for (std::uint32_t v = 0; v < n; ++v) {
        if (!inc_[v].empty()) heap.push({gain(v, side, counts), key[v], v});
      }
      std::vector<std::uint8_t> locked(n, 0);
      std::vector<std::uint32_t> moved;
      const std::uint64_t start_cut = cut(side);
      std::int64_t cur = static_cast<std::int64_t>(start_cut);
      std::int64_t best_cut = cur;
      bool best_ok = w[0] <= cap_[0] && w[1] <= cap_[1];
      std::uint64_t best_imb = imbalance_of(w[0]);
      std::size_t best_len = 0;
      const std::size_t stall = std::max<std::size_t>(32, n / 8);

      while (!heap.empty()) {
        auto [g, k, v] = heap.top();
        heap.pop();
        if (locked[v]) continue;
        const auto exact = gain(v, side, counts);
        if (exact != g) {
          heap.push({exact, key[v], v});
          continue;
        }
        const int from = side[v];
        const int to = 1 - from;
        const auto nw = hg_.node_weight[v];
        // Never make an over-cap side heavier than it already is beyond the slack.
        if (w[to] + nw > cap_[to] + slack && w[to] + nw > w[from]) continue;
        side[v] = static_cast<std::uint8_t>(to);
        w[from] -= nw;
        w[to] += nw;
        for (auto e : inc_[v]) {
          --counts[e][from];
          ++counts[e][to];
        }
        locked[v] = 1;
        moved.push_back(v);
        cur -= g;
        const bool ok = w[0] <= cap_[0] && w[1] <= cap_[1];
        const auto imb = imbalance_of(w[0]);
        if ((ok && !best_ok) || (ok == best_ok && (cur < best_cut || (cur == best_cut && imb < best_imb)))) {
          best_ok = ok;
          best_cut = cur;
          best_imb = imb;
          best_len = moved.size();
        }
        if (moved.size() - best_len > stall) break;
        for (auto e : inc_[v]) {
          const auto& pins = hg_.edges[e];
          if (pins.size() > kLargeEdge) continue;
          for (auto u : pins) {
            if (!locked[u]) heap.push({gain(u, side, counts), key[u], u});
          }
        }
      }
      for (std::size_t i = moved.size(); i > best_len; --i) {
        const auto v = moved[i - 1];
        side[v] = static_cast<std::uint8_t>(1 - side[v]);
      }
      if (best_len == 0) break;
    }
  }

 private:
  std::uint64_t imbalance_of(std::uint64_t wa) const { return wa > target_a_ ? wa - target_a_ : target_a_ - wa; }

  std::vector<std::array<std::uint32_t, 2>> pin_counts(const std::vector<std::uint8_t>& side) const {
    std::vector<std::array<std::uint32_t, 2>> counts(hg_.edges.size(), {0, 0});
    for (std::size_t e = 0; e < hg_.edges.size(); ++e) {
      for (auto v : hg_.edges[e]) ++counts[e][side[v]];
    }
    return counts;
  }

  std::int64_t gain(std::uint32_t v, const std::vector<std::uint8_t>& side,
                    const std::vector<std::array<std::uint32_t, 2>>& counts) const {
    const int from = side[v];
    const int to = 1 - from;
    std::int64_t g = 0;
    for (auto e : inc_[v]) {
      const auto w = static_cast<std::int64_t>(hg_.edge_weight[e]);
      if (counts[e][to] > 0) g += w;
      if (counts[e][from] > 1) g -= w;
    }
    return g;
  }

  const Hypergraph& hg_;
  const Incidence& inc_;
  std::mt19937_64& rng_;
  std::uint64_t cap_[2];
  std::uint64_t target_a_ = 0;
};

std::vector<std::uint8_t> multilevel_run(const Hypergraph& hg, std::uint64_t cap_a, std::uint64_t cap_b,
                                            const HypergraphConfig& cfg, std::mt19937_64& rng) {
  std::vector<Hypergraph> levels;
  std::vector<Incidence> incs;
  std::vector<std::vector<std::uint32_t>> maps;
  levels.push_back(hg);
  incs.push_back(incidence_of(hg));
  const std::uint64_t max_cluster =
      std::max<std::uint64_t>({1, (cap_a + cap_b) / std::max<std::uint32_t>(cfg.coarsen_to, 1),
                               *std::max_element(hg.node_weight.begin(), hg.node_weight.end())});
  const std::uint64_t cluster_limit = std::min(max_cluster, std::max<std::uint64_t>(1, std::min(cap_a, cap_b)));
  while (levels.back().num_nodes() > cfg.coarsen_to) {
    auto c = coarsen(levels.back(), incs.back(), cluster_limit, rng);
    if (c.coarse.num_nodes() * 20 > levels.back().num_nodes() * 19) break;
    maps.push_back(std::move(c.map));
    incs.push_back(incidence_of(c.coarse));
    levels.push_back(std::move(c.coarse));
  }

  std::vector<std::uint8_t> best;
  std::uint64_t best_cut = UINT64_MAX;
  std::uint64_t best_imb = UINT64_MAX;
  bool best_feasible = false;
  {
    Bisection b(levels.back(), incs.back(), cap_a, cap_b, rng);
    const int trials = std::max(1, cfg.initial_trials);
    for (int t = 0; t < trials; ++t) {
      auto side = (t % 2 == 0) ? b.greedy_grow() : b.random_fill();
      b.repair(side);
      b.fm(side, cfg.fm_passes);
      const bool ok = b.feasible(side);
      const auto c = b.cut(side);
      const auto imb = b.imbalance(side);
      if (best.empty() || (ok && !best_feasible) ||
          (ok == best_feasible && (c < best_cut || (c == best_cut && imb < best_imb)))) {
        best = std::move(side);
        best_cut = c;
        best_imb = imb;
        best_feasible = ok;
      }
    }
  }
  for (std::size_t lvl = levels.size() - 1; lvl > 0; --lvl) {
    const auto& map = maps[lvl - 1];
    std::vector<std::uint8_t> fine(map.size());
    for (std::size_t v = 0; v < map.size(); ++v) fine[v] = best[map[v]];
    Bisection b(levels[lvl - 1], incs[lvl - 1], cap_a, cap_b, rng);
    b.repair(fine);
    b.fm(fine, cfg.fm_passes);
    best = std::move(fine);
  }
  return best;
}

std::vector<std::uint8_t> multilevel_bisect(const Hypergraph& hg, std::uint64_t cap_a, std::uint64_t cap_b,
                                            const HypergraphConfig& cfg, std::mt19937_64& rng) {
  std::vector<std::uint8_t> best;
  std::uint64_t best_cut = UINT64_MAX;
  bool best_ok = false;
  const Incidence inc = incidence_of(hg);
  for (int r = 0; r < std::max(1, cfg.restarts); ++r) {
    auto side = multilevel_run(hg, cap_a, cap_b, cfg, rng);
    Bisection b(hg, inc, cap_a, cap_b, rng);
    const bool ok = b.feasible(side);
    const auto c = b.cut(side);
    if (best.empty() || (ok && !best_ok) || (ok == best_ok && c < best_cut)) {
      best = std::move(side);
      best_cut = c;
      best_ok = ok;
    }
    if (best_ok && best_cut == 0) break;
  }
  return best;
}

void recurse(const Hypergraph& hg, const std::vector<std::uint32_t>& ids, std::uint32_t offset,
             std::span<const std::uint64_t> caps, const HypergraphConfig& cfg, std::mt19937_64& rng,
             std::vector<std::uint32_t>& parts) {
  const auto k = static_cast<std::uint32_t>(caps.size());
  if (k == 1 || ids.empty()) {
    for (auto v : ids) parts[v] = offset;
    return;
  }
  const std::uint32_t ka = k / 2;
  const std::uint64_t cap_a = std::accumulate(caps.begin(), caps.begin() + ka, std::uint64_t{0});
  const std::uint64_t cap_b = std::accumulate(caps.begin() + ka, caps.end(), std::uint64_t{0});

  std::vector<std::uint32_t> local(hg.num_nodes(), UINT32_MAX);
  Hypergraph sub;
  for (std::uint32_t i = 0; i < ids.size(); ++i) {
    local[ids[i]] = i;
    sub.node_weight.push_back(hg.node_weight[ids[i]]);
  }
  std::vector<std::uint32_t> pins;
  for (std::size_t e = 0; e < hg.edges.size(); ++e) {
    pins.clear();
    for (auto v : hg.edges[e]) {
      if (local[v] != UINT32_MAX) pins.push_back(local[v]);
    }
    if (pins.size() >= 2) {
      sub.edges.push_back(pins);
      sub.edge_weight.push_back(hg.edge_weight[e]);
    }
  }
  const auto side = multilevel_bisect(sub, cap_a, cap_b, cfg, rng);
  std::vector<std::uint32_t> ids_a;
  std::vector<std::uint32_t> ids_b;
  for (std::uint32_t i = 0; i < ids.size(); ++i) (side[i] == 0 ? ids_a : ids_b).push_back(ids[i]);
  recurse(hg, ids_a, offset, caps.subspan(0, ka), cfg, rng, parts);
  recurse(hg, ids_b, offset + ka, caps.subspan(ka), cfg, rng, parts);
}

}  // namespace

std::vector<std::uint32_t> partition_hypergraph(const Hypergraph& hg, std::uint32_t k,
                                                std::span<const std::uint64_t> caps,
                                                const HypergraphConfig& cfg) {
  if (k == 0 || caps.size() != k) throw Error(ErrorCode::UsageError, "partition_hypergraph needs one cap per part");
  std::vector<std::uint32_t> parts(hg.num_nodes(), 0);
  if (hg.num_nodes() == 0) return parts;
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::uint32_t> ids(hg.num_nodes());
  std::iota(ids.begin(), ids.end(), 0u);
  recurse(hg, ids, 0, caps, cfg, rng, parts);

  std::vector<std::uint64_t> weight(k, 0);
  for (std::size_t v = 0; v < parts.size(); ++v) weight[parts[v]] += hg.node_weight[v];
  for (std::uint32_t p = 0; p < k; ++p) {
    if (weight[p] > caps[p]) {
      throw Error(ErrorCode::InfeasibleBalance,
                  fmt::format("part {} weighs {} but the balance cap is {}", p, weight[p], caps[p]));
    }
  }
  return parts;
}

}  // namespace bsprtl
