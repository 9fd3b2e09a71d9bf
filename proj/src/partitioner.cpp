#include "bsprtl/partitioner.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "bsprtl/error.hpp"

namespace bsprtl {

std::string_view to_string(SingleChipStrategy s) {
  return s == SingleChipStrategy::BottomUp ? "bottomup" : "hypergraph";
}

std::string_view to_string(MultiChipStrategy s) {
  switch (s) {
    case MultiChipStrategy::Pre: return "pre";
    case MultiChipStrategy::Post: return "post";
    case MultiChipStrategy::None: return "none";
  }
  return "?";
}

std::string_view to_string(CandidateOrder o) { return o == CandidateOrder::Ascending ? "ascending" : "bestfit"; }

SingleChipStrategy parse_single_chip(std::string_view s) {
  if (s == "bottomup" || s == "B") return SingleChipStrategy::BottomUp;
  if (s == "hypergraph" || s == "H") return SingleChipStrategy::Hypergraph;
  throw Error(ErrorCode::UsageError, fmt::format("unknown single-chip strategy '{}'", s));
}

MultiChipStrategy parse_multi_chip(std::string_view s) {
  if (s == "pre") return MultiChipStrategy::Pre;
  if (s == "post") return MultiChipStrategy::Post;
  if (s == "none") return MultiChipStrategy::None;
  throw Error(ErrorCode::UsageError, fmt::format("unknown multi-chip strategy '{}'", s));
}

CandidateOrder parse_candidate_order(std::string_view s) {
  if (s == "ascending") return CandidateOrder::Ascending;
  if (s == "bestfit") return CandidateOrder::BestFit;
  throw Error(ErrorCode::UsageError, fmt::format("unknown candidate order '{}'", s));
}

std::uint64_t Partition::max_cost() const {
  std::uint64_t m = 0;
  for (const auto& p : processes) m = std::max(m, p.cost);
  return m;
}

FiberHypergraph build_fiber_hypergraph(std::span<const Fiber> fibers, const DepGraph& g) {
  FiberHypergraph out;
  out.hg.node_weight.assign(fibers.size(), 1);
  out.fiber_edges.assign(fibers.size(), {});
  const auto regs = g.register_names.size();
  const auto arrays = g.array_names.size();
  std::vector<std::vector<std::uint32_t>> pins(regs + arrays);
  for (const auto& f : fibers) {
    for (auto r : f.read_registers) pins[r].push_back(f.id);
    for (auto a : f.touched_arrays) pins[regs + a].push_back(f.id);
    const auto& sink = g.nodes[f.sink];
    if (sink.kind == NodeKind::NextWrite) pins[sink.ref].push_back(f.id);
  }
  for (std::size_t r = 0; r < regs; ++r) {
    out.hg.add_edge(std::move(pins[r]), (g.register_widths[r] + 31) / 32);
    out.edge_names.push_back(g.register_names[r]);
  }
  for (std::size_t a = 0; a < arrays; ++a) {
    out.hg.add_edge(std::move(pins[regs + a]), ((g.array_widths[a] + 31) / 32) * g.array_depths[a]);
    out.edge_names.push_back(g.array_names[a]);
  }
  for (std::uint32_t e = 0; e < out.hg.edges.size(); ++e) {
    for (auto f : out.hg.edges[e]) out.fiber_edges[f].push_back(e);
  }
  return out;
}

std::uint64_t process_cost(const NodeSet& a, const NodeSet& b, const DepGraph& g) {
  return NodeSet::union_weight(a, b, g.cost_weights);
}

std::uint64_t fiber_set_cost(std::span<const FiberId> set, std::span<const Fiber> fibers, const DepGraph& g) {
  NodeSet u;
  for (auto f : set) u = NodeSet::unite(u, fibers[f].cone);
  return u.weighted_sum(g.cost_weights);
}

Process make_process(std::span<const FiberId> members, std::span<const Fiber> fibers, const DepGraph& g) {
  Process p;
  p.fibers.assign(members.begin(), members.end());
  std::sort(p.fibers.begin(), p.fibers.end());
  for (auto f : p.fibers) p.cone = NodeSet::unite(p.cone, fibers[f].cone);
  p.cost = p.cone.weighted_sum(g.cost_weights);
  p.data_mem = p.cone.weighted_sum(g.mem_weights);
  p.code_mem = p.cone.weighted_sum(g.code_weights);
  return p;
}

namespace {

bool fits(const Process& p, const MachineProfile& profile) {
  return p.data_mem <= profile.data_mem_per_tile && p.code_mem <= profile.code_mem_per_tile;
}

std::uint32_t find_root(std::vector<std::uint32_t>& parent, std::uint32_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

// Working set of processes for the greedy merge stages.
class MergeState {
 public:
  MergeState(std::vector<Process> procs, std::span<const Fiber> fibers, const FiberHypergraph& fhg,
             const DepGraph& g, const MachineProfile& profile)
      : procs_(std::move(procs)), fibers_(fibers), fhg_(fhg), g_(g), profile_(profile) {
    owner_.assign(fibers.size(), UINT32_MAX);
    active_.assign(procs_.size(), 1);
    edge_stamp_.assign(fhg.hg.edges.size(), 0);
    proc_stamp_.assign(procs_.size(), 0);
    for (std::uint32_t i = 0; i < procs_.size(); ++i) {
      for (auto f : procs_[i].fibers) owner_[f] = i;
      by_cost_.insert({procs_[i].cost, i});
    }
    count_ = procs_.size();
  }

  std::size_t count() const { return count_; }
  const Process& proc(std::uint32_t i) const { return procs_[i]; }
  const std::set<std::pair<std::uint64_t, std::uint32_t>>& by_cost() const { return by_cost_; }

  std::uint64_t max_cost() const { return by_cost_.empty() ? 0 : by_cost_.rbegin()->first; }

  /// Active processes sharing a state-element hyperedge with `i`, ascending id.
  std::vector<std::uint32_t> partners(std::uint32_t i) {
    ++stamp_;
    std::vector<std::uint32_t> out;
    for (auto f : procs_[i].fibers) {
      for (auto e : fhg_.fiber_edges[f]) {
        if (edge_stamp_[e] == stamp_) continue;
        edge_stamp_[e] = stamp_;
        for (auto pin : fhg_.hg.edges[e]) {
          const auto o = owner_[pin];
          if (o == UINT32_MAX || o == i || proc_stamp_[o] == stamp_) continue;
          proc_stamp_[o] = stamp_;
          out.push_back(o);
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  struct Trial {
    std::uint64_t cost = 0;
    bool fits = false;
  };

  Trial trial(std::uint32_t a, std::uint32_t b) const {
    const auto& pa = procs_[a];
    const auto& pb = procs_[b];
    Trial t;
    t.cost = NodeSet::union_weight(pa.cone, pb.cone, g_.cost_weights);
    const auto data = NodeSet::union_weight(pa.cone, pb.cone, g_.mem_weights);
    const auto code = NodeSet::union_weight(pa.cone, pb.cone, g_.code_weights);
    t.fits = data <= profile_.data_mem_per_tile && code <= profile_.code_mem_per_tile;
    return t;
  }

  /// Merges b into a (the lower index survives). Returns the survivor.
  std::uint32_t merge(std::uint32_t a, std::uint32_t b) {
    if (b < a) std::swap(a, b);
    auto& pa = procs_[a];
    auto& pb = procs_[b];
    by_cost_.erase({pa.cost, a});
    by_cost_.erase({pb.cost, b});
    pa.cone = NodeSet::unite(pa.cone, pb.cone);
    pa.cost = pa.cone.weighted_sum(g_.cost_weights);
    pa.data_mem = pa.cone.weighted_sum(g_.mem_weights);
    pa.code_mem = pa.cone.weighted_sum(g_.code_weights);
    for (auto f : pb.fibers) owner_[f] = a;
    pa.fibers.insert(pa.fibers.end(), pb.fibers.begin(), pb.fibers.end());
    std::sort(pa.fibers.begin(), pa.fibers.end());
    pb = Process{};
    active_[b] = 0;
    by_cost_.insert({pa.cost, a});
    --count_;
    return a;
  }

  std::vector<Process> take() {
    std::vector<Process> out;
    for (std::uint32_t i = 0; i < procs_.size(); ++i) {
      if (active_[i]) out.push_back(std::move(procs_[i]));
    }
    return out;
  }

 private:
  std::vector<Process> procs_;
  std::span<const Fiber> fibers_;
  const FiberHypergraph& fhg_;
  const DepGraph& g_;
  const MachineProfile& profile_;
  std::vector<std::uint32_t> owner_;
  std::vector<std::uint8_t> active_;
  std::set<std::pair<std::uint64_t, std::uint32_t>> by_cost_;
  std::size_t count_ = 0;
  std::vector<std::uint64_t> edge_stamp_;
  std::vector<std::uint64_t> proc_stamp_;
  std::uint64_t stamp_ = 0;
};

// Shared greedy loop. `bound` caps merged cost (UINT64_MAX for stage 4).
void greedy_merge(MergeState& st, std::uint32_t target, std::uint64_t bound, CandidateOrder order,
                  bool relaxed) {
  std::set<std::pair<std::uint64_t, std::uint32_t>> unprocessed = st.by_cost();
  while (st.count() > target && !unprocessed.empty()) {
    const auto seed = unprocessed.begin()->second;

    std::uint32_t best = UINT32_MAX;
    std::uint64_t best_cost = 0;
    for (auto c : st.partners(seed)) {
      const auto t = st.trial(seed, c);
      if (!t.fits || t.cost > bound) continue;
      bool better = best == UINT32_MAX;
      if (!better) {
        if (order == CandidateOrder::Ascending) {
          better = t.cost < best_cost;
        } else {
          better = t.cost > best_cost;
        }
      }
      if (better) {
        best = c;
        best_cost = t.cost;
      }
    }

    auto merge_pair = [&](std::uint32_t a, std::uint32_t b) {
      unprocessed.erase({st.proc(a).cost, a});
      unprocessed.erase({st.proc(b).cost, b});
      const auto m = st.merge(a, b);
      unprocessed.insert({st.proc(m).cost, m});
    };

    if (best != UINT32_MAX) {
      merge_pair(seed, best);
      continue;
    }

    const auto& all = st.by_cost();
    auto it = all.begin();
    const auto a = it->second;
    const auto b = std::next(it)->second;
    const auto t = st.trial(a, b);
    if (t.fits && t.cost <= bound) {
      merge_pair(a, b);
      continue;
    }
    if (relaxed) {
      // Smallest process the seed can absorb within memory.
      std::uint32_t other = UINT32_MAX;
      for (const auto& [cost, id] : all) {
        if (id != seed && st.trial(seed, id).fits) {
          other = id;
          break;
        }
      }
      if (other != UINT32_MAX) {
        merge_pair(seed, other);
        continue;
      }
    }
    unprocessed.erase(unprocessed.begin());
  }
}

std::vector<Process> initial_processes(std::span<const std::vector<FiberId>> groups, std::span<const Fiber> fibers,
                                       const DepGraph& g, const MachineProfile& profile) {
  std::vector<Process> procs;
  procs.reserve(groups.size());
  for (const auto& grp : groups) {
    auto p = make_process(grp, fibers, g);
    if (!fits(p, profile)) {
      const auto& f = fibers[p.fibers.front()];
      std::string arrays;
      for (auto a : f.touched_arrays) {
        arrays += fmt::format("{}{} ({} bytes)", arrays.empty() ? "" : ", ", g.array_names[a], g.array_bytes(a));
      }
      throw Error(ErrorCode::DesignTooLarge,
                  fmt::format("fiber '{}' needs {} data / {} code bytes but a tile holds {} / {}{}", g.sink_name(f.sink),
                              p.data_mem, p.code_mem, profile.data_mem_per_tile, profile.code_mem_per_tile,
                              arrays.empty() ? "" : "; arrays: " + arrays));
    }
    procs.push_back(std::move(p));
  }
  return procs;
}

std::vector<std::uint32_t> chip_partition(std::span<const std::vector<FiberId>> groups,
                                          std::vector<std::uint64_t> weights, std::size_t num_fibers,
                                          const FiberHypergraph& fhg, std::uint32_t k,
                                          std::span<const std::uint64_t> caps, const HypergraphConfig& cfg) {
  if (k == 1) return std::vector<std::uint32_t>(groups.size(), 0);
  std::vector<std::uint32_t> group_of(num_fibers, UINT32_MAX);
  for (std::uint32_t i = 0; i < groups.size(); ++i) {
    for (auto f : groups[i]) group_of[f] = i;
  }
  Hypergraph hg;
  hg.node_weight = std::move(weights);
  for (std::size_t e = 0; e < fhg.hg.edges.size(); ++e) {
    std::vector<std::uint32_t> pins;
    for (auto f : fhg.hg.edges[e]) {
      if (group_of[f] != UINT32_MAX) pins.push_back(group_of[f]);
    }
    hg.add_edge(std::move(pins), fhg.hg.edge_weight[e]);
  }
  return partition_hypergraph(hg, k, caps, cfg);
}

void renumber(Partition& part, std::span<const Fiber> fibers, const DepGraph& g) {
  std::sort(part.processes.begin(), part.processes.end(), [](const Process& a, const Process& b) {
    if (a.chip != b.chip) return a.chip < b.chip;
    return a.fibers.front() < b.fibers.front();
  });
  part.fiber_owner.assign(fibers.size(), UINT32_MAX);
  part.chip_of.clear();
  for (std::uint32_t i = 0; i < part.processes.size(); ++i) {
    auto& p = part.processes[i];
    p.id = i;
    part.chip_of.push_back(p.chip);
    for (auto f : p.fibers) part.fiber_owner[f] = i;
  }
  (void)g;
}

}  // namespace

std::vector<std::vector<FiberId>> stage1_array_colocate(std::span<const Fiber> fibers, const DepGraph& g,
                                                         std::uint64_t threshold, const MachineProfile& profile) {
  std::vector<std::uint32_t> parent(fibers.size());
  std::iota(parent.begin(), parent.end(), 0u);
  std::vector<std::uint8_t> large(g.array_names.size(), 0);
  std::vector<FiberId> first_of(g.array_names.size(), UINT32_MAX);
  for (std::uint32_t a = 0; a < g.array_names.size(); ++a) large[a] = g.array_bytes(a) >= threshold;
  for (const auto& f : fibers) {
    for (auto a : f.touched_arrays) {
      if (!large[a]) continue;
      if (first_of[a] == UINT32_MAX) {
        first_of[a] = f.id;
      } else {
        parent[find_root(parent, f.id)] = find_root(parent, first_of[a]);
      }
    }
  }
  std::map<std::uint32_t, std::vector<FiberId>> by_root;
  for (const auto& f : fibers) by_root[find_root(parent, f.id)].push_back(f.id);
  std::vector<std::vector<FiberId>> groups;
  for (auto& [root, members] : by_root) groups.push_back(std::move(members));
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });

  for (const auto& grp : groups) {
    if (grp.size() < 2) continue;
    const auto p = make_process(grp, fibers, g);
    if (fits(p, profile)) continue;
    std::vector<std::string> names;
    for (auto f : grp) {
      for (auto a : fibers[f].touched_arrays) {
        if (large[a]) names.push_back(g.array_names[a]);
      }
    }
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    throw Error(ErrorCode::GroupExceedsMemory,
                fmt::format("fibers sharing array {} need {} data / {} code bytes but a tile holds {} / {}",
                            fmt::join(names, ", "), p.data_mem, p.code_mem, profile.data_mem_per_tile,
                            profile.code_mem_per_tile));
  }
  return groups;
}

std::vector<std::uint32_t> stage2_chip_partition(std::span<const std::vector<FiberId>> groups,
                                                 std::span<const Fiber> fibers, const FiberHypergraph& fhg,
                                                 std::uint32_t k, double epsilon, bool cost_weighted,
                                                 const HypergraphConfig& cfg) {
  std::vector<std::uint64_t> weights;
  for (const auto& grp : groups) {
    std::uint64_t w = 0;
    for (auto f : grp) w += cost_weighted ? fibers[f].cost : 1;
    weights.push_back(w);
  }
  const auto total = std::accumulate(weights.begin(), weights.end(), std::uint64_t{0});
  const auto cap = balanced_part_cap(total, k, epsilon);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (weights[i] > cap) {
      throw Error(ErrorCode::InfeasibleBalance,
                  fmt::format("a colocated group of weight {} exceeds the per-chip balance limit {}", weights[i], cap));
    }
  }
  const std::vector<std::uint64_t> caps(k, cap);
  auto c = cfg;
  c.epsilon = epsilon;
  return chip_partition(groups, std::move(weights), fibers.size(), fhg, k, caps, c);
}

std::vector<Process> stage3_conservative_merge(std::vector<Process> procs, std::span<const Fiber> fibers,
                                               const FiberHypergraph& fhg, const DepGraph& g,
                                               const MachineProfile& profile, std::uint32_t target,
                                               CandidateOrder order) {
  if (procs.size() <= target || procs.size() < 2) return procs;
  MergeState st(std::move(procs), fibers, fhg, g, profile);
  greedy_merge(st, target, st.max_cost(), order, false);
  return st.take();
}

std::vector<Process> stage4_relaxed_merge(std::vector<Process> procs, std::span<const Fiber> fibers,
                                          const FiberHypergraph& fhg, const DepGraph& g,
                                          const MachineProfile& profile, std::uint32_t target) {
  if (procs.size() <= target) return procs;
  if (target == 0) throw Error(ErrorCode::DesignTooLarge, "no tiles available");
  MergeState st(std::move(procs), fibers, fhg, g, profile);
  greedy_merge(st, target, UINT64_MAX, CandidateOrder::Ascending, true);
  if (st.count() > target) {
    throw Error(ErrorCode::DesignTooLarge,
                fmt::format("the design is too large to fit the hardware resources: {} processes remain for {} "
                            "tiles and no further merge fits in tile memory",
                            st.count(), target));
  }
  return st.take();
}

std::vector<Process> hypergraph_merge(std::vector<Process> procs, std::span<const Fiber> fibers, const DepGraph& g,
                                      const MachineProfile& profile, std::uint32_t target, double epsilon,
                                      const HypergraphConfig& cfg) {
  if (procs.size() <= target) return procs;
  if (target == 0) throw Error(ErrorCode::DesignTooLarge, "no tiles available");

  std::vector<std::vector<std::uint32_t>> membership(g.nodes.size());
  for (std::uint32_t i = 0; i < procs.size(); ++i) {
    procs[i].cone.for_each([&](std::uint32_t node) { membership[node].push_back(i); });
  }
  std::map<std::vector<std::uint32_t>, std::uint64_t> clusters;
  for (NodeId n = 0; n < g.nodes.size(); ++n) {
    if (membership[n].size() >= 2 && g.nodes[n].cost > 0) clusters[membership[n]] += g.nodes[n].cost;
  }
  membership = {};

  Hypergraph hg;
  std::uint64_t heaviest = 0;
  for (const auto& p : procs) {
    hg.node_weight.push_back(p.cost);
    heaviest = std::max(heaviest, p.cost);
  }
  for (auto& [pins, w] : clusters) hg.add_edge(pins, w);
  auto c = cfg;
  c.epsilon = epsilon;
  std::vector<std::uint32_t> parts;
  try {
    const auto cap = std::max(balanced_part_cap(hg.total_weight(), target, epsilon), heaviest);
    parts = partition_hypergraph(hg, target, std::vector<std::uint64_t>(target, cap), c);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InfeasibleBalance) throw;
    // Lumpy weights: fall back to the list-scheduling bound.
    const auto cap = (hg.total_weight() + target - 1) / target + heaviest;
    parts = partition_hypergraph(hg, target, std::vector<std::uint64_t>(target, cap), c);
  }

  std::vector<std::vector<FiberId>> members(target);
  for (std::uint32_t i = 0; i < procs.size(); ++i) {
    members[parts[i]].insert(members[parts[i]].end(), procs[i].fibers.begin(), procs[i].fibers.end());
  }
  std::vector<Process> out;
  for (auto& m : members) {
    if (m.empty()) continue;
    auto p = make_process(m, fibers, g);
    if (!fits(p, profile)) {
      throw Error(ErrorCode::DesignTooLarge,
                  fmt::format("hypergraph part with {} fibers needs {} data / {} code bytes but a tile holds {} / {}",
                              p.fibers.size(), p.data_mem, p.code_mem, profile.data_mem_per_tile,
                              profile.code_mem_per_tile));
    }
    out.push_back(std::move(p));
  }
  return out;
}

Partition partition(std::span<const Fiber> fibers, const DepGraph& g, const MachineProfile& profile,
                    const PartitionOptions& options) {
  profile.validate();
  const std::uint32_t k = profile.chips;
  std::uint32_t target = options.target_tiles_per_chip ? options.target_tiles_per_chip : profile.tiles_per_chip;
  target = std::min(target, profile.tiles_per_chip);

  Partition part;
  part.chips = k;
  part.strategy = options.strategy;
  if (fibers.empty()) return part;

  const auto fhg = build_fiber_hypergraph(fibers, g);
  const auto groups = stage1_array_colocate(fibers, g, options.array_threshold, profile);

  auto reduce = [&](std::vector<Process> procs, std::uint32_t tgt) {
    if (options.strategy.single == SingleChipStrategy::Hypergraph) {
      return hypergraph_merge(std::move(procs), fibers, g, profile, tgt, options.epsilon, options.hypergraph);
    }
    std::uint64_t before = 0;
    for (const auto& p : procs) before = std::max(before, p.cost);
    procs = stage3_conservative_merge(std::move(procs), fibers, fhg, g, profile, tgt, options.stage3_order);
    std::uint64_t after = 0;
    for (const auto& p : procs) after = std::max(after, p.cost);
    part.stats.stage3_straggler_before.push_back(before);
    part.stats.stage3_straggler_after.push_back(after);
    part.stats.processes_after_stage3.push_back(static_cast<std::uint32_t>(procs.size()));
    return stage4_relaxed_merge(std::move(procs), fibers, fhg, g, profile, tgt);
  };

  switch (options.strategy.multi) {
    case MultiChipStrategy::Pre: {
      const auto chip_of_group =
          stage2_chip_partition(groups, fibers, fhg, k, options.epsilon, options.cost_weighted_balance, options.hypergraph);
      for (std::uint32_t c = 0; c < k; ++c) {
        std::vector<std::vector<FiberId>> mine;
        for (std::size_t i = 0; i < groups.size(); ++i) {
          if (chip_of_group[i] == c) mine.push_back(groups[i]);
        }
        if (mine.empty()) continue;
        auto procs = reduce(initial_processes(mine, fibers, g, profile), target);
        for (auto& p : procs) {
          p.chip = c;
          part.processes.push_back(std::move(p));
        }
      }
      break;
    }
    case MultiChipStrategy::Post: {
      auto procs = reduce(initial_processes(groups, fibers, g, profile), target * k);
      std::vector<std::vector<FiberId>> as_groups;
      for (const auto& p : procs) as_groups.push_back(p.fibers);
      const auto cap = std::min<std::uint64_t>(target, balanced_part_cap(procs.size(), k, options.epsilon));
      const std::vector<std::uint64_t> caps(k, cap);
      const auto chip = chip_partition(as_groups, std::vector<std::uint64_t>(procs.size(), 1), fibers.size(), fhg, k,
                                       caps, options.hypergraph);
      for (std::size_t i = 0; i < procs.size(); ++i) {
        procs[i].chip = chip[i];
        part.processes.push_back(std::move(procs[i]));
      }
      break;
    }
    case MultiChipStrategy::None: {
      auto procs = reduce(initial_processes(groups, fibers, g, profile), target * k);
      std::sort(procs.begin(), procs.end(),
                [](const Process& a, const Process& b) { return a.fibers.front() < b.fibers.front(); });
      for (std::size_t i = 0; i < procs.size(); ++i) {
        procs[i].chip = static_cast<std::uint32_t>(i % k);
        part.processes.push_back(std::move(procs[i]));
      }
      break;
    }
  }
  renumber(part, fibers, g);
  part.stats.off_chip_cut = off_chip_cut(part, fhg);
  return part;
}

Partition partition_from_assignment(std::span<const Fiber> fibers, const DepGraph& g,
                                    std::span<const std::uint32_t> fiber_to_process,
                                    std::span<const std::uint32_t> process_chip, std::uint32_t chips) {
  if (fiber_to_process.size() != fibers.size()) {
    throw Error(ErrorCode::FormatError, "assignment must name a process for every fiber");
  }
  std::vector<std::vector<FiberId>> members(process_chip.size());
  for (FiberId f = 0; f < fibers.size(); ++f) {
    if (fiber_to_process[f] >= members.size()) {
      throw Error(ErrorCode::FormatError, fmt::format("fiber {} assigned to unknown process {}", f, fiber_to_process[f]));
    }
    members[fiber_to_process[f]].push_back(f);
  }
  Partition part;
  part.chips = std::max<std::uint32_t>(chips, 1);
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (members[i].empty()) continue;
    if (process_chip[i] >= part.chips) {
      throw Error(ErrorCode::FormatError, fmt::format("process {} placed on chip {} of {}", i, process_chip[i], chips));
    }
    auto p = make_process(members[i], fibers, g);
    p.chip = process_chip[i];
    part.processes.push_back(std::move(p));
  }
  renumber(part, fibers, g);
  part.stats.off_chip_cut = off_chip_cut(part, build_fiber_hypergraph(fibers, g));
  return part;
}

std::uint64_t off_chip_cut(const Partition& p, const FiberHypergraph& fhg) {
  std::vector<std::uint32_t> chip(p.fiber_owner.size(), 0);
  for (std::size_t f = 0; f < chip.size(); ++f) chip[f] = p.chip_of[p.fiber_owner[f]];
  return cut_weight(fhg.hg, chip);
}

std::vector<std::string> verify_partition(const Partition& p, std::span<const Fiber> fibers, const DepGraph& g,
                                          const MachineProfile& profile) {
  std::vector<std::string> problems;
  std::vector<std::uint32_t> seen(fibers.size(), 0);
  std::vector<std::uint32_t> per_chip(p.chips, 0);
  for (const auto& proc : p.processes) {
    NodeSet cone;
    for (auto f : proc.fibers) {
      if (f >= fibers.size()) {
        problems.push_back(fmt::format("process {} names unknown fiber {}", proc.id, f));
        continue;
      }
      ++seen[f];
      cone = NodeSet::unite(cone, fibers[f].cone);
    }
    const auto cost = cone.weighted_sum(g.cost_weights);
    const auto data = cone.weighted_sum(g.mem_weights);
    const auto code = cone.weighted_sum(g.code_weights);
    if (!(cone == proc.cone)) problems.push_back(fmt::format("process {} cone differs from its fibers", proc.id));
    if (cost != proc.cost) problems.push_back(fmt::format("process {} cost {} != recomputed {}", proc.id, proc.cost, cost));
    if (data > profile.data_mem_per_tile) {
      problems.push_back(fmt::format("process {} data memory {} > {}", proc.id, data, profile.data_mem_per_tile));
    }
    if (code > profile.code_mem_per_tile) {
      problems.push_back(fmt::format("process {} code memory {} > {}", proc.id, code, profile.code_mem_per_tile));
    }
    if (proc.chip >= p.chips) {
      problems.push_back(fmt::format("process {} on chip {} of {}", proc.id, proc.chip, p.chips));
    } else {
      ++per_chip[proc.chip];
    }
  }
  for (FiberId f = 0; f < fibers.size(); ++f) {
    if (seen[f] != 1) problems.push_back(fmt::format("fiber {} owned by {} processes", f, seen[f]));
    else if (f >= p.fiber_owner.size() || p.processes[p.fiber_owner[f]].id != p.fiber_owner[f]) {
      problems.push_back(fmt::format("fiber {} owner map inconsistent", f));
    }
  }
  for (std::uint32_t c = 0; c < p.chips; ++c) {
    if (per_chip[c] > profile.tiles_per_chip) {
      problems.push_back(fmt::format("chip {} has {} processes for {} tiles", c, per_chip[c], profile.tiles_per_chip));
    }
  }
  return problems;
}

std::string partition_to_json(const Partition& p, std::string_view netlist_hash) {
  nlohmann::ordered_json doc;
  doc["schema"] = "bsprtl.partition/1";
  doc["netlistHash"] = std::string(netlist_hash);
  doc["chips"] = p.chips;
  doc["strategy"] = {{"singleChip", std::string(to_string(p.strategy.single))},
                     {"multiChip", std::string(to_string(p.strategy.multi))}};
  doc["offChipCut"] = p.stats.off_chip_cut;
  auto procs = nlohmann::ordered_json::array();
  for (const auto& proc : p.processes) {
    nlohmann::ordered_json j;
    j["id"] = proc.id;
    j["chip"] = proc.chip;
    j["fibers"] = proc.fibers;
    j["cost"] = proc.cost;
    j["dataMem"] = proc.data_mem;
    j["codeMem"] = proc.code_mem;
    procs.push_back(std::move(j));
  }
  doc["processes"] = std::move(procs);
  return doc.dump(1) + "\n";
}

Partition partition_from_json(std::string_view text, std::span<const Fiber> fibers, const DepGraph& g,
                              std::string_view expected_hash) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, fmt::format("partition JSON: {}", e.what()));
  }
  try {
    if (doc.at("schema").get<std::string>() != "bsprtl.partition/1") {
      throw Error(ErrorCode::FormatError, "partition JSON: unsupported schema");
    }
    const auto hash = doc.at("netlistHash").get<std::string>();
    if (!expected_hash.empty() && hash != expected_hash) {
      throw Error(ErrorCode::FormatError,
                  fmt::format("partition was compiled for netlist {} but this netlist hashes to {}", hash, expected_hash));
    }
    const auto chips = doc.at("chips").get<std::uint32_t>();
    const auto& procs = doc.at("processes");
    std::vector<std::uint32_t> owner(fibers.size(), UINT32_MAX);
    std::vector<std::uint32_t> chip_of;
    for (std::uint32_t i = 0; i < procs.size(); ++i) {
      chip_of.push_back(procs[i].at("chip").get<std::uint32_t>());
      for (auto f : procs[i].at("fibers").get<std::vector<std::uint32_t>>()) {
        if (f >= fibers.size() || owner[f] != UINT32_MAX) {
          throw Error(ErrorCode::FormatError, fmt::format("partition JSON: fiber {} unknown or listed twice", f));
        }
        owner[f] = i;
      }
    }
    for (FiberId f = 0; f < fibers.size(); ++f) {
      if (owner[f] == UINT32_MAX) throw Error(ErrorCode::FormatError, fmt::format("partition JSON: fiber {} unassigned", f));
    }
    auto part = partition_from_assignment(fibers, g, owner, chip_of, chips);
    if (doc.contains("strategy")) {
      part.strategy.single = parse_single_chip(doc["strategy"].at("singleChip").get<std::string>());
      part.strategy.multi = parse_multi_chip(doc["strategy"].at("multiChip").get<std::string>());
    }
    return part;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, fmt::format("partition JSON: {}", e.what()));
  }
}

}  // namespace bsprtl
