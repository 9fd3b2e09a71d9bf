#include "bsprtl/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <queue>

#include <fmt/format.h>
#include <json.hpp>

namespace bsprtl {

CostReport estimate(const Partition& p, const ExchangeSchedule& s, const MachineProfile& profile,
                    std::span<const Fiber> fibers) {
  CostReport r;
  r.active_tiles = static_cast<std::uint32_t>(std::max<std::size_t>(p.processes.size(), 1));
  r.t_sync = 2.0 * (profile.sync_base + profile.sync_slope * std::log2(static_cast<double>(r.active_tiles)));

  std::uint64_t max_on = 0;
  for (const auto& proc : p.processes) {
    ProcessCost pc;
    pc.id = proc.id;
    pc.chip = proc.chip;
    pc.tau = proc.cost;
    if (proc.id < s.per_process.size()) {
      const auto& t = s.per_process[proc.id];
      pc.on_chip_bytes = t.sent_on_chip + t.recv_on_chip;
      pc.off_chip_bytes = t.sent_off_chip + t.recv_off_chip;
    }
    max_on = std::max(max_on, pc.on_chip_bytes);
    r.t_comp = std::max(r.t_comp, static_cast<double>(proc.cost));
    r.per_process.push_back(pc);
  }
  r.t_comm_on_chip = static_cast<double>(max_on) / profile.on_chip_bw;
  r.t_comm_off_chip = static_cast<double>(s.off_chip_bytes) / profile.off_chip_bw;
  r.t_comm_overhead = s.total_bytes() > 0 ? profile.per_message_overhead : 0.0;
  r.rate = 1.0 / r.total();

  const auto sa = straggler_analysis(fibers);
  r.m_crit = sa.m_crit;
  r.straggler_fiber = sa.straggler;
  r.straggler_cost = sa.straggler_cost;
  return r;
}

std::uint64_t lpt_makespan(std::span<const std::uint64_t> costs, std::uint64_t m) {
  if (m == 0) return UINT64_MAX;
  std::vector<std::uint64_t> sorted(costs.begin(), costs.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  if (m >= sorted.size()) return sorted.empty() ? 0 : sorted.front();
  std::priority_queue<std::uint64_t, std::vector<std::uint64_t>, std::greater<>> loads;
  for (std::uint64_t i = 0; i < m; ++i) loads.push(0);
  std::uint64_t makespan = 0;
  for (auto c : sorted) {
    const auto l = loads.top() + c;
    loads.pop();
    loads.push(l);
    makespan = std::max(makespan, l);
  }
  return makespan;
}

StragglerAnalysis straggler_analysis(std::span<const Fiber> fibers) {
  StragglerAnalysis sa;
  if (fibers.empty()) return sa;
  std::uint64_t sum = 0;
  for (const auto& f : fibers) {
    sa.sorted_costs.push_back(f.cost);
    sum += f.cost;
    if (f.cost > sa.straggler_cost || (f.cost == sa.straggler_cost && f.id < sa.straggler)) {
      sa.straggler_cost = f.cost;
      sa.straggler = f.id;
    }
  }
  if (sa.straggler_cost == 0) sa.straggler = fibers.front().id;
  std::sort(sa.sorted_costs.begin(), sa.sorted_costs.end(), std::greater<>());
  // No m below ceil(sum / max) can reach the straggler bound.
  std::uint64_t m = sa.straggler_cost == 0 ? 1 : std::max<std::uint64_t>(1, (sum + sa.straggler_cost - 1) / sa.straggler_cost);
  while (lpt_makespan(sa.sorted_costs, m) != sa.straggler_cost) ++m;
  sa.m_crit = m;
  return sa;
}

TileSpec TileSpec::parse(std::string_view text) {
  TileSpec t;
  t.label = std::string(text);
  if (text == "full") return t;
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const auto a = std::string(text.substr(0, slash));
    const auto b = std::string(text.substr(slash + 1));
    try {
      std::size_t ea = 0;
      std::size_t eb = 0;
      const auto num = std::stoul(a, &ea);
      const auto den = std::stoul(b, &eb);
      if (ea != a.size() || eb != b.size() || num == 0 || den == 0 || num > den) throw std::invalid_argument("");
      t.num = static_cast<std::uint32_t>(num);
      t.den = static_cast<std::uint32_t>(den);
      return t;
    } catch (const std::exception&) {
      throw Error(ErrorCode::UsageError, fmt::format("bad tile fraction '{}'", text));
    }
  }
  try {
    std::size_t end = 0;
    const auto n = std::stoull(std::string(text), &end);
    if (end != text.size() || n == 0) throw std::invalid_argument("");
    t.total = n;
    return t;
  } catch (const std::exception&) {
    throw Error(ErrorCode::UsageError, fmt::format("bad tile count '{}' (use N, 1/8, 1/4, 1/2 or full)", text));
  }
}

std::uint32_t TileSpec::per_chip(const MachineProfile& profile) const {
  if (total > 0) {
    const auto per = (total + profile.chips - 1) / profile.chips;
    return static_cast<std::uint32_t>(std::clamp<std::uint64_t>(per, 1, profile.tiles_per_chip));
  }
  const auto per = std::uint64_t{profile.tiles_per_chip} * num / den;
  return static_cast<std::uint32_t>(std::max<std::uint64_t>(per, 1));
}

double TileSpec::fraction(const MachineProfile& profile) const {
  return static_cast<double>(per_chip(profile)) / static_cast<double>(profile.tiles_per_chip);
}

std::vector<SweepPoint> scaling_sweep(const DepGraph& g, std::span<const Fiber> fibers, const MachineProfile& profile,
                                      std::span<const TileSpec> tiles, std::span<const PartitionStrategy> strategies,
                                      const PartitionOptions& base) {
  if (tiles.empty() || strategies.empty()) {
    throw Error(ErrorCode::UsageError, "a sweep needs at least one tile budget and one strategy");
  }
  std::vector<SweepPoint> points;
  for (const auto& strategy : strategies) {
    for (const auto& t : tiles) {
      SweepPoint pt;
      pt.tiles = t;
      pt.strategy = strategy;
      try {
        auto opts = base;
        opts.strategy = strategy;
        opts.target_tiles_per_chip = t.per_chip(profile);
        const auto part = partition(fibers, g, profile, opts);
        const auto sched = build_exchange_schedule(part, g, fibers);
        pt.report = estimate(part, sched, profile, fibers);
        pt.processes = static_cast<std::uint32_t>(part.processes.size());
        pt.off_chip_cut = part.stats.off_chip_cut;
        pt.ok = true;
      } catch (const Error& e) {
        pt.error = e.what();
      }
      points.push_back(std::move(pt));
    }
  }
  return points;
}

namespace {

std::string strategy_label(const PartitionStrategy& s) {
  return fmt::format("{}/{}", to_string(s.single), to_string(s.multi));
}

// Per strategy, the total cycle time of the point with the fewest tiles.
std::map<std::string, double> baselines(std::span<const SweepPoint> points, const MachineProfile& profile) {
  std::map<std::string, std::pair<double, double>> best;
  for (const auto& pt : points) {
    if (!pt.ok) continue;
    const auto key = strategy_label(pt.strategy);
    const double f = pt.tiles.fraction(profile);
    auto it = best.find(key);
    if (it == best.end() || f < it->second.first) best[key] = {f, pt.report.total()};
  }
  std::map<std::string, double> out;
  for (const auto& [k, v] : best) out[k] = v.second;
  return out;
}

}  // namespace

std::string sweep_csv(std::span<const SweepPoint> points, const MachineProfile& profile) {
  std::string out =
      "fraction,strategy,tsync,tcomm_on,tcomm_off,tcomp,rate,tcomm_msg,tiles_per_chip,processes,offchip_cut,"
      "norm_tsync,norm_tcomm,norm_tcomp,status\n";
  const auto base = baselines(points, profile);
  for (const auto& pt : points) {
    const auto key = strategy_label(pt.strategy);
    if (!pt.ok) {
      out += fmt::format("{},{},,,,,,,{},,,,,,\"{}\"\n", pt.tiles.label, key, pt.tiles.per_chip(profile), pt.error);
      continue;
    }
    const auto& r = pt.report;
    const double b = base.at(key);
    out += fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.9g},{:.6f},{},{},{},{:.6f},{:.6f},{:.6f},ok\n",
                       pt.tiles.label, key, r.t_sync, r.t_comm_on_chip, r.t_comm_off_chip, r.t_comp, r.rate,
                       r.t_comm_overhead, pt.tiles.per_chip(profile), pt.processes, pt.off_chip_cut, r.t_sync / b,
                       r.t_comm() / b, r.t_comp / b);
  }
  return out;
}

namespace {

nlohmann::ordered_json report_object(const CostReport& r) {
  nlohmann::ordered_json j;
  j["tSync"] = r.t_sync;
  j["tCommOnChip"] = r.t_comm_on_chip;
  j["tCommOffChip"] = r.t_comm_off_chip;
  j["tCommOverhead"] = r.t_comm_overhead;
  j["tComp"] = r.t_comp;
  j["rate"] = r.rate;
  j["activeTiles"] = r.active_tiles;
  j["mCrit"] = r.m_crit;
  j["straggler"] = {{"fiber", r.straggler_fiber}, {"cost", r.straggler_cost}};
  auto procs = nlohmann::ordered_json::array();
  for (const auto& pc : r.per_process) {
    procs.push_back({{"id", pc.id}, {"chip", pc.chip}, {"tau", pc.tau}, {"onChipBytes", pc.on_chip_bytes},
                     {"offChipBytes", pc.off_chip_bytes}});
  }
  j["perProcess"] = std::move(procs);
  return j;
}

}  // namespace

std::string report_json(const CostReport& r) {
  nlohmann::ordered_json j;
  j["schema"] = "bsprtl.report/1";
  j["report"] = report_object(r);
  return j.dump(1) + "\n";
}

std::string sweep_json(std::span<const SweepPoint> points, const MachineProfile& profile) {
  nlohmann::ordered_json j;
  j["schema"] = "bsprtl.sweep/1";
  j["profile"] = profile.name;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& pt : points) {
    nlohmann::ordered_json e;
    e["tiles"] = pt.tiles.label;
    e["tilesPerChip"] = pt.tiles.per_chip(profile);
    e["strategy"] = {{"singleChip", std::string(to_string(pt.strategy.single))},
                     {"multiChip", std::string(to_string(pt.strategy.multi))}};
    e["ok"] = pt.ok;
    if (pt.ok) {
      e["processes"] = pt.processes;
      e["offChipCut"] = pt.off_chip_cut;
      auto rep = report_object(pt.report);
      rep.erase("perProcess");
      e["report"] = std::move(rep);
    } else {
      e["error"] = pt.error;
    }
    arr.push_back(std::move(e));
  }
  j["points"] = std::move(arr);
  return j.dump(1) + "\n";
}

}  // namespace bsprtl
