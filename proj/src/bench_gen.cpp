#include "bsprtl/bench_gen.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "bsprtl/error.hpp"

namespace bsprtl {

std::string_view to_string(BenchKind k) {
  switch (k) {
    case BenchKind::PrngBank: return "prng";
    case BenchKind::HasherChain: return "hasher";
    case BenchKind::ImbalancedMix: return "imbalanced";
    case BenchKind::CoreMesh: return "mesh";
  }
  return "?";
}

BenchSpec BenchSpec::prng(std::uint32_t count, std::uint64_t seed) {
  BenchSpec s;
  s.kind = BenchKind::PrngBank;
  s.count = count;
  s.seed = seed;
  return s;
}

BenchSpec BenchSpec::hasher(std::uint32_t rounds, std::uint32_t lanes, std::uint64_t seed) {
  BenchSpec s;
  s.kind = BenchKind::HasherChain;
  s.rounds = rounds;
  s.lanes = lanes;
  s.seed = seed;
  return s;
}

BenchSpec BenchSpec::imbalanced(std::uint32_t big, std::uint32_t small, double ratio, std::uint64_t seed) {
  BenchSpec s;
  s.kind = BenchKind::ImbalancedMix;
  s.big_fibers = big;
  s.small_fibers = small;
  s.ratio = ratio;
  s.seed = seed;
  return s;
}

BenchSpec BenchSpec::mesh(std::uint32_t rows, std::uint32_t cols, std::uint32_t core_regs, std::uint32_t array_kib,
                          std::uint32_t link_width, std::uint64_t seed) {
  BenchSpec s;
  s.kind = BenchKind::CoreMesh;
  s.rows = rows;
  s.cols = cols;
  s.core_regs = core_regs;
  s.array_kib = array_kib;
  s.link_width = link_width;
  s.seed = seed;
  return s;
}

namespace {

std::uint64_t big_chain_length(const BenchSpec& s) {
  const auto target = std::llround(s.ratio * static_cast<double>(kImbalancedSmallCost));
  return static_cast<std::uint64_t>(std::max<long long>(target - 4, 0));
}

std::uint64_t mesh_depth(const BenchSpec& s) {
  return std::bit_ceil(std::max<std::uint64_t>(4, std::uint64_t{s.array_kib} * 256));
}

void check(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::UsageError, fmt::format("invalid benchmark parameters: {}", what));
}

std::string prng_bank(const BenchSpec& s) {
  std::string out = fmt::format("design prng_bank_{}\n", s.count);
  for (std::uint64_t i = 0; i < s.count; ++i) {
    const auto init = (s.seed * s.count + i + 1) & 0xffffffffULL;
    out += fmt::format("reg x{0} : u32 init {1}\n", i, init);
    out += fmt::format("wire x{0}_s1 : u32 = x{0} ^ (x{0} << 13)\n", i);
    out += fmt::format("wire x{0}_s2 : u32 = x{0}_s1 ^ (x{0}_s1 >> 17)\n", i);
    out += fmt::format("wire x{0}_s3 : u32 = x{0}_s2 ^ (x{0}_s2 << 5)\n", i);
    out += fmt::format("next x{0} = x{0}_s3\n", i);
    out += fmt::format("output x{0} = x{0}\n", i);
  }
  return out;
}

std::string hasher_chain(const BenchSpec& s) {
  std::mt19937_64 rng(s.seed);
  std::string out = fmt::format("design hasher_{}x{}\n", s.lanes, s.rounds);
  for (std::uint32_t l = 0; l < s.lanes; ++l) {
    for (std::uint32_t r = 0; r < s.rounds; ++r) {
      out += fmt::format("reg h{}_{} : u32 init {}\n", l, r, rng() & 0xffffffffULL);
    }
  }
  for (std::uint32_t l = 0; l < s.lanes; ++l) {
    for (std::uint32_t r = 0; r < s.rounds; ++r) {
      const auto prev = fmt::format("h{}_{}", l, (r + s.rounds - 1) % s.rounds);
      const auto name = fmt::format("h{}_{}", l, r);
      const auto k = rng() & 0xffffffffULL;
      out += fmt::format("wire {0}_rot : u32 = ({1} << 7) | ({1} >> 25)\n", name, prev);
      out += fmt::format("wire {0}_mix : u32 = ({1} ^ {0}_rot) + {2}\n", name, prev, k);
      out += fmt::format("next {0} = {0}_mix ^ ({0}_mix >> 11)\n", name);
    }
    out += fmt::format("output lane{} = h{}_{}\n", l, l, s.rounds - 1);
  }
  return out;
}

std::string imbalanced_mix(const BenchSpec& s) {
  std::mt19937_64 rng(s.seed);
  const auto chain = big_chain_length(s);
  std::string out = fmt::format("design imbalanced_{}_{}\n", s.big_fibers, s.small_fibers);
  out += fmt::format("reg g : u32 init {}\n", rng() & 0xffffffffULL);
  out += "next g = (g + 1) ^ (g >> 3)\n";
  for (std::uint32_t i = 0; i < s.small_fibers; ++i) {
    out += fmt::format("reg s{} : u32 init {}\n", i, rng() & 0xffffffffULL);
    out += fmt::format("next s{0} = (s{0} ^ g) + {1}\n", i, rng() & 0xffffffffULL);
  }
  for (std::uint32_t b = 0; b < s.big_fibers; ++b) {
    out += fmt::format("reg b{} : u32 init {}\n", b, rng() & 0xffffffffULL);
    out += fmt::format("wire b{0}_t0 : u32 = b{0} ^ g\n", b);
    for (std::uint64_t k = 0; k < chain; ++k) {
      const auto c = rng() & 0xffffffffULL;
      const char* op = (k % 2 == 0) ? "+" : "^";
      out += fmt::format("wire b{0}_t{1} : u32 = b{0}_t{2} {3} {4}\n", b, k + 1, k, op, c);
    }
    out += fmt::format("next b{0} = b{0}_t{1}\n", b, chain);
    out += fmt::format("output b{0} = b{0}\n", b);
  }
  out += "output g = g\n";
  return out;
}

std::string core_mesh(const BenchSpec& s) {
  std::mt19937_64 rng(s.seed);
  const auto depth = mesh_depth(s);
  const auto ib = static_cast<unsigned>(std::countr_zero(depth));
  const unsigned pcw = std::max(8u, ib + 1);
  const unsigned lw = s.link_width;
  auto core = [](std::uint32_t i, std::uint32_t j) { return fmt::format("c{}_{}", i, j); };
  struct Dir {
    const char* name;
    int di;
    int dj;
    const char* opposite;
  };
  const Dir dirs[] = {{"n", -1, 0, "s"}, {"s", 1, 0, "n"}, {"w", 0, -1, "e"}, {"e", 0, 1, "w"}};
  auto has = [&](std::uint32_t i, std::uint32_t j, const Dir& d) {
    const auto ni = static_cast<long long>(i) + d.di;
    const auto nj = static_cast<long long>(j) + d.dj;
    return ni >= 0 && nj >= 0 && ni < static_cast<long long>(s.rows) && nj < static_cast<long long>(s.cols);
  };

  std::string out = fmt::format("design mesh_{}x{}\n", s.rows, s.cols);
  for (std::uint32_t i = 0; i < s.rows; ++i) {
    for (std::uint32_t j = 0; j < s.cols; ++j) {
      const auto c = core(i, j);
      out += fmt::format("array {}_rf : u32[{}]\n", c, depth);
      out += fmt::format("reg {}_pc : u{} init {}\n", c, pcw, rng() % depth);
      out += fmt::format("reg {}_acc : u32 init {}\n", c, rng() & 0xffffffffULL);
      for (std::uint32_t k = 0; k < s.core_regs; ++k) {
        out += fmt::format("reg {}_r{} : u32 init {}\n", c, k, rng() & 0xffffffffULL);
      }
      for (const auto& d : dirs) {
        if (has(i, j, d)) out += fmt::format("reg {}_l{} : u{} init {}\n", c, d.name, lw, rng() & (lw >= 64 ? ~0ULL : (1ULL << lw) - 1));
      }
    }
  }
  for (std::uint32_t i = 0; i < s.rows; ++i) {
    for (std::uint32_t j = 0; j < s.cols; ++j) {
      const auto c = core(i, j);
      std::vector<std::string> incoming;
      for (const auto& d : dirs) {
        if (!has(i, j, d)) continue;
        incoming.push_back(fmt::format("{}_l{}", core(i + d.di, j + d.dj), d.opposite));
      }
      const auto idx = fmt::format("{}_pc[{}:0]", c, ib - 1);
      out += fmt::format("wire {0}_rd : u32 = {0}_rf[{1}]\n", c, idx);
      std::string inx;
      if (incoming.empty()) {
        inx = fmt::format("{}_rd", c);
      } else {
        std::string x = incoming.front();
        for (std::size_t k = 1; k < incoming.size(); ++k) x += " ^ " + incoming[k];
        out += fmt::format("wire {}_in : u{} = {}\n", c, lw, x);
        if (lw == 32) {
          inx = fmt::format("{}_in", c);
        } else if (lw < 32) {
          inx = fmt::format("{{{0}_acc[31:{1}], {0}_in}}", c, lw);
        } else {
          inx = fmt::format("{}_in[31:0]", c);
        }
      }
      out += fmt::format("wire {0}_x : u32 = {0}_rd ^ {1}\n", c, inx);
      out += fmt::format("next {0}_pc = {0}_pc + 1\n", c);
      out += fmt::format("next {0}_acc = {0}_acc + {0}_x\n", c);
      std::string prev = fmt::format("{}_x", c);
      for (std::uint32_t k = 0; k < s.core_regs; ++k) {
        out += fmt::format("next {0}_r{1} = {0}_r{1} ^ ({2} + {0}_acc)\n", c, k, prev);
        prev = fmt::format("{}_r{}", c, k);
      }
      out += fmt::format("write {0}_rf[{1} + {0}_acc[{2}:0]] = {0}_acc ^ {3} when {0}_acc[0:0]\n", c, idx, ib - 1, prev);
      for (const auto& d : dirs) {
        if (!has(i, j, d)) continue;
        if (lw <= 32) {
          out += fmt::format("next {0}_l{1} = ({0}_acc ^ {2})[{3}:0]\n", c, d.name, prev, lw - 1);
        } else {
          out += fmt::format("next {0}_l{1} = {{{0}_acc, {2}}}[{3}:0]\n", c, d.name, prev, lw - 1);
        }
      }
      out += fmt::format("output {0} = {0}_acc\n", c);
    }
  }
  return out;
}

}  // namespace

std::uint64_t estimate_nodes(const BenchSpec& s) {
  switch (s.kind) {
    case BenchKind::PrngBank:
      return std::uint64_t{s.count} * 11;
    case BenchKind::HasherChain:
      return std::uint64_t{s.rounds} * s.lanes * 14;
    case BenchKind::ImbalancedMix:
      return 8 + std::uint64_t{s.small_fibers} * 7 + std::uint64_t{s.big_fibers} * (2 * big_chain_length(s) + 8);
    case BenchKind::CoreMesh:
      return std::uint64_t{s.rows} * s.cols * (40 + std::uint64_t{s.core_regs} * 6);
  }
  return 0;
}

std::string generate(const BenchSpec& s) {
  switch (s.kind) {
    case BenchKind::PrngBank:
      check(s.count >= 1, "count must be at least 1");
      break;
    case BenchKind::HasherChain:
      check(s.rounds >= 1 && s.lanes >= 1, "rounds and lanes must be at least 1");
      break;
    case BenchKind::ImbalancedMix:
      check(s.big_fibers >= 1 && s.small_fibers >= 1, "fiber counts must be at least 1");
      check(s.ratio >= 1.0, "ratio must be at least 1");
      break;
    case BenchKind::CoreMesh:
      check(s.rows >= 1 && s.cols >= 1 && s.core_regs >= 1, "rows, cols and core registers must be at least 1");
      check(s.link_width >= 1 && s.link_width <= 64, "link width must be in 1..64");
      check(s.array_kib <= 1024 * 1024, "array size too large");
      break;
  }
  const auto nodes = estimate_nodes(s);
  if (nodes > s.node_cap) {
    throw Error(ErrorCode::SpecTooLarge,
                fmt::format("{} benchmark needs about {} nodes; the cap is {}", to_string(s.kind), nodes, s.node_cap));
  }
  switch (s.kind) {
    case BenchKind::PrngBank: return prng_bank(s);
    case BenchKind::HasherChain: return hasher_chain(s);
    case BenchKind::ImbalancedMix: return imbalanced_mix(s);
    case BenchKind::CoreMesh: return core_mesh(s);
  }
  return {};
}

}  // namespace bsprtl
