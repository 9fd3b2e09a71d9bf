#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace bsprtl {

enum class BenchKind : std::uint8_t { PrngBank, HasherChain, ImbalancedMix, CoreMesh };

std::string_view to_string(BenchKind k);

struct BenchSpec {
  BenchKind kind = BenchKind::PrngBank;
  // PrngBank
  std::uint32_t count = 1;
  // HasherChain
  std::uint32_t rounds = 4;
  std::uint32_t lanes = 4;
  // ImbalancedMix
  std::uint32_t big_fibers = 1;
  std::uint32_t small_fibers = 8;
  double ratio = 4.0;
  // CoreMesh
  std::uint32_t rows = 2;
  std::uint32_t cols = 2;
  std::uint32_t core_regs = 2;
  std::uint32_t array_kib = 1;
  std::uint32_t link_width = 16;

  std::uint64_t seed = 0;
  std::uint64_t node_cap = 2'000'000;

  static BenchSpec prng(std::uint32_t count, std::uint64_t seed = 0);
  static BenchSpec hasher(std::uint32_t rounds, std::uint32_t lanes, std::uint64_t seed = 0);
  static BenchSpec imbalanced(std::uint32_t big, std::uint32_t small, double ratio, std::uint64_t seed = 0);
  static BenchSpec mesh(std::uint32_t rows, std::uint32_t cols, std::uint32_t core_regs = 2,
                        std::uint32_t array_kib = 1, std::uint32_t link_width = 16, std::uint64_t seed = 0);
};

/// Upper estimate of the elaborated node count for `spec`.
std::uint64_t estimate_nodes(const BenchSpec& spec);

/// Netlist source text. Deterministic in (spec, seed). Throws SpecTooLarge
/// when estimate_nodes exceeds spec.node_cap and UsageError for invalid
/// parameters.
std::string generate(const BenchSpec& spec);

/// Cost of an ImbalancedMix small fiber under the default cost table.
constexpr std::uint64_t kImbalancedSmallCost = 5;

}  // namespace bsprtl
