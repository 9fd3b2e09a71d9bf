#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

namespace bsprtl {

/// Set of graph node ids stored as 64-bit bitset words. Only non-zero words are
/// kept (sorted by word index), so a cone costs memory proportional to the
/// words it touches rather than to the whole graph; all set algebra runs
/// word-at-a-time like a dense bitset.
class NodeSet {
 public:
  NodeSet() = default;

  /// Builds from ids in any order; duplicates are fine.
  static NodeSet from_ids(std::vector<std::uint32_t> ids);

  bool contains(std::uint32_t id) const;
  bool empty() const { return words_.empty(); }
  std::size_t count() const;
  std::size_t word_count() const { return words_.size(); }

  /// Sum of `weights[id]` over member ids.
  std::uint64_t weighted_sum(std::span<const std::uint64_t> weights) const;

  static NodeSet unite(const NodeSet& a, const NodeSet& b);
  static NodeSet intersect(const NodeSet& a, const NodeSet& b);
  /// Weighted sum of a ∪ b without materialising the union.
  static std::uint64_t union_weight(const NodeSet& a, const NodeSet& b, std::span<const std::uint64_t> weights);
  static std::uint64_t intersection_weight(const NodeSet& a, const NodeSet& b,
                                           std::span<const std::uint64_t> weights);
  static bool intersects(const NodeSet& a, const NodeSet& b);

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      std::uint64_t w = words_[i];
      const std::uint32_t base = index_[i] * 64;
      while (w) {
        f(base + static_cast<std::uint32_t>(std::countr_zero(w)));
        w &= w - 1;
      }
    }
  }

  std::vector<std::uint32_t> to_vector() const;

  friend bool operator==(const NodeSet&, const NodeSet&) = default;

 private:
  static std::uint64_t word_weight(std::uint32_t index, std::uint64_t word, std::span<const std::uint64_t> weights);

  std::vector<std::uint32_t> index_;
  std::vector<std::uint64_t> words_;
};

}  // namespace bsprtl
