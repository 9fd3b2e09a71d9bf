#include "bsprtl/node_set.hpp"

#include <algorithm>

namespace bsprtl {

NodeSet NodeSet::from_ids(std::vector<std::uint32_t> ids) {
  std::sort(ids.begin(), ids.end());
  NodeSet s;
  for (std::uint32_t id : ids) {
    const std::uint32_t wi = id / 64;
    if (s.index_.empty() || s.index_.back() != wi) {
      s.index_.push_back(wi);
      s.words_.push_back(0);
    }
    s.words_.back() |= std::uint64_t{1} << (id % 64);
  }
  return s;
}

bool NodeSet::contains(std::uint32_t id) const {
  const std::uint32_t wi = id / 64;
  auto it = std::lower_bound(index_.begin(), index_.end(), wi);
  if (it == index_.end() || *it != wi) return false;
  return (words_[static_cast<std::size_t>(it - index_.begin())] >> (id % 64)) & 1;
}

std::size_t NodeSet::count() const {
  std::size_t total = 0;
  for (auto w : words_) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

std::uint64_t NodeSet::word_weight(std::uint32_t index, std::uint64_t word, std::span<const std::uint64_t> weights) {
  std::uint64_t sum = 0;
  const std::uint32_t base = index * 64;
  while (word) {
    sum += weights[base + static_cast<std::uint32_t>(std::countr_zero(word))];
    word &= word - 1;
  }
  return sum;
}

std::uint64_t NodeSet::weighted_sum(std::span<const std::uint64_t> weights) const {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < words_.size(); ++i) sum += word_weight(index_[i], words_[i], weights);
  return sum;
}

NodeSet NodeSet::unite(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  out.index_.reserve(a.index_.size() + b.index_.size());
  out.words_.reserve(a.index_.size() + b.index_.size());
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.index_.size() || j < b.index_.size()) {
    if (j == b.index_.size() || (i < a.index_.size() && a.index_[i] < b.index_[j])) {
      out.index_.push_back(a.index_[i]);
      out.words_.push_back(a.words_[i++]);
    } else if (i == a.index_.size() || b.index_[j] < a.index_[i]) {
      out.index_.push_back(b.index_[j]);
      out.words_.push_back(b.words_[j++]);
    } else {
      out.index_.push_back(a.index_[i]);
      out.words_.push_back(a.words_[i++] | b.words_[j++]);
    }
  }
  return out;
}

NodeSet NodeSet::intersect(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.index_.size() && j < b.index_.size()) {
    if (a.index_[i] < b.index_[j]) {
      ++i;
    } else if (b.index_[j] < a.index_[i]) {
      ++j;
    } else {
      const std::uint64_t w = a.words_[i] & b.words_[j];
      if (w) {
        out.index_.push_back(a.index_[i]);
        out.words_.push_back(w);
      }
      ++i;
      ++j;
    }
  }
  return out;
}

std::uint64_t NodeSet::union_weight(const NodeSet& a, const NodeSet& b, std::span<const std::uint64_t> weights) {
  return a.weighted_sum(weights) + b.weighted_sum(weights) - intersection_weight(a, b, weights);
}

std::uint64_t NodeSet::intersection_weight(const NodeSet& a, const NodeSet& b,
                                           std::span<const std::uint64_t> weights) {
  std::uint64_t sum = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.index_.size() && j < b.index_.size()) {
    if (a.index_[i] < b.index_[j]) {
      ++i;
    } else if (b.index_[j] < a.index_[i]) {
      ++j;
    } else {
      sum += word_weight(a.index_[i], a.words_[i] & b.words_[j], weights);
      ++i;
      ++j;
    }
  }
  return sum;
}

bool NodeSet::intersects(const NodeSet& a, const NodeSet& b) {
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.index_.size() && j < b.index_.size()) {
    if (a.index_[i] < b.index_[j]) {
      ++i;
    } else if (b.index_[j] < a.index_[i]) {
      ++j;
    } else {
      if (a.words_[i] & b.words_[j]) return true;
      ++i;
      ++j;
    }
  }
  return false;
}

std::vector<std::uint32_t> NodeSet::to_vector() const {
  std::vector<std::uint32_t> out;
  out.reserve(count());
  for_each([&](std::uint32_t id) { out.push_back(id); });
  return out;
}

}  // namespace bsprtl
