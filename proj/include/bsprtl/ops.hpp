#pragma once

#include <cstdint>

#include "bsprtl/netlist.hpp"

namespace bsprtl::ops {

// Unsigned modulo-2^width semantics shared by every evaluator.

inline std::uint64_t unary(UnaryOp op, unsigned width, std::uint64_t a) {
  const std::uint64_t m = width_mask(width);
  return op == UnaryOp::Not ? (~a & m) : ((0 - a) & m);
}

inline std::uint64_t binary(BinaryOp op, unsigned width, std::uint64_t a, std::uint64_t b) {
  const std::uint64_t m = width_mask(width);
  switch (op) {
    case BinaryOp::Add: return (a + b) & m;
    case BinaryOp::Sub: return (a - b) & m;
    case BinaryOp::Mul: return (a * b) & m;
    case BinaryOp::And: return a & b;
    case BinaryOp::Or: return a | b;
    case BinaryOp::Xor: return a ^ b;
    case BinaryOp::Shl: return b >= width ? 0 : (a << b) & m;
    case BinaryOp::Shr: return b >= width ? 0 : a >> b;
    case BinaryOp::Eq: return a == b;
    case BinaryOp::Ne: return a != b;
    case BinaryOp::Lt: return a < b;
    case BinaryOp::Le: return a <= b;
  }
  return 0;
}

inline std::uint64_t slice(std::uint64_t a, unsigned hi, unsigned lo) {
  return (a >> lo) & width_mask(hi - lo + 1);
}

}  // namespace bsprtl::ops
