#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bsprtl/error.hpp"

namespace bsprtl {

constexpr unsigned kMaxWidth = 64;

enum class UnaryOp : std::uint8_t { Not, Neg };
enum class BinaryOp : std::uint8_t { Add, Sub, Mul, And, Or, Xor, Shl, Shr, Eq, Ne, Lt, Le };

std::string_view to_string(UnaryOp op);
std::string_view to_string(BinaryOp op);
std::string_view symbol_of(UnaryOp op);
std::string_view symbol_of(BinaryOp op);
bool is_comparison(BinaryOp op);
bool is_shift(BinaryOp op);

enum class SymbolKind : std::uint8_t { None, Input, Register, Array, Wire };

struct SymbolRef {
  SymbolKind kind = SymbolKind::None;
  std::uint32_t index = 0;

  friend bool operator==(const SymbolRef&, const SymbolRef&) = default;
};

enum class ExprKind : std::uint8_t { Const, Ref, Unary, Binary, Mux, Slice, Concat, ArrayRead };

/// Combinational expression tree. `width == 0` marks an unsized literal (or an
/// expression made only of them) before width resolution sizes it from context.
struct Expr {
  ExprKind kind = ExprKind::Const;
  unsigned width = 0;
  std::uint64_t value = 0;
  std::string name;
  SymbolRef sym;
  UnaryOp unary = UnaryOp::Not;
  BinaryOp binary = BinaryOp::Add;
  unsigned hi = 0;
  unsigned lo = 0;
  std::vector<Expr> operands;
  SourceLoc loc;

  static Expr constant(std::uint64_t value, unsigned width = 0);
  static Expr ref(std::string name);
  static Expr unary_op(UnaryOp op, Expr a);
  static Expr binary_op(BinaryOp op, Expr a, Expr b);
  static Expr mux(Expr cond, Expr then_expr, Expr else_expr);
  static Expr slice(Expr a, unsigned hi, unsigned lo);
  static Expr concat(std::vector<Expr> parts);
  static Expr array_read(std::string array, Expr index);
};

/// Structural equality ignoring source locations.
bool same_structure(const Expr& a, const Expr& b);

struct InputDecl {
  std::string name;
  unsigned width = 1;
  SourceLoc loc;
};

struct RegisterDecl {
  std::string name;
  unsigned width = 1;
  std::uint64_t init = 0;
  SourceLoc loc;
};

struct ArrayDecl {
  std::string name;
  unsigned width = 1;
  std::uint64_t depth = 1;
  SourceLoc loc;
};

struct WireDecl {
  std::string name;
  unsigned width = 1;
  Expr expr;
  SourceLoc loc;
};

struct NextStatement {
  std::string reg;
  Expr expr;
  SourceLoc loc;
  std::uint32_t reg_index = 0;
};

struct ArrayWrite {
  std::string array;
  Expr index;
  Expr value;
  Expr enable;
  SourceLoc loc;
  std::uint32_t array_index = 0;
};

struct OutputDecl {
  std::string name;
  Expr expr;
  SourceLoc loc;
};

/// Flattened single-clock design. Outputs live in their own namespace and
/// cannot be referenced from expressions.
struct Netlist {
  std::string name;
  std::vector<InputDecl> inputs;
  std::vector<RegisterDecl> registers;
  std::vector<ArrayDecl> arrays;
  std::vector<WireDecl> wires;
  std::vector<NextStatement> next_statements;
  std::vector<ArrayWrite> array_writes;
  std::vector<OutputDecl> outputs;

  /// Register index -> index into next_statements (filled by validation).
  std::vector<std::uint32_t> next_of_register;

  SymbolRef lookup(std::string_view id) const;
  void rebuild_symbols();

  std::uint32_t write_ports_of(std::uint32_t array) const;

 private:
  std::unordered_map<std::string, SymbolRef> symbols_;
};

/// Parses the textual grammar only: declarations and expressions, no name or
/// width checks. Throws Error(SyntaxError) with line/column.
Netlist parse_netlist_syntax(std::string_view text);

/// Resolves names, sizes literals and checks every width rule. Annotates `n`
/// in place (symbol refs, resolved widths); returns all findings.
std::vector<Diagnostic> resolve_and_check(Netlist& n);

/// Same checks as resolve_and_check on a copy; empty iff the netlist is well-typed.
std::vector<Diagnostic> validate_widths(const Netlist& n);

/// Throws Error(CombinationalLoop) naming the cycle if wires depend on themselves.
void check_combinational_loops(const Netlist& n);

/// Wire indices ordered so that each wire comes after the wires it references.
std::vector<std::uint32_t> wire_order(const Netlist& n);

/// Full front end: syntax, names, widths, loops. Throws the first diagnostic.
Netlist parse_netlist(std::string_view text);

/// Canonical source text; parse(to_source(n)) reproduces n structurally.
std::string to_source(const Netlist& n);
std::string to_source(const Expr& e);

bool same_structure(const Netlist& a, const Netlist& b);

/// FNV-1a 64 of the source bytes as 16 hex digits.
std::string source_hash(std::string_view text);

std::uint64_t width_mask(unsigned width);
unsigned min_width(std::uint64_t value);

}  // namespace bsprtl
