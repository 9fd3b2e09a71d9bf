#include <cctype>
#include <charconv>

#include <fmt/format.h>

#include "bsprtl/netlist.hpp"

namespace bsprtl {
namespace {

enum class TokKind { Ident, Number, Punct, End };

struct Token {
  TokKind kind = TokKind::End;
  std::string text;
  std::uint64_t value = 0;
  SourceLoc loc;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.loc = {line_, col_};
      if (pos_ >= text_.size()) {
        t.kind = TokKind::End;
        out.push_back(t);
        return out;
      }
      const char c = text_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        const auto start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
          advance();
        }
        t.kind = TokKind::Ident;
        t.text = std::string(text_.substr(start, pos_ - start));
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = TokKind::Number;
        t.value = lex_number(t.loc);
      } else {
        t.kind = TokKind::Punct;
        static constexpr std::string_view kTwoChar[] = {"<<", ">>", "==", "!=", "<="};
        const auto rest = text_.substr(pos_);
        bool matched = false;
        for (auto op : kTwoChar) {
          if (rest.starts_with(op)) {
            t.text = std::string(op);
            advance();
            advance();
            matched = true;
            break;
          }
        }
        if (!matched) {
          static constexpr std::string_view kSingle = "~-+*&|^<()[]{}:,=;";
          if (kSingle.find(c) == std::string_view::npos) {
            throw Error(ErrorCode::SyntaxError, fmt::format("unexpected character '{}'", c), t.loc);
          }
          t.text = std::string(1, c);
          advance();
        }
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::uint64_t lex_number(SourceLoc loc) {
    int base = 10;
    if (text_.substr(pos_).starts_with("0x") || text_.substr(pos_).starts_with("0X")) {
      base = 16;
      advance();
      advance();
    }
    const auto start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      advance();
    }
    std::string digits;
    for (char c : text_.substr(start, pos_ - start)) {
      if (c != '_') digits.push_back(c);
    }
    std::uint64_t value = 0;
    const auto* first = digits.data();
    const auto* last = digits.data() + digits.size();
    auto [ptr, ec] = std::from_chars(first, last, value, base);
    if (digits.empty() || ec != std::errc{} || ptr != last) {
      throw Error(ErrorCode::SyntaxError,
                  fmt::format("malformed integer literal '{}'", text_.substr(start, pos_ - start)), loc);
    }
    return value;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::uint32_t line_ = 1;
  std::uint32_t col_ = 1;
};

bool is_keyword(std::string_view s) {
  return s == "design" || s == "input" || s == "reg" || s == "array" || s == "wire" || s == "next" ||
         s == "write" || s == "output" || s == "init" || s == "when" || s == "mux";
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Netlist run() {
    Netlist n;
    bool saw_design = false;
    while (!at_end()) {
      if (accept_punct(";")) continue;
      const Token& t = peek();
      if (t.kind != TokKind::Ident) fail(t, "expected a statement keyword");
      const std::string kw = t.text;
      ++pos_;
      if (kw == "design") {
        if (saw_design) fail(t, "duplicate 'design' statement");
        saw_design = true;
        n.name = ident("design name");
      } else if (kw == "input") {
        InputDecl d;
        d.loc = t.loc;
        d.name = ident("input name");
        d.width = type_width();
        n.inputs.push_back(std::move(d));
      } else if (kw == "reg") {
        RegisterDecl d;
        d.loc = t.loc;
        d.name = ident("register name");
        d.width = type_width();
        if (accept_ident("init")) d.init = number("initial value");
        n.registers.push_back(std::move(d));
      } else if (kw == "array") {
        ArrayDecl d;
        d.loc = t.loc;
        d.name = ident("array name");
        d.width = type_width();
        expect_punct("[");
        d.depth = number("array depth");
        expect_punct("]");
        n.arrays.push_back(std::move(d));
      } else if (kw == "wire") {
        WireDecl d;
        d.loc = t.loc;
        d.name = ident("wire name");
        d.width = type_width();
        expect_punct("=");
        d.expr = expr();
        n.wires.push_back(std::move(d));
      } else if (kw == "next") {
        NextStatement s;
        s.loc = t.loc;
        s.reg = ident("register name");
        expect_punct("=");
        s.expr = expr();
        n.next_statements.push_back(std::move(s));
      } else if (kw == "write") {
        ArrayWrite w;
        w.loc = t.loc;
        w.array = ident("array name");
        expect_punct("[");
        w.index = expr();
        expect_punct("]");
        expect_punct("=");
        w.value = expr();
        if (accept_ident("when")) {
          w.enable = expr();
        } else {
          w.enable = Expr::constant(1);
          w.enable.loc = t.loc;
        }
        n.array_writes.push_back(std::move(w));
      } else if (kw == "output") {
        OutputDecl o;
        o.loc = t.loc;
        o.name = ident("output name");
        expect_punct("=");
        o.expr = expr();
        n.outputs.push_back(std::move(o));
      } else {
        fail(t, fmt::format("unknown statement '{}'", kw));
      }
    }
    if (!saw_design) {
      throw Error(ErrorCode::SyntaxError, "missing 'design <name>' statement", SourceLoc{1, 1});
    }
    return n;
  }

 private:
  // Binary precedence levels, lowest first (C ordering).
  static int precedence(std::string_view op) {
    if (op == "|") return 1;
    if (op == "^") return 2;
    if (op == "&") return 3;
    if (op == "==" || op == "!=") return 4;
    if (op == "<" || op == "<=") return 5;
    if (op == "<<" || op == ">>") return 6;
    if (op == "+" || op == "-") return 7;
    if (op == "*") return 8;
    return 0;
  }

  static BinaryOp binary_of(std::string_view op) {
    if (op == "|") return BinaryOp::Or;
    if (op == "^") return BinaryOp::Xor;
    if (op == "&") return BinaryOp::And;
    if (op == "==") return BinaryOp::Eq;
    if (op == "!=") return BinaryOp::Ne;
    if (op == "<") return BinaryOp::Lt;
    if (op == "<=") return BinaryOp::Le;
    if (op == "<<") return BinaryOp::Shl;
    if (op == ">>") return BinaryOp::Shr;
    if (op == "+") return BinaryOp::Add;
    if (op == "-") return BinaryOp::Sub;
    return BinaryOp::Mul;
  }

  Expr expr(int min_prec = 1) {
    Expr lhs = unary();
    for (;;) {
      const Token& t = peek();
      if (t.kind != TokKind::Punct) break;
      const int prec = precedence(t.text);
      if (prec < min_prec || prec == 0) break;
      const SourceLoc loc = t.loc;
      const BinaryOp op = binary_of(t.text);
      ++pos_;
      Expr rhs = expr(prec + 1);
      lhs = Expr::binary_op(op, std::move(lhs), std::move(rhs));
      lhs.loc = loc;
    }
    return lhs;
  }

  Expr unary() {
    const Token& t = peek();
    if (t.kind == TokKind::Punct && (t.text == "~" || t.text == "-" || t.text == "+")) {
      const SourceLoc loc = t.loc;
      const std::string op = t.text;
      ++pos_;
      Expr operand = unary();
      if (op == "+") return operand;
      Expr e = Expr::unary_op(op == "~" ? UnaryOp::Not : UnaryOp::Neg, std::move(operand));
      e.loc = loc;
      return e;
    }
    return postfix();
  }

  Expr postfix() {
    Expr e = primary();
    while (peek().kind == TokKind::Punct && peek().text == "[") {
      const Token open = peek();
      ++pos_;
      const bool is_literal = peek().kind == TokKind::Number;
      const bool has_colon = is_literal && pos_ + 1 < toks_.size() && toks_[pos_ + 1].kind == TokKind::Punct &&
                             toks_[pos_ + 1].text == ":";
      if (has_colon) {
        const auto hi = number("slice high bound");
        expect_punct(":");
        const auto lo = number("slice low bound");
        expect_punct("]");
        if (hi > kMaxWidth || lo > kMaxWidth) fail(open, "slice bound exceeds 64");
        e = Expr::slice(std::move(e), static_cast<unsigned>(hi), static_cast<unsigned>(lo));
        e.loc = open.loc;
        continue;
      }
      Expr index = expr();
      expect_punct("]");
      if (e.kind == ExprKind::Ref) {
        // Array read or single-bit select; resolution decides by symbol kind.
        std::string name = std::move(e.name);
        e = Expr::array_read(std::move(name), std::move(index));
        e.loc = open.loc;
      } else if (index.kind == ExprKind::Const) {
        const auto bit = static_cast<unsigned>(std::min<std::uint64_t>(index.value, kMaxWidth));
        e = Expr::slice(std::move(e), bit, bit);
        e.loc = open.loc;
      } else {
        fail(open, "only identifiers can be indexed by a non-constant expression");
      }
    }
    return e;
  }

  Expr primary() {
    const Token t = peek();
    if (t.kind == TokKind::Number) {
      ++pos_;
      Expr e = Expr::constant(t.value);
      e.loc = t.loc;
      return e;
    }
    if (t.kind == TokKind::Ident) {
      if (t.text == "mux") {
        ++pos_;
        expect_punct("(");
        Expr c = expr();
        expect_punct(",");
        Expr a = expr();
        expect_punct(",");
        Expr b = expr();
        expect_punct(")");
        Expr e = Expr::mux(std::move(c), std::move(a), std::move(b));
        e.loc = t.loc;
        return e;
      }
      if (is_keyword(t.text)) fail(t, fmt::format("unexpected keyword '{}' in expression", t.text));
      ++pos_;
      Expr e = Expr::ref(t.text);
      e.loc = t.loc;
      return e;
    }
    if (t.kind == TokKind::Punct && t.text == "(") {
      ++pos_;
      Expr e = expr();
      expect_punct(")");
      return e;
    }
    if (t.kind == TokKind::Punct && t.text == "{") {
      ++pos_;
      std::vector<Expr> parts;
      parts.push_back(expr());
      while (accept_punct(",")) parts.push_back(expr());
      expect_punct("}");
      Expr e = Expr::concat(std::move(parts));
      e.loc = t.loc;
      return e;
    }
    fail(t, t.kind == TokKind::End ? "unexpected end of input" : fmt::format("unexpected '{}'", t.text));
  }

  unsigned type_width() {
    expect_punct(":");
    const Token& t = peek();
    if (t.kind != TokKind::Ident || t.text.size() < 2 || t.text[0] != 'u') fail(t, "expected a type like u8");
    unsigned w = 0;
    const auto* first = t.text.data() + 1;
    const auto* last = t.text.data() + t.text.size();
    auto [ptr, ec] = std::from_chars(first, last, w);
    if (ec != std::errc{} || ptr != last) fail(t, fmt::format("malformed type '{}'", t.text));
    ++pos_;
    return w;
  }

  std::string ident(std::string_view what) {
    const Token& t = peek();
    if (t.kind != TokKind::Ident || is_keyword(t.text)) fail(t, fmt::format("expected {}", what));
    ++pos_;
    return t.text;
  }

  std::uint64_t number(std::string_view what) {
    const Token& t = peek();
    if (t.kind != TokKind::Number) fail(t, fmt::format("expected {}", what));
    ++pos_;
    return t.value;
  }

  bool accept_punct(std::string_view p) {
    if (peek().kind == TokKind::Punct && peek().text == p) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool accept_ident(std::string_view s) {
    if (peek().kind == TokKind::Ident && peek().text == s) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect_punct(std::string_view p) {
    if (!accept_punct(p)) fail(peek(), fmt::format("expected '{}'", p));
  }

  const Token& peek() const { return toks_[pos_]; }
  bool at_end() const { return toks_[pos_].kind == TokKind::End; }

  [[noreturn]] static void fail(const Token& t, const std::string& msg) {
    throw Error(ErrorCode::SyntaxError, msg, t.loc);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

Netlist parse_netlist_syntax(std::string_view text) {
  Parser parser(Lexer(text).run());
  Netlist n = parser.run();
  n.rebuild_symbols();
  return n;
}

Netlist parse_netlist(std::string_view text) {
  Netlist n = parse_netlist_syntax(text);
  auto diags = resolve_and_check(n);
  if (!diags.empty()) throw Error(diags.front().code, diags.front().message, diags.front().loc);
  check_combinational_loops(n);
  return n;
}

}  // namespace bsprtl
