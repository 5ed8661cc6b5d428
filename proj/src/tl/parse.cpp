#include "ilcl/tl/parse.hpp"

#include <cctype>
#include <charconv>
#include <system_error>

namespace ilcl::tl {

FeatureTable::FeatureTable(std::vector<std::string> names)
    : names_(std::move(names)), dims_(names_.size()) {}

FeatureTable FeatureTable::anonymous(std::size_t dims) {
  FeatureTable t;
  t.dims_ = dims;
  return t;
}

std::optional<std::size_t> FeatureTable::lookup(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  if (name.size() >= 2 && name[0] == 's') {
    std::size_t dim = 0;
    const auto* first = name.data() + 1;
    const auto* last = name.data() + name.size();
    auto [ptr, ec] = std::from_chars(first, last, dim);
    if (ec == std::errc{} && ptr == last && (!dims_ || dim < *dims_)) return dim;
  }
  return std::nullopt;
}

std::string FeatureTable::name(std::size_t dim) const {
  if (dim < names_.size()) return names_[dim];
  return "s" + std::to_string(dim);
}

ParseError::ParseError(const std::string& msg, std::size_t offset)
    : std::runtime_error(msg + " at offset " + std::to_string(offset)), offset_(offset) {}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

namespace {

class Parser {
 public:
  Parser(std::string_view text, const FeatureTable& features) : text_(text), features_(features) {}

  Formula run() {
    Formula f = parse_or();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek_char(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  bool eat_char(char c) {
    if (!peek_char(c)) return false;
    ++pos_;
    return true;
  }

  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  // Identifier at the cursor without consuming it.
  std::string_view peek_ident() {
    skip_ws();
    std::size_t end = pos_;
    if (end < text_.size() &&
        (std::isalpha(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) {
      while (end < text_.size() && ident_char(text_[end])) ++end;
    }
    return text_.substr(pos_, end - pos_);
  }

  bool eat_keyword(std::string_view kw) {
    if (peek_ident() != kw) return false;
    pos_ += kw.size();
    return true;
  }

  Formula parse_or() {
    Formula f = parse_and();
    while (eat_char('|')) f = Formula::disj(f, parse_and());
    return f;
  }

  Formula parse_and() {
    Formula f = parse_temporal();
    while (eat_char('&')) f = Formula::conj(f, parse_temporal());
    return f;
  }

  Formula parse_temporal() {
    Formula f = parse_unary();
    if (eat_keyword("U")) return Formula::until(f, parse_temporal());
    if (eat_keyword("R")) return Formula::release(f, parse_temporal());
    return f;
  }

  Formula parse_unary() {
    if (eat_keyword("G")) return Formula::always(parse_unary());
    if (eat_keyword("F")) return Formula::eventually(parse_unary());
    if (eat_keyword("X")) return Formula::next(parse_unary());
    if (peek_char('!')) {
      const std::size_t bang = pos_;
      ++pos_;
      const std::size_t inner_start = pos_;
      Formula inner = parse_atom();
      if (inner.op() != Op::Ap) {
        pos_ = inner_start;
        skip_ws();
        throw ParseError("negation is only allowed on a predicate", bang);
      }
      return Formula::not_ap(inner.ap());
    }
    return parse_atom();
  }

  Formula parse_atom() {
    if (eat_char('(')) {
      Formula f = parse_or();
      if (!eat_char(')')) fail("expected ')'");
      return f;
    }
    if (eat_keyword("true")) return Formula::top();
    if (eat_keyword("false")) return Formula::bottom();
    const std::string_view name = peek_ident();
    if (name.empty()) fail("expected a predicate, constant or '('");
    if (name == "G" || name == "F" || name == "X" || name == "U" || name == "R")
      fail("unexpected operator '" + std::string(name) + "'");
    const std::size_t name_pos = pos_;
    const auto dim = features_.lookup(name);
    if (!dim) throw ParseError("unknown feature '" + std::string(name) + "'", name_pos);
    pos_ += name.size();

    int sign;
    if (eat_char('<'))
      sign = +1;
    else if (eat_char('>'))
      sign = -1;
    else
      fail("expected '<' or '>'");

    skip_ws();
    Threshold th;
    if (pos_ + 1 < text_.size() && text_[pos_] == '?' && text_[pos_ + 1] == 'p') {
      pos_ += 2;
      int id = 0;
      auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), id);
      if (ec != std::errc{} || id < 0) fail("expected parameter index after '?p'");
      pos_ = static_cast<std::size_t>(ptr - text_.data());
      th = ParamId{id};
    } else {
      double v = 0;
      const char* begin = text_.data() + pos_;
      // from_chars rejects a leading '+', which we accept for symmetry.
      if (*begin == '+') ++begin;
      auto [ptr, ec] = std::from_chars(begin, text_.data() + text_.size(), v);
      if (ec != std::errc{}) fail("expected a number");
      pos_ = static_cast<std::size_t>(ptr - text_.data());
      th = v;
    }
    return Formula::ap(Ap{*dim, sign, th});
  }

  std::string_view text_;
  const FeatureTable& features_;
  std::size_t pos_ = 0;
};

std::string format_ap(const Ap& a, const FeatureTable& features) {
  std::string out = features.name(a.dim);
  out += a.sign > 0 ? " < " : " > ";
  if (const auto* id = std::get_if<ParamId>(&a.threshold))
    out += "?p" + std::to_string(id->value);
  else
    out += format_number(std::get<double>(a.threshold));
  return out;
}

void format_into(const Formula& f, const FeatureTable& features, std::string& out) {
  switch (f.op()) {
    case Op::True:
      out += "true";
      return;
    case Op::False:
      out += "false";
      return;
    case Op::Ap:
      out += format_ap(f.ap(), features);
      return;
    case Op::NotAp:
      out += "!(" + format_ap(f.ap(), features) + ")";
      return;
    case Op::Next:
    case Op::Eventually:
    case Op::Always:
      out += f.op() == Op::Next ? "X(" : f.op() == Op::Eventually ? "F(" : "G(";
      format_into(f.child(), features, out);
      out += ")";
      return;
    case Op::And:
    case Op::Or:
    case Op::Until:
    case Op::Release: {
      const char* sym = f.op() == Op::And ? " & " : f.op() == Op::Or ? " | " : f.op() == Op::Until ? " U " : " R ";
      out += "(";
      format_into(f.lhs(), features, out);
      out += ")";
      out += sym;
      out += "(";
      format_into(f.rhs(), features, out);
      out += ")";
      return;
    }
  }
}

}  // namespace

Formula parse_formula(std::string_view text, const FeatureTable& features) {
  return Parser(text, features).run();
}

std::string format_formula(const Formula& f, const FeatureTable& features) {
  std::string out;
  format_into(f, features, out);
  return out;
}

}  // namespace ilcl::tl
