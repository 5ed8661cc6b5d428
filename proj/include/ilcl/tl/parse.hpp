#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ilcl/tl/formula.hpp"

namespace ilcl::tl {

/// Maps feature names to state dimensions. Names of the form `sN` always
/// resolve to dimension N (bounded by the table size when one is set).
class FeatureTable {
 public:
  FeatureTable() = default;
  explicit FeatureTable(std::vector<std::string> names);
  /// Anonymous table of a known dimensionality (only `sN` names).
  static FeatureTable anonymous(std::size_t dims);

  std::optional<std::size_t> lookup(std::string_view name) const;
  /// Name used when printing; falls back to `sN`.
  std::string name(std::size_t dim) const;
  std::optional<std::size_t> dims() const { return dims_; }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::optional<std::size_t> dims_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Grammar (loosest binding first):
///   formula  := or
///   or       := and ('|' and)*
///   and      := temporal ('&' temporal)*
///   temporal := unary (('U' | 'R') temporal)?        right associative
///   unary    := ('G' | 'F' | 'X') unary | '!' atom | atom
///   atom     := 'true' | 'false' | '(' formula ')' | NAME ('<' | '>') (NUMBER | '?p' INT)
/// Negation is accepted only in front of a predicate.
Formula parse_formula(std::string_view text, const FeatureTable& features = {});

/// Canonical text: unary operators print as `G(...)`; both children of a
/// binary operator are parenthesised.
std::string format_formula(const Formula& f, const FeatureTable& features = {});

/// Shortest text that parses back to the same double.
std::string format_number(double v);

}  // namespace ilcl::tl
