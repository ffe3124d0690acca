#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace perihom {

// Arithmetic expression over named variables. Grammar:
//   expr := term (('+'|'-') term)*     term := unary (('*'|'/') unary)*
//   unary := '-' unary | power         power := atom ('^' unary)?
//   atom := number | name | name '(' expr ')' | '(' expr ')'
// Functions: sin cos tan exp log sqrt abs floor. Constant: pi.
class Expression {
 public:
  // `variables` fixes the slot order used by evaluate().
  Expression(const std::string& source, const std::vector<std::string>& variables,
             const std::map<std::string, double>& constants = {});

  double evaluate(std::span<const double> values) const;
  const std::string& source() const { return source_; }

  struct Node;

 private:
  std::string source_;
  std::shared_ptr<const Node> root_;
};

}  // namespace perihom
