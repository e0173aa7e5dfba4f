#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace hypok {

using ParamList = std::vector<std::pair<std::string, double>>;

/// Outcome of comparing the two sides of an inequality lhs ≤ rhs.
struct InequalityCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  ///< rhs − lhs
  double stderr_ = 0.0;
  double tol = 0.0;     ///< allowance added to rhs when deciding `pass`
  bool pass = false;
  ParamList params;
};

/// Fills margin and pass. Deterministic checks get a round-off allowance
/// relative to the size of both sides; Monte Carlo checks add `sigmas`
/// standard errors.
inline InequalityCheck make_check(std::string name, double lhs, double rhs, double stderr_ = 0.0,
                                  ParamList params = {}, double sigmas = 3.0) {
  InequalityCheck c;
  c.name = std::move(name);
  c.lhs = lhs;
  c.rhs = rhs;
  c.margin = rhs - lhs;
  c.stderr_ = stderr_;
  c.tol = 1e-9 * (std::abs(lhs) + std::abs(rhs)) + 1e-14 + sigmas * stderr_;
  c.pass = std::isfinite(lhs) && std::isfinite(rhs) && lhs <= rhs + c.tol;
  c.params = std::move(params);
  return c;
}

}  // namespace hypok
