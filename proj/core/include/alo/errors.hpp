#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace alo {

// Dimension mismatch or an allocation whose element count would overflow.
class SizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class BoundsError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Quadratic term has no usable curvature in any coordinate.
class DegenerateProblem : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Input data violates a domain constraint (negative, NaN or Inf values).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a solve produces NaN/Inf or is unbounded. Carries the last
/// finite iterate (original variable scale) and, when raised from the NMF
/// driver, which column (E-step) or row (M-step) failed.
class NumericalFailure : public std::runtime_error {
 public:
  enum class Where { kSubproblem, kColumn, kRow };

  NumericalFailure(const std::string& what, std::vector<double> last_iterate)
      : std::runtime_error(what), last_iterate_(std::move(last_iterate)) {}

  NumericalFailure(const NumericalFailure& inner, Where where, std::size_t index)
      : std::runtime_error(std::string(where == Where::kColumn ? "column " : "row ") +
                           std::to_string(index) + ": " + inner.what()),
        last_iterate_(inner.last_iterate_),
        where_(where),
        index_(index) {}

  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
  Where where() const noexcept { return where_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  std::vector<double> last_iterate_;
  Where where_ = Where::kSubproblem;
  std::optional<std::size_t> index_;
};

}  // namespace alo
