// Sparse multivariate polynomials over the site variables s_1..s_k.
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ptag {

/// (variable, exponent) pairs sorted by variable, exponents > 0.
using Exponents = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

std::uint32_t total_degree(const Exponents& e);
std::uint32_t exponent_of(const Exponents& e, std::uint32_t variable);

/// Graded lexicographic order, largest first: higher total degree first,
/// ties broken by the larger exponent on the earliest variable.
struct GrlexDescending {
  bool operator()(const Exponents& a, const Exponents& b) const;
};

struct Monomial {
  Exponents exponents;
  double coefficient = 0.0;
};

class TermCapExceeded : public std::runtime_error {
 public:
  TermCapExceeded(std::size_t terms, std::size_t cap);
};

class SparsePolynomial {
 public:
  explicit SparsePolynomial(std::size_t variables = 0) : variables_(variables) {}

  static SparsePolynomial constant(std::size_t variables, double c);
  static SparsePolynomial variable(std::size_t variables, std::uint32_t index);

  std::size_t variables() const { return variables_; }
  std::size_t term_count() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  /// Adds c * s^e; terms whose coefficient becomes exactly zero are dropped.
  void add_term(const Exponents& e, double c);

  /// Terms in canonical (graded lexicographic, descending) order.
  std::vector<Monomial> terms() const;
  double coefficient(const Exponents& e) const;
  double constant_term() const { return coefficient({}); }

  double evaluate(std::span<const double> point) const;
  /// Sum of coefficients, i.e. the value at s = (1, ..., 1).
  double coefficient_sum() const;
  SparsePolynomial derivative(std::uint32_t variable) const;

  SparsePolynomial& operator+=(const SparsePolynomial& other);
  friend SparsePolynomial operator+(SparsePolynomial a, const SparsePolynomial& b) { return a += b; }
  friend SparsePolynomial operator*(const SparsePolynomial& a, const SparsePolynomial& b);
  SparsePolynomial scaled(double factor) const;

  /// Simultaneous substitution s_i := replacements[i].  Throws
  /// TermCapExceeded when any intermediate result exceeds term_cap terms.
  SparsePolynomial compose(std::span<const SparsePolynomial> replacements,
                           std::size_t term_cap) const;

  /// e.g. "0.8*s[A2]*s[B1]*s[A3] + 0.2"; names are indexed by variable.
  std::string to_string(std::span<const std::string> names) const;

  friend bool operator==(const SparsePolynomial&, const SparsePolynomial&) = default;

 private:
  std::size_t variables_;
  std::map<Exponents, double, GrlexDescending> terms_;
};

}  // namespace ptag
