#include "ptag/polynomial.hpp"

#include <algorithm>
#include <cmath>

#include "ptag/format.hpp"

namespace ptag {

std::uint32_t total_degree(const Exponents& e) {
  std::uint32_t d = 0;
  for (const auto& [var, power] : e) d += power;
  return d;
}

std::uint32_t exponent_of(const Exponents& e, std::uint32_t variable) {
  auto it = std::lower_bound(e.begin(), e.end(), variable,
                             [](const auto& p, std::uint32_t v) { return p.first < v; });
  return it != e.end() && it->first == variable ? it->second : 0;
}

bool GrlexDescending::operator()(const Exponents& a, const Exponents& b) const {
  const auto da = total_degree(a);
  const auto db = total_degree(b);
  if (da != db) return da > db;
  std::size_t i = 0;
  for (; i < a.size() && i < b.size(); ++i) {
    if (a[i].first != b[i].first) return a[i].first < b[i].first;
    if (a[i].second != b[i].second) return a[i].second > b[i].second;
  }
  // Equal degree and equal prefix: both lists end together.
  return false;
}

TermCapExceeded::TermCapExceeded(std::size_t terms, std::size_t cap)
    : std::runtime_error("TERM_CAP_EXCEEDED: " + std::to_string(terms) + " terms exceeds cap " +
                         std::to_string(cap)) {}

SparsePolynomial SparsePolynomial::constant(std::size_t variables, double c) {
  SparsePolynomial p(variables);
  p.add_term({}, c);
  return p;
}

SparsePolynomial SparsePolynomial::variable(std::size_t variables, std::uint32_t index) {
  if (index >= variables) throw std::out_of_range("variable index out of range");
  SparsePolynomial p(variables);
  p.add_term({{index, 1}}, 1.0);
  return p;
}

void SparsePolynomial::add_term(const Exponents& e, double c) {
  if (c == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(e, c);
  if (inserted) return;
  it->second += c;
  if (it->second == 0.0) terms_.erase(it);
}

std::vector<Monomial> SparsePolynomial::terms() const {
  std::vector<Monomial> out;
  out.reserve(terms_.size());
  for (const auto& [e, c] : terms_) out.push_back({e, c});
  return out;
}

double SparsePolynomial::coefficient(const Exponents& e) const {
  auto it = terms_.find(e);
  return it == terms_.end() ? 0.0 : it->second;
}

double SparsePolynomial::evaluate(std::span<const double> point) const {
  if (point.size() != variables_) throw std::invalid_argument("evaluation point has wrong dimension");
  double sum = 0.0;
  for (const auto& [e, c] : terms_) {
    double term = c;
    for (const auto& [var, power] : e) {
      for (std::uint32_t i = 0; i < power; ++i) term *= point[var];
    }
    sum += term;
  }
  return sum;
}

double SparsePolynomial::coefficient_sum() const {
  double sum = 0.0;
  for (const auto& [e, c] : terms_) sum += c;
  return sum;
}

SparsePolynomial SparsePolynomial::derivative(std::uint32_t variable) const {
  SparsePolynomial out(variables_);
  for (const auto& [e, c] : terms_) {
    const auto power = exponent_of(e, variable);
    if (power == 0) continue;
    Exponents reduced;
    for (const auto& [var, p] : e) {
      if (var != variable)
        reduced.emplace_back(var, p);
      else if (p > 1)
        reduced.emplace_back(var, p - 1);
    }
    out.add_term(reduced, c * power);
  }
  return out;
}

SparsePolynomial& SparsePolynomial::operator+=(const SparsePolynomial& other) {
  for (const auto& [e, c] : other.terms_) add_term(e, c);
  return *this;
}

namespace {

Exponents multiply(const Exponents& a, const Exponents& b) {
  Exponents out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].first < a[i].first) {
      out.push_back(b[j++]);
    } else {
      out.emplace_back(a[i].first, a[i].second + b[j].second);
      ++i;
      ++j;
    }
  }
  return out;
}

void check_cap(const SparsePolynomial& p, std::size_t cap) {
  if (p.term_count() > cap) throw TermCapExceeded(p.term_count(), cap);
}

}  // namespace

SparsePolynomial operator*(const SparsePolynomial& a, const SparsePolynomial& b) {
  SparsePolynomial out(std::max(a.variables_, b.variables_));
  for (const auto& [ea, ca] : a.terms_)
    for (const auto& [eb, cb] : b.terms_) out.add_term(multiply(ea, eb), ca * cb);
  return out;
}

SparsePolynomial SparsePolynomial::scaled(double factor) const {
  SparsePolynomial out(variables_);
  for (const auto& [e, c] : terms_) out.add_term(e, c * factor);
  return out;
}

SparsePolynomial SparsePolynomial::compose(std::span<const SparsePolynomial> replacements,
                                           std::size_t term_cap) const {
  if (replacements.size() != variables_)
    throw std::invalid_argument("compose needs one replacement per variable");
  const std::size_t out_vars = replacements.empty() ? 0 : replacements.front().variables();

  // powers[var][p - 1] = replacements[var]^p, filled on demand.
  std::vector<std::vector<SparsePolynomial>> powers(variables_);
  auto power_of = [&](std::uint32_t var, std::uint32_t p) -> const SparsePolynomial& {
    auto& cache = powers[var];
    if (cache.empty()) cache.push_back(replacements[var]);
    while (cache.size() < p) {
      cache.push_back(cache.back() * replacements[var]);
      check_cap(cache.back(), term_cap);
    }
    return cache[p - 1];
  };

  SparsePolynomial out(out_vars);
  for (const auto& [e, c] : terms_) {
    SparsePolynomial term = SparsePolynomial::constant(out_vars, c);
    for (const auto& [var, p] : e) {
      term = term * power_of(var, p);
      check_cap(term, term_cap);
    }
    out += term;
    check_cap(out, term_cap);
  }
  return out;
}

std::string SparsePolynomial::to_string(std::span<const std::string> names) const {
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [e, c] : terms_) {
    if (!first) out += c < 0 ? " - " : " + ";
    else if (c < 0) out += "-";
    first = false;
    const double magnitude = std::abs(c);
    bool need_star = false;
    if (e.empty() || magnitude != 1.0) {
      out += format_number(magnitude);
      need_star = true;
    }
    for (const auto& [var, p] : e) {
      if (need_star) out += '*';
      out += "s[" + (var < names.size() ? names[var] : std::to_string(var + 1)) + "]";
      if (p > 1) out += "^" + std::to_string(p);
      need_star = true;
    }
  }
  return out;
}

}  // namespace ptag
