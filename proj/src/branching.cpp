#include "ptag/branching.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace ptag {

namespace {

Exponents site_monomial(const Grammar& g, std::size_t tree) {
  Exponents e;
  for (auto site : g.sites_of_tree(tree)) e.emplace_back(static_cast<std::uint32_t>(site), 1);
  return e;  // site positions in a tree are increasing
}

std::size_t pick_start(const Grammar& g, const std::optional<std::string>& start_tree) {
  if (start_tree) {
    const auto t = g.find_tree(*start_tree);
    if (!t || std::find(g.start_trees().begin(), g.start_trees().end(), *t) == g.start_trees().end())
      throw std::invalid_argument("'" + *start_tree + "' is not a start tree");
    return *t;
  }
  if (g.start_trees().empty()) throw std::invalid_argument("grammar has no start tree");
  return g.start_trees().front();
}

}  // namespace

SparsePolynomial adjunction_gf(const Grammar& g, std::string_view site) {
  if (!g.find_site(site)) throw std::out_of_range("unknown site '" + std::string(site) + "'");
  SparsePolynomial p(g.sites().size());
  for (const auto& entry : g.distribution(site)) {
    if (entry.is_nil())
      p.add_term({}, entry.prob);
    else
      p.add_term(site_monomial(g, *g.find_tree(*entry.tree)), entry.prob);
  }
  return p;
}

std::vector<SparsePolynomial> adjunction_gfs(const Grammar& g) {
  std::vector<SparsePolynomial> out;
  out.reserve(g.sites().size());
  for (const auto& site : g.sites()) out.push_back(adjunction_gf(g, site.id));
  return out;
}

SparsePolynomial start_polynomial(const Grammar& g, std::optional<std::string> start_tree) {
  SparsePolynomial p(g.sites().size());
  p.add_term(site_monomial(g, pick_start(g, start_tree)), 1.0);
  return p;
}

SparsePolynomial level_gf(const Grammar& g, int n, std::size_t term_cap,
                          std::optional<std::string> start_tree) {
  if (n < 0) throw std::invalid_argument("level must be nonnegative");
  SparsePolynomial level = start_polynomial(g, std::move(start_tree));
  const auto gfs = adjunction_gfs(g);
  for (int i = 0; i < n; ++i) level = level.compose(gfs, term_cap);
  return level;
}

ConstantSplit constant_split(const SparsePolynomial& p) {
  ConstantSplit out{p, p.constant_term()};
  out.nonconstant.add_term({}, -out.constant);
  return out;
}

ExpectationMatrix<double> m_from_partials(const Grammar& g) {
  SiteIndex idx(g);
  const auto k = static_cast<Eigen::Index>(g.sites().size());
  const std::vector<double> ones(static_cast<std::size_t>(k), 1.0);
  Matrix<double> m = Matrix<double>::Zero(k, k);
  const auto gfs = adjunction_gfs(g);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      m(i, j) = gfs[static_cast<std::size_t>(i)].derivative(static_cast<std::uint32_t>(j)).evaluate(ones);
    }
  }
  return {std::move(m), std::move(idx)};
}

StartWeights normalize_start_weights(const Grammar& g, const StartWeights& raw) {
  double total = 0.0;
  for (const auto& [tree, weight] : raw) {
    const auto t = g.find_tree(tree);
    if (!t || std::find(g.start_trees().begin(), g.start_trees().end(), *t) == g.start_trees().end())
      throw std::invalid_argument("start weight for '" + tree + "', which is not a start tree");
    if (!std::isfinite(weight) || weight < 0.0)
      throw std::invalid_argument("start weight for '" + tree + "' must be finite and nonnegative");
    total += weight;
  }
  if (!(total > 0.0)) throw std::invalid_argument("start weights must have a positive sum");
  StartWeights out;
  for (const auto& [tree, weight] : raw) out[tree] = weight / total;
  return out;
}

ExtinctionVector extinction(const Grammar& g, double tol, long max_iter,
                            const std::optional<StartWeights>& start_weights) {
  ExtinctionVector out;
  out.index = SiteIndex(g);
  const auto k = static_cast<std::size_t>(out.index.size());
  const auto gfs = adjunction_gfs(g);

  std::vector<double> q(k, 0.0), next(k, 0.0);
  for (long n = 0; n < max_iter; ++n) {
    double change = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      next[j] = std::clamp(gfs[j].evaluate(q), 0.0, 1.0);
      if (next[j] < q[j] - 1e-15) out.monotone = false;
      change = std::max(change, std::abs(next[j] - q[j]));
    }
    q.swap(next);
    out.residual = change;
    if (change < tol) {
      // q(n+1) reproduces q(n): the fixed point was reached at iterate n.
      out.iterations = n;
      out.converged = true;
      break;
    }
    out.iterations = n + 1;
  }

  out.q = Eigen::Map<const Eigen::VectorXd>(q.data(), static_cast<Eigen::Index>(k));
  for (auto t : g.start_trees()) {
    double p = 1.0;
    for (auto site : g.sites_of_tree(t)) p *= q[site];
    out.starts.push_back({g.trees()[t].id, p});
  }
  if (start_weights) {
    const auto weights = normalize_start_weights(g, *start_weights);
    double mixed = 0.0;
    for (const auto& start : out.starts) {
      auto it = weights.find(start.tree);
      if (it != weights.end()) mixed += it->second * start.probability;
    }
    out.combined = mixed;
  }
  return out;
}

std::string to_json(const ExtinctionVector& q) {
  nlohmann::ordered_json out;
  out["order"] = q.index.order();
  out["q"] = std::vector<double>(q.q.data(), q.q.data() + q.q.size());
  out["iterations"] = q.iterations;
  out["residual"] = q.residual;
  out["converged"] = q.converged;
  out["monotone"] = q.monotone;
  auto starts = nlohmann::ordered_json::array();
  for (const auto& s : q.starts) starts.push_back({{"tree", s.tree}, {"probability", s.probability}});
  out["starts"] = std::move(starts);
  out["combined"] = q.combined ? nlohmann::ordered_json(*q.combined) : nlohmann::ordered_json(nullptr);
  return out.dump() + "\n";
}

}  // namespace ptag
