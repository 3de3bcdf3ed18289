// TAG derivations as a multitype Galton-Watson branching process.
//
// Each site is a type.  Rewriting site j draws a tree t (or NIL) from phi and
// produces one offspring of every site in t, so the offspring distribution of
// type j is encoded by the adjunction generating function
//
//   g_j(s) = sum_t phi(j -> t) * prod_i s_i^[site i in t]  +  phi(j -> NIL).
//
// Level generating functions compose these: G_n = G_{n-1}[g_1, ..., g_k].
// The constant term of G_n is the probability that the process has died out
// by level n, and the extinction probabilities are the least fixed point of
// q = g(q) in [0, 1]^k.
#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ptag/expectation.hpp"
#include "ptag/grammar.hpp"
#include "ptag/polynomial.hpp"

namespace ptag {

inline constexpr std::size_t kDefaultTermCap = 100000;

/// g_j for one site, over the variables of SiteIndex(g).  Throws
/// std::out_of_range for an unknown site id.
SparsePolynomial adjunction_gf(const Grammar& g, std::string_view site);

/// All g_j in SiteIndex order.
std::vector<SparsePolynomial> adjunction_gfs(const Grammar& g);

/// G_0 for a start tree: the product of its site variables.  For a start
/// tree with a single site this is s_1.  Defaults to the first start tree.
SparsePolynomial start_polynomial(const Grammar& g, std::optional<std::string> start_tree = {});

/// G_n.  Throws TermCapExceeded on symbolic blowup and std::invalid_argument
/// when the grammar has no start tree.
SparsePolynomial level_gf(const Grammar& g, int n, std::size_t term_cap = kDefaultTermCap,
                          std::optional<std::string> start_tree = {});

struct ConstantSplit {
  SparsePolynomial nonconstant;  // D
  double constant = 0.0;         // C
};

ConstantSplit constant_split(const SparsePolynomial& p);

/// m_ij = dg_i/ds_j at s = 1, computed symbolically.
ExpectationMatrix<double> m_from_partials(const Grammar& g);

struct StartExtinction {
  std::string tree;
  double probability = 0.0;
};

struct ExtinctionVector {
  Eigen::VectorXd q;
  SiteIndex index;
  long iterations = 0;
  double residual = 0.0;
  bool converged = false;
  /// False if any iterate decreased in some component by more than 1e-15.
  bool monotone = true;
  /// Termination probability of a derivation begun by each start tree: the
  /// product of q over that tree's sites.
  std::vector<StartExtinction> starts;
  /// Start probabilities mixed by user-supplied start weights, if any.
  std::optional<double> combined;
};

/// Normalized start weights keyed by tree id.  Every key must be an initial
/// tree rooted in the start symbol; weights must be nonnegative with a
/// positive sum.
using StartWeights = std::map<std::string, double>;
StartWeights normalize_start_weights(const Grammar& g, const StartWeights& raw);

/// Fixed-point iteration q(0) = 0, q(n+1) = g(q(n)) until the max-norm
/// change drops below tol.  When max_iter is hit the last iterate is
/// returned with converged = false.
ExtinctionVector extinction(const Grammar& g, double tol = 1e-12, long max_iter = 1000000,
                            const std::optional<StartWeights>& start_weights = {});

std::string to_json(const ExtinctionVector& q);

}  // namespace ptag
