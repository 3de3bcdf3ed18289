// Expectation matrix of a probabilistic TAG.
//
// P (sites x trees) holds the probability of rewriting each site with each
// tree, N (trees x sites) is the site-membership indicator, and
// M = P * N is the expected number of site-j instances produced by one
// rewrite of site i.  NIL mass never enters P, so P is not row stochastic.
#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ptag/grammar.hpp"

namespace ptag {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Site ordering shared by every matrix: tree declaration order, then
/// preorder within each tree.
class SiteIndex {
 public:
  SiteIndex() = default;
  explicit SiteIndex(const Grammar& g);

  Eigen::Index size() const { return static_cast<Eigen::Index>(order_.size()); }
  const std::vector<std::string>& order() const { return order_; }
  const std::string& operator[](Eigen::Index i) const { return order_[static_cast<std::size_t>(i)]; }
  std::optional<Eigen::Index> position(std::string_view site) const;

 private:
  std::vector<std::string> order_;
  std::map<std::string, Eigen::Index, std::less<>> lookup_;
};

template <typename Scalar = double>
struct ExpectationMatrix {
  Matrix<Scalar> values;
  SiteIndex index;
};

template <typename Scalar = double>
Matrix<Scalar> build_p(const Grammar& g, const SiteIndex& idx) {
  const auto trees = static_cast<Eigen::Index>(g.trees().size());
  Matrix<Scalar> p = Matrix<Scalar>::Zero(idx.size(), trees);
  for (Eigen::Index i = 0; i < idx.size(); ++i) {
    for (const auto& entry : g.distribution(idx[i])) {
      if (entry.is_nil()) continue;
      const auto j = static_cast<Eigen::Index>(*g.find_tree(*entry.tree));
      p(i, j) += static_cast<Scalar>(entry.prob);
    }
  }
  return p;
}

template <typename Scalar = double>
Matrix<Scalar> build_n(const Grammar& g, const SiteIndex& idx) {
  const auto trees = static_cast<Eigen::Index>(g.trees().size());
  Matrix<Scalar> n = Matrix<Scalar>::Zero(trees, idx.size());
  for (Eigen::Index j = 0; j < idx.size(); ++j) {
    const auto& site = g.sites()[*g.find_site(idx[j])];
    n(static_cast<Eigen::Index>(site.tree), j) = Scalar(1);
  }
  return n;
}

template <typename Scalar = double>
ExpectationMatrix<Scalar> build_m(const Grammar& g) {
  SiteIndex idx(g);
  Matrix<Scalar> m = build_p<Scalar>(g, idx) * build_n<Scalar>(g, idx);
  return {std::move(m), std::move(idx)};
}

/// Rows newline-separated, entries tab-separated, shortest round-trip decimals.
std::string to_tsv(const Matrix<double>& m);

/// {"order": [...], "columns": [...], "rows": [[...], ...]}; "columns" is
/// omitted when it equals "order".
std::string to_json(const Matrix<double>& m, const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& column_labels);

std::vector<std::string> tree_ids(const Grammar& g);

}  // namespace ptag
