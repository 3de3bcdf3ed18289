#include "ptag/expectation.hpp"

#include "json.hpp"
#include "ptag/format.hpp"

namespace ptag {

SiteIndex::SiteIndex(const Grammar& g) {
  order_.reserve(g.sites().size());
  for (const auto& site : g.sites()) {
    lookup_.emplace(site.id, static_cast<Eigen::Index>(order_.size()));
    order_.push_back(site.id);
  }
}

std::optional<Eigen::Index> SiteIndex::position(std::string_view site) const {
  auto it = lookup_.find(site);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::string to_tsv(const Matrix<double>& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += '\t';
      out += format_number(m(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string to_json(const Matrix<double>& m, const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& column_labels) {
  nlohmann::ordered_json out;
  out["order"] = row_labels;
  if (column_labels != row_labels) out["columns"] = column_labels;
  auto rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  out["rows"] = std::move(rows);
  return out.dump() + "\n";
}

std::vector<std::string> tree_ids(const Grammar& g) {
  std::vector<std::string> ids;
  for (const auto& tree : g.trees()) ids.push_back(tree.id);
  return ids;
}

}  // namespace ptag
