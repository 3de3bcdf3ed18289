#include "ptag/grammar.hpp"

#include <utility>

namespace ptag {

std::string format_address(const std::vector<int>& address) {
  if (address.empty()) return "0";
  std::string out;
  for (std::size_t i = 0; i < address.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(address[i]);
  }
  return out;
}

void assign_addresses(TreeNode& root) {
  auto walk = [](auto&& self, TreeNode& node, const std::vector<int>& address) -> void {
    node.address = address;
    for (std::size_t i = 0; i < node.children.size(); ++i) {
      auto child_address = address;
      child_address.push_back(static_cast<int>(i) + 1);
      self(self, node.children[i], child_address);
    }
  };
  walk(walk, root, {});
}

Grammar::Grammar(std::string start, std::vector<ElementaryTree> trees, AdjunctionTable phi)
    : start_(std::move(start)), trees_(std::move(trees)), phi_(std::move(phi)) {
  using Code = GrammarError::Code;
  if (start_.empty()) throw GrammarError(Code::malformed, "start symbol must be nonempty");
  nonterminals_.insert({start_, SymbolKind::nonterminal});

  tree_sites_.resize(trees_.size());
  anchor_counts_.assign(trees_.size(), 0);
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    auto& tree = trees_[t];
    if (tree.id.empty()) throw GrammarError(Code::malformed, "tree id must be nonempty");
    if (!tree_lookup_.emplace(tree.id, t).second)
      throw GrammarError(Code::duplicate_id, "duplicate tree id '" + tree.id + "'");
    assign_addresses(tree.root);

    for_each_preorder(tree.root, [&](const TreeNode& node, std::size_t preorder) {
      switch (node.kind) {
        case NodeKind::anchor:
          terminals_.insert({node.label, SymbolKind::terminal});
          ++anchor_counts_[t];
          break;
        case NodeKind::epsilon:
          break;
        default:
          nonterminals_.insert({node.label, SymbolKind::nonterminal});
      }
      if (!node.site) return;
      if (!site_lookup_.emplace(*node.site, sites_.size()).second)
        throw GrammarError(Code::duplicate_id, "duplicate site id '" + *node.site + "'");
      tree_sites_[t].push_back(sites_.size());
      sites_.push_back({*node.site, t, preorder, node.kind, node.label});
    });
  }

  for (const auto& symbol : terminals_) {
    if (nonterminals_.count({symbol.name, SymbolKind::nonterminal}))
      throw GrammarError(Code::malformed, "symbol '" + symbol.name +
                                              "' used as both terminal and nonterminal");
  }

  for (const auto& [site, entries] : phi_) {
    if (!site_lookup_.count(site))
      throw GrammarError(Code::malformed, "phi names unknown site '" + site + "'");
    for (const auto& entry : entries) {
      if (entry.tree && !tree_lookup_.count(*entry.tree))
        throw GrammarError(Code::malformed,
                           "phi at site '" + site + "' names unknown tree '" + *entry.tree + "'");
    }
  }
  for (const auto& site : sites_) {
    if (phi_.count(site.id)) continue;
    if (site.kind == NodeKind::substitution)
      phi_.emplace(site.id, std::vector<PhiEntry>{});
    else
      phi_.emplace(site.id, std::vector<PhiEntry>{{std::nullopt, 1.0}});
  }

  for (std::size_t t = 0; t < trees_.size(); ++t) {
    if (trees_[t].kind == TreeKind::initial && trees_[t].root.kind == NodeKind::interior &&
        trees_[t].root.label == start_)
      start_trees_.push_back(t);
  }
}

std::optional<std::size_t> Grammar::find_tree(std::string_view id) const {
  auto it = tree_lookup_.find(id);
  if (it == tree_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Grammar::find_site(std::string_view id) const {
  auto it = site_lookup_.find(id);
  if (it == site_lookup_.end()) return std::nullopt;
  return it->second;
}

const ElementaryTree& Grammar::tree(std::string_view id) const {
  auto index = find_tree(id);
  if (!index) throw std::out_of_range("unknown tree '" + std::string(id) + "'");
  return trees_[*index];
}

const std::vector<PhiEntry>& Grammar::distribution(std::string_view site) const {
  auto it = phi_.find(site);
  if (it == phi_.end()) throw std::out_of_range("unknown site '" + std::string(site) + "'");
  return it->second;
}

}  // namespace ptag
