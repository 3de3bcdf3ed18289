#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "ptag/grammar.hpp"

namespace ptag {

std::string_view to_string(DiagnosticCode code) {
  switch (code) {
    case DiagnosticCode::improper_site: return "IMPROPER_SITE";
    case DiagnosticCode::label_mismatch: return "LABEL_MISMATCH";
    case DiagnosticCode::bad_foot: return "BAD_FOOT";
    case DiagnosticCode::not_lexicalized: return "NOT_LEXICALIZED";
    case DiagnosticCode::unreachable_tree: return "UNREACHABLE_TREE";
    case DiagnosticCode::empty_yield_loop: return "EMPTY_YIELD_LOOP";
    case DiagnosticCode::no_start_tree: return "NO_START_TREE";
    case DiagnosticCode::duplicate_id: return "DUPLICATE_ID";
    case DiagnosticCode::bad_prob: return "BAD_PROB";
  }
  return "UNKNOWN";
}

std::string_view to_string(Severity severity) {
  return severity == Severity::error ? "error" : "warning";
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::error; });
}

std::string to_json(const std::vector<Diagnostic>& diagnostics) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& d : diagnostics) {
    nlohmann::ordered_json item;
    item["severity"] = std::string(to_string(d.severity));
    item["code"] = std::string(to_string(d.code));
    item["site"] = d.site ? nlohmann::ordered_json(*d.site) : nlohmann::ordered_json(nullptr);
    item["trees"] = d.trees;
    item["message"] = d.message;
    out.push_back(std::move(item));
  }
  return out.dump() + "\n";
}

namespace {

// Positive-probability rewrite edges between trees: tree -> targets.
std::vector<std::vector<std::size_t>> positive_edges(const Grammar& g) {
  std::vector<std::vector<std::size_t>> edges(g.trees().size());
  for (const auto& site : g.sites()) {
    for (const auto& entry : g.distribution(site.id)) {
      if (entry.is_nil() || !(entry.prob > 0.0)) continue;
      const auto target = *g.find_tree(*entry.tree);
      auto& out = edges[site.tree];
      if (std::find(out.begin(), out.end(), target) == out.end()) out.push_back(target);
    }
  }
  return edges;
}

std::vector<bool> reachable_from(const std::vector<std::vector<std::size_t>>& edges,
                                 const std::vector<std::size_t>& roots) {
  std::vector<bool> seen(edges.size(), false);
  std::vector<std::size_t> stack(roots.begin(), roots.end());
  for (auto r : roots) seen[r] = true;
  while (!stack.empty()) {
    const auto t = stack.back();
    stack.pop_back();
    for (auto u : edges[t]) {
      if (!seen[u]) {
        seen[u] = true;
        stack.push_back(u);
      }
    }
  }
  return seen;
}

std::string fmt_prob(double p) {
  std::ostringstream out;
  out.precision(17);
  out << p;
  return out.str();
}

}  // namespace

std::vector<std::string> detect_unreachable(const Grammar& g) {
  const auto seen = reachable_from(positive_edges(g), g.start_trees());
  std::vector<std::string> out;
  for (std::size_t t = 0; t < g.trees().size(); ++t)
    if (!seen[t]) out.push_back(g.trees()[t].id);
  return out;
}

std::vector<Diagnostic> detect_empty_yield_loops(const Grammar& g) {
  const auto n = g.trees().size();
  std::vector<bool> anchorless(n);
  for (std::size_t t = 0; t < n; ++t) anchorless[t] = g.anchor_count(t) == 0;

  // Restrict the graph to anchorless trees.
  auto edges = positive_edges(g);
  for (std::size_t t = 0; t < n; ++t) {
    if (!anchorless[t]) {
      edges[t].clear();
      continue;
    }
    std::erase_if(edges[t], [&](std::size_t u) { return !anchorless[u]; });
  }

  std::vector<Diagnostic> out;
  std::vector<bool> assigned(n, false);
  for (std::size_t t = 0; t < n; ++t) {
    if (!anchorless[t] || assigned[t]) continue;
    // t lies on a cycle iff some successor reaches back to t.
    const auto from_t = reachable_from(edges, edges[t]);
    if (!from_t[t]) continue;
    Diagnostic d{Severity::error, DiagnosticCode::empty_yield_loop, std::nullopt, {}, {}};
    for (std::size_t u = t; u < n; ++u) {
      if (!from_t[u] || assigned[u]) continue;
      if (!reachable_from(edges, edges[u])[t]) continue;
      assigned[u] = true;
      d.trees.push_back(g.trees()[u].id);
    }
    d.message = "adjunction cycle through trees without anchors:";
    for (const auto& id : d.trees) d.message += " " + id;
    out.push_back(std::move(d));
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (!anchorless[t]) continue;
    out.push_back({Severity::warning, DiagnosticCode::not_lexicalized, std::nullopt,
                   {g.trees()[t].id}, "tree '" + g.trees()[t].id + "' has no anchor"});
  }
  return out;
}

std::vector<Diagnostic> validate(const Grammar& g) {
  struct Keyed {
    long tree;
    std::size_t preorder;
    std::size_t seq;
    Diagnostic diagnostic;
  };
  std::vector<Keyed> found;
  auto add = [&](long tree, std::size_t preorder, Diagnostic d) {
    found.push_back({tree, preorder, found.size(), std::move(d)});
  };

  if (g.start_trees().empty()) {
    add(-1, 0, {Severity::error, DiagnosticCode::no_start_tree, std::nullopt, {},
                "no initial tree is rooted in start symbol '" + g.start() + "'"});
  }

  for (std::size_t t = 0; t < g.trees().size(); ++t) {
    const auto& tree = g.trees()[t];
    const long key = static_cast<long>(t);
    std::size_t feet = 0;
    for_each_preorder(tree.root, [&](const TreeNode& node, std::size_t preorder) {
      if (node.kind != NodeKind::foot) return;
      ++feet;
      auto bad_foot = [&](std::string message) {
        add(key, preorder, {Severity::error, DiagnosticCode::bad_foot, node.site, {tree.id},
                            "tree '" + tree.id + "' at " + format_address(node.address) + ": " +
                                std::move(message)});
      };
      if (tree.kind == TreeKind::initial) bad_foot("initial trees have no foot node");
      if (tree.kind == TreeKind::auxiliary && node.label != tree.root.label)
        bad_foot("foot label '" + node.label + "' differs from root label '" + tree.root.label + "'");
      if (node.site) bad_foot("adjunction is not allowed at a foot node");
    });
    if (tree.kind == TreeKind::auxiliary && feet != 1) {
      add(key, 0, {Severity::error, DiagnosticCode::bad_foot, std::nullopt, {tree.id},
                   "auxiliary tree '" + tree.id + "' has " + std::to_string(feet) +
                       " foot nodes, expected 1"});
    }
  }

  for (const auto& site : g.sites()) {
    const long key = static_cast<long>(site.tree);
    const auto& owner = g.trees()[site.tree].id;
    auto report = [&](Severity severity, DiagnosticCode code, std::string message) {
      add(key, site.preorder, {severity, code, site.id, {owner},
                               "site '" + site.id + "': " + std::move(message)});
    };
    const bool substitution = site.kind == NodeKind::substitution;
    const auto& entries = g.distribution(site.id);
    double sum = 0.0;
    std::set<std::string> targets;
    std::size_t nils = 0;
    for (const auto& entry : entries) {
      if (!std::isfinite(entry.prob) || entry.prob < 0.0 || entry.prob > 1.0)
        report(Severity::error, DiagnosticCode::bad_prob,
               "probability " + fmt_prob(entry.prob) + " outside [0, 1]");
      sum += entry.prob;
      if (entry.is_nil()) {
        if (substitution)
          report(Severity::error, DiagnosticCode::improper_site,
                 "substitution site cannot have a NIL outcome");
        if (++nils == 2)
          report(Severity::error, DiagnosticCode::duplicate_id, "NIL listed more than once");
        continue;
      }
      if (!targets.insert(*entry.tree).second)
        report(Severity::error, DiagnosticCode::duplicate_id,
               "target '" + *entry.tree + "' listed more than once");
      const auto& target = g.tree(*entry.tree);
      if (target.root.label != site.label)
        report(Severity::error, DiagnosticCode::label_mismatch,
               "target '" + target.id + "' is rooted in '" + target.root.label +
                   "' but the site is labeled '" + site.label + "'");
      if (substitution && target.kind != TreeKind::initial)
        report(Severity::error, DiagnosticCode::label_mismatch,
               "substitution target '" + target.id + "' is not an initial tree");
      if (!substitution && target.kind != TreeKind::auxiliary)
        report(Severity::error, DiagnosticCode::label_mismatch,
               "adjunction target '" + target.id + "' is not an auxiliary tree");
    }
    if (!(std::abs(sum - 1.0) <= kPropernessTolerance))
      report(Severity::error, DiagnosticCode::improper_site,
             "probabilities sum to " + fmt_prob(sum) + ", expected 1");
  }

  for (auto& d : detect_empty_yield_loops(g)) {
    const long key = static_cast<long>(*g.find_tree(d.trees.front()));
    add(key, 0, std::move(d));
  }
  for (const auto& id : detect_unreachable(g)) {
    add(static_cast<long>(*g.find_tree(id)), 0,
        {Severity::warning, DiagnosticCode::unreachable_tree, std::nullopt, {id},
         "tree '" + id + "' is unreachable from the start trees"});
  }

  std::stable_sort(found.begin(), found.end(), [](const Keyed& a, const Keyed& b) {
    return std::tie(a.tree, a.preorder, a.seq) < std::tie(b.tree, b.preorder, b.seq);
  });
  std::vector<Diagnostic> out;
  out.reserve(found.size());
  for (auto& k : found) out.push_back(std::move(k.diagnostic));
  return out;
}

InvalidGrammar::InvalidGrammar(std::vector<Diagnostic> diagnostics)
    : std::runtime_error("grammar has validation errors"), diagnostics_(std::move(diagnostics)) {}

void require_valid(const Grammar& g) {
  auto diagnostics = validate(g);
  if (has_errors(diagnostics)) throw InvalidGrammar(std::move(diagnostics));
}

}  // namespace ptag
