// Probabilistic tree adjoining grammar data model.
//
// A grammar is a set of elementary trees (initial and auxiliary), a start
// nonterminal and a parameter table phi that assigns, for every rewrite site,
// a probability distribution over the trees that can adjoin (or substitute)
// there plus the "no adjunction" outcome.  The distinguished start wrapper is
// implicit: any initial tree rooted in the start symbol may begin a
// derivation, and the wrapper itself carries no site and no parameters.
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ptag {

enum class SymbolKind { nonterminal, terminal };

struct Symbol {
  std::string name;
  SymbolKind kind = SymbolKind::nonterminal;

  friend auto operator<=>(const Symbol&, const Symbol&) = default;
};

enum class NodeKind { interior, anchor, foot, substitution, epsilon };

struct TreeNode {
  NodeKind kind = NodeKind::interior;
  /// Nonterminal for interior/foot/substitution nodes, terminal for anchors,
  /// empty for epsilon leaves.
  std::string label;
  /// Present iff the node is a rewrite (adjunction or substitution) site.
  std::optional<std::string> site;
  std::vector<TreeNode> children;
  /// Gorn address, 1-based child positions; empty for the root.
  std::vector<int> address;

  bool is_leaf() const { return children.empty(); }
};

std::string format_address(const std::vector<int>& address);

enum class TreeKind { initial, auxiliary };

struct ElementaryTree {
  std::string id;
  TreeKind kind = TreeKind::initial;
  TreeNode root;
};

/// One outcome of rewriting a site: a target tree, or NIL when `tree` is empty.
struct PhiEntry {
  std::optional<std::string> tree;
  double prob = 0.0;

  bool is_nil() const { return !tree.has_value(); }
};

/// Site id -> distribution over outcomes, in document order.
using AdjunctionTable = std::map<std::string, std::vector<PhiEntry>, std::less<>>;

/// Location of a rewrite site inside the grammar.
struct SiteRef {
  std::string id;
  std::size_t tree = 0;      // index into Grammar::trees()
  std::size_t preorder = 0;  // preorder position of the node within its tree
  NodeKind kind = NodeKind::interior;
  std::string label;
};

class GrammarError : public std::runtime_error {
 public:
  enum class Code { syntax, duplicate_id, unknown_symbol_kind, malformed };

  GrammarError(Code code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

/// Immutable grammar.  Construction computes Gorn addresses, indexes sites
/// and trees, collects the symbol sets and materializes the default
/// {NIL: 1.0} distribution for adjunction sites without phi entries.
///
/// Throws GrammarError on duplicate tree or site ids, on phi entries naming
/// unknown sites or trees, and on symbols used both as terminal and
/// nonterminal.
class Grammar {
 public:
  Grammar(std::string start, std::vector<ElementaryTree> trees, AdjunctionTable phi);

  const std::string& start() const { return start_; }
  const std::vector<ElementaryTree>& trees() const { return trees_; }
  const AdjunctionTable& phi() const { return phi_; }
  const std::set<Symbol>& nonterminals() const { return nonterminals_; }
  const std::set<Symbol>& terminals() const { return terminals_; }

  /// All sites, in tree declaration order then preorder.
  const std::vector<SiteRef>& sites() const { return sites_; }
  /// Sites of one tree, preorder; indices into sites().
  const std::vector<std::size_t>& sites_of_tree(std::size_t tree) const {
    return tree_sites_[tree];
  }

  std::optional<std::size_t> find_tree(std::string_view id) const;
  std::optional<std::size_t> find_site(std::string_view id) const;
  const ElementaryTree& tree(std::string_view id) const;

  const std::vector<PhiEntry>& distribution(std::string_view site) const;

  /// Initial trees rooted in the start symbol, declaration order.
  const std::vector<std::size_t>& start_trees() const { return start_trees_; }

  /// Number of anchor leaves in a tree.
  std::size_t anchor_count(std::size_t tree) const { return anchor_counts_[tree]; }

 private:
  std::string start_;
  std::vector<ElementaryTree> trees_;
  AdjunctionTable phi_;
  std::set<Symbol> nonterminals_;
  std::set<Symbol> terminals_;
  std::vector<SiteRef> sites_;
  std::vector<std::vector<std::size_t>> tree_sites_;
  std::map<std::string, std::size_t, std::less<>> tree_lookup_;
  std::map<std::string, std::size_t, std::less<>> site_lookup_;
  std::vector<std::size_t> start_trees_;
  std::vector<std::size_t> anchor_counts_;
};

/// Calls `visit(node, preorder_index)` over a tree in preorder.
template <typename Visitor>
void for_each_preorder(const TreeNode& root, Visitor&& visit) {
  std::size_t counter = 0;
  auto walk = [&](auto&& self, const TreeNode& node) -> void {
    visit(node, counter++);
    for (const auto& child : node.children) self(self, child);
  };
  walk(walk, root);
}

void assign_addresses(TreeNode& root);

// --- canonical JSON document -------------------------------------------------

Grammar parse_grammar(std::string_view document);
Grammar load_grammar(const std::string& path);
std::string serialize_grammar(const Grammar& g);

// --- validation ---------------------------------------------------------------

enum class Severity { error, warning };

enum class DiagnosticCode {
  improper_site,
  label_mismatch,
  bad_foot,
  not_lexicalized,
  unreachable_tree,
  empty_yield_loop,
  no_start_tree,
  duplicate_id,
  bad_prob,
};

std::string_view to_string(DiagnosticCode code);
std::string_view to_string(Severity severity);

struct Diagnostic {
  Severity severity = Severity::error;
  DiagnosticCode code = DiagnosticCode::improper_site;
  std::optional<std::string> site;
  /// Trees involved; one for most codes, the whole cycle for EMPTY_YIELD_LOOP.
  std::vector<std::string> trees;
  std::string message;
};

/// Properness tolerance on per-site sums.
inline constexpr double kPropernessTolerance = 1e-9;

/// All well-formedness findings, ordered by tree declaration order then
/// preorder.  Grammar-level findings come first.
std::vector<Diagnostic> validate(const Grammar& g);

bool has_errors(const std::vector<Diagnostic>& diagnostics);

/// JSON array of {"severity", "code", "site", "trees", "message"}.
std::string to_json(const std::vector<Diagnostic>& diagnostics);

/// Trees not reachable from the start trees through positive-probability
/// phi entries, declaration order.
std::vector<std::string> detect_unreachable(const Grammar& g);

/// EMPTY_YIELD_LOOP for every cycle of anchorless trees in the positive
/// adjunction graph, then NOT_LEXICALIZED for every anchorless tree.
std::vector<Diagnostic> detect_empty_yield_loops(const Grammar& g);

/// Thrown by operations that require a grammar free of error diagnostics.
class InvalidGrammar : public std::runtime_error {
 public:
  explicit InvalidGrammar(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

void require_valid(const Grammar& g);

}  // namespace ptag
