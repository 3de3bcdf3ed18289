#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ptag/grammar.hpp"

namespace ptag {

namespace {

using nlohmann::json;
using Code = GrammarError::Code;

const std::string& require_string(const json& object, const char* key, const std::string& where) {
  const auto it = object.find(key);
  if (it == object.end() || !it->is_string() || it->get_ref<const std::string&>().empty())
    throw GrammarError(Code::malformed, where + ": '" + key + "' must be a nonempty string");
  return it->get_ref<const std::string&>();
}

std::optional<std::string> optional_site(const json& object, const std::string& where) {
  if (!object.contains("site")) return std::nullopt;
  return require_string(object, "site", where);
}

TreeNode parse_node(const json& object, const std::string& where) {
  if (!object.is_object()) throw GrammarError(Code::malformed, where + ": node must be an object");

  static constexpr const char* kForms[] = {"label", "anchor", "foot", "subst", "epsilon"};
  int forms = 0;
  for (const char* form : kForms) forms += object.contains(form) ? 1 : 0;
  if (forms != 1)
    throw GrammarError(Code::unknown_symbol_kind,
                       where + ": node must have exactly one of label/anchor/foot/subst/epsilon");

  auto allow_only = [&](std::initializer_list<const char*> keys) {
    for (const auto& [key, value] : object.items()) {
      bool known = false;
      for (const char* k : keys) known = known || key == k;
      if (!known)
        throw GrammarError(Code::unknown_symbol_kind, where + ": unexpected key '" + key + "'");
    }
  };

  TreeNode node;
  if (object.contains("label")) {
    allow_only({"label", "children", "site"});
    node.kind = NodeKind::interior;
    node.label = require_string(object, "label", where);
    node.site = optional_site(object, where);
    const auto it = object.find("children");
    if (it == object.end() || !it->is_array() || it->empty())
      throw GrammarError(Code::malformed, where + ": interior node needs a nonempty 'children' array");
    for (std::size_t i = 0; i < it->size(); ++i)
      node.children.push_back(parse_node((*it)[i], where + "/" + std::to_string(i + 1)));
  } else if (object.contains("anchor")) {
    allow_only({"anchor"});
    node.kind = NodeKind::anchor;
    node.label = require_string(object, "anchor", where);
  } else if (object.contains("foot")) {
    allow_only({"foot", "site"});
    node.kind = NodeKind::foot;
    node.label = require_string(object, "foot", where);
    node.site = optional_site(object, where);
  } else if (object.contains("subst")) {
    allow_only({"subst", "site"});
    node.kind = NodeKind::substitution;
    node.label = require_string(object, "subst", where);
    node.site = require_string(object, "site", where);
  } else {
    allow_only({"epsilon"});
    if (object["epsilon"] != true)
      throw GrammarError(Code::malformed, where + ": 'epsilon' must be true");
    node.kind = NodeKind::epsilon;
  }
  return node;
}

json node_to_json(const TreeNode& node) {
  json out = json::object();
  switch (node.kind) {
    case NodeKind::interior: {
      out["label"] = node.label;
      json children = json::array();
      for (const auto& child : node.children) children.push_back(node_to_json(child));
      out["children"] = std::move(children);
      break;
    }
    case NodeKind::anchor: out["anchor"] = node.label; break;
    case NodeKind::foot: out["foot"] = node.label; break;
    case NodeKind::substitution: out["subst"] = node.label; break;
    case NodeKind::epsilon: out["epsilon"] = true; break;
  }
  if (node.site) out["site"] = *node.site;
  return out;
}

}  // namespace

Grammar parse_grammar(std::string_view document) {
  json root;
  try {
    root = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw GrammarError(Code::syntax, "syntax error at byte " + std::to_string(e.byte) + ": " +
                                         e.what());
  }
  if (!root.is_object()) throw GrammarError(Code::malformed, "grammar document must be an object");

  const std::string start = require_string(root, "start", "grammar");

  const auto trees_it = root.find("trees");
  if (trees_it == root.end() || !trees_it->is_array())
    throw GrammarError(Code::malformed, "grammar: 'trees' must be an array");
  std::vector<ElementaryTree> trees;
  for (const auto& object : *trees_it) {
    if (!object.is_object()) throw GrammarError(Code::malformed, "tree must be an object");
    ElementaryTree tree;
    tree.id = require_string(object, "id", "tree");
    const std::string where = "tree '" + tree.id + "'";
    const std::string& type = require_string(object, "type", where);
    if (type == "initial")
      tree.kind = TreeKind::initial;
    else if (type == "auxiliary")
      tree.kind = TreeKind::auxiliary;
    else
      throw GrammarError(Code::malformed, where + ": unknown type '" + type + "'");
    if (!object.contains("root")) throw GrammarError(Code::malformed, where + ": missing root");
    tree.root = parse_node(object["root"], where);
    trees.push_back(std::move(tree));
  }

  AdjunctionTable phi;
  if (const auto phi_it = root.find("phi"); phi_it != root.end()) {
    if (!phi_it->is_array()) throw GrammarError(Code::malformed, "grammar: 'phi' must be an array");
    for (const auto& object : *phi_it) {
      if (!object.is_object()) throw GrammarError(Code::malformed, "phi entry must be an object");
      const std::string& site = require_string(object, "site", "phi entry");
      PhiEntry entry;
      const auto tree_it = object.find("tree");
      if (tree_it == object.end() || tree_it->is_null())
        entry.tree = std::nullopt;
      else if (tree_it->is_string())
        entry.tree = tree_it->get<std::string>();
      else
        throw GrammarError(Code::malformed, "phi entry at '" + site + "': 'tree' must be a string or null");
      const auto prob_it = object.find("prob");
      if (prob_it == object.end() || !prob_it->is_number())
        throw GrammarError(Code::malformed, "phi entry at '" + site + "': 'prob' must be a number");
      entry.prob = prob_it->get<double>();
      phi[site].push_back(std::move(entry));
    }
  }

  return Grammar(start, std::move(trees), std::move(phi));
}

Grammar load_grammar(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw std::ios_base::failure("cannot read '" + path + "'");
  return parse_grammar(buffer.str());
}

std::string serialize_grammar(const Grammar& g) {
  json out;
  out["start"] = g.start();
  json trees = json::array();
  for (const auto& tree : g.trees()) {
    trees.push_back({{"id", tree.id},
                     {"type", tree.kind == TreeKind::initial ? "initial" : "auxiliary"},
                     {"root", node_to_json(tree.root)}});
  }
  out["trees"] = std::move(trees);
  json phi = json::array();
  for (const auto& site : g.sites()) {
    for (const auto& entry : g.distribution(site.id)) {
      json e = {{"site", site.id}, {"prob", entry.prob}};
      e["tree"] = entry.tree ? json(*entry.tree) : json(nullptr);
      phi.push_back(std::move(e));
    }
  }
  out["phi"] = std::move(phi);
  return out.dump(2) + "\n";
}

}  // namespace ptag
