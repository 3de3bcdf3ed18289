#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "ptag/simulate.hpp"
#include "test_support.hpp"

using namespace ptag;

namespace {

using Multiset = std::map<std::string, int>;

Multiset anchors_of_tree(const TreeNode& root) {
  Multiset out;
  for_each_preorder(root, [&](const TreeNode& n, std::size_t) {
    if (n.kind == NodeKind::anchor) ++out[n.label];
  });
  return out;
}

// Anchors of every elementary tree instantiated in the derivation.
void collect_instantiated(const DerivationNode& node, const Grammar& g, Multiset& out) {
  for (const auto& [a, c] : anchors_of_tree(g.tree(node.tree).root)) out[a] += c;
  for (const auto& slot : node.slots)
    if (slot.child) collect_instantiated(*slot.child, g, out);
}

Multiset anchors_of_yield(const std::vector<std::string>& y) {
  Multiset out;
  for (const auto& a : y) ++out[a];
  return out;
}

std::shared_ptr<DerivationNode> node(std::string tree, std::optional<std::string> at, int level,
                                     std::vector<DerivationNode::Slot> slots) {
  auto n = std::make_shared<DerivationNode>();
  n->tree = std::move(tree);
  n->at = std::move(at);
  n->level = level;
  n->slots = std::move(slots);
  return n;
}

DerivationNode::Slot nil(std::string site) { return {std::move(site), SlotState::nil, nullptr}; }
DerivationNode::Slot adj(std::string site, std::shared_ptr<const DerivationNode> child) {
  return {std::move(site), SlotState::adjoined, std::move(child)};
}

int count_trees(const DerivationNode& n) {
  int total = 1;
  for (const auto& s : n.slots)
    if (s.child) total += count_trees(*s.child);
  return total;
}

}  // namespace

TEST_CASE("all-NIL grammar always completes") {
  const auto g = ptag::testing::single_site_nil_grammar();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto d = sample_derivation(g, seed);
    CHECK(d.complete);
    CHECK(d.probability == 1.0);
    CHECK(d.depth == 0);
  }
  const auto stats = estimate_termination(g, {.samples = 5000, .seed = 3});
  CHECK(stats.termination_rate == 1.0);
  CHECK(stats.censored == 0);

  const auto all = enumerate_derivations(g, 3);
  REQUIRE(all.size() == 1);
  CHECK(all[0].probability == 1.0);
}

TEST_CASE("grammar-2 seed with draws t2, nil, nil") {
  const auto g = ptag::testing::grammar2();
  std::optional<Derivation> found;
  for (std::uint64_t seed = 0; seed < 200000 && !found; ++seed) {
    auto d = sample_derivation(g, seed, {.max_depth = 2});
    if (d.complete) found = std::move(d);
  }
  REQUIRE(found.has_value());
  CHECK(found->probability == doctest::Approx(2e-4).epsilon(1e-12));
  CHECK(found->depth == 1);
  REQUIRE(found->root->slots.size() == 1);
  const auto& child = *found->root->slots[0].child;
  CHECK(child.tree == "t2");
  CHECK(child.at == "S1");
  CHECK(child.slots[0].state == SlotState::nil);
  CHECK(child.slots[1].state == SlotState::nil);
  CHECK(yield_string(derived_tree(*found, g)) == std::vector<std::string>{"a", "a"});
}

TEST_CASE("depth cap leaves the derivation incomplete") {
  const auto g = ptag::testing::grammar4();
  bool saw_cap = false;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto d = sample_derivation(g, seed, {.max_depth = 1});
    if (d.root->slots[0].state == SlotState::adjoined) {
      CHECK_FALSE(d.complete);
      CHECK_THROWS_AS(derived_tree(d, g), std::invalid_argument);
      saw_cap = true;
    } else {
      CHECK(d.complete);
    }
  }
  CHECK(saw_cap);
}

TEST_CASE("grammar-4 yields contain exactly one a1") {
  const auto g = ptag::testing::grammar4();
  Rng rng(99);
  int complete = 0;
  for (int i = 0; i < 500; ++i) {
    const auto d = sample_derivation(g, rng);
    if (!d.complete) continue;
    ++complete;
    const auto y = yield_string(derived_tree(d, g));
    CHECK(std::count(y.begin(), y.end(), "a1") == 1);
    CHECK(y.back() == "a1");
  }
  CHECK(complete == 500);
}

TEST_CASE("a derivation with four t2 and two t3 instances") {
  const auto g = ptag::testing::grammar4();
  auto t3a = node("t3", "B1", 2, {adj("B2", node("t3", "B2", 3, {nil("B2")}))});
  auto t2d = node("t2", "A2", 3, {nil("A2"), nil("B1"), nil("A3")});
  auto t2b = node("t2", "A2", 2, {adj("A2", t2d), nil("B1"), nil("A3")});
  auto t2c = node("t2", "A3", 2, {nil("A2"), nil("B1"), nil("A3")});
  auto t2a = node("t2", "A1", 1, {adj("A2", t2b), adj("B1", t3a), adj("A3", t2c)});
  Derivation d{node("t1", std::nullopt, 0, {adj("A1", t2a)}), true, 1.0, 3};
  const auto tree = derived_tree(d, g);
  const auto y = yield_string(tree);
  CHECK(anchors_of_yield(y) == Multiset{{"a1", 1}, {"a2", 4}, {"a3", 2}});
  CHECK(tree.address.empty());
  CHECK(tree.children[0].address == std::vector<int>{1});
}

TEST_CASE("substitution surgery") {
  const auto g = parse_grammar(R"({"start": "S", "trees": [
      {"id": "t1", "type": "initial", "root": {"label": "S", "children": [{"subst": "NP", "site": "N1"}, {"anchor": "runs"}]}},
      {"id": "np", "type": "initial", "root": {"label": "NP", "children": [{"anchor": "dog"}]}}],
      "phi": [{"site": "N1", "tree": "np", "prob": 1.0}]})");
  const auto d = sample_derivation(g, 1);
  REQUIRE(d.complete);
  CHECK(yield_string(derived_tree(d, g)) == std::vector<std::string>{"dog", "runs"});

  TreeNode unresolved = g.tree("t1").root;
  CHECK_THROWS_AS(yield_string(unresolved), UnresolvedLeaf);
}

TEST_CASE("property: derived trees preserve anchors") {
  std::mt19937_64 rng(8);
  std::vector<std::pair<Grammar, int>> corpus{{ptag::testing::grammar4(), 200},
                                              {ptag::testing::grammar2(), 10}};
  for (int i = 0; i < 20; ++i) corpus.emplace_back(ptag::testing::random_grammar(rng), 30);
  for (const auto& [g, depth] : corpus) {
    Rng sampler(static_cast<std::uint64_t>(depth) * 7919u);
    for (int i = 0; i < 1000; ++i) {
      const auto d = sample_derivation(g, sampler, {.max_depth = depth, .node_cap = 2000});
      if (!d.complete) continue;
      Multiset expected;
      collect_instantiated(*d.root, g, expected);
      const auto tree = derived_tree(d, g);
      CHECK(anchors_of_tree(tree) == expected);
      CHECK(anchors_of_yield(yield_string(tree)) == expected);
    }
  }
}

TEST_CASE("property: sampling is reproducible under a fixed seed") {
  const auto g = ptag::testing::grammar4();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = sample_derivation(g, seed);
    const auto b = sample_derivation(g, seed);
    CHECK(a.probability == b.probability);
    CHECK(a.depth == b.depth);
    CHECK(to_json(*a.root) == to_json(*b.root));
  }
  const SimulationOptions opts{.samples = 20000, .seed = 42};
  CHECK(to_json(estimate_termination(g, opts)) == to_json(estimate_termination(g, opts)));
}

TEST_CASE("thread count does not change the estimate") {
  const auto g = ptag::testing::grammar2();
  SimulationOptions opts{.samples = 50000, .seed = 7, .threads = 1};
  const auto one = estimate_termination(g, opts);
  opts.threads = 4;
  const auto four = estimate_termination(g, opts);
  CHECK(to_json(one) == to_json(four));
}

TEST_CASE("sibling adjunctions are uncorrelated") {
  const auto g = ptag::testing::grammar2();
  Rng rng(2024);
  const int n = 100000;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const auto d = sample_derivation(g, rng, {.max_depth = 2});
    const auto& t2 = *d.root->slots[0].child;
    const double x = t2.slots[0].state == SlotState::adjoined ? 1.0 : 0.0;
    const double y = t2.slots[1].state == SlotState::adjoined ? 1.0 : 0.0;
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double vx = sxx / n - (sx / n) * (sx / n);
  const double vy = syy / n - (sy / n) * (sy / n);
  const double corr = cov / std::sqrt(vx * vy);
  CHECK(std::abs(corr) < 0.02);
  CHECK(sx / n == doctest::Approx(0.99).epsilon(0.005));
  CHECK(sy / n == doctest::Approx(0.98).epsilon(0.005));
}

TEST_CASE("termination estimates") {
  SUBCASE("grammar-4 terminates almost surely") {
    const auto stats = estimate_termination(ptag::testing::grammar4(), {.samples = 100000, .seed = 1});
    CHECK(stats.samples == 100000);
    CHECK(stats.terminated + stats.censored == stats.samples);
    const double sigma = std::sqrt(1.0 / 100000.0);
    CHECK(stats.termination_rate >= 1.0 - 3.0 * sigma - 1e-6);
    CHECK(stats.mean_depth > 0.0);
    CHECK(stats.mean_yield_length >= 1.0);
  }
  SUBCASE("grammar-2 matches the extinction probability") {
    const double q = 2.0 / 9702.0;
    const long n = 200000;
    const auto stats = estimate_termination(ptag::testing::grammar2(), {.samples = n, .seed = 5});
    const double sigma = std::sqrt(q * (1.0 - q) / static_cast<double>(n));
    CHECK(std::abs(stats.termination_rate - q) <= 3.0 * sigma);
    CHECK(stats.rng == "mt19937_64+splitmix64");
  }
  SUBCASE("count-based estimate agrees with the explicit sampler") {
    const auto g = ptag::testing::grammar4();
    const auto stats = estimate_termination(g, {.samples = 20000, .max_depth = 3, .seed = 2});
    const double c3 = [&] {
      double s = 0.0;
      for (const auto& d : enumerate_derivations(g, 3)) s += d.probability;
      return s;
    }();
    const double sigma = std::sqrt(c3 * (1.0 - c3) / 20000.0);
    CHECK(std::abs(stats.termination_rate - c3) <= 4.0 * sigma);
  }
}

TEST_CASE("sub-seeds differ per stream") {
  CHECK(sub_seed(1, 0) != sub_seed(1, 1));
  CHECK(sub_seed(1, 0) != sub_seed(2, 0));
  CHECK(sub_seed(5, 3) == sub_seed(5, 3));
}

TEST_CASE("enumeration") {
  const auto g4 = ptag::testing::grammar4();
  SUBCASE("depth 1 on grammar-4 is the single NIL derivation") {
    const auto ds = enumerate_derivations(g4, 1);
    REQUIRE(ds.size() == 1);
    CHECK(ds[0].probability == doctest::Approx(0.2));
  }
  SUBCASE("grammar-2 at depth 2 has a single derivation of probability 2e-4") {
    const auto ds = enumerate_derivations(ptag::testing::grammar2(), 2);
    REQUIRE(ds.size() == 1);
    CHECK(ds[0].probability == doctest::Approx(2e-4).epsilon(1e-12));
    CHECK(enumerate_derivations(ptag::testing::grammar2(), 1).empty());
  }
  SUBCASE("probabilities are exact products and trees are well formed") {
    for (const auto& d : enumerate_derivations(g4, 3)) {
      CHECK(d.complete);
      CHECK(d.probability > 0.0);
      CHECK(count_trees(*d.root) >= 1);
      CHECK(anchors_of_yield(yield_string(derived_tree(d, g4))).at("a1") == 1);
    }
  }
  SUBCASE("prob floor prunes") {
    const auto all = enumerate_derivations(g4, 3);
    const auto pruned = enumerate_derivations(g4, 3, {.prob_floor = 0.01});
    CHECK(pruned.size() < all.size());
    for (const auto& d : pruned) CHECK(d.probability >= 0.01);
  }
  SUBCASE("node cap") {
    CHECK_THROWS_AS(enumerate_derivations(g4, 5, {.node_cap = 10}), EnumerationBudgetExceeded);
  }
}

TEST_CASE("derivation JSON") {
  const auto g = ptag::testing::grammar4();
  const auto ds = enumerate_derivations(g, 1);
  CHECK(to_json(*ds[0].root) == R"({"tree":"t1","at":null,"children":{"A1":"nil"}})" "\n");
}
