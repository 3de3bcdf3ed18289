#include "ptag/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>
#include <tuple>

#include "json.hpp"

namespace ptag {

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 mix(seed ^ (stream * 0xD1B54A32D192ED03ULL));
  mix.next();
  return mix.next();
}

namespace {

// Outcome table for a site: (probability, tree index or npos for NIL).
struct Outcome {
  double prob;
  std::size_t tree;
};
constexpr std::size_t kNil = static_cast<std::size_t>(-1);

std::vector<std::vector<Outcome>> outcome_tables(const Grammar& g) {
  std::vector<std::vector<Outcome>> tables(g.sites().size());
  for (std::size_t s = 0; s < g.sites().size(); ++s) {
    for (const auto& entry : g.distribution(g.sites()[s].id)) {
      if (!(entry.prob > 0.0)) continue;
      tables[s].push_back({entry.prob, entry.is_nil() ? kNil : *g.find_tree(*entry.tree)});
    }
  }
  return tables;
}

const Outcome& draw(const std::vector<Outcome>& outcomes, Rng& rng) {
  if (outcomes.empty()) throw std::logic_error("site has no outcome with positive probability");
  double u = rng.uniform();
  for (const auto& o : outcomes) {
    if (u < o.prob) return o;
    u -= o.prob;
  }
  return outcomes.back();  // rounding slack
}

// Start-tree choice: uniform, or by weights; no draw when there is one choice.
class StartSelector {
 public:
  StartSelector(const Grammar& g, const std::optional<StartWeights>& weights) {
    if (g.start_trees().empty()) throw std::invalid_argument("grammar has no start tree");
    if (weights) {
      for (const auto& [tree, w] : normalize_start_weights(g, *weights))
        if (w > 0.0) choices_.push_back({w, *g.find_tree(tree)});
    } else {
      const double w = 1.0 / static_cast<double>(g.start_trees().size());
      for (auto t : g.start_trees()) choices_.push_back({w, t});
    }
  }

  std::size_t pick(Rng& rng) const {
    if (choices_.size() == 1) return choices_.front().tree;
    return draw(choices_, rng).tree;
  }

 private:
  std::vector<Outcome> choices_;
};

std::shared_ptr<DerivationNode> make_node(const Grammar& g, std::size_t tree,
                                          std::optional<std::string> at, int level) {
  auto node = std::make_shared<DerivationNode>();
  node->tree = g.trees()[tree].id;
  node->at = std::move(at);
  node->level = level;
  for (auto s : g.sites_of_tree(tree)) node->slots.push_back({g.sites()[s].id, SlotState::pending, nullptr});
  return node;
}

}  // namespace

Derivation sample_derivation(const Grammar& g, Rng& rng, const SampleOptions& options) {
  if (options.max_depth < 1) throw std::invalid_argument("max_depth must be at least 1");
  const auto tables = outcome_tables(g);
  const StartSelector selector(g, options.start_weights);

  Derivation d;
  auto root = make_node(g, selector.pick(rng), std::nullopt, 0);
  d.root = root;
  std::vector<std::shared_ptr<DerivationNode>> frontier{root};
  std::size_t instantiated = 1;
  for (int level = 0;; ++level) {
    const bool sites_remain = std::any_of(frontier.begin(), frontier.end(),
                                          [](const auto& n) { return !n->slots.empty(); });
    if (!sites_remain) {
      d.complete = true;
      return d;
    }
    if (level >= options.max_depth) return d;

    std::vector<std::shared_ptr<DerivationNode>> next;
    for (const auto& node : frontier) {
      for (auto& slot : node->slots) {
        if (instantiated > options.node_cap) return d;
        const auto site = *g.find_site(slot.site);
        const auto& outcome = draw(tables[site], rng);
        d.probability *= outcome.prob;
        if (outcome.tree == kNil) {
          slot.state = SlotState::nil;
          continue;
        }
        auto child = make_node(g, outcome.tree, slot.site, level + 1);
        slot.state = SlotState::adjoined;
        slot.child = child;
        next.push_back(std::move(child));
        ++instantiated;
        d.depth = level + 1;
      }
    }
    frontier = std::move(next);
  }
}

Derivation sample_derivation(const Grammar& g, std::uint64_t seed, const SampleOptions& options) {
  Rng rng(seed);
  return sample_derivation(g, rng, options);
}

// --- derived trees -------------------------------------------------------------

namespace {

bool replace_foot(TreeNode& node, TreeNode& excised) {
  if (node.kind == NodeKind::foot) {
    node = std::move(excised);
    return true;
  }
  for (auto& child : node.children)
    if (replace_foot(child, excised)) return true;
  return false;
}

TreeNode derive(const DerivationNode& dnode, const Grammar& g) {
  std::map<std::string, const DerivationNode*, std::less<>> adjoined;
  for (const auto& slot : dnode.slots) {
    if (slot.state == SlotState::pending) throw std::invalid_argument("derivation is incomplete");
    if (slot.state == SlotState::adjoined) adjoined.emplace(slot.site, slot.child.get());
  }

  TreeNode root = g.tree(dnode.tree).root;
  auto rewrite = [&](auto&& self, TreeNode& node) -> void {
    for (auto& child : node.children) self(self, child);
    if (!node.site) return;
    auto it = adjoined.find(*node.site);
    if (it == adjoined.end()) return;
    TreeNode inserted = derive(*it->second, g);
    if (node.kind == NodeKind::substitution) {
      node = std::move(inserted);
      return;
    }
    TreeNode excised = std::move(node);
    if (!replace_foot(inserted, excised))
      throw std::logic_error("auxiliary tree '" + it->second->tree + "' has no foot");
    node = std::move(inserted);
  };
  rewrite(rewrite, root);
  return root;
}

}  // namespace

TreeNode derived_tree(const Derivation& d, const Grammar& g) {
  if (!d.complete || !d.root) throw std::invalid_argument("derivation is incomplete");
  TreeNode root = derive(*d.root, g);
  assign_addresses(root);
  return root;
}

std::vector<std::string> yield_string(const TreeNode& t) {
  std::vector<std::string> out;
  auto walk = [&](auto&& self, const TreeNode& node) -> void {
    switch (node.kind) {
      case NodeKind::anchor: out.push_back(node.label); return;
      case NodeKind::epsilon: return;
      case NodeKind::foot:
      case NodeKind::substitution:
        throw UnresolvedLeaf("unresolved " +
                             std::string(node.kind == NodeKind::foot ? "foot" : "substitution") +
                             " leaf '" + node.label + "' at " + format_address(node.address));
      case NodeKind::interior:
        for (const auto& child : node.children) self(self, child);
    }
  };
  walk(walk, t);
  return out;
}

// --- termination estimate ------------------------------------------------------

void SimulationStats::merge(const SimulationStats& other) {
  samples += other.samples;
  terminated += other.terminated;
  censored += other.censored;
  depth_sum += other.depth_sum;
  yield_sum += other.yield_sum;
}

void SimulationStats::finalize() {
  termination_rate = samples ? static_cast<double>(terminated) / static_cast<double>(samples) : 0.0;
  mean_depth = terminated ? static_cast<double>(depth_sum) / static_cast<double>(terminated) : 0.0;
  mean_yield_length =
      terminated ? static_cast<double>(yield_sum) / static_cast<double>(terminated) : 0.0;
}

namespace {

std::uint64_t binomial(std::uint64_t n, double p, Rng& rng) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  if (n <= 16) {
    std::uint64_t k = 0;
    for (std::uint64_t i = 0; i < n; ++i) k += rng.uniform() < p ? 1 : 0;
    return k;
  }
  std::binomial_distribution<std::uint64_t> dist(n, p);
  return dist(rng.engine());
}

struct CountSimulator {
  const Grammar& g;
  std::vector<std::vector<Outcome>> tables;
  StartSelector selector;
  const SimulationOptions& options;

  SimulationStats run_chunk(std::uint64_t stream, long count) const {
    Rng rng(sub_seed(options.seed, stream));
    SimulationStats stats;
    const auto k = g.sites().size();
    std::vector<std::uint64_t> live(k), next(k);
    for (long i = 0; i < count; ++i) {
      ++stats.samples;
      const auto start = selector.pick(rng);
      std::fill(live.begin(), live.end(), 0);
      for (auto s : g.sites_of_tree(start)) live[s] = 1;
      std::uint64_t anchors = g.anchor_count(start);
      std::uint64_t depth = 0;
      for (int level = 0;; ++level) {
        std::uint64_t total = 0;
        for (auto c : live) total += c;
        if (total == 0) {
          ++stats.terminated;
          stats.depth_sum += depth;
          stats.yield_sum += anchors;
          break;
        }
        if (level >= options.max_depth || total > options.population_cap) {
          ++stats.censored;
          break;
        }
        std::fill(next.begin(), next.end(), 0);
        bool created = false;
        for (std::size_t s = 0; s < k; ++s) {
          std::uint64_t remaining = live[s];
          double mass = 1.0;
          const auto& outcomes = tables[s];
          for (std::size_t o = 0; o < outcomes.size() && remaining > 0; ++o) {
            const bool last = o + 1 == outcomes.size();
            const std::uint64_t picked =
                last ? remaining : binomial(remaining, std::min(1.0, outcomes[o].prob / mass), rng);
            remaining -= picked;
            mass -= outcomes[o].prob;
            if (picked == 0 || outcomes[o].tree == kNil) continue;
            created = true;
            anchors += picked * g.anchor_count(outcomes[o].tree);
            for (auto site : g.sites_of_tree(outcomes[o].tree)) next[site] += picked;
          }
        }
        if (created) depth = static_cast<std::uint64_t>(level) + 1;
        live.swap(next);
      }
    }
    return stats;
  }
};

constexpr long kChunkSize = 4096;

}  // namespace

SimulationStats estimate_termination(const Grammar& g, const SimulationOptions& options) {
  if (options.samples < 1) throw std::invalid_argument("samples must be at least 1");
  const CountSimulator sim{g, outcome_tables(g), StartSelector(g, options.start_weights), options};

  const long chunks = (options.samples + kChunkSize - 1) / kChunkSize;
  std::vector<SimulationStats> results(static_cast<std::size_t>(chunks));
  std::atomic<long> next_chunk{0};
  auto worker = [&] {
    for (long c = next_chunk++; c < chunks; c = next_chunk++) {
      const long count = std::min(kChunkSize, options.samples - c * kChunkSize);
      results[static_cast<std::size_t>(c)] = sim.run_chunk(static_cast<std::uint64_t>(c), count);
    }
  };
  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(chunks));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }

  SimulationStats total;
  for (const auto& r : results) total.merge(r);
  total.seed = options.seed;
  total.finalize();
  return total;
}

// --- enumeration ---------------------------------------------------------------

EnumerationBudgetExceeded::EnumerationBudgetExceeded(std::size_t cap)
    : std::runtime_error("enumeration budget of " + std::to_string(cap) + " nodes exceeded") {}

namespace {

struct Alternative {
  std::shared_ptr<const DerivationNode> node;
  double probability;
  int depth;
};

class Enumerator {
 public:
  Enumerator(const Grammar& g, int max_depth, const EnumerationOptions& options)
      : g_(g), tables_(outcome_tables(g)), max_depth_(max_depth), options_(options) {}

  const std::vector<Alternative>& expand(std::size_t tree, int level,
                                         const std::optional<std::string>& at) {
    const auto key = std::make_tuple(tree, level, at);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    std::vector<Alternative> result;
    const auto& sites = g_.sites_of_tree(tree);
    if (sites.empty()) {
      result.push_back({make(tree, at, level, {}), 1.0, level});
    } else if (level < max_depth_) {
      struct Partial {
        std::vector<DerivationNode::Slot> slots;
        double probability;
        int depth;
      };
      std::vector<Partial> partials{{{}, 1.0, level}};
      for (auto site : sites) {
        const auto& site_id = g_.sites()[site].id;
        std::vector<Partial> extended;
        for (const auto& outcome : tables_[site]) {
          if (outcome.tree == kNil) {
            for (const auto& p : partials) {
              const double prob = p.probability * outcome.prob;
              if (prob < options_.prob_floor) continue;
              auto slots = p.slots;
              slots.push_back({site_id, SlotState::nil, nullptr});
              extended.push_back({std::move(slots), prob, p.depth});
            }
            continue;
          }
          const auto& children = expand(outcome.tree, level + 1, site_id);
          for (const auto& p : partials) {
            for (const auto& child : children) {
              const double prob = p.probability * outcome.prob * child.probability;
              if (prob < options_.prob_floor) continue;
              auto slots = p.slots;
              slots.push_back({site_id, SlotState::adjoined, child.node});
              extended.push_back({std::move(slots), prob, std::max(p.depth, child.depth)});
              charge();
            }
          }
        }
        partials = std::move(extended);
      }
      for (auto& p : partials)
        result.push_back({make(tree, at, level, std::move(p.slots)), p.probability, p.depth});
    }
    return memo_.emplace(key, std::move(result)).first->second;
  }

 private:
  std::shared_ptr<const DerivationNode> make(std::size_t tree, const std::optional<std::string>& at,
                                             int level, std::vector<DerivationNode::Slot> slots) {
    charge();
    auto node = std::make_shared<DerivationNode>();
    node->tree = g_.trees()[tree].id;
    node->at = at;
    node->level = level;
    node->slots = std::move(slots);
    return node;
  }

  void charge() {
    if (++nodes_ > options_.node_cap) throw EnumerationBudgetExceeded(options_.node_cap);
  }

  const Grammar& g_;
  std::vector<std::vector<Outcome>> tables_;
  int max_depth_;
  EnumerationOptions options_;
  std::size_t nodes_ = 0;
  std::map<std::tuple<std::size_t, int, std::optional<std::string>>, std::vector<Alternative>> memo_;
};

}  // namespace

std::vector<Derivation> enumerate_derivations(const Grammar& g, int max_depth,
                                              const EnumerationOptions& options) {
  if (max_depth < 0) throw std::invalid_argument("max_depth must be nonnegative");
  Enumerator enumerator(g, max_depth, options);
  std::vector<Derivation> out;
  for (auto t : g.start_trees()) {
    for (const auto& alt : enumerator.expand(t, 0, std::nullopt)) {
      if (alt.probability < options.prob_floor) continue;
      out.push_back({alt.node, true, alt.probability, alt.depth});
    }
  }
  return out;
}

// --- serialization -------------------------------------------------------------

namespace {

nlohmann::ordered_json node_json(const DerivationNode& node) {
  nlohmann::ordered_json out;
  out["tree"] = node.tree;
  out["at"] = node.at ? nlohmann::ordered_json(*node.at) : nlohmann::ordered_json(nullptr);
  auto children = nlohmann::ordered_json::object();
  for (const auto& slot : node.slots) {
    switch (slot.state) {
      case SlotState::nil: children[slot.site] = "nil"; break;
      case SlotState::pending: children[slot.site] = "pending"; break;
      case SlotState::adjoined: children[slot.site] = node_json(*slot.child); break;
    }
  }
  out["children"] = std::move(children);
  return out;
}

}  // namespace

std::string to_json(const DerivationNode& node) { return node_json(node).dump() + "\n"; }

std::string to_json(const SimulationStats& stats) {
  nlohmann::ordered_json out;
  out["samples"] = stats.samples;
  out["terminated"] = stats.terminated;
  out["censored"] = stats.censored;
  out["termination_rate"] = stats.termination_rate;
  out["mean_depth"] = stats.mean_depth;
  out["mean_yield_length"] = stats.mean_yield_length;
  out["seed"] = stats.seed;
  out["rng"] = stats.rng;
  return out.dump() + "\n";
}

}  // namespace ptag
