// Simulation of TAG derivations.
//
// Derivations are generated level by level: every site of every tree at
// level i is resolved by an independent draw from phi before any tree of
// level i+1 is expanded.  A derivation is complete when no site remains; it
// is censored when sites remain at level max_depth.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptag/branching.hpp"
#include "ptag/grammar.hpp"

namespace ptag {

/// SplitMix64; used to derive independent sub-seeds from one seed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();

 private:
  std::uint64_t state_;
};

/// Seed for the i-th independent stream derived from `seed`.
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream);

/// mt19937_64 with a fixed uniform-double mapping.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64+splitmix64";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

enum class SlotState { nil, adjoined, pending };

struct DerivationNode {
  struct Slot {
    std::string site;
    SlotState state = SlotState::pending;
    std::shared_ptr<const DerivationNode> child;  // set iff adjoined
  };

  std::string tree;
  std::optional<std::string> at;  // parent site, absent for the start tree
  int level = 0;
  std::vector<Slot> slots;  // one per site of the tree, preorder
};

struct Derivation {
  std::shared_ptr<const DerivationNode> root;
  bool complete = false;
  /// Product of phi over every resolved site, NIL choices included.
  double probability = 1.0;
  /// Highest level of any instantiated tree.
  int depth = 0;
};

struct SampleOptions {
  int max_depth = 200;
  /// Stop (incomplete) once this many trees have been instantiated.
  std::size_t node_cap = 1000000;
  std::optional<StartWeights> start_weights;
};

Derivation sample_derivation(const Grammar& g, Rng& rng, const SampleOptions& options = {});
Derivation sample_derivation(const Grammar& g, std::uint64_t seed, const SampleOptions& options = {});

/// Derived tree by adjunction/substitution surgery.  Throws
/// std::invalid_argument for incomplete derivations.
TreeNode derived_tree(const Derivation& d, const Grammar& g);

class UnresolvedLeaf : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Anchor labels left to right, epsilon leaves dropped.  Throws
/// UnresolvedLeaf on a foot or substitution leaf.
std::vector<std::string> yield_string(const TreeNode& t);

struct SimulationOptions {
  long samples = 10000;
  int max_depth = 200;
  std::uint64_t seed = 0;
  /// Samples whose live site count exceeds this are censored; the chance
  /// that such a population still dies out is at most max_j q_j^cap.
  std::uint64_t population_cap = 100000;
  std::optional<StartWeights> start_weights;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
};

struct SimulationStats {
  long samples = 0;
  long terminated = 0;
  long censored = 0;
  double termination_rate = 0.0;
  /// Means over terminated samples.
  double mean_depth = 0.0;
  double mean_yield_length = 0.0;
  std::uint64_t seed = 0;
  std::string rng = Rng::kAlgorithm;

  // Exact sums, so merging is associative.
  std::uint64_t depth_sum = 0;
  std::uint64_t yield_sum = 0;

  void merge(const SimulationStats& other);
  void finalize();
};

/// Monte Carlo estimate of the termination probability.  Samples follow the
/// same level-wise process as sample_derivation but only track how many
/// instances of each site are alive, drawing the outcomes of all instances
/// of a site at once (multinomially).  Work is split into fixed chunks with
/// their own sub-seeds, so results do not depend on the thread count.
SimulationStats estimate_termination(const Grammar& g, const SimulationOptions& options = {});

class EnumerationBudgetExceeded : public std::runtime_error {
 public:
  explicit EnumerationBudgetExceeded(std::size_t cap);
};

struct EnumerationOptions {
  double prob_floor = 0.0;
  std::size_t node_cap = 1000000;
};

/// Every derivation from every start tree that completes within max_depth
/// and has probability >= prob_floor.  Zero-probability outcomes are skipped.
std::vector<Derivation> enumerate_derivations(const Grammar& g, int max_depth,
                                              const EnumerationOptions& options = {});

std::string to_json(const DerivationNode& node);
std::string to_json(const SimulationStats& stats);

}  // namespace ptag
