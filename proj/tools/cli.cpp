#include "cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ptag/branching.hpp"
#include "ptag/consistency.hpp"
#include "ptag/expectation.hpp"
#include "ptag/grammar.hpp"
#include "ptag/simulate.hpp"

namespace ptag::cli {

namespace {

// Raised for input files that cannot be read (exit 66).
struct Unreadable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised for input documents that cannot be interpreted (exit 65).
struct Malformed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Grammar read_grammar(const std::string& path) {
  try {
    return load_grammar(path);
  } catch (const std::ios_base::failure& e) {
    throw Unreadable(e.what());
  } catch (const GrammarError& e) {
    throw Malformed(path + ": " + e.what());
  }
}

std::optional<StartWeights> read_start_weights(const std::string& path) {
  if (path.empty()) return std::nullopt;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Unreadable("cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Malformed(path + ": " + e.what());
  }
  if (!doc.is_object()) throw Malformed(path + ": start weights must be an object {tree: weight}");
  StartWeights weights;
  for (const auto& [tree, value] : doc.items()) {
    if (!value.is_number()) throw Malformed(path + ": weight for '" + tree + "' is not a number");
    weights[tree] = value.get<double>();
  }
  return weights;
}

struct Settings {
  std::string grammar;
  int max_squarings = 64;
  std::optional<double> tol;
  std::string which = "M";
  std::string format = "json";
  std::optional<int> level;
  std::size_t term_cap = kDefaultTermCap;
  long samples = 10000;
  int max_depth = 200;
  std::uint64_t seed = 0;
  std::string start_weights;
  std::uint64_t population_cap = 100000;
  unsigned threads = 0;
  int emit = 0;
  long max_iter = 1000000;
  double prob_floor = 0.0;
  std::size_t node_cap = 1000000;
};

int cmd_validate(const Settings& s, std::ostream& out) {
  const auto diagnostics = validate(read_grammar(s.grammar));
  out << to_json(diagnostics);
  return has_errors(diagnostics) ? kValidationErrors : kOk;
}

int cmd_matrix(const Settings& s, std::ostream& out) {
  const auto g = read_grammar(s.grammar);
  require_valid(g);
  const SiteIndex idx(g);
  Matrix<double> m;
  std::vector<std::string> rows = idx.order(), cols = idx.order();
  if (s.which == "P") {
    m = build_p(g, idx);
    cols = tree_ids(g);
  } else if (s.which == "N") {
    m = build_n(g, idx);
    rows = tree_ids(g);
  } else {
    m = build_m(g).values;
  }
  out << (s.format == "tsv" ? to_tsv(m) : to_json(m, rows, cols));
  return kOk;
}

int cmd_check(const Settings& s, std::ostream& out) {
  const auto g = read_grammar(s.grammar);
  ConsistencyOptions options;
  options.max_squarings = s.max_squarings;
  options.tol = s.tol.value_or(1e-9);
  const auto report = check_consistency(g, options);
  out << to_json(report);
  switch (report.verdict) {
    case Verdict::consistent: return kOk;
    case Verdict::inconsistent: return kInconsistent;
    case Verdict::indeterminate: return kIndeterminate;
  }
  return kIndeterminate;
}

int cmd_gf(const Settings& s, std::ostream& out) {
  const auto g = read_grammar(s.grammar);
  require_valid(g);
  const SiteIndex idx(g);
  nlohmann::ordered_json doc;
  if (s.level) {
    const auto start = g.trees()[g.start_trees().front()].id;
    const auto p = level_gf(g, *s.level, s.term_cap, start);
    const auto split = constant_split(p);
    doc["level"] = *s.level;
    doc["start"] = start;
    doc["polynomial"] = p.to_string(idx.order());
    doc["terms"] = p.term_count();
    doc["constant"] = split.constant;
  } else {
    doc["order"] = idx.order();
    auto gfs = nlohmann::ordered_json::object();
    for (const auto& site : idx.order()) gfs[site] = adjunction_gf(g, site).to_string(idx.order());
    doc["g"] = std::move(gfs);
  }
  out << doc.dump() << "\n";
  return kOk;
}

int cmd_extinction(const Settings& s, std::ostream& out) {
  const auto g = read_grammar(s.grammar);
  require_valid(g);
  const auto q = extinction(g, s.tol.value_or(1e-12), s.max_iter, read_start_weights(s.start_weights));
  out << to_json(q);
  return kOk;
}

int cmd_simulate(const Settings& s, std::ostream& out) {
  const auto g = read_grammar(s.grammar);
  require_valid(g);
  SimulationOptions options;
  options.samples = s.samples;
  options.max_depth = s.max_depth;
  options.seed = s.seed;
  options.population_cap = s.population_cap;
  options.start_weights = read_start_weights(s.start_weights);
  options.threads = s.threads;
  const auto stats = estimate_termination(g, options);

  nlohmann::ordered_json doc;
  doc["stats"] = nlohmann::ordered_json::parse(to_json(stats));
  if (s.emit > 0) {
    SampleOptions sample;
    sample.max_depth = s.max_depth;
    sample.start_weights = options.start_weights;
    auto list = nlohmann::ordered_json::array();
    for (int i = 0; i < s.emit; ++i) {
      const auto d = sample_derivation(g, sub_seed(s.seed, ~static_cast<std::uint64_t>(i)), sample);
      nlohmann::ordered_json item;
      item["complete"] = d.complete;
      item["probability"] = d.probability;
      item["depth"] = d.depth;
      item["yield"] = d.complete ? nlohmann::ordered_json(yield_string(derived_tree(d, g)))
                                 : nlohmann::ordered_json(nullptr);
      item["derivation"] = nlohmann::ordered_json::parse(to_json(*d.root));
      list.push_back(std::move(item));
    }
    doc["derivations"] = std::move(list);
  }
  out << doc.dump() << "\n";
  return kOk;
}

int cmd_enumerate(const Settings& s, std::ostream& out) {
  const auto g = read_grammar(s.grammar);
  require_valid(g);
  EnumerationOptions options;
  options.prob_floor = s.prob_floor;
  options.node_cap = s.node_cap;
  const auto derivations = enumerate_derivations(g, s.max_depth, options);
  double total = 0.0;
  auto list = nlohmann::ordered_json::array();
  for (const auto& d : derivations) {
    total += d.probability;
    nlohmann::ordered_json item;
    item["probability"] = d.probability;
    item["depth"] = d.depth;
    item["yield"] = yield_string(derived_tree(d, g));
    item["derivation"] = nlohmann::ordered_json::parse(to_json(*d.root));
    list.push_back(std::move(item));
  }
  nlohmann::ordered_json doc;
  doc["max_depth"] = s.max_depth;
  doc["count"] = derivations.size();
  doc["total_probability"] = total;
  doc["derivations"] = std::move(list);
  out << doc.dump() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Consistency checking for probabilistic tree adjoining grammars", "ptag"};
  app.require_subcommand(1, 1);
  Settings s;

  auto add_grammar = [&](CLI::App* cmd) {
    cmd->add_option("grammar", s.grammar, "Grammar document (JSON)")->required();
  };

  auto* validate_cmd = app.add_subcommand("validate", "Report well-formedness diagnostics");
  add_grammar(validate_cmd);

  auto* matrix_cmd = app.add_subcommand("matrix", "Emit the P, N or M matrix");
  add_grammar(matrix_cmd);
  matrix_cmd->add_option("--which", s.which, "Matrix to emit")->check(CLI::IsMember({"P", "N", "M"}));
  matrix_cmd->add_option("--format", s.format, "Output format")->check(CLI::IsMember({"json", "tsv"}));

  auto* check_cmd = app.add_subcommand("check", "Decide consistency by repeated squaring");
  add_grammar(check_cmd);
  check_cmd->add_option("--max-squarings", s.max_squarings, "Squaring budget")->check(CLI::NonNegativeNumber);
  check_cmd->add_option("--tol", s.tol, "Tolerance on the spectral radius lower bound")
      ->check(CLI::NonNegativeNumber);

  auto* gf_cmd = app.add_subcommand("gf", "Adjunction or level generating functions");
  add_grammar(gf_cmd);
  gf_cmd->add_option("--level", s.level, "Emit the level-n generating function")->check(CLI::NonNegativeNumber);
  gf_cmd->add_option("--term-cap", s.term_cap, "Maximum number of terms")->check(CLI::PositiveNumber);

  auto* extinction_cmd = app.add_subcommand("extinction", "Extinction probabilities by fixed-point iteration");
  add_grammar(extinction_cmd);
  extinction_cmd->add_option("--tol", s.tol, "Convergence tolerance")->check(CLI::PositiveNumber);
  extinction_cmd->add_option("--max-iter", s.max_iter, "Iteration budget")->check(CLI::PositiveNumber);
  extinction_cmd->add_option("--start-weights", s.start_weights, "JSON {tree: weight} start distribution");

  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo termination estimate");
  add_grammar(simulate_cmd);
  simulate_cmd->add_option("--samples", s.samples, "Number of derivations")->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--max-depth", s.max_depth, "Depth cap")->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--seed", s.seed, "Random seed");
  simulate_cmd->add_option("--start-weights", s.start_weights, "JSON {tree: weight} start distribution");
  simulate_cmd->add_option("--population-cap", s.population_cap, "Censor beyond this many live sites")
      ->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--threads", s.threads, "Worker threads (0 = all cores)");
  simulate_cmd->add_option("--emit", s.emit, "Also emit this many sampled derivations")
      ->check(CLI::NonNegativeNumber);

  auto* enumerate_cmd = app.add_subcommand("enumerate", "Exhaustively enumerate short derivations");
  add_grammar(enumerate_cmd);
  int enumerate_depth = 3;
  enumerate_cmd->add_option("--max-depth", enumerate_depth, "Depth cap")->check(CLI::NonNegativeNumber);
  enumerate_cmd->add_option("--prob-floor", s.prob_floor, "Drop derivations below this probability")
      ->check(CLI::NonNegativeNumber);
  enumerate_cmd->add_option("--node-cap", s.node_cap, "Enumeration budget")->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (validate_cmd->parsed()) return cmd_validate(s, out);
    if (matrix_cmd->parsed()) return cmd_matrix(s, out);
    if (check_cmd->parsed()) return cmd_check(s, out);
    if (gf_cmd->parsed()) return cmd_gf(s, out);
    if (extinction_cmd->parsed()) return cmd_extinction(s, out);
    if (simulate_cmd->parsed()) return cmd_simulate(s, out);
    if (enumerate_cmd->parsed()) {
      s.max_depth = enumerate_depth;
      return cmd_enumerate(s, out);
    }
  } catch (const Unreadable& e) {
    err << "ptag: " << e.what() << "\n";
    return kUnreadableInput;
  } catch (const Malformed& e) {
    err << "ptag: " << e.what() << "\n";
    return kMalformedInput;
  } catch (const InvalidGrammar& e) {
    err << "ptag: grammar has validation errors\n" << to_json(e.diagnostics());
    return kValidationErrors;
  } catch (const TermCapExceeded& e) {
    err << "ptag: " << e.what() << "\n";
    return kBudgetExceeded;
  } catch (const EnumerationBudgetExceeded& e) {
    err << "ptag: " << e.what() << "\n";
    return kBudgetExceeded;
  } catch (const std::invalid_argument& e) {
    err << "ptag: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace ptag::cli
