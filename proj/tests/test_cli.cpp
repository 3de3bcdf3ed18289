#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace ptag::cli;
using ptag::testing::grammar_path;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("ptag_cli_" + name);
  std::ofstream(path) << content;
  return path.string();
}

}  // namespace

TEST_CASE("check verdicts and exit codes") {
  const auto ok = invoke({"check", grammar_path("grammar4.json")});
  CHECK(ok.code == kOk);
  CHECK(nlohmann::json::parse(ok.out)["verdict"] == "Consistent");

  const auto bad = invoke({"check", grammar_path("grammar2.json")});
  CHECK(bad.code == kInconsistent);
  CHECK(nlohmann::json::parse(bad.out)["verdict"] == "Inconsistent");

  const auto budget = invoke({"check", grammar_path("grammar2.json"), "--max-squarings", "3", "--tol", "100"});
  CHECK(budget.code == kIndeterminate);
  CHECK(nlohmann::json::parse(budget.out)["verdict"] == "Indeterminate");
}

TEST_CASE("matrix output") {
  const auto tsv = invoke({"matrix", grammar_path("grammar4.json"), "--which", "M", "--format", "tsv"});
  CHECK(tsv.code == kOk);
  CHECK(tsv.out.substr(0, tsv.out.find('\n')) == "0\t0.8\t0.8\t0.8\t0");
  CHECK(std::count(tsv.out.begin(), tsv.out.end(), '\n') == 5);

  const auto p = invoke({"matrix", grammar_path("grammar4.json"), "--which", "P"});
  CHECK(p.code == kOk);
  const auto doc = nlohmann::json::parse(p.out);
  CHECK(doc["columns"] == nlohmann::json::array({"t1", "t2", "t3"}));
  CHECK(doc["rows"].size() == 5);

  CHECK(invoke({"matrix", grammar_path("grammar4.json"), "--which", "Q"}).code == kUsage);
}

TEST_CASE("validate") {
  const auto ok = invoke({"validate", grammar_path("grammar4.json")});
  CHECK(ok.code == kOk);
  CHECK(ok.out == "[]\n");

  const auto path = write_temp("improper.json", R"({"start": "S", "trees": [
      {"id": "t1", "type": "initial", "root": {"label": "S", "site": "A", "children": [{"anchor": "a"}]}}],
      "phi": [{"site": "A", "tree": null, "prob": 0.5}]})");
  const auto bad = invoke({"validate", path});
  CHECK(bad.code == kValidationErrors);
  const auto doc = nlohmann::json::parse(bad.out);
  REQUIRE(doc.size() == 1);
  CHECK(doc[0]["code"] == "IMPROPER_SITE");
  CHECK(doc[0]["site"] == "A");

  const auto checked = invoke({"check", path});
  CHECK(checked.code == kValidationErrors);
  CHECK(checked.out.empty());
  CHECK(checked.err.find("IMPROPER_SITE") != std::string::npos);
}

TEST_CASE("input errors") {
  CHECK(invoke({"check", "/nonexistent/grammar.json"}).code == kUnreadableInput);
  const auto garbage = write_temp("garbage.json", "{ not json");
  const auto r = invoke({"check", garbage});
  CHECK(r.code == kMalformedInput);
  CHECK(r.out.empty());
  CHECK_FALSE(r.err.empty());
  CHECK(invoke({}).code == kUsage);
  CHECK(invoke({"frobnicate", grammar_path("grammar4.json")}).code == kUsage);
  CHECK(invoke({"check", grammar_path("grammar4.json"), "--bogus"}).code == kUsage);
  CHECK(invoke({"check"}).code == kUsage);
  CHECK(invoke({"--help"}).code == kOk);
}

TEST_CASE("gf") {
  const auto all = invoke({"gf", grammar_path("grammar4.json")});
  CHECK(all.code == kOk);
  const auto doc = nlohmann::json::parse(all.out);
  CHECK(doc["g"]["A1"] == "0.8*s[A2]*s[B1]*s[A3] + 0.2");

  const auto level = invoke({"gf", grammar_path("grammar4.json"), "--level", "2"});
  CHECK(level.code == kOk);
  const auto ldoc = nlohmann::json::parse(level.out);
  CHECK(ldoc["terms"] == 6);
  CHECK(std::abs(ldoc["constant"].get<double>() - 0.5072) <= 1e-12);

  CHECK(invoke({"gf", grammar_path("grammar2.json"), "--level", "8", "--term-cap", "10"}).code == kBudgetExceeded);
}

TEST_CASE("extinction") {
  const auto r = invoke({"extinction", grammar_path("grammar2.json")});
  CHECK(r.code == kOk);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(std::abs(doc["starts"][0]["probability"].get<double>() - 2.0 / 9702.0) <= 1e-12);

  const auto weights = write_temp("weights.json", R"({"t1": 1})");
  CHECK(invoke({"extinction", grammar_path("grammar2.json"), "--start-weights", weights}).code == kOk);
  const auto wrong = write_temp("wrong_weights.json", R"({"t2": 1})");
  CHECK(invoke({"extinction", grammar_path("grammar2.json"), "--start-weights", wrong}).code == kUsage);
}

TEST_CASE("simulate and enumerate") {
  const std::vector<std::string> args{"simulate", grammar_path("grammar4.json"), "--samples", "2000",
                                      "--seed", "11", "--emit", "2"};
  const auto a = invoke(args);
  const auto b = invoke(args);
  CHECK(a.code == kOk);
  CHECK(a.out == b.out);
  const auto doc = nlohmann::json::parse(a.out);
  CHECK(doc["stats"]["samples"] == 2000);
  CHECK(doc["stats"]["seed"] == 11);
  CHECK(doc["derivations"].size() == 2);

  const auto e = invoke({"enumerate", grammar_path("grammar4.json"), "--max-depth", "2"});
  CHECK(e.code == kOk);
  const auto edoc = nlohmann::json::parse(e.out);
  CHECK(std::abs(edoc["total_probability"].get<double>() - 0.5072) <= 1e-12);

  CHECK(invoke({"enumerate", grammar_path("grammar4.json"), "--max-depth", "5", "--node-cap", "5"}).code ==
        kBudgetExceeded);
}

TEST_CASE("every stdout is newline-terminated") {
  for (const auto& cmd : {"validate", "matrix", "check", "gf", "extinction", "enumerate"}) {
    const auto r = invoke({cmd, grammar_path("grammar4.json")});
    REQUIRE_FALSE(r.out.empty());
    CHECK(r.out.back() == '\n');
  }
}
