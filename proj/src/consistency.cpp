#include "ptag/consistency.hpp"

#include "json.hpp"

namespace ptag {

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::consistent: return "Consistent";
    case Verdict::inconsistent: return "Inconsistent";
    case Verdict::indeterminate: return "Indeterminate";
  }
  return "Indeterminate";
}

ConsistencyReport check_consistency(const Grammar& g, const ConsistencyOptions& options) {
  require_valid(g);
  return check_matrix_consistency(build_m<double>(g).values, options);
}

std::string to_json(const ConsistencyReport& report) {
  nlohmann::ordered_json out;
  out["verdict"] = std::string(to_string(report.verdict));
  out["squarings"] = report.squarings_used;
  out["rho_estimate"] = report.rho_estimate;
  out["rho_lower_bound"] = report.rho_lower_bound;
  out["tolerance"] = report.tolerance;
  auto trace = nlohmann::ordered_json::array();
  for (const auto& entry : report.trace) {
    // Rescaled powers carry their log scale as a third element.
    if (entry.log_scale == 0.0)
      trace.push_back({entry.k, entry.max_row_sum});
    else
      trace.push_back({entry.k, entry.max_row_sum, entry.log_scale});
  }
  out["trace"] = std::move(trace);
  return out.dump() + "\n";
}

}  // namespace ptag
