/**
 * @file report.hpp
 * @brief Deterministic human and machine (JSON) reports.
 *
 * Every number is first rounded to the configured count of significant
 * digits (round half to even on the exact binary value) and only then
 * printed, so a machine report re-parsed and re-emitted is byte-identical.
 */
#pragma once

#include "job.hpp"

#include <errprop/errprop.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

namespace errprop::cli {

using ordered_json = nlohmann::ordered_json;

/// Rounds `v` to `digits` significant digits. printf's %e conversion rounds
/// the exact binary value and breaks exact ties to even in the default
/// rounding mode.
[[nodiscard]] inline double round_significant(double v, int digits) {
  if (!std::isfinite(v) || v == 0.0) return v;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits - 1, v);
  return std::strtod(buf, nullptr);
}

/// JSON value of a rounded number; non-finite values become strings.
[[nodiscard]] inline ordered_json number_json(double v, int digits) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  const double r = round_significant(v, digits);
  return r == 0.0 ? 0.0 : r;  // drop the sign of zero
}

[[nodiscard]] inline std::string number_text(double v, int digits) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  double r = round_significant(v, digits);
  if (r == 0.0) r = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, r);
  return buf;
}

[[nodiscard]] inline ordered_json vector_json(const Vector& v, int digits) {
  ordered_json a = ordered_json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(number_json(v(i), digits));
  return a;
}

[[nodiscard]] inline ordered_json matrix_json(const Matrix& m, int digits) {
  ordered_json a = ordered_json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(number_json(m(i, j), digits));
    a.push_back(std::move(row));
  }
  return a;
}

/// Canonical machine-report text: two-space indentation and a trailing newline.
[[nodiscard]] inline std::string canonical_dump(const ordered_json& report) {
  return report.dump(2) + "\n";
}

/// Re-parses a machine report and emits it canonically.
[[nodiscard]] inline std::string reemit(const std::string& machine_report) {
  return canonical_dump(ordered_json::parse(machine_report));
}

// ---------------------------------------------------------------------------
// Human-readable rendering of a machine report.

namespace detail {

inline std::string scalar_text(const ordered_json& v, int digits) {
  if (v.is_number_float()) return number_text(v.get<double>(), digits);
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

inline bool is_matrix(const ordered_json& v) {
  return v.is_array() && !v.empty() && v.front().is_array();
}

inline void render(std::ostringstream& os, const std::string& name, const ordered_json& v,
                   int digits, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  if (is_matrix(v)) {
    os << pad << name << ":\n";
    std::vector<std::vector<std::string>> cells;
    std::size_t width = 0;
    for (const auto& row : v) {
      auto& r = cells.emplace_back();
      for (const auto& x : row) {
        r.push_back(scalar_text(x, digits));
        width = std::max(width, r.back().size());
      }
    }
    for (const auto& r : cells) {
      os << pad << "  ";
      for (const auto& c : r) os << std::string(width + 2 - c.size(), ' ') << c;
      os << "\n";
    }
  } else if (v.is_array() && !v.empty() && v.front().is_object()) {
    os << pad << name << ":\n";
    for (const auto& item : v) {
      os << pad << "  -";
      bool first = true;
      for (const auto& [k, x] : item.items()) {
        os << (first ? " " : ", ") << k << " = "
           << (x.is_array() ? x.dump() : scalar_text(x, digits));
        first = false;
      }
      os << "\n";
    }
  } else if (v.is_array()) {
    os << pad << name << ":";
    if (v.empty()) os << " (none)";
    for (const auto& x : v) os << (x.is_string() ? "\n" + pad + "  " : "  ") << scalar_text(x, digits);
    os << "\n";
  } else if (v.is_object()) {
    os << pad << name << ":\n";
    for (const auto& [k, x] : v.items()) render(os, k, x, digits, indent + 2);
  } else {
    os << pad << name << ": " << scalar_text(v, digits) << "\n";
  }
}

}  // namespace detail

[[nodiscard]] inline std::string render_human(const ordered_json& report, int digits) {
  std::ostringstream os;
  for (const auto& [k, v] : report.items()) detail::render(os, k, v, digits, 0);
  return os.str();
}

// ---------------------------------------------------------------------------
// Report builders. Field order is part of the output contract.

inline ordered_json header(ProblemKind kind, const std::string& units) {
  ordered_json r;
  r["problem"] = to_string(kind);
  r["units"] = units;
  return r;
}

inline ordered_json warnings_json(const std::vector<std::string>& warnings) {
  ordered_json w = ordered_json::array();
  for (const auto& s : warnings) w.push_back(s);
  return w;
}

[[nodiscard]] inline ordered_json adjust_report(const AdjustmentResult& res,
                                                const std::string& units, int digits) {
  ordered_json r = header(ProblemKind::Adjust, units);
  r["measured_values"] = vector_json(res.measured_values, digits);
  r["residuals"] = vector_json(res.residuals, digits);
  r["sigma_unit"] = number_json(res.sigma_unit, digits);
  r["degrees_of_freedom"] = res.degrees_of_freedom;
  r["cofactor"] = matrix_json(res.cofactor, digits);
  r["solution_map"] = matrix_json(res.solution_map, digits);
  r["typeA_covariance"] = matrix_json(res.typeA_covariance, digits);
  r["standard_uncertainties"] = vector_json(res.standard_uncertainties(), digits);
  r["warnings"] = warnings_json(res.warnings);
  return r;
}

[[nodiscard]] inline ordered_json propagate_report(const CovarianceMatrix& out,
                                                   const std::string& units, int digits) {
  ordered_json r = header(ProblemKind::Propagate, units);
  r["covariance"] = matrix_json(out.matrix(), digits);
  r["standard_deviations"] = vector_json(out.standard_deviations(), digits);
  return r;
}

inline ordered_json expression_json(const ProbabilityExpression& e, int digits) {
  ordered_json o;
  o["expectation"] = number_json(e.expectation, digits);
  o["variance"] = number_json(e.variance, digits);
  return o;
}

[[nodiscard]] inline ordered_json synthesize_report(const UncertaintyReport& u,
                                                    const std::string& units, int digits) {
  ordered_json r = header(ProblemKind::Synthesize, units);
  r["typeA"] = number_json(u.typeA, digits);
  r["typeB"] = number_json(u.typeB, digits);
  r["covariance"] = number_json(u.covariance, digits);
  r["total"] = number_json(u.total, digits);
  r["coverage_factor"] = number_json(u.coverage_factor, digits);
  r["expanded"] = number_json(u.expanded, digits);
  const auto tv = true_value_expression(u.true_value_expectation, u.total);
  ordered_json table;
  table["measured_value"] = expression_json(tv.measured_value, digits);
  table["error"] = expression_json(tv.error, digits);
  table["true_value"] = expression_json(tv.true_value, digits);
  r["probability_expression"] = std::move(table);
  return r;
}

[[nodiscard]] inline ordered_json simulate_report(const CampaignSpec& spec,
                                                  const CampaignSummary& summary,
                                                  const CovarianceMatrix& analytic,
                                                  const std::vector<std::string>& warnings,
                                                  const std::string& units, int digits) {
  const LeastSquares solver(spec.design);
  ordered_json r = header(ProblemKind::Simulate, units);
  r["trials"] = summary.trials;
  r["seed"] = spec.seed;
  r["measured_values"] = vector_json(summary.mean_solution, digits);
  r["sigma_unit"] = number_json(summary.mean_sigma_unit, digits);
  r["degrees_of_freedom"] = summary.degrees_of_freedom;
  r["cofactor"] = matrix_json(solver.cofactor(), digits);
  r["solution_map"] = matrix_json(solver.solution_map(), digits);
  r["analytic_covariance"] = matrix_json(analytic.matrix(), digits);
  r["empirical_covariance"] = matrix_json(summary.solution_error_covariance, digits);
  ordered_json cmp = ordered_json::array();
  const Index t = analytic.dim();
  for (Index i = 0; i < t; ++i) {
    for (Index j = i; j < t; ++j) {
      const double a = analytic(i, j);
      const double e = summary.solution_error_covariance(i, j);
      ordered_json row;
      row["entry"] = {i, j};
      row["analytic"] = number_json(a, digits);
      row["empirical"] = number_json(e, digits);
      row["relative_difference"] =
          a == 0.0 ? number_json(e == 0.0 ? 0.0 : std::abs(e), digits)
                   : number_json((e - a) / std::abs(a), digits);
      cmp.push_back(std::move(row));
    }
  }
  r["comparison"] = std::move(cmp);
  r["warnings"] = warnings_json(warnings);
  return r;
}

[[nodiscard]] inline ordered_json dist_report(const DistJob& job, const std::string& units,
                                              int digits) {
  ordered_json r = header(ProblemKind::Dist, units);
  ordered_json d;
  d["kind"] = to_string(job.distribution.kind());
  d["parameter"] = number_json(job.distribution.parameter(), digits);
  r["distribution"] = std::move(d);
  r["expectation"] = number_json(expectation(job.distribution), digits);
  r["variance"] = number_json(variance(job.distribution), digits);
  r["standard_deviation"] = number_json(std::sqrt(variance(job.distribution)), digits);
  ordered_json pts = ordered_json::array();
  for (double x : job.points) {
    ordered_json p;
    p["delta"] = number_json(x, digits);
    p["density"] = number_json(pdf(job.distribution, x), digits);
    pts.push_back(std::move(p));
  }
  r["pdf"] = std::move(pts);
  if (job.samples > 0) {
    const auto seq = sample(job.distribution, job.samples, job.seed);
    const auto m = empirical_moments(seq, Center::Zero);
    ordered_json s;
    s["count"] = job.samples;
    s["seed"] = job.seed;
    s["mean"] = number_json(m.mean, digits);
    s["variance"] = number_json(m.variance, digits);
    r["samples"] = std::move(s);
  }
  return r;
}

}  // namespace errprop::cli
