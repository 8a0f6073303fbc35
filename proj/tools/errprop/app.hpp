/**
 * @file app.hpp
 * @brief Entry point of the errprop command-line tool, callable from tests.
 *
 * Exit status: 0 success, 1 invalid command line or job file, 2 numerical
 * failure (rank-deficient design, covariance not positive semidefinite).
 */
#pragma once

#include "job.hpp"
#include "report.hpp"

#include <errprop/errprop.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace errprop::cli {

enum ExitCode : int { kSuccess = 0, kValidationError = 1, kNumericalError = 2 };

struct Invocation {
  ProblemKind kind = ProblemKind::Adjust;
  std::string input;
  std::optional<std::string> output;
  std::optional<std::string> format;
  std::optional<int> precision;
  std::optional<std::uint64_t> seed;
  std::optional<int> dof_warn;
  unsigned threads = 0;
};

[[nodiscard]] inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read input file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Builds the complete report text for a parsed job. Nothing is written here,
/// so a failure never leaves a partial report behind.
[[nodiscard]] inline std::string execute(JobFile job, const Invocation& inv) {
  if (job.kind != inv.kind)
    throw JobError("/problem", job.problem_line,
                   std::string("job file describes '") + to_string(job.kind) +
                       "' but the '" + to_string(inv.kind) + "' subcommand was used");
  if (inv.precision) {
    if (*inv.precision < 1 || *inv.precision > 17)
      throw JobError("--precision", 0, "precision must be within 1..17");
    job.output.precision = *inv.precision;
  }
  if (inv.format) job.output.format = *inv.format == "machine" ? OutputFormat::Machine : OutputFormat::Human;
  const int digits = job.output.precision;

  ordered_json report;
  switch (job.kind) {
    case ProblemKind::Adjust: {
      auto& a = std::get<AdjustJob>(job.job);
      AdjustOptions opts{inv.dof_warn.value_or(a.dof_warning_threshold)};
      AdjustmentResult res;
      switch (a.model) {
        case AdjustModel::General: res = solve(*a.design, a.observations, opts); break;
        case AdjustModel::SingleIndirect:
          res = solve_single_indirect(a.coefficients, a.observations, opts);
          break;
        case AdjustModel::Direct: res = solve_direct(a.observations, opts); break;
      }
      report = adjust_report(res, job.units, digits);
      break;
    }
    case ProblemKind::Propagate: {
      const auto& p = std::get<PropagateJob>(job.job);
      report = propagate_report(propagate(p.map, p.input), job.units, digits);
      break;
    }
    case ProblemKind::Synthesize: {
      const auto& s = std::get<SynthesizeJob>(job.job);
      report = synthesize_report(synthesize(s.typeA, s.typeB, s.options), job.units, digits);
      break;
    }
    case ProblemKind::Simulate: {
      auto& s = std::get<SimulateJob>(job.job);
      if (inv.seed) s.spec.seed = *inv.seed;
      SimulationOptions opts;
      opts.threads = inv.threads;
      const auto summary = summarize(s.spec, opts);
      const auto analytic = analytic_solution_covariance(s.spec);
      AdjustmentResult probe;
      probe.degrees_of_freedom = summary.degrees_of_freedom;
      LeastSquares::flag_low_dof(probe, AdjustOptions{});
      report = simulate_report(s.spec, summary, analytic, probe.warnings, job.units, digits);
      break;
    }
    case ProblemKind::Dist:
      report = dist_report(std::get<DistJob>(job.job), job.units, digits);
      break;
  }
  return job.output.format == OutputFormat::Machine ? canonical_dump(report)
                                                    : render_human(report, digits);
}

/// Runs the tool on `args` (without the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"errprop: least-squares adjustment and uncertainty propagation"};
  app.require_subcommand(1);
  Invocation inv;

  struct Sub {
    ProblemKind kind;
    const char* help;
  };
  const Sub subs[] = {
      {ProblemKind::Adjust, "least-squares adjustment with Type A uncertainty"},
      {ProblemKind::Propagate, "propagate a covariance matrix through a linear map"},
      {ProblemKind::Synthesize, "combine Type A and Type B uncertainties"},
      {ProblemKind::Simulate, "Monte Carlo campaign compared against the analytic covariance"},
      {ProblemKind::Dist, "moments, density and samples of a regular-error distribution"},
  };
  std::vector<CLI::App*> commands;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(to_string(s.kind), s.help);
    sub->add_option("--input,-i", inv.input, "job file (JSON)")->required();
    sub->add_option("--output,-o", inv.output, "also write the report to this file");
    sub->add_option("--format", inv.format, "report format")
        ->check(CLI::IsMember({"human", "machine"}));
    sub->add_option("--precision", inv.precision, "significant digits (1..17)")
        ->check(CLI::Range(1, 17));
    if (s.kind == ProblemKind::Simulate) {
      sub->add_option("--seed", inv.seed, "override the job file seed");
      sub->add_option("--threads", inv.threads, "worker threads (0 = all cores)");
    }
    if (s.kind == ProblemKind::Adjust)
      sub->add_option("--dof-warn", inv.dof_warn, "warn below this many degrees of freedom")
          ->check(CLI::NonNegativeNumber);
    commands.push_back(sub);
  }

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "errprop: " << e.what() << "\n";
    return kValidationError;
  }
  for (std::size_t k = 0; k < commands.size(); ++k)
    if (commands[k]->parsed()) inv.kind = subs[k].kind;

  std::string text;
  try {
    text = execute(parse_job(read_file(inv.input)), inv);
  } catch (const NumericalError& e) {
    err << "errprop: numerical error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const InputError& e) {
    err << "errprop: validation error: " << e.what() << "\n";
    return kValidationError;
  }

  if (inv.output) {
    std::ofstream f(*inv.output, std::ios::binary);
    if (!f || !(f << text)) {
      err << "errprop: cannot write '" << *inv.output << "'\n";
      return kValidationError;
    }
  }
  out << text;
  return kSuccess;
}

}  // namespace errprop::cli
