/**
 * @file job.hpp
 * @brief Job files for the errprop command-line tool.
 *
 * A job file is a single JSON document describing one problem. Every value
 * is tagged with the line it appears on so that validation errors can point
 * at the offending field.
 */
#pragma once

#include <errprop/errprop.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace errprop::cli {

using json = nlohmann::json;

/// Validation failure: names the JSON pointer of the field and its line (0 if unknown).
class JobError : public InputError {
 public:
  JobError(std::string field, int line, const std::string& message)
      : InputError(describe(field, line, message)), field_(std::move(field)), line_(line) {}

  [[nodiscard]] const std::string& field() const noexcept { return field_; }
  [[nodiscard]] int line() const noexcept { return line_; }

 private:
  static std::string describe(const std::string& field, int line, const std::string& message) {
    std::string s;
    if (!field.empty()) s = "field '" + field + "'";
    if (line > 0) s += (s.empty() ? "line " : " (line ") + std::to_string(line) + (s.empty() ? "" : ")");
    return s.empty() ? message : s + ": " + message;
  }

  std::string field_;
  int line_;
};

namespace detail {

/// Character iterator that records how far the JSON lexer has read.
class TrackingIterator {
 public:
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  TrackingIterator() = default;
  TrackingIterator(const char* p, const char** furthest) : p_(p), furthest_(furthest) {}

  reference operator*() const { return *p_; }
  TrackingIterator& operator++() {
    ++p_;
    if (furthest_ && p_ > *furthest_) *furthest_ = p_;
    return *this;
  }
  TrackingIterator operator++(int) {
    auto old = *this;
    ++*this;
    return old;
  }
  friend bool operator==(const TrackingIterator& a, const TrackingIterator& b) {
    return a.p_ == b.p_;
  }

 private:
  const char* p_ = nullptr;
  const char** furthest_ = nullptr;
};

/// Builds the DOM while mapping each value's JSON pointer to a source line.
class LocatingSax {
 public:
  LocatingSax(json& root, std::string_view text, const char** furthest,
              std::map<std::string, int>& lines)
      : dom_(root, true), text_(text), furthest_(furthest), lines_(lines) {}

  bool null() { return scalar(dom_.null()); }
  bool boolean(bool v) { return scalar(dom_.boolean(v)); }
  bool number_integer(json::number_integer_t v) { return scalar(dom_.number_integer(v)); }
  bool number_unsigned(json::number_unsigned_t v) { return scalar(dom_.number_unsigned(v)); }
  bool number_float(json::number_float_t v, const json::string_t& s) {
    return scalar(dom_.number_float(v, s));
  }
  bool string(json::string_t& v) { return scalar(dom_.string(v)); }
  bool binary(json::binary_t& v) { return scalar(dom_.binary(v)); }

  bool start_object(std::size_t n) {
    record();
    frames_.push_back({false, {}, 0});
    return dom_.start_object(n);
  }
  bool key(json::string_t& k) {
    frames_.back().key = k;
    return dom_.key(k);
  }
  bool end_object() {
    frames_.pop_back();
    advance();
    return dom_.end_object();
  }
  bool start_array(std::size_t n) {
    record();
    frames_.push_back({true, {}, 0});
    return dom_.start_array(n);
  }
  bool end_array() {
    frames_.pop_back();
    advance();
    return dom_.end_array();
  }
  bool parse_error(std::size_t pos, const std::string&, const nlohmann::detail::exception& ex) {
    error_position = pos;
    error_message = ex.what();
    return false;
  }

  std::size_t error_position = 0;
  std::string error_message;

 private:
  struct Frame {
    bool array;
    std::string key;
    std::size_t index;
  };

  bool scalar(bool ok) {
    record();
    advance();
    return ok;
  }

  void advance() {
    if (!frames_.empty() && frames_.back().array) ++frames_.back().index;
  }

  void record() {
    std::string path;
    for (const auto& f : frames_) {
      path += '/';
      path += f.array ? std::to_string(f.index) : escape(f.key);
    }
    lines_.emplace(std::move(path), current_line());
  }

  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out += c;
    }
    return out;
  }

  // Line of the last non-blank character consumed; numbers make the lexer
  // read one character past their end.
  int current_line() const {
    auto end = static_cast<std::size_t>(*furthest_ - text_.data());
    while (end > 0 && (text_[end - 1] == ' ' || text_[end - 1] == '\t' ||
                       text_[end - 1] == '\n' || text_[end - 1] == '\r'))
      --end;
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + end, '\n'));
  }

  nlohmann::detail::json_sax_dom_parser<json> dom_;
  std::string_view text_;
  const char** furthest_;
  std::map<std::string, int>& lines_;
  std::vector<Frame> frames_;
};

}  // namespace detail

/// Parsed JSON plus the source line of every value.
class LocatedJson {
 public:
  static LocatedJson parse(std::string_view text) {
    LocatedJson doc;
    const char* furthest = text.data();
    detail::LocatingSax sax(doc.root_, text, &furthest, doc.lines_);
    if (!json::sax_parse(detail::TrackingIterator(text.data(), &furthest),
                         detail::TrackingIterator(text.data() + text.size(), &furthest), &sax)) {
      const auto end = std::min(text.size(), sax.error_position > 0 ? sax.error_position - 1 : 0);
      const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + end, '\n'));
      throw JobError("", line, "malformed JSON: " + sax.error_message);
    }
    return doc;
  }

  [[nodiscard]] const json& root() const noexcept { return root_; }

  [[nodiscard]] int line(const std::string& pointer) const {
    const auto it = lines_.find(pointer);
    return it == lines_.end() ? 0 : it->second;
  }

  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    throw JobError(pointer, line(pointer), message);
  }

 private:
  json root_;
  std::map<std::string, int> lines_;
};

enum class ProblemKind { Adjust, Propagate, Synthesize, Simulate, Dist };

[[nodiscard]] inline std::optional<ProblemKind> parse_problem_kind(std::string_view s) {
  if (s == "adjust") return ProblemKind::Adjust;
  if (s == "propagate") return ProblemKind::Propagate;
  if (s == "synthesize") return ProblemKind::Synthesize;
  if (s == "simulate") return ProblemKind::Simulate;
  if (s == "dist") return ProblemKind::Dist;
  return std::nullopt;
}

[[nodiscard]] inline const char* to_string(ProblemKind k) noexcept {
  switch (k) {
    case ProblemKind::Adjust: return "adjust";
    case ProblemKind::Propagate: return "propagate";
    case ProblemKind::Synthesize: return "synthesize";
    case ProblemKind::Simulate: return "simulate";
    case ProblemKind::Dist: return "dist";
  }
  return "unknown";
}

enum class OutputFormat { Human, Machine };

struct OutputOptions {
  int precision = 9;
  OutputFormat format = OutputFormat::Human;
};

enum class AdjustModel { General, SingleIndirect, Direct };

struct AdjustJob {
  AdjustModel model = AdjustModel::General;
  std::optional<DesignMatrix> design;
  Vector coefficients;  // single-indirect model
  Vector observations;
  int dof_warning_threshold = 10;
};

struct PropagateJob {
  LinearMap map{Matrix::Identity(1, 1)};
  CovarianceMatrix input{Matrix::Zero(1, 1)};
};

struct SynthesizeJob {
  double typeA = 0.0;
  double typeB = 0.0;
  std::optional<double> typeB_expanded;
  std::optional<double> typeB_coverage_factor;
  SynthesisOptions options;
};

struct SimulateJob {
  CampaignSpec spec{DesignMatrix(Matrix::Ones(2, 1)), Vector::Zero(1), {}};
};

struct DistJob {
  RegularErrorDistribution distribution = RegularErrorDistribution::normal(1.0);
  std::vector<double> points;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

struct JobFile {
  ProblemKind kind = ProblemKind::Adjust;
  int problem_line = 0;
  std::string units;
  OutputOptions output;
  std::variant<AdjustJob, PropagateJob, SynthesizeJob, SimulateJob, DistJob> job;
};

namespace detail {

class Reader {
 public:
  explicit Reader(const LocatedJson& doc) : doc_(doc) {}

  [[noreturn]] void fail(const std::string& ptr, const std::string& msg) const {
    doc_.fail(ptr, msg);
  }

  [[nodiscard]] const json* find(const std::string& ptr) const {
    const json::json_pointer p(ptr);
    return doc_.root().contains(p) ? &doc_.root().at(p) : nullptr;
  }

  [[nodiscard]] const json& require(const std::string& ptr) const {
    const json* v = find(ptr);
    if (!v) throw JobError(ptr, doc_.line(parent(ptr)), "missing required field");
    return *v;
  }

  [[nodiscard]] double number(const std::string& ptr) const { return as_number(require(ptr), ptr); }

  [[nodiscard]] std::optional<double> optional_number(const std::string& ptr) const {
    const json* v = find(ptr);
    return v ? std::optional(as_number(*v, ptr)) : std::nullopt;
  }

  [[nodiscard]] std::string string(const std::string& ptr) const {
    const json& v = require(ptr);
    if (!v.is_string()) fail(ptr, "expected a string");
    return v.get<std::string>();
  }

  [[nodiscard]] std::uint64_t unsigned_integer(const std::string& ptr) const {
    const json& v = require(ptr);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    fail(ptr, "expected a non-negative integer");
  }

  [[nodiscard]] bool boolean(const std::string& ptr) const {
    const json& v = require(ptr);
    if (!v.is_boolean()) fail(ptr, "expected true or false");
    return v.get<bool>();
  }

  [[nodiscard]] Vector vector(const std::string& ptr) const {
    const json& v = require(ptr);
    if (!v.is_array() || v.empty()) fail(ptr, "expected a non-empty array of numbers");
    Vector out(static_cast<Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
      out(static_cast<Index>(i)) = as_number(v[i], ptr + "/" + std::to_string(i));
    return out;
  }

  [[nodiscard]] Matrix matrix(const std::string& ptr) const {
    const json& v = require(ptr);
    if (!v.is_array() || v.empty()) fail(ptr, "expected a non-empty array of row arrays");
    std::size_t cols = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto row_ptr = ptr + "/" + std::to_string(i);
      if (!v[i].is_array() || v[i].empty()) fail(row_ptr, "expected a non-empty row array");
      if (i == 0) cols = v[i].size();
      if (v[i].size() != cols)
        fail(row_ptr, "row has " + std::to_string(v[i].size()) + " entries, expected " +
                          std::to_string(cols));
    }
    Matrix out(static_cast<Index>(v.size()), static_cast<Index>(cols));
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = 0; j < cols; ++j)
        out(static_cast<Index>(i), static_cast<Index>(j)) =
            as_number(v[i][j], ptr + "/" + std::to_string(i) + "/" + std::to_string(j));
    return out;
  }

  void allow_only(const std::string& ptr, const std::set<std::string>& keys) const {
    const json* obj = ptr.empty() ? &doc_.root() : find(ptr);
    if (!obj || !obj->is_object()) fail(ptr, "expected an object");
    for (const auto& item : obj->items())
      if (!keys.count(item.key())) fail(ptr + "/" + item.key(), "unknown field");
  }

  /// Runs `f`, re-labelling library InputErrors with the field they concern.
  template <typename F>
  auto at(const std::string& ptr, F&& f) const -> decltype(f()) {
    try {
      return f();
    } catch (const JobError&) {
      throw;
    } catch (const InputError& e) {
      fail(ptr, e.what());
    }
  }

 private:
  double as_number(const json& v, const std::string& ptr) const {
    if (!v.is_number()) fail(ptr, "expected a number");
    return v.get<double>();
  }

  static std::string parent(const std::string& ptr) {
    return ptr.substr(0, ptr.find_last_of('/'));
  }

  const LocatedJson& doc_;
};

inline ErrorBudget read_budget(const Reader& r, const std::string& ptr) {
  const json& arr = r.require(ptr);
  if (!arr.is_array()) r.fail(ptr, "expected an array of error sources");
  std::vector<ErrorSource> sources;
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const auto sp = ptr + "/" + std::to_string(k);
    r.allow_only(sp, {"kind", "sigma", "shared", "coefficients"});
    const auto kind_name = r.string(sp + "/kind");
    SourceKind kind;
    if (kind_name == "zero_point") kind = SourceKind::ZeroPoint;
    else if (kind_name == "proportional") kind = SourceKind::Proportional;
    else if (kind_name == "scale_nonuniformity") kind = SourceKind::ScaleNonUniformity;
    else if (kind_name == "custom") kind = SourceKind::Custom;
    else r.fail(sp + "/kind", "unknown source kind '" + kind_name +
                                  "' (zero_point, proportional, scale_nonuniformity, custom)");
    ErrorSource s{kind, r.number(sp + "/sigma"), default_sharing(kind), {}};
    if (!std::isfinite(s.sigma) || s.sigma < 0.0) r.fail(sp + "/sigma", "sigma must be >= 0");
    if (r.find(sp + "/shared"))
      s.sharing = r.boolean(sp + "/shared") ? Sharing::SharedAcrossObservations
                                            : Sharing::IndependentPerObservation;
    if (kind == SourceKind::Custom) {
      s.coefficients = to_std(r.vector(sp + "/coefficients"));
    } else if (r.find(sp + "/coefficients")) {
      r.fail(sp + "/coefficients", "only custom sources take coefficients");
    }
    sources.push_back(std::move(s));
  }
  return r.at(ptr, [&] { return ErrorBudget(std::move(sources)); });
}

inline void check_budget_fits(const Reader& r, const ErrorBudget& budget, Index n,
                              const std::string& ptr) {
  for (std::size_t k = 0; k < budget.size(); ++k)
    if (budget[k].kind == SourceKind::Custom &&
        budget[k].coefficients.size() != static_cast<std::size_t>(n))
      r.fail(ptr + "/" + std::to_string(k) + "/coefficients",
             "custom profile has " + std::to_string(budget[k].coefficients.size()) +
                 " coefficients for " + std::to_string(n) + " observations");
}

inline RegularErrorDistribution read_distribution(const Reader& r, const std::string& ptr) {
  r.allow_only(ptr, {"kind", "parameter"});
  const auto kind = r.string(ptr + "/kind");
  const double p = r.number(ptr + "/parameter");
  return r.at(ptr + "/parameter", [&] {
    if (kind == "arcsine") return RegularErrorDistribution::arcsine_cyclic(p);
    if (kind == "uniform") return RegularErrorDistribution::uniform_rounding(p);
    if (kind == "normal") return RegularErrorDistribution::normal(p);
    r.fail(ptr + "/kind", "unknown distribution '" + kind + "' (arcsine, uniform, normal)");
  });
}

inline AdjustJob read_adjust(const Reader& r) {
  r.allow_only("", {"problem", "units", "output", "model", "design", "coefficients",
                    "observations", "dof_warn"});
  AdjustJob job;
  const std::string model = r.find("/model") ? r.string("/model") : "general";
  job.observations = r.vector("/observations");
  const Index n = job.observations.size();
  if (model == "general") {
    const Matrix a = r.matrix("/design");
    if (a.rows() != n)
      r.fail("/observations", std::to_string(n) + " observations for a design matrix with " +
                                  std::to_string(a.rows()) + " rows");
    job.design = r.at("/design", [&] { return DesignMatrix(a); });
  } else if (model == "single_indirect") {
    job.model = AdjustModel::SingleIndirect;
    job.coefficients = r.vector("/coefficients");
    if (job.coefficients.size() != n)
      r.fail("/coefficients", std::to_string(job.coefficients.size()) + " coefficients for " +
                                  std::to_string(n) + " observations");
    if (job.coefficients.isZero(0.0)) r.fail("/coefficients", "coefficient vector is all zero");
  } else if (model == "direct") {
    job.model = AdjustModel::Direct;
    if (n < 2) r.fail("/observations", "direct model needs at least 2 observations");
  } else {
    r.fail("/model", "unknown model '" + model + "' (general, single_indirect, direct)");
  }
  if (model != "general" && r.find("/design")) r.fail("/design", "only the general model takes a design matrix");
  if (r.find("/dof_warn")) job.dof_warning_threshold = static_cast<int>(r.unsigned_integer("/dof_warn"));
  return job;
}

inline PropagateJob read_propagate(const Reader& r) {
  r.allow_only("", {"problem", "units", "output", "map", "offset", "covariance", "budget",
                    "observations"});
  const Matrix k = r.matrix("/map");
  std::optional<Vector> offset;
  if (r.find("/offset")) {
    offset = r.vector("/offset");
    if (offset->size() != k.rows())
      r.fail("/offset", "offset has " + std::to_string(offset->size()) + " entries for " +
                            std::to_string(k.rows()) + " map rows");
  }
  LinearMap map = r.at("/map", [&] { return LinearMap(k, offset); });

  const bool has_cov = r.find("/covariance") != nullptr;
  const bool has_budget = r.find("/budget") != nullptr;
  if (has_cov == has_budget)
    r.fail("", "give exactly one of 'covariance' or 'budget' (with 'observations')");
  std::optional<CovarianceMatrix> input;
  if (has_cov) {
    const Matrix d = r.matrix("/covariance");
    input = r.at("/covariance", [&] { return CovarianceMatrix(d); });
  } else {
    const ErrorBudget budget = read_budget(r, "/budget");
    const Vector x = r.vector("/observations");
    check_budget_fits(r, budget, x.size(), "/budget");
    input = r.at("/budget", [&] { return observation_covariance(budget, x); });
  }
  if (input->dim() != map.cols())
    r.fail(has_cov ? "/covariance" : "/observations",
           "dimension " + std::to_string(input->dim()) + " does not match the " +
               std::to_string(map.cols()) + " map columns");
  return {std::move(map), std::move(*input)};
}

inline SynthesizeJob read_synthesize(const Reader& r) {
  r.allow_only("", {"problem", "units", "output", "typeA", "typeB", "typeB_expanded",
                    "covariance", "coverage_factor", "measured_value"});
  SynthesizeJob job;
  job.typeA = r.number("/typeA");
  if (job.typeA < 0.0) r.fail("/typeA", "must be >= 0");
  const bool direct_b = r.find("/typeB") != nullptr;
  const bool expanded_b = r.find("/typeB_expanded") != nullptr;
  if (direct_b == expanded_b) r.fail("", "give exactly one of 'typeB' or 'typeB_expanded'");
  if (direct_b) {
    job.typeB = r.number("/typeB");
    if (job.typeB < 0.0) r.fail("/typeB", "must be >= 0");
  } else {
    r.allow_only("/typeB_expanded", {"value", "coverage_factor"});
    job.typeB_expanded = r.number("/typeB_expanded/value");
    job.typeB_coverage_factor = r.number("/typeB_expanded/coverage_factor");
    job.typeB = r.at("/typeB_expanded", [&] {
      return expanded_to_standard(*job.typeB_expanded, *job.typeB_coverage_factor).sigma;
    });
  }
  job.options.covariance = r.optional_number("/covariance");
  job.options.coverage_factor = r.optional_number("/coverage_factor").value_or(1.0);
  if (!(job.options.coverage_factor > 0.0)) r.fail("/coverage_factor", "must be > 0");
  job.options.measured_value = r.optional_number("/measured_value").value_or(0.0);
  if (job.options.covariance &&
      std::abs(*job.options.covariance) > job.typeA * job.typeB)
    r.fail("/covariance", "|covariance| exceeds typeA*typeB (Cauchy-Schwarz bound)");
  return job;
}

inline SimulateJob read_simulate(const Reader& r) {
  r.allow_only("", {"problem", "units", "output", "design", "true_values", "budget", "noise",
                    "trials", "seed"});
  const Matrix a = r.matrix("/design");
  DesignMatrix design = r.at("/design", [&] { return DesignMatrix(a); });
  const Vector truth = r.vector("/true_values");
  if (truth.size() != design.cols())
    r.fail("/true_values", std::to_string(truth.size()) + " true values for " +
                               std::to_string(design.cols()) + " design columns");
  ErrorBudget budget = r.find("/budget") ? read_budget(r, "/budget") : ErrorBudget{};
  check_budget_fits(r, budget, design.rows(), "/budget");
  RegularErrorDistribution noise =
      r.find("/noise") ? read_distribution(r, "/noise") : RegularErrorDistribution::normal(0.0);
  const std::uint64_t trials = r.unsigned_integer("/trials");
  if (trials < 2) r.fail("/trials", "need at least 2 trials");
  const std::uint64_t seed = r.find("/seed") ? r.unsigned_integer("/seed") : 0;
  return {CampaignSpec{std::move(design), truth, std::move(budget), noise,
                       static_cast<std::size_t>(trials), seed}};
}

inline DistJob read_dist(const Reader& r) {
  r.allow_only("", {"problem", "units", "output", "distribution", "points", "samples", "seed"});
  DistJob job;
  job.distribution = read_distribution(r, "/distribution");
  if (r.find("/points")) job.points = to_std(r.vector("/points"));
  if (r.find("/samples")) {
    job.samples = static_cast<std::size_t>(r.unsigned_integer("/samples"));
    if (job.samples == 0) r.fail("/samples", "must be >= 1");
  }
  if (r.find("/seed")) job.seed = r.unsigned_integer("/seed");
  return job;
}

}  // namespace detail

/// Parses and validates a job file. Throws JobError on any problem.
[[nodiscard]] inline JobFile parse_job(std::string_view text) {
  const LocatedJson doc = LocatedJson::parse(text);
  const detail::Reader r(doc);
  if (!doc.root().is_object()) r.fail("", "job file must be a JSON object");

  JobFile job;
  const auto problem = r.string("/problem");
  const auto kind = parse_problem_kind(problem);
  if (!kind)
    r.fail("/problem", "unknown problem '" + problem +
                           "' (adjust, propagate, synthesize, simulate, dist)");
  job.kind = *kind;
  job.problem_line = doc.line("/problem");
  if (r.find("/units")) job.units = r.string("/units");
  if (r.find("/output")) {
    r.allow_only("/output", {"precision", "format"});
    if (r.find("/output/precision")) {
      const auto p = r.unsigned_integer("/output/precision");
      if (p < 1 || p > 17) r.fail("/output/precision", "precision must be within 1..17");
      job.output.precision = static_cast<int>(p);
    }
    if (r.find("/output/format")) {
      const auto f = r.string("/output/format");
      if (f == "human") job.output.format = OutputFormat::Human;
      else if (f == "machine") job.output.format = OutputFormat::Machine;
      else r.fail("/output/format", "format must be 'human' or 'machine'");
    }
  }

  switch (job.kind) {
    case ProblemKind::Adjust: job.job = detail::read_adjust(r); break;
    case ProblemKind::Propagate: job.job = detail::read_propagate(r); break;
    case ProblemKind::Synthesize: job.job = detail::read_synthesize(r); break;
    case ProblemKind::Simulate: job.job = detail::read_simulate(r); break;
    case ProblemKind::Dist: job.job = detail::read_dist(r); break;
  }
  return job;
}

}  // namespace errprop::cli
