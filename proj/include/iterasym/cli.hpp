#ifndef ITERASYM_CLI_HPP
#define ITERASYM_CLI_HPP

// Command-line front end: estimate, table, expand, verify.  Everything is
// rendered into a buffer first so that a failed run leaves no partial output.

#include <iterasym/iterasym.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace iterasym::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_verify_failed = 1;
inline constexpr int exit_invalid_spec = 2;
inline constexpr int exit_extraction_failed = 3;
inline constexpr int exit_precision_exhausted = 4;

struct RunConfig {
  std::string subcommand;
  std::string map;
  int target_digits = 15;
  int guard_digits = 0;  // 0: automatic
  long k_max = 0;        // 0: extractor default
  std::string format = "text";
  std::string out;  // empty: stdout
  int jobs = 0;     // 0: number of processors
  std::string paper_table;
  std::string section;
  std::string order;
  std::string source;  // empty: template when one exists, else derive
  std::string suite = "all";
  int tolerance_digits = 0;  // 0: per-item default
  std::string data_dir;

  int effective_jobs() const {
    if (jobs > 0) return jobs;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
  }
  std::filesystem::path data_path() const { return data_dir.empty() ? default_data_dir() : std::filesystem::path(data_dir); }
  PrecisionPolicy policy() const { return {target_digits, guard_digits}; }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = {{"subcommand", c.subcommand}, {"map", c.map},         {"target_digits", c.target_digits},
       {"guard_digits", c.guard_digits}, {"k_max", c.k_max}, {"format", c.format},
       {"out", c.out},               {"jobs", c.jobs},       {"paper_table", c.paper_table},
       {"section", c.section},       {"order", c.order},     {"source", c.source},
       {"suite", c.suite},           {"tolerance_digits", c.tolerance_digits},
       {"data_dir", c.data_dir}};
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
  RunConfig d;
  c.subcommand = j.value("subcommand", d.subcommand);
  c.map = j.value("map", d.map);
  c.target_digits = j.value("target_digits", d.target_digits);
  c.guard_digits = j.value("guard_digits", d.guard_digits);
  c.k_max = j.value("k_max", d.k_max);
  c.format = j.value("format", d.format);
  c.out = j.value("out", d.out);
  c.jobs = j.value("jobs", d.jobs);
  c.paper_table = j.value("paper_table", d.paper_table);
  c.section = j.value("section", d.section);
  c.order = j.value("order", d.order);
  c.source = j.value("source", d.source);
  c.suite = j.value("suite", d.suite);
  c.tolerance_digits = j.value("tolerance_digits", d.tolerance_digits);
  c.data_dir = j.value("data_dir", d.data_dir);
}

/// Default target digits: $ITERASYM_PRECISION_DEFAULT, else 15.
inline int default_digits() {
  if (const char* env = std::getenv("ITERASYM_PRECISION_DEFAULT"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v > 0 && v < 100000) return static_cast<int>(v);
  }
  return 15;
}

// ---------------------------------------------------------------------------

/// A failure with the exit code it maps to.
struct Failure {
  int code = exit_ok;
  std::string message;
};

inline Failure classify_exception(std::exception_ptr ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const SpecError& e) {
    return {exit_invalid_spec, e.what()};
  } catch (const ParseError& e) {
    return {exit_invalid_spec, e.what()};
  } catch (const PrecisionExhausted& e) {
    return {exit_precision_exhausted, std::string("precision exhausted: ") + e.what()};
  } catch (const ExtractionError& e) {
    return {exit_extraction_failed, std::string("extraction: ") + e.what()};
  } catch (const MatchingError& e) {
    return {exit_extraction_failed, std::string("matching: ") + e.what()};
  } catch (const TemplateError& e) {
    return {exit_extraction_failed, std::string("template: ") + e.what()};
  } catch (const SeriesError& e) {
    return {exit_extraction_failed, std::string("series: ") + e.what()};
  } catch (const ClassificationError& e) {
    return {exit_extraction_failed, std::string("classification: ") + e.what()};
  } catch (const DomainViolation& e) {
    return {exit_extraction_failed, std::string("orbit: ") + e.what()};
  } catch (const std::exception& e) {
    return {exit_extraction_failed, e.what()};
  }
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.  fn must not throw.
inline void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& fn) {
  const size_t workers = std::min(n, static_cast<size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (size_t t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    });
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// Rendering.

inline nlohmann::json params_json(const MapSpec& spec) {
  nlohmann::json p = nlohmann::json::object();
  switch (spec.family) {
    case Family::logistic:
    case Family::logistic_plus: p["p"] = to_string(spec.p); break;
    case Family::power_sum: p["q"] = to_string(spec.q); break;
    case Family::reciprocal: p["s"] = to_string(spec.s); break;
    default: break;
  }
  return p;
}

inline nlohmann::json estimate_json(const ConstantEstimate& e, const MapSpec& spec) {
  nlohmann::json related = nlohmann::json::object();
  for (const auto& [k, v] : e.related) related[k] = v;
  return {{"map", e.map},
          {"params", params_json(spec)},
          {"x0", spec.x0.str()},
          {"method", std::string(to_string(e.method))},
          {"name", e.name},
          {"value", e.value},
          {"certified_digits", e.certified_digits},
          {"certification", std::string(to_string(e.certification))},
          {"k_used", e.k_used},
          {"precision_digits", e.precision_digits},
          {"elapsed_ms", e.elapsed_ms},
          {"related", related},
          {"note", e.note}};
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline std::string csv_line(const std::vector<std::string>& cells) {
  std::string out;
  for (size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_field(cells[i]);
  return out + "\n";
}

/// Splits one CSV record (quotes allowed) into fields.
inline std::vector<std::string> parse_csv_line(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') out.back() += '"', ++i;
      else if (c == '"') quoted = false;
      else out.back() += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string render(const std::string& format) const {
    std::ostringstream os;
    if (format == "json") {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& r : rows) {
        nlohmann::json o = nlohmann::json::object();
        for (size_t i = 0; i < columns.size(); ++i) o[columns[i]] = i < r.size() ? r[i] : "";
        arr.push_back(o);
      }
      os << arr.dump(2) << "\n";
    } else if (format == "csv") {
      os << csv_line(columns);
      for (const auto& r : rows) os << csv_line(r);
    } else {
      std::vector<size_t> w(columns.size());
      for (size_t i = 0; i < columns.size(); ++i) w[i] = columns[i].size();
      for (const auto& r : rows)
        for (size_t i = 0; i < r.size() && i < w.size(); ++i) w[i] = std::max(w[i], r[i].size());
      auto line = [&](const std::vector<std::string>& cells) {
        for (size_t i = 0; i < columns.size(); ++i) {
          const std::string c = i < cells.size() ? cells[i] : "";
          os << (i ? "  " : "") << std::left << std::setw(static_cast<int>(w[i])) << c;
        }
        os << "\n";
      };
      line(columns);
      for (const auto& r : rows) line(r);
    }
    return os.str();
  }
};

// ---------------------------------------------------------------------------
// Subcommands.  Each returns an exit code and appends to `out`/`err`.

inline int cmd_estimate(const RunConfig& cfg, std::string& out, std::string& err) {
  MapSpec spec;
  try {
    spec = parse_map_spec(cfg.map);
  } catch (...) {
    err += classify_exception(std::current_exception()).message + "\n";
    return exit_invalid_spec;
  }
  try {
    RecurrenceMap map(spec);
    auto e = estimate(map, cfg.policy(), cfg.k_max, cfg.data_path());
    const auto j = estimate_json(e, spec);
    if (cfg.format == "json") {
      out += j.dump(2) + "\n";
    } else if (cfg.format == "csv") {
      std::vector<std::string> cols{"map", "x0", "method", "name", "value", "certified_digits", "certification",
                                    "k_used", "precision_digits", "elapsed_ms"};
      std::vector<std::string> row;
      for (const auto& c : cols) row.push_back(j[c].is_string() ? j[c].get<std::string>() : j[c].dump());
      out += csv_line(cols) + csv_line(row);
    } else {
      std::ostringstream os;
      os << "map:              " << e.map << "\n"
         << e.name << std::string(e.name.size() < 18 ? 18 - e.name.size() : 1, ' ') << e.value << "\n";
      for (const auto& [k, v] : e.related) os << k << std::string(k.size() < 18 ? 18 - k.size() : 1, ' ') << v << "\n";
      os << "certified_digits: " << e.certified_digits << " (" << to_string(e.certification) << ")\n"
         << "method:           " << to_string(e.method) << "\n"
         << "k_used:           " << e.k_used << "\n"
         << "precision_digits: " << e.precision_digits << "\n"
         << "elapsed_ms:       " << std::fixed << std::setprecision(1) << e.elapsed_ms << "\n";
      if (!e.note.empty()) os << "note:             " << e.note << "\n";
      out += os.str();
    }
    return exit_ok;
  } catch (...) {
    auto f = classify_exception(std::current_exception());
    err += f.message + "\n";
    return f.code;
  }
}

namespace detail {

struct Job {
  std::string label;
  std::function<ConstantEstimate()> run;
  std::optional<ConstantEstimate> result;
  Failure failure;
};

inline void run_jobs(std::vector<Job>& jobs, int workers) {
  parallel_for(jobs.size(), workers, [&](size_t i) {
    try {
      jobs[i].result = jobs[i].run();
    } catch (...) {
      jobs[i].failure = classify_exception(std::current_exception());
    }
  });
}

inline PrecisionPolicy with_digits(const PrecisionPolicy& p, int digits) { return {digits, p.guard_digits}; }

}  // namespace detail

inline int cmd_table(const RunConfig& cfg, std::string& out, std::string& err) {
  const auto policy = cfg.policy();
  std::vector<detail::Job> jobs;
  Table table;
  bool any_failed = false;
  if (!cfg.paper_table.empty()) {
    if (cfg.paper_table != "1" && cfg.paper_table != "2") {
      err += "--paper-table must be 1 or 2\n";
      return exit_invalid_spec;
    }
    const bool plus = cfg.paper_table == "2";
    const std::vector<std::string> ps{"1/5", "1/4", "1/3", "2/5", "1/2", "3/5", "2/3", "3/4", "4/5", "1"};
    for (const auto& p : ps) {
      std::string text = plus ? (p == "1" ? "logistic-plus(p=1, x0=1)" : "logistic-plus(p=" + p + ", x0=auto-mid)")
                              : "logistic(p=" + p + ", x0=1/2)";
      jobs.push_back({p == "1" ? "1*" : p, [text, policy, &cfg] {
                        return estimate(parse_map(text), policy, cfg.k_max, cfg.data_path());
                      }, std::nullopt, {}});
    }
    detail::run_jobs(jobs, cfg.effective_jobs());
    table.columns = {"p", "C", "certified_digits", "certification", "method"};
    for (const auto& j : jobs) {
      if (j.result)
        table.rows.push_back({j.label, j.result->value, std::to_string(j.result->certified_digits),
                              std::string(to_string(j.result->certification)), std::string(to_string(j.result->method))});
      else {
        any_failed = true;
        table.rows.push_back({j.label, "ERROR: " + j.failure.message, "0", "", ""});
      }
    }
  } else if (cfg.section == "2" || cfg.section == "3" || cfg.section == "addendum") {
    struct RowDef {
      std::string name, map;
      std::optional<std::string> compare_to;  // name of the row whose value this one cross-checks
    };
    std::vector<RowDef> defs;
    if (cfg.section == "2") {
      defs = {{"C(x0=1/2)", "sqrt-map(x0=1/2)", {}},
              {"C(x0=4/9)", "sqrt-map(x0=4/9)", {}},
              {"C(x0=1/sqrt(3))", "cubic-map(x0=1/sqrt(3))", {}},
              {"u: C(x0=1/2)", "half-cubic(x0=1/2)", {}},
              {"v: C(x0=1/2)", "cos-map(x0=1/2)", {}},
              {"w: C(x0=1/2)", "gauss-exp(x0=1/2)", {}}};
    } else if (cfg.section == "3") {
      defs = {{"c(2)", "power-sum(q=2)", {}}, {"c(3)", "power-sum(q=3)", {}}, {"c(3/2)", "power-sum(q=3/2)", {}}};
    } else {
      defs = {{"Lambda", "reciprocal(s=3/2)", {}},
              {"c(2)-via-zeta", "reciprocal(s=2)", "c(2)"},
              {"c(3)-via-eta", "reciprocal(s=3)", "c(3)"},
              {"c(2)", "power-sum(q=2)", {}},
              {"c(3)", "power-sum(q=3)", {}}};
    }
    for (const auto& d : defs)
      jobs.push_back({d.name, [text = d.map, policy, &cfg] {
                        return estimate(parse_map(text), policy, cfg.k_max, cfg.data_path());
                      }, std::nullopt, {}});
    detail::run_jobs(jobs, cfg.effective_jobs());
    table.columns = {"name", "map", "value", "certified_digits", "certification", "delta"};
    auto find = [&](const std::string& name) -> const detail::Job* {
      for (const auto& j : jobs)
        if (j.label == name) return &j;
      return nullptr;
    };
    for (size_t i = 0; i < jobs.size(); ++i) {
      const auto& j = jobs[i];
      if (!j.result) {
        any_failed = true;
        table.rows.push_back({j.label, defs[i].map, "ERROR: " + j.failure.message, "0", "", ""});
        continue;
      }
      std::string delta;
      if (defs[i].compare_to)
        if (const auto* other = find(*defs[i].compare_to); other && other->result) {
          WorkingPrecision wp(j.result->precision_digits);
          delta = to_decimal(abs(j.result->real_value - other->result->real_value), 3);
        }
      table.rows.push_back({j.label, j.result->map, j.result->value, std::to_string(j.result->certified_digits),
                            std::string(to_string(j.result->certification)), delta});
      if (cfg.section == "3" && j.label == "c(2)") {
        WorkingPrecision wp(j.result->precision_digits);
        const Real v = j.result->real_value / sqrt(Real(2));
        table.rows.push_back({"c(2)/sqrt(2)", j.result->map, to_decimal(v, policy.target_digits + 2),
                              std::to_string(j.result->certified_digits), std::string(to_string(j.result->certification)), ""});
      }
    }
  } else {
    err += "table needs --paper-table 1|2 or --section 2|3|addendum\n";
    return exit_invalid_spec;
  }
  out += table.render(cfg.format);
  for (const auto& j : jobs)
    if (!j.result) err += "row " + j.label + ": " + j.failure.message + "\n";
  return any_failed ? exit_extraction_failed : exit_ok;
}

inline int cmd_expand(const RunConfig& cfg, std::string& out, std::string& err) {
  std::optional<RecurrenceMap> map;
  std::optional<Rational> order;
  try {
    map.emplace(parse_map(cfg.map));
    if (!cfg.order.empty()) order = parse_rational(cfg.order);
  } catch (...) {
    err += classify_exception(std::current_exception()).message + "\n";
    return exit_invalid_spec;
  }
  if (!cfg.source.empty() && cfg.source != "template" && cfg.source != "derive" && cfg.source != "both") {
    err += "--source must be template, derive or both\n";
    return exit_invalid_spec;
  }
  try {
    std::optional<ExpansionTemplate> stored;
    if (has_template(*map)) {
      stored = template_for(*map, cfg.data_path());
      if (stored->limit_only) stored.reset();
    }
    std::string source = cfg.source.empty() ? (stored ? "template" : "derive") : cfg.source;
    if ((source == "template" || source == "both") && !stored) {
      err += "no stored expansion for " + to_string(*map) + "; use --source derive\n";
      return exit_extraction_failed;
    }
    const Rational N = order ? *order : stored ? stored->order : equation_for(*map).ansatz.free_alpha + 2;
    auto emit = [&](const ExpansionTemplate& t) {
      if (cfg.format == "json") {
        out += template_to_json(t).dump(2) + "\n";
      } else if (cfg.format == "csv") {
        out += csv_line({"alpha", "ln_power", "coeff"});
        for (const auto& [key, c] : t.series.terms()) out += csv_line({to_string(key.alpha), std::to_string(key.ln_power), c.str()});
      } else if (cfg.format == "latex") {
        out += to_latex(t.series) + "\n";
      } else {
        out += "map:        " + to_string(t.spec) + "\nvariable:   " + t.scale.str() + "\nprovenance: " + t.provenance +
               "\nseries:     " + to_text(t.series) + "\n";
      }
    };
    if (source == "template") {
      ExpansionTemplate t = *stored;
      if (N < t.order) {
        t.series = t.series.truncated(N);
        t.order = N;
      } else if (N > t.order) {
        err += "note: stored expansion ends at order " + to_string(t.order) + "\n";
      }
      emit(t);
      return exit_ok;
    }
    ExpansionTemplate derived = derived_template(*map, N);
    if (source == "derive") {
      emit(derived);
      return exit_ok;
    }
    const Rational through = std::min(N, stored->order);
    const auto diff = first_difference(stored->series, derived.series, through);
    if (cfg.format == "json") {
      nlohmann::json j = {{"map", to_string(*map)}, {"through", to_string(through)}, {"identical", !diff}};
      if (diff)
        j["first_difference"] = {{"alpha", to_string(diff->alpha)},
                                 {"ln_power", diff->ln_power},
                                 {"template", stored->series.coeff(diff->alpha, diff->ln_power).str()},
                                 {"derived", derived.series.coeff(diff->alpha, diff->ln_power).str()}};
      out += j.dump(2) + "\n";
    } else if (!diff) {
      out += "IDENTICAL: template and derivation agree on all " + std::to_string(stored->series.head(through).size()) +
             " terms through order " + to_string(through) + "\n";
    } else {
      out += "DIFFERENT at ln(k)^" + std::to_string(diff->ln_power) + "/k^" + to_string(diff->alpha) + ": template " +
             stored->series.coeff(diff->alpha, diff->ln_power).str() + ", derived " +
             derived.series.coeff(diff->alpha, diff->ln_power).str() + "\n";
    }
    return diff ? exit_verify_failed : exit_ok;
  } catch (...) {
    auto f = classify_exception(std::current_exception());
    err += f.message + "\n";
    return f.code;
  }
}

// ---------------------------------------------------------------------------
// verify

struct VerifyItem {
  std::string suite;
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline VerifyItem check(std::string suite, std::string name, const std::function<std::pair<bool, std::string>()>& fn) {
  VerifyItem it{std::move(suite), std::move(name), false, ""};
  try {
    auto [ok, d] = fn();
    it.pass = ok;
    it.detail = std::move(d);
  } catch (...) {
    it.detail = classify_exception(std::current_exception()).message;
  }
  return it;
}

inline std::string residual_detail(const ResidualReport& r) {
  if (!r.pass) return r.message;
  if (r.first_residual_alpha)
    return "first residual implicates order " + to_string(*r.first_residual_alpha - 1) + " (stated " + to_string(r.stated_order) + ")";
  return "residual zero through k^-(" + to_string(r.checked_through) + ")" + " (stated " + to_string(r.stated_order) + ")";
}

inline std::pair<bool, std::string> same_series(const AsymptoticSeries& a, const AsymptoticSeries& b, const Rational& through,
                                                const std::string& what) {
  if (auto d = first_difference(a, b, through))
    return {false, what + " differ at ln(k)^" + std::to_string(d->ln_power) + "/k^" + to_string(d->alpha) + ": " +
                       a.coeff(d->alpha, d->ln_power).str() + " vs " + b.coeff(d->alpha, d->ln_power).str()};
  return {true, what + " agree through order " + to_string(through)};
}

}  // namespace detail

inline std::vector<VerifyItem> template_checks(const std::filesystem::path& data_dir) {
  std::vector<VerifyItem> items;
  const std::vector<std::string> maps{"sqrt-map(x0=1/2)", "logistic(p=1, x0=1/2)", "power-sum(q=2)", "power-sum(q=3)",
                                      "power-sum(q=3/2)", "reciprocal(s=3/2)", "reciprocal(s=2)", "reciprocal(s=3)"};
  for (const auto& text : maps) {
    const auto map = parse_map(text);
    const std::string file = *template_file_for(map.spec());
    items.push_back(detail::check("templates", "residual " + file, [&] {
      const auto t = template_for(map, data_dir);
      const auto r = verify_template(map, t);
      return std::pair{r.pass, detail::residual_detail(r)};
    }));
    items.push_back(detail::check("templates", "re-derivation " + file, [&] {
      const auto t = template_for(map, data_dir);
      const auto d = match_coefficients(equation_for(map), t.order);
      return detail::same_series(t.series, d, t.order, "template and derivation");
    }));
  }
  const auto general = [&] { return load_general_power_sum(data_dir); };
  for (const auto& q : {Rational(2), Rational(3), Rational(3, 2)}) {
    MapSpec spec;
    spec.family = Family::power_sum;
    spec.q = q;
    spec.x0 = StartValue::rational(1);
    const RecurrenceMap map(spec);
    items.push_back(detail::check("templates", "general-q display at q=" + to_string(q), [&] {
      const auto t = template_for(map, data_dir);
      const Rational through = 2 - 1 / q;
      return detail::same_series(general().specialize(q), t.series, through, "general display and fixed-q display");
    }));
    items.push_back(detail::check("templates", "y-form to x-form at q=" + to_string(q), [&] {
      const auto t = template_for(map, data_dir);
      const Rational through = 2 - 1 / q;
      return detail::same_series(power_sum_x_from_y(power_sum_coeffs(q)), t.series, through, "y-form power and x-form display");
    }));
    items.push_back(detail::check("templates", "alpha,beta,gamma,delta at q=" + to_string(q), [&] {
      const auto y = match_coefficients(power_sum_y_equation(q), 1);
      return detail::same_series(power_sum_y_series(power_sum_coeffs(q)), y, 1, "coefficient formulas and y-recurrence matching");
    }));
  }
  items.push_back(detail::check("templates", "P_m tables against derivation", [&] {
    const auto tables = load_sqrt_map_tables(data_dir);
    const auto fromP = expansion_from_tables(tables);
    const Rational through = fromP.truncation_order();
    return detail::same_series(fromP, match_coefficients(sqrt_map_equation(), through), through, "P_m expansion and derivation");
  }));
  items.push_back(detail::check("templates", "T_m, P_m degrees", [&] {
    const auto t = load_sqrt_map_tables(data_dir);
    for (const auto& [m, poly] : t.T)
      if (poly.degree() != m - 1) return std::pair{false, "T_" + std::to_string(m) + " has degree " + std::to_string(poly.degree())};
    for (const auto& [m, poly] : t.P)
      if (poly.degree() != m) return std::pair{false, "P_" + std::to_string(m) + " has degree " + std::to_string(poly.degree())};
    return std::pair{true, std::string("deg T_m = m-1, deg P_m = m")};
  }));
  items.push_back(detail::check("templates", "b_j and a_0j closed forms", [&] {
    const auto t = load_sqrt_map_tables(data_dir);
    for (size_t i = 0; i < t.b.size(); ++i) {
      const unsigned long j = i + 1;
      Rational want = Rational(binomial_int(2 * j + 1, j)) / Rational(Integer(1) << static_cast<mp_bitcnt_t>(j));
      if (t.b[i] != want) return std::pair{false, "b_" + std::to_string(j) + " = " + to_string(t.b[i]) + ", closed form " + to_string(want)};
    }
    for (size_t i = 0; i < t.a0.size(); ++i) {
      const unsigned long j = i + 1;
      Rational want = Rational(Integer(1) << static_cast<mp_bitcnt_t>(j - 1)) / Rational(static_cast<long>(j));
      if (t.a0[i] != want) return std::pair{false, "a_0" + std::to_string(j) + " = " + to_string(t.a0[i]) + ", closed form " + to_string(want)};
    }
    return std::pair{true, std::string("b_j = binom(2j+1,j)/2^j, a_0j = 2^(j-1)/j")};
  }));
  for (const auto& text : {std::string("cubic-map(x0=1/2)"), std::string("half-cubic(x0=1/2)"), std::string("cos-map(x0=1/2)"),
                           std::string("gauss-exp(x0=1/2)")}) {
    items.push_back(detail::check("templates", "derived residual " + text, [&] {
      const auto map = parse_map(text);
      const auto eq = equation_for(map);
      const Rational N = eq.ansatz.free_alpha + 5;
      const auto r = verify_series(eq, match_coefficients(eq, N), N);
      return std::pair{r.pass, detail::residual_detail(r)};
    }));
  }
  return items;
}

inline std::vector<VerifyItem> paper_checks(const RunConfig& cfg) {
  const auto data_dir = cfg.data_path();
  const auto constants = read_json(data_dir / "paper_constants.json");
  struct Pending {
    std::string name, map, reference;
    int need = 0;  // required agreeing digits; 0 means every printed decimal
    std::string transform;
  };
  std::vector<Pending> pending;
  for (const auto& it : constants.at("items")) {
    Pending p{it.at("id").get<std::string>(), it.at("map").get<std::string>(), it.at("value").get<std::string>(),
              it.value("min_digits", 0), it.value("transform", "")};
    if (cfg.tolerance_digits > 0) p.need = cfg.tolerance_digits;
    pending.push_back(std::move(p));
  }
  std::vector<detail::Job> jobs;
  for (const auto& p : pending) {
    // Printed decimals of large values need extra significant digits.
    const int printed_sig = static_cast<int>(p.reference.size()) - 1;
    const int digits = std::max(cfg.target_digits, (p.need ? p.need : printed_sig) + 2);
    const auto policy = detail::with_digits(cfg.policy(), digits);
    jobs.push_back({p.name, [text = p.map, policy, data_dir] { return estimate(parse_map(text), policy, 0, data_dir); },
                    std::nullopt, {}});
  }
  detail::run_jobs(jobs, cfg.effective_jobs());
  std::vector<VerifyItem> items;
  std::map<std::string, const ConstantEstimate*> by_name;
  for (size_t i = 0; i < jobs.size(); ++i) {
    const auto& p = pending[i];
    const auto& j = jobs[i];
    if (!j.result) {
      items.push_back({"paper", p.name, false, j.failure.message});
      continue;
    }
    by_name[p.name] = &*j.result;
    WorkingPrecision wp(j.result->precision_digits + 10);
    Real v = j.result->real_value;
    if (p.transform == "div_sqrt2") v /= sqrt(Real(2));
    const int agree = agreeing_digits(v, Real(p.reference), 200);
    const bool ok = p.need ? agree >= p.need && j.result->certified_digits >= p.need : matches_printed(v, p.reference);
    std::ostringstream d;
    d << to_decimal(v, std::min(j.result->precision_digits, std::max(agree + 2, 17))) << " vs " << p.reference << " ("
      << agree << " digits agree, " << j.result->certified_digits << " certified " << to_string(j.result->certification)
      << (p.need ? ", " + std::to_string(p.need) + " required)" : ", all printed decimals required)");
    items.push_back({"paper", p.name, ok, d.str()});
  }
  auto closure = [&](const std::string& name, const std::string& a, const std::string& b, bool square_a, const std::string& tol_text) {
    items.push_back(detail::check("paper", name, [&] {
      auto ia = by_name.find(a), ib = by_name.find(b);
      if (ia == by_name.end() || ib == by_name.end()) return std::pair{false, std::string("missing inputs")};
      WorkingPrecision wp(std::max(ia->second->precision_digits, ib->second->precision_digits));
      Real va = ia->second->real_value;
      if (square_a) va *= va;
      const Real delta = abs(va - ib->second->real_value);
      return std::pair{delta < Real(tol_text), "|delta| = " + to_decimal(delta, 3) + " < " + tol_text};
    }));
  };
  closure("sylvester^2 = logistic-plus(p=1)", "sylvester", "table2 p=1", true, "1e-13");
  closure("c(2) direct vs via s=2", "c(2)", "c(2) via s=2", false, "1e-12");
  closure("c(3) direct vs via s=3", "c(3)", "c(3) via s=3", false, "1e-12");
  auto scan = [&](const std::string& name, const std::string& family, const std::vector<std::string>& grid, size_t expect) {
    items.push_back(detail::check("paper", name, [&] {
      MapSpec base = parse_map_spec(family + "(x0=1/2)");
      std::vector<StartValue> xs;
      for (const auto& g : grid) xs.push_back(parse_start_value(g));
      const auto r = minimality_scan(base, xs, 12);
      std::string d = "argmin x0=" + r.points[r.argmin].x0.str() + " over";
      for (const auto& pt : r.points) d += " " + pt.x0.str() + ":" + pt.estimate.value;
      return std::pair{r.argmin == expect, d};
    }));
  };
  scan("sqrt-map minimality", "sqrt-map", {"7/20", "2/5", "4/9", "1/2", "11/20"}, 2);
  scan("cubic-map minimality", "cubic-map", {"1/2", "11/20", "sqrt(1/3)", "3/5", "13/20"}, 2);
  return items;
}

inline int cmd_verify(const RunConfig& cfg, std::string& out, std::string& err) {
  if (cfg.suite != "paper" && cfg.suite != "templates" && cfg.suite != "all") {
    err += "--suite must be paper, templates or all\n";
    return exit_invalid_spec;
  }
  std::vector<VerifyItem> items;
  try {
    if (cfg.suite != "paper") {
      auto t = template_checks(cfg.data_path());
      items.insert(items.end(), t.begin(), t.end());
    }
    if (cfg.suite != "templates") {
      auto p = paper_checks(cfg);
      items.insert(items.end(), p.begin(), p.end());
    }
  } catch (...) {
    auto f = classify_exception(std::current_exception());
    err += f.message + "\n";
    return f.code;
  }
  size_t failed = 0;
  for (const auto& it : items) failed += !it.pass;
  if (cfg.format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& it : items) arr.push_back({{"suite", it.suite}, {"name", it.name}, {"pass", it.pass}, {"detail", it.detail}});
    out += nlohmann::json{{"items", arr}, {"passed", items.size() - failed}, {"failed", failed}}.dump(2) + "\n";
  } else if (cfg.format == "csv") {
    out += csv_line({"suite", "name", "result", "detail"});
    for (const auto& it : items) out += csv_line({it.suite, it.name, it.pass ? "PASS" : "FAIL", it.detail});
  } else {
    for (const auto& it : items) out += std::string(it.pass ? "PASS " : "FAIL ") + it.name + ": " + it.detail + "\n";
    out += std::to_string(items.size() - failed) + "/" + std::to_string(items.size()) + " passed\n";
  }
  return failed ? exit_verify_failed : exit_ok;
}

// ---------------------------------------------------------------------------

/// Parses argv into a RunConfig.  Returns an exit code when parsing ends the
/// run (help, usage error).
inline std::optional<int> parse_args(int argc, const char* const* argv, RunConfig& cfg, std::string& out, std::string& err) {
  CLI::App app{"Asymptotic constants of nonlinear recurrences", "iterasym"};
  app.require_subcommand(1);
  cfg.target_digits = default_digits();
  auto common = [&](CLI::App* sub) {
    sub->add_option("--digits", cfg.target_digits, "target decimal digits")->check(CLI::Range(1, 100000));
    sub->add_option("--guard-digits", cfg.guard_digits, "extra working digits (default: automatic)")->check(CLI::NonNegativeNumber);
    sub->add_option("--k-max", cfg.k_max, "iteration depth override")->check(CLI::NonNegativeNumber);
    sub->add_option("--format", cfg.format, "text, json, csv or latex (expand only)")->check(CLI::IsMember({"text", "json", "csv", "latex"}));
    sub->add_option("--out", cfg.out, "output file (default: stdout)");
    sub->add_option("--jobs", cfg.jobs, "parallel rows (default: processors)")->check(CLI::NonNegativeNumber);
    sub->add_option("--data-dir", cfg.data_dir, "fixture directory");
  };
  auto* est = app.add_subcommand("estimate", "estimate a map's asymptotic constant");
  est->add_option("--map", cfg.map, "map spec, e.g. \"logistic(p=1/2, x0=1/2)\"")->required();
  common(est);
  auto* tab = app.add_subcommand("table", "reproduce a table of constants");
  auto* pt = tab->add_option("--paper-table", cfg.paper_table, "1 or 2");
  auto* sec = tab->add_option("--section", cfg.section, "2, 3 or addendum");
  pt->excludes(sec);
  common(tab);
  auto* exp = app.add_subcommand("expand", "print an exact asymptotic expansion");
  exp->add_option("--map", cfg.map, "map spec")->required();
  exp->add_option("--order", cfg.order, "truncation order, e.g. 6 or 5/2");
  exp->add_option("--source", cfg.source, "template, derive or both");
  common(exp);
  auto* ver = app.add_subcommand("verify", "check fixtures and published constants");
  ver->add_option("--suite", cfg.suite, "paper, templates or all");
  ver->add_option("--tolerance-digits", cfg.tolerance_digits, "required agreeing digits (default: per item)");
  common(ver);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out += o.str();
    err += e2.str();
    return code == 0 ? exit_ok : exit_invalid_spec;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();
  return std::nullopt;
}

inline int run(const RunConfig& cfg, std::string& out, std::string& err) {
  if (cfg.subcommand == "estimate") return cmd_estimate(cfg, out, err);
  if (cfg.subcommand == "table") return cmd_table(cfg, out, err);
  if (cfg.subcommand == "expand") return cmd_expand(cfg, out, err);
  if (cfg.subcommand == "verify") return cmd_verify(cfg, out, err);
  err += "unknown subcommand '" + cfg.subcommand + "'\n";
  return exit_invalid_spec;
}

/// Full CLI run: parse, execute, then write output (nothing on exit 2).
inline int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::string o, e;
  if (auto code = parse_args(argc, argv, cfg, o, e)) {
    out << o;
    err << e;
    return *code;
  }
  const int code = run(cfg, o, e);
  err << e;
  if (code == exit_invalid_spec) return code;
  if (cfg.out.empty()) {
    out << o;
  } else {
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f) {
      err << "cannot write " << cfg.out << "\n";
      return exit_extraction_failed;
    }
    f << o;
  }
  return code;
}

}  // namespace iterasym::cli

#endif  // ITERASYM_CLI_HPP
