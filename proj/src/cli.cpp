#include "tqlm/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "spec_parse.hpp"
#include "tqlm/allocation.hpp"
#include "tqlm/elliptical_portfolio.hpp"
#include "tqlm/errors.hpp"
#include "tqlm/format.hpp"
#include "tqlm/reinsurance.hpp"
#include "tqlm/risk_engine.hpp"
#include "tqlm/selftest.hpp"

namespace tqlm::cli {
namespace {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// configuration

struct RunConfig {
  std::string command;
  std::string model;
  std::string input;
  std::string out;
  std::string format;
  std::string mu;
  std::string cov;
  std::vector<double> alphas;
  std::vector<double> gammas;
  std::vector<std::string> utilities;
  std::optional<double> theta;
  std::optional<double> budget;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  bool timing = false;
};

// Accepts TOML (CLI11's own reader) or a flat JSON object.
class TomlOrJsonConfig : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::string text((std::istreambuf_iterator<char>(input)), std::istreambuf_iterator<char>());
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') {
      std::istringstream again(text);
      return CLI::ConfigTOML::from_config(again);
    }
    Json doc;
    try {
      doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : doc.items()) {
      CLI::ConfigItem item;
      item.name = key;
      const auto scalar = [](const Json& v) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number_integer()) return std::to_string(v.get<long long>());
        if (v.is_number()) return format_shortest(v.get<double>());
        throw CLI::ConversionError("unsupported JSON value in config: " + v.dump());
      };
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }
};

// ---------------------------------------------------------------------------
// output

void append_number(std::string& out, double v) {
  if (std::isnan(v)) {
    out += "\"nan\"";
  } else if (std::isinf(v)) {
    out += v > 0 ? "\"inf\"" : "\"-inf\"";
  } else {
    out += format_g17(v);
  }
}

// JSON with insertion-ordered keys and %.17g floats.
void dump(const Json& j, std::string& out, int depth) {
  const std::string pad(2 * (depth + 1), ' ');
  const std::string close_pad(2 * depth, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(k).dump() + ": ";
        dump(v, out, depth + 1);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        dump(j[i], out, depth + 1);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case Json::value_t::number_float: append_number(out, j.get<double>()); return;
    default: out += j.dump(); return;
  }
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_g17(v);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string render() const {
    std::string out;
    const auto line = [&out](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += csv_field(cells[i]);
      }
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }
};

void write_output(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    out.flush();
    return;
  }
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write " + tmp.string());
    f << text;
    f.close();
    if (!f) throw InputError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw InputError("cannot move output into place at " + path + ": " + ec.message());
  }
}

// ---------------------------------------------------------------------------
// input

struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  const std::vector<double>& column(const std::string& name, const std::string& path) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError(path + " has no '" + name + "' column");
    return columns[static_cast<std::size_t>(it - header.begin())];
  }
};

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(std::string(detail::trim(cur)));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(std::string(detail::trim(cur)));
  return cells;
}

std::vector<std::vector<std::string>> read_rows(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (detail::trim(line).empty()) continue;
    rows.push_back(split_row(line));
  }
  if (rows.empty()) throw InputError(path + " is empty (a header row is required)");
  return rows;
}

CsvData read_csv(const std::string& path) {
  auto rows = read_rows(path);
  CsvData d;
  d.header = rows.front();
  d.columns.assign(d.header.size(), {});
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != d.header.size()) {
      throw InputError(path + " row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                       " fields, header has " + std::to_string(d.header.size()));
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      d.columns[c].push_back(detail::parse_decimal(rows[r][c], path));
    }
  }
  if (rows.size() < 2) throw InputError(path + " has no data rows");
  return d;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> v;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, ',')) v.push_back(detail::parse_decimal(cur, what));
  return v;
}

EllipticalModel load_elliptical(const RunConfig& cfg) {
  const DensityGenerator gen = cfg.model.empty() ? DensityGenerator::normal() : DensityGenerator::parse(cfg.model);
  std::vector<double> mu;
  std::vector<std::vector<double>> cov;
  if (!cfg.input.empty()) {
    const auto rows = read_rows(cfg.input);
    const std::size_t n = rows.front().size();
    if (rows.size() != n + 2) {
      throw InputError(cfg.input + " must hold a header row, a mean row and " + std::to_string(n) +
                       " covariance rows");
    }
    for (const auto& cell : rows[1]) mu.push_back(detail::parse_decimal(cell, cfg.input));
    for (std::size_t r = 2; r < rows.size(); ++r) {
      if (rows[r].size() != n) throw InputError(cfg.input + " has a ragged covariance row");
      std::vector<double> row;
      for (const auto& cell : rows[r]) row.push_back(detail::parse_decimal(cell, cfg.input));
      cov.push_back(row);
    }
  } else if (!cfg.mu.empty() && !cfg.cov.empty()) {
    mu = parse_list(cfg.mu, "--mu");
    std::istringstream in(cfg.cov);
    std::string row;
    while (std::getline(in, row, ';')) cov.push_back(parse_list(row, "--cov"));
  } else {
    throw InputError("portfolio needs --input <csv> or both --mu and --cov");
  }
  const auto n = static_cast<Eigen::Index>(mu.size());
  Eigen::VectorXd m(n);
  Eigen::MatrixXd s(n, n);
  if (static_cast<Eigen::Index>(cov.size()) != n) throw InputError("covariance must have one row per asset");
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i) = mu[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(cov[static_cast<std::size_t>(i)].size()) != n) {
      throw InputError("covariance row " + std::to_string(i) + " has the wrong length");
    }
    for (Eigen::Index k = 0; k < n; ++k) s(i, k) = cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  return EllipticalModel(m, s, gen);
}

// Loss source for measure/sweep: either a model or a sample.
struct Source {
  std::optional<SymmetricModel> model;
  std::optional<SampleSet> sample;
  std::string provenance;
};

Source load_source(const RunConfig& cfg) {
  Source s;
  if (!cfg.input.empty()) {
    s.sample = SampleSet(read_csv(cfg.input).column("loss", cfg.input));
    s.provenance = "csv:" + std::filesystem::path(cfg.input).filename().string();
    return s;
  }
  if (cfg.model.empty()) throw InputError("need --model <spec> or --input <csv>");
  const auto model = SymmetricModel::parse(cfg.model);
  if (cfg.paths > 0) {
    s.sample = model.sample(cfg.paths, cfg.seed);
    s.provenance = model.to_string() + " sampled n=" + std::to_string(cfg.paths) + " seed=" + std::to_string(cfg.seed);
  } else {
    s.model = model;
    s.provenance = model.to_string();
  }
  return s;
}

std::vector<UtilityFunction> utilities_of(const RunConfig& cfg) {
  std::vector<UtilityFunction> us;
  for (const auto& spec : cfg.utilities) us.push_back(UtilityFunction::parse(spec));
  for (double g : cfg.gammas) us.push_back(g == 0.0 ? UtilityFunction::linear() : UtilityFunction::exponential(g));
  if (us.empty()) us.push_back(UtilityFunction::linear());
  return us;
}

std::vector<double> alphas_of(const RunConfig& cfg, bool single) {
  std::vector<double> a = cfg.alphas;
  if (a.empty()) a.push_back(0.95);
  for (double x : a) {
    if (!(x > 0.0 && x < 1.0)) throw ParameterError("alpha must lie in (0,1), got " + format_shortest(x));
  }
  if (single && a.size() != 1) throw ParameterError("this command takes a single --alpha");
  return a;
}

constexpr const char* kEntropicWarning =
    "corrected sign: closed-form entropic tail term evaluated as +(1/gamma) log(Fbar_Y(q)/(1-alpha))";
constexpr const char* kTaylorWarning =
    "corrected sign: entropic second-order form evaluated as CTE + (gamma/2) TV";
constexpr const char* kLimitWarning =
    "corrected sign: unconditional entropic limit evaluated as mu + kappa(gamma sigma)/gamma";

struct Envelope {
  Json results = Json::array();
  std::vector<std::string> warnings;
  std::optional<CsvTable> table;

  void warn(const std::string& w) {
    if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
  }
};

Json nullable(std::optional<double> v) { return v ? Json(*v) : Json(nullptr); }

// ---------------------------------------------------------------------------
// commands

std::string sandwich_side(const UtilityFunction& u) {
  switch (u.curvature()) {
    case Curvature::linear: return "linear";
    case Curvature::concave: return "concave";
    case Curvature::convex: return "convex";
  }
  return "";
}

bool sandwich_holds(const UtilityFunction& u, double var, double cte, double tqlm) {
  const double tol = 1e-9 * std::max(1.0, std::fabs(cte));
  switch (u.curvature()) {
    case Curvature::linear: return std::fabs(tqlm - cte) <= tol;
    case Curvature::concave: return tqlm >= var - tol && tqlm <= cte + tol;
    case Curvature::convex: return tqlm >= cte - tol;
  }
  return false;
}

void cmd_measure(const RunConfig& cfg, Envelope& env) {
  const Source src = load_source(cfg);
  const bool empirical = src.sample.has_value();
  CsvTable table{{"alpha", "utility", "mode", "var", "cte", "tail_variance", "tqlm", "tcerm", "taylor",
                  "sandwich_side", "sandwich_holds"},
                 {}};
  for (double a : alphas_of(cfg, false)) {
    for (const auto& u : utilities_of(cfg)) {
      const bool entropic = u.kind() == UtilityKind::exponential;
      const auto report = [&](MeasureKind k) {
        return empirical ? empirical_report(*src.sample, a, k, u) : analytic_report(*src.model, a, k, u);
      };
      const RiskReport var = report(MeasureKind::var);
      const RiskReport cte = report(MeasureKind::cte);
      const RiskReport tv = report(MeasureKind::tail_variance);
      const RiskReport tq = report(MeasureKind::tqlm);
      std::optional<RiskReport> tc;
      std::optional<RiskReport> ty;
      if (entropic) {
        tc = report(MeasureKind::tcerm);
        ty = report(MeasureKind::taylor);
        if (!empirical) env.warn(kEntropicWarning);
        env.warn(kTaylorWarning);
      }
      const bool holds = sandwich_holds(u, var.value, cte.value, tq.value);

      Json rec;
      rec["alpha"] = a;
      rec["utility"] = u.to_string();
      rec["mode"] = empirical ? "empirical" : "analytic";
      rec["provenance"] = src.provenance;
      Json values;
      values["var"] = var.value;
      values["cte"] = cte.value;
      values["tail_variance"] = tv.value;
      values["tqlm"] = tq.value;
      if (tc) values["tcerm"] = tc->value;
      if (ty) values["taylor"] = ty->value;
      rec["values"] = values;
      if (empirical) {
        Json se;
        se["var"] = nullable(var.standard_error);
        se["cte"] = nullable(cte.standard_error);
        se["tail_variance"] = nullable(tv.standard_error);
        se["tqlm"] = nullable(tq.standard_error);
        if (tc) se["tcerm"] = nullable(tc->standard_error);
        rec["standard_errors"] = se;
      }
      rec["sandwich"] = Json{{"side", sandwich_side(u)}, {"holds", holds}};
      env.results.push_back(rec);

      table.rows.push_back({csv_number(a), u.to_string(), empirical ? "empirical" : "analytic",
                            csv_number(var.value), csv_number(cte.value), csv_number(tv.value),
                            csv_number(tq.value), tc ? csv_number(tc->value) : "",
                            ty ? csv_number(ty->value) : "", sandwich_side(u), holds ? "true" : "false"});
    }
  }
  env.table = table;
}

void cmd_sweep(const RunConfig& cfg, Envelope& env) {
  if (cfg.alphas.empty() || cfg.gammas.empty()) {
    throw InputError("sweep needs a nonempty grid: give --alpha and --gamma");
  }
  std::vector<double> alphas = alphas_of(cfg, false);
  std::vector<double> gammas = cfg.gammas;
  std::sort(alphas.begin(), alphas.end());
  alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());
  std::sort(gammas.begin(), gammas.end());
  gammas.erase(std::unique(gammas.begin(), gammas.end()), gammas.end());

  const Source src = load_source(cfg);
  const bool empirical = src.sample.has_value();
  CsvTable table{{"alpha", "gamma", "var", "cte", "tail_variance", "tqlm", "taylor"}, {}};
  for (double a : alphas) {
    const double var = empirical ? var_empirical(*src.sample, a) : var_analytic(*src.model, a);
    const double cte = empirical ? cte_empirical(*src.sample, a) : cte_analytic(*src.model, a);
    const double tv = empirical ? tail_variance_empirical(*src.sample, a) : tail_variance_analytic(*src.model, a);
    for (double g : gammas) {
      const auto u = g == 0.0 ? UtilityFunction::linear() : UtilityFunction::exponential(g);
      const double tq = empirical ? tcerm_empirical(*src.sample, a, g) : tcerm_analytic(*src.model, a, g);
      const double ty = taylor_tqlm(cte, tv, u);
      if (g != 0.0) {
        if (!empirical) env.warn(kEntropicWarning);
        env.warn(kTaylorWarning);
      }
      Json rec;
      rec["alpha"] = a;
      rec["gamma"] = g;
      rec["var"] = var;
      rec["cte"] = cte;
      rec["tail_variance"] = tv;
      rec["tqlm"] = tq;
      rec["taylor"] = ty;
      env.results.push_back(rec);
      table.rows.push_back({csv_number(a), csv_number(g), csv_number(var), csv_number(cte), csv_number(tv),
                            csv_number(tq), csv_number(ty)});
    }
  }
  env.table = table;
}

void cmd_allocate(const RunConfig& cfg, Envelope& env) {
  if (cfg.input.empty()) throw InputError("allocate needs --input <csv> with one column per component");
  const CsvData data = read_csv(cfg.input);
  const JointSample joint(data.columns);
  CsvTable table{{"alpha", "utility", "name", "value"}, {}};
  for (double a : alphas_of(cfg, false)) {
    for (const auto& u : utilities_of(cfg)) {
      const AllocationResult r = allocate(joint, a, u);
      Json comps = Json::array();
      for (std::size_t i = 0; i < r.contributions.size(); ++i) {
        comps.push_back(Json{{"name", data.header[i]}, {"contribution", r.contributions[i]}});
        table.rows.push_back({csv_number(a), u.to_string(), data.header[i], csv_number(r.contributions[i])});
      }
      Json rec;
      rec["alpha"] = a;
      rec["utility"] = u.to_string();
      rec["scenarios"] = joint.scenarios();
      rec["total"] = r.total;
      rec["contributions"] = comps;
      rec["gap"] = r.gap;
      rec["gap_standard_error"] = nullable(r.gap_standard_error);
      env.results.push_back(rec);
      table.rows.push_back({csv_number(a), u.to_string(), "total", csv_number(r.total)});
      table.rows.push_back({csv_number(a), u.to_string(), "gap", csv_number(r.gap)});
      table.rows.push_back({csv_number(a), u.to_string(), "gap_standard_error",
                            r.gap_standard_error ? csv_number(*r.gap_standard_error) : ""});
    }
  }
  env.table = table;
}

void cmd_reinsure(const RunConfig& cfg, Envelope& env) {
  if (!cfg.theta || !cfg.budget) throw InputError("reinsure needs --theta and --budget");
  LossModel loss = SampleSet({0.0});
  if (!cfg.input.empty()) {
    loss = SampleSet(read_csv(cfg.input).column("loss", cfg.input));
  } else if (!cfg.model.empty()) {
    loss = parse_loss(cfg.model);
    if (cfg.paths > 0) {
      const auto* m = std::get_if<SymmetricModel>(&loss);
      if (!m) throw ParameterError("--paths needs a symmetric loss model");
      loss = m->sample(cfg.paths, cfg.seed);
    }
  } else {
    throw InputError("reinsure needs --model <spec> or --input <csv>");
  }
  const double alpha = alphas_of(cfg, true).front();
  const ReinsuranceProblem p{loss, *cfg.theta, *cfg.budget, alpha};
  const RetentionSolution sol = solve_retention(p);

  Json rec;
  rec["loss"] = describe(loss);
  rec["alpha"] = alpha;
  rec["theta"] = p.theta;
  rec["budget"] = p.budget;
  rec["var"] = sol.var;
  rec["feasibility_bound"] = sol.feasibility_bound;
  rec["retention"] = sol.retention;
  rec["premium_residual"] = sol.premium_residual;
  rec["relative_residual"] = std::fabs(sol.premium_residual) / p.budget;

  CsvTable table{{"utility", "family", "treaty", "premium_residual", "risk", "margin", "passes"}, {}};
  Json per_utility = Json::array();
  for (const auto& u : utilities_of(cfg)) {
    Json ur;
    ur["utility"] = u.to_string();
    const double star = retained_risk(loss, Treaty::stop_loss(sol.retention), alpha, u);
    ur["stop_loss_risk"] = star;
    try {
      ur["no_treaty_risk"] = retained_risk(loss, Treaty::none(), alpha, u);
    } catch (const MgfNonexistentError&) {
      ur["no_treaty_risk"] = std::numeric_limits<double>::infinity();
    }
    table.rows.push_back({u.to_string(), "stop_loss", Treaty::stop_loss(sol.retention).to_string(),
                          csv_number(sol.premium_residual), csv_number(star), "0", "true"});
    if (!u.is_strictly_convex()) {
      ur["optimality"] = "skipped: utility is not strictly convex";
      per_utility.push_back(ur);
      continue;
    }
    Json families = Json::array();
    for (auto fam : {CandidateFamily::proportional, CandidateFamily::mixed_stop_loss}) {
      const OptimalityReport rep = verify_optimality(p, u, fam);
      Json cands = Json::array();
      for (const auto& c : rep.candidates) {
        cands.push_back(Json{{"treaty", c.treaty.to_string()},
                             {"premium_residual", c.premium_residual},
                             {"risk", c.risk},
                             {"margin", c.margin},
                             {"passes", c.passes}});
        table.rows.push_back({u.to_string(), to_string(fam), c.treaty.to_string(), csv_number(c.premium_residual),
                              csv_number(c.risk), csv_number(c.margin), c.passes ? "true" : "false"});
      }
      families.push_back(Json{{"family", to_string(fam)},
                              {"tolerance", rep.tolerance},
                              {"all_pass", rep.all_pass},
                              {"candidates", cands}});
    }
    ur["optimality"] = families;
    per_utility.push_back(ur);
  }
  rec["utilities"] = per_utility;
  env.results.push_back(rec);
  env.table = table;
}

Json vec_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

void cmd_portfolio(const RunConfig& cfg, Envelope& env) {
  const EllipticalModel m = load_elliptical(cfg);
  const double alpha = alphas_of(cfg, true).front();
  if (cfg.gammas.size() != 1) throw InputError("portfolio needs exactly one --gamma");
  const double gamma = cfg.gammas.front();
  env.warn(kEntropicWarning);
  CsvTable table{{"form", "asset", "pi_star", "oracle"}, {}};
  for (auto form : {RootEquationForm::scale_squared, RootEquationForm::variance}) {
    const MinRiskResult r = min_risk_weights(m, alpha, gamma, form);
    Json rec;
    rec["form"] = to_string(form);
    rec["generator"] = m.generator().to_string();
    rec["alpha"] = alpha;
    rec["gamma"] = gamma;
    rec["r_star"] = r.r_star;
    rec["pi_star"] = vec_json(r.pi_star.pi());
    rec["objective"] = r.objective;
    rec["phi1"] = vec_json(r.phi1);
    rec["phi2"] = vec_json(r.phi2);
    rec["sign_changes"] = r.sign_changes;
    rec["oracle_weights"] = vec_json(r.oracle.pi());
    rec["oracle_objective"] = r.oracle_objective;
    rec["oracle_margin"] = r.objective - r.oracle_objective;
    rec["max_deviation"] = r.max_deviation;
    rec["discrepancy"] = r.discrepancy;
    rec["diagnostic"] = r.diagnostic;
    env.results.push_back(rec);
    if (r.discrepancy) env.warn(to_string(form) + " root equation: " + r.diagnostic);
    for (std::size_t i = 0; i < r.pi_star.size(); ++i) {
      table.rows.push_back({to_string(form), std::to_string(i), csv_number(r.pi_star[i]), csv_number(r.oracle[i])});
    }
  }
  env.table = table;
}

bool cmd_selftest(const RunConfig& cfg, Envelope& env) {
  CsvTable table{{"property", "passed", "detail"}, {}};
  bool all = true;
  for (const auto& r : run_selftest(cfg.seed)) {
    env.results.push_back(Json{{"property", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    table.rows.push_back({r.name, r.passed ? "pass" : "FAIL", r.detail});
    all = all && r.passed;
  }
  env.table = table;
  return all;
}

std::string cmd_sample(const RunConfig& cfg) {
  if (cfg.model.empty() || cfg.paths == 0) throw InputError("sample needs --model and --paths > 0");
  const auto s = SymmetricModel::parse(cfg.model).sample(cfg.paths, cfg.seed);
  std::string out = "loss\n";
  for (double x : s.values()) out += format_g17(x) + "\n";
  return out;
}

Json config_echo(const RunConfig& cfg) {
  Json c;
  c["command"] = cfg.command;
  if (!cfg.model.empty()) c["model"] = cfg.model;
  if (!cfg.input.empty()) c["input"] = std::filesystem::path(cfg.input).filename().string();
  if (!cfg.mu.empty()) c["mu"] = cfg.mu;
  if (!cfg.cov.empty()) c["cov"] = cfg.cov;
  if (!cfg.alphas.empty()) c["alpha"] = cfg.alphas;
  if (!cfg.gammas.empty()) c["gamma"] = cfg.gammas;
  if (!cfg.utilities.empty()) c["utility"] = cfg.utilities;
  if (cfg.theta) c["theta"] = *cfg.theta;
  if (cfg.budget) c["budget"] = *cfg.budget;
  c["seed"] = cfg.seed;
  c["paths"] = cfg.paths;
  return c;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input:
    case ErrorKind::parameter: return usage;
    default: return numerical;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Tail quasi-linear mean and tail conditional entropic risk engine", "tqlm"};
  app.config_formatter(std::make_shared<TomlOrJsonConfig>());
  app.set_config("--config", "", "TOML or JSON file with option values (flags override it)");
  app.set_version_flag("--version", kVersion);
  app.add_option("--model", cfg.model, "normal(mu,sigma) | t(m,mu,sigma) | logistic(mu,sigma) | exponential(rate)");
  app.add_option("--input", cfg.input, "CSV scenario file (header row required)");
  app.add_option("--alpha", cfg.alphas, "Tail level(s) in (0,1)")->delimiter(',');
  app.add_option("--gamma", cfg.gammas, "Entropic coefficient(s); 0 means linear")->delimiter(',');
  app.add_option("--utility", cfg.utilities, "linear | exp:<g> | pow:<g> | log | cap:<c>")->delimiter(',');
  app.add_option("--theta", cfg.theta, "Premium loading");
  app.add_option("--budget", cfg.budget, "Reinsurance budget P");
  app.add_option("--seed", cfg.seed, "Random seed")->default_val(0);
  app.add_option("--paths", cfg.paths, "Monte-Carlo sample size (0 = analytic)")->default_val(0);
  app.add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--out", cfg.out, "Output path (written atomically)");
  app.add_option("--mu", cfg.mu, "Portfolio means, comma separated");
  app.add_option("--cov", cfg.cov, "Portfolio scale matrix, rows separated by ';'");
  app.add_flag("--timing", cfg.timing, "Include wall time in the JSON envelope");
  app.require_subcommand(1);
  for (const char* name : {"measure", "sweep", "allocate", "reinsure", "portfolio", "selftest", "sample"}) {
    app.add_subcommand(name)->fallthrough();
  }
  app.get_subcommand("measure")->description("VaR, CTE, TV, TQLM, entropic measure and Taylor form per (alpha, utility)");
  app.get_subcommand("sweep")->description("alpha x gamma grid as a plot-ready table");
  app.get_subcommand("allocate")->description("Capital allocation contributions and gap from joint scenarios");
  app.get_subcommand("reinsure")->description("Optimal stop-loss retention and premium-matched treaty comparison");
  app.get_subcommand("portfolio")->description("Minimal-risk portfolio weights with a direct-search cross-check");
  app.get_subcommand("selftest")->description("Run the invariant suite");
  app.get_subcommand("sample")->description("Write seeded draws of --model as a one-column CSV");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  const auto start = std::chrono::steady_clock::now();
  try {
    if (cfg.command == "sample") {
      write_output(cmd_sample(cfg), cfg.out, out);
      return ok;
    }
    Envelope env;
    bool passed = true;
    if (cfg.command == "measure") cmd_measure(cfg, env);
    else if (cfg.command == "sweep") cmd_sweep(cfg, env);
    else if (cfg.command == "allocate") cmd_allocate(cfg, env);
    else if (cfg.command == "reinsure") cmd_reinsure(cfg, env);
    else if (cfg.command == "portfolio") cmd_portfolio(cfg, env);
    else passed = cmd_selftest(cfg, env);

    std::string format = cfg.format;
    if (format.empty()) format = cfg.command == "sweep" ? "csv" : "json";
    std::string text;
    if (format == "csv") {
      text = env.table ? env.table->render() : "";
    } else {
      Json doc;
      doc["tool"] = "tqlm";
      doc["version"] = kVersion;
      doc["config"] = config_echo(cfg);
      doc["results"] = env.results;
      doc["warnings"] = env.warnings;
      if (cfg.timing) {
        doc["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      }
      dump(doc, text, 0);
      text += "\n";
    }
    write_output(text, cfg.out, out);
    if (!passed) {
      err << "selftest: at least one property failed\n";
      return selftest_failed;
    }
    return ok;
  } catch (const Error& e) {
    err << "error [" << static_cast<int>(e.kind()) << "]: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return numerical;
  }
}

}  // namespace tqlm::cli
