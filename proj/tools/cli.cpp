#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sigtest/cvar.hpp"
#include "sigtest/datasets.hpp"
#include "sigtest/error.hpp"
#include "sigtest/experiments.hpp"
#include "sigtest/model_io.hpp"
#include "sigtest/multiple_testing.hpp"
#include "sigtest/signature.hpp"
#include "sigtest/tails.hpp"

namespace sigtest::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "sigtest 0.1.0";
const std::vector<std::string> kCommands = {"simulate", "fit", "score", "test", "bench"};

// Flag values of one subcommand, kept as strings so the manifest can echo
// exactly what was used.
class Registry {
 public:
  void add(CLI::App* app, const std::string& name, const std::string& def, const std::string& help) {
    values_[name] = def;
    app->add_option("--" + name, values_[name], help)->capture_default_str();
  }
  const std::string& str(const std::string& name) const { return values_.at(name); }
  const std::map<std::string, std::string>& values() const { return values_; }

  double num(const std::string& name) const {
    const auto& s = str(name);
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw ConfigError("--" + name + " expects a number, got '" + s + "'");
    }
    return v;
  }
  long integer(const std::string& name) const {
    const auto& s = str(name);
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw ConfigError("--" + name + " expects an integer, got '" + s + "'");
    }
    return v;
  }
  std::size_t count(const std::string& name) const {
    const long v = integer(name);
    if (v < 0) throw ConfigError("--" + name + " must be >= 0");
    return static_cast<std::size_t>(v);
  }
  std::uint64_t u64(const std::string& name) const {
    const auto& s = str(name);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw ConfigError("--" + name + " expects a non-negative integer, got '" + s + "'");
    }
    return v;
  }
  std::vector<std::string> list(const std::string& name) const {
    std::vector<std::string> out;
    std::stringstream ss(str(name));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
};

void add_shared(CLI::App* app, Registry& reg) {
  reg.add(app, "input", "", "Input file");
  reg.add(app, "output", "", "Output directory");
  reg.add(app, "config", "", "Flat config file (JSON object or key=value lines)");
  reg.add(app, "seed", "0", "Random seed");
  reg.add(app, "level", "4", "Signature truncation level N");
  reg.add(app, "alpha", "0.1", "Significance level");
  reg.add(app, "stat", "dist", "Statistic: dist | conf | ocsvm (fit also accepts weibull)");
  reg.add(app, "pvalue-method", "empirical", "empirical | weibull");
  reg.add(app, "correction", "bh", "none | bh | storey");
  reg.add(app, "transforms", "none", "Comma list applied left to right: time, invisibility");
}

std::vector<PathTransform> parse_transforms(const Registry& reg) {
  std::vector<PathTransform> out;
  for (const auto& t : reg.list("transforms")) {
    if (t == "none") continue;
    out.push_back(parse_transform(t));
  }
  return out;
}

int level_of(const Registry& reg) {
  const long n = reg.integer("level");
  if (n < 1) throw ConfigError("--level must be >= 1");
  return static_cast<int>(n);
}

double alpha_of(const Registry& reg) {
  const double a = reg.num("alpha");
  if (!(a > 0.0 && a < 1.0)) throw ConfigError("--alpha must lie in (0, 1)");
  return a;
}

const std::string& require(const Registry& reg, const std::string& name) {
  const auto& v = reg.str(name);
  if (v.empty()) throw ConfigError("--" + name + " is required");
  return v;
}

fs::path output_dir(const Registry& reg) {
  fs::path dir = require(reg, "output");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write '" + p.string() + "'");
  return out;
}

void write_manifest(const fs::path& dir, const std::string& command, const Registry& reg) {
  nlohmann::json j;
  j["command"] = command;
  j["version"] = kVersion;
  for (const auto& [k, v] : reg.values()) {
    if (k == "output" || k == "config") continue;
    j[k] = v;
  }
  write_json_file((dir / "manifest.json").string(), j);
}

// --- small CSV helpers ------------------------------------------------------

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const std::string& file, std::size_t line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw DataError(file + ":" + std::to_string(line) + ": invalid number '" + s + "'");
  }
  return v;
}

struct NamedColumn {
  std::vector<std::string> ids;
  std::vector<double> values;
};

// Two-column CSV "path_id,<column>".
NamedColumn read_named_column(const std::string& file, const std::string& column) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open '" + file + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + file + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "path_id," + column) {
    throw DataError("'" + file + "' must start with header 'path_id," + column + "'");
  }
  NamedColumn out;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 2) throw DataError(file + ":" + std::to_string(n) + ": expected 2 columns");
    out.ids.push_back(cells[0]);
    out.values.push_back(parse_number(cells[1], file, n));
  }
  if (out.ids.empty()) throw DataError("'" + file + "' has no rows");
  return out;
}

void write_named_column(const fs::path& p, const std::string& column, std::span<const std::string> ids,
                        std::span<const double> values) {
  auto out = open_out(p);
  out << "path_id," << column << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << ',' << format_double(values[i]) << '\n';
}

std::vector<PathStream> read_paths(const Registry& reg) {
  auto paths = read_path_csv_file(require(reg, "input"));
  if (paths.empty()) throw DataError("input contains no paths");
  return paths;
}

// --- simulate ---------------------------------------------------------------

Eigen::MatrixXd parse_covariance(const Registry& reg, int dim) {
  const auto cells = reg.list("covariance");
  if (cells.empty()) return {};
  if (cells.size() != static_cast<std::size_t>(dim * dim)) {
    throw ConfigError("--covariance needs d*d comma-separated entries (row-major)");
  }
  Eigen::MatrixXd m(dim, dim);
  for (int i = 0; i < dim * dim; ++i) m(i / dim, i % dim) = parse_number(cells[static_cast<std::size_t>(i)], "--covariance", 0);
  return m;
}

void simulate_researchers(const Registry& reg, const fs::path& dir) {
  const std::size_t researchers = reg.count("researchers");
  const std::size_t n_ref = reg.count("reference-size");
  const std::size_t sets = reg.count("test-sets");
  const std::size_t size = reg.count("test-size");
  const double frac = reg.num("outlier-fraction");
  if (!(frac >= 0.0 && frac <= 1.0)) throw ConfigError("--outlier-fraction must lie in [0, 1]");
  const auto n_out = static_cast<std::size_t>(std::llround(frac * static_cast<double>(size)));
  const int steps = static_cast<int>(reg.integer("steps"));
  const double horizon = reg.num("horizon");
  SpikeConfig sc;
  sc.epsilon = reg.num("epsilon");
  sc.steps = steps;
  sc.horizon = horizon;
  sc.envelope = parse_spike_envelope(reg.str("envelope"));
  const std::uint64_t seed = reg.u64("seed");

  auto labels = open_out(dir / "labels.csv");
  labels << "path_id,label\n";
  for (std::size_t j = 0; j < researchers; ++j) {
    const std::uint64_t rs = derive_seed(seed, 1000 + j);
    const fs::path rdir = dir / ("researcher_" + std::to_string(j));
    fs::create_directories(rdir);
    const std::string tag = "r" + std::to_string(j);
    BmConfig bm;
    bm.n_paths = n_ref;
    bm.steps = steps;
    bm.horizon = horizon;
    bm.seed = derive_seed(rs, 1);
    bm.id_prefix = tag + "_ref";
    write_path_csv_file((rdir / "reference.csv").string(), simulate_bm(bm));
    for (std::size_t l = 0; l < sets; ++l) {
      const std::string set_tag = tag + "_t" + std::to_string(l);
      bm.n_paths = size - n_out;
      bm.seed = derive_seed(rs, 100 + 2 * l);
      bm.id_prefix = set_tag + "_in";
      auto paths = simulate_bm(bm);
      auto spiked = simulate_spiked_bm(sc, n_out, derive_seed(rs, 101 + 2 * l), 0, set_tag + "_out");
      for (const auto& p : paths) labels << p.id() << ",0\n";
      for (const auto& p : spiked) labels << p.id() << ",1\n";
      paths.insert(paths.end(), std::make_move_iterator(spiked.begin()), std::make_move_iterator(spiked.end()));
      write_path_csv_file((rdir / ("test_" + std::to_string(l) + ".csv")).string(), paths);
    }
  }
}

int cmd_simulate(const Registry& reg, std::ostream& out) {
  const auto dir = output_dir(reg);
  const std::string gen = reg.str("generator");
  const std::size_t n = reg.count("n");
  const int steps = static_cast<int>(reg.integer("steps"));
  const double horizon = reg.num("horizon");
  const std::uint64_t seed = reg.u64("seed");
  std::vector<PathStream> paths;
  if (gen == "bm") {
    BmConfig bm;
    bm.n_paths = n;
    bm.steps = steps;
    bm.horizon = horizon;
    bm.dim = static_cast<int>(reg.integer("dim"));
    bm.covariance = parse_covariance(reg, bm.dim);
    bm.seed = seed;
    paths = simulate_bm(bm);
  } else if (gen == "spike") {
    SpikeConfig sc;
    sc.epsilon = reg.num("epsilon");
    sc.steps = steps;
    sc.horizon = horizon;
    sc.envelope = parse_spike_envelope(reg.str("envelope"));
    paths = simulate_spiked_bm(sc, n, seed);
  } else if (gen == "fbm") {
    paths = simulate_fbm(reg.num("hurst"), n, steps, horizon, seed);
  } else if (gen == "researcher") {
    simulate_researchers(reg, dir);
    write_manifest(dir, "simulate", reg);
    out << "wrote researcher protocol to " << dir.string() << '\n';
    return kExitOk;
  } else {
    throw ConfigError("unknown generator '" + gen + "' (expected bm | spike | fbm | researcher)");
  }
  write_path_csv_file((dir / "paths.csv").string(), paths);
  write_manifest(dir, "simulate", reg);
  out << "wrote " << paths.size() << " paths to " << (dir / "paths.csv").string() << '\n';
  return kExitOk;
}

// --- fit --------------------------------------------------------------------

int cmd_fit(const Registry& reg, std::ostream& out) {
  const std::string stat = reg.str("stat");
  nlohmann::json model;
  if (stat == "weibull") {
    const auto scores = read_named_column(require(reg, "input"), "score");
    const auto tail = weibull_tail_fit(scores.values, level_of(reg), reg.num("tail-fraction"));
    model = tail;
  } else {
    FitOptions fo;
    fo.level = level_of(reg);
    fo.transforms = parse_transforms(reg);
    fo.ocsvm_nu = reg.num("nu");
    fo.conformance_ridge = reg.num("ridge");
    const auto kind = parse_stat_kind(stat);
    const auto paths = read_paths(reg);
    model = model_to_json(fit_score_model(kind, paths, fo));
    model["n_fit"] = paths.size();
  }
  const auto dir = output_dir(reg);
  write_json_file((dir / "model.json").string(), model);
  write_manifest(dir, "fit", reg);
  out << "wrote " << (dir / "model.json").string() << '\n';
  return kExitOk;
}

// --- score ------------------------------------------------------------------

int cmd_score(const Registry& reg, std::ostream& out) {
  const auto model = model_from_json(read_json_file(require(reg, "model")));
  const auto paths = read_paths(reg);
  const auto scores = model.score(paths);
  std::vector<std::string> ids;
  for (const auto& p : paths) ids.push_back(p.id());
  const auto dir = output_dir(reg);
  write_named_column(dir / "scores.csv", "score", ids, scores);
  write_manifest(dir, "score", reg);
  out << "wrote " << scores.size() << " scores to " << (dir / "scores.csv").string() << '\n';
  return kExitOk;
}

// --- test -------------------------------------------------------------------

int cmd_test(const Registry& reg, std::ostream& out) {
  const double alpha = alpha_of(reg);
  const auto method = parse_pvalue_method(reg.str("pvalue-method"));
  const auto correction = parse_correction(reg.str("correction"));
  const double lambda = reg.num("storey-lambda");
  auto scores = read_named_column(require(reg, "input"), "score");

  std::vector<double> pvals(scores.values.size());
  if (method == PvalueMethod::kEmpirical) {
    if (reg.str("calibration").empty()) {
      throw ConfigError("empirical p-values need --calibration (a scores CSV)");
    }
    auto cal = read_named_column(reg.str("calibration"), "score").values;
    std::sort(cal.begin(), cal.end());
    for (std::size_t i = 0; i < pvals.size(); ++i) pvals[i] = empirical_pvalue_sorted(scores.values[i], cal);
  } else {
    if (reg.str("tail-model").empty()) {
      throw ConfigError("weibull p-values need --tail-model (fit with --stat weibull)");
    }
    const auto tail = read_json_file(reg.str("tail-model")).get<TailModelWeibull>();
    for (std::size_t i = 0; i < pvals.size(); ++i) pvals[i] = parametric_pvalue(scores.values[i], tail);
  }
  const auto rejected = apply_correction(pvals, alpha, correction, lambda);

  std::vector<int> labels;
  if (!reg.str("labels").empty()) {
    const auto lab = read_named_column(reg.str("labels"), "label");
    std::map<std::string, int> by_id;
    for (std::size_t i = 0; i < lab.ids.size(); ++i) by_id[lab.ids[i]] = static_cast<int>(lab.values[i]);
    for (const auto& id : scores.ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) throw DataError("no label for path '" + id + "'");
      labels.push_back(it->second);
    }
  }
  std::optional<double> pi0;
  if (correction == Correction::kStorey) pi0 = storey_pi0(pvals, lambda);
  const auto report = make_report(scores.ids, scores.values, pvals, rejected, labels, alpha,
                                  pvalue_method_name(method), correction_name(correction), pi0);
  const auto dir = output_dir(reg);
  {
    auto csv = open_out(dir / "report.csv");
    write_report_csv(csv, report);
  }
  write_json_file((dir / "summary.json").string(), nlohmann::json(report));
  write_manifest(dir, "test", reg);
  out << report.summary.rejections << " of " << report.summary.items << " rejected\n";
  return kExitOk;
}

// --- bench ------------------------------------------------------------------

int cmd_bench(const Registry& reg, std::ostream& out, std::ostream& err) {
  const auto dir = output_dir(reg);
  const std::string scale = reg.str("scale");
  if (scale != "desk" && scale != "quick") throw ConfigError("--scale must be desk or quick");
  const bool quick = scale == "quick";
  const std::uint64_t seed = reg.u64("seed");
  const int level = level_of(reg);
  const auto transforms = parse_transforms(reg);
  const auto envelope = parse_spike_envelope(reg.str("envelope"));
  const int steps = static_cast<int>(reg.integer("steps"));
  auto panels = reg.list("panels");
  const std::vector<std::string> known = {"spike", "researcher", "tamsd", "stats", "pvalues", "cvar"};
  if (panels.size() == 1 && panels[0] == "all") panels = known;
  for (const auto& p : panels) {
    if (std::find(known.begin(), known.end(), p) == known.end()) {
      throw ConfigError("unknown bench panel '" + p + "'");
    }
  }
  auto want = [&](const std::string& p) { return std::find(panels.begin(), panels.end(), p) != panels.end(); };

  if (want("spike")) {
    SpikeSweepConfig c;
    c.seed = derive_seed(seed, 1);
    c.level = level;
    c.steps = steps;
    c.transforms = transforms;
    c.envelope = envelope;
    c.stat = parse_stat_kind(reg.str("stat"));
    if (quick) c.n_fit = 100, c.n_normal = 60, c.n_spiked = 60;
    const auto r = run_spike_sweep(c);
    auto f = open_out(dir / "spike_sweep.csv");
    write_csv(f, r);
    out << "spike sweep: spearman " << format_double(r.spearman) << '\n';
  }
  if (want("researcher")) {
    ResearcherConfig c;
    c.seed = derive_seed(seed, 2);
    c.level = level;
    c.steps = steps;
    c.alpha = alpha_of(reg);
    c.correction = parse_correction(reg.str("correction"));
    c.storey_lambda = reg.num("storey-lambda");
    c.transforms = transforms;
    c.envelope = envelope;
    c.stat = parse_stat_kind(reg.str("stat"));
    if (quick) {
      c.researchers = 2, c.n_reference = 50, c.n_calibration = 50, c.n_test_sets = 2, c.test_size = 40;
      c.weibull_sample = 200;
    }
    const auto r = run_researcher_protocol(c);
    auto f = open_out(dir / "researcher_fdr.csv");
    write_csv(f, r);
    auto s = open_out(dir / "researcher_summary.csv");
    write_summary_csv(s, r);
  }
  if (want("tamsd")) {
    TamsdConfig c;
    c.seed = derive_seed(seed, 3);
    c.steps = steps;
    if (quick) c.n_paths = 50;
    const auto r = run_tamsd_comparison(c);
    for (const auto& w : r.warnings) err << "warning: " << w << '\n';
    auto f = open_out(dir / "tamsd.csv");
    write_csv(f, r);
    auto s = open_out(dir / "tamsd_slopes.csv");
    write_slopes_csv(s, r);
  }
  if (want("stats")) {
    StatComparisonConfig c;
    c.seed = derive_seed(seed, 4);
    c.level = level;
    c.steps = steps;
    c.transforms = transforms;
    c.envelope = envelope;
    if (quick) c.n_fit = 60, c.n_test = 40;
    auto f = open_out(dir / "stat_comparison.csv");
    write_csv(f, run_stat_comparison(c));
  }
  if (want("pvalues")) {
    PvalueComparisonConfig c;
    c.seed = derive_seed(seed, 5);
    c.level = level;
    c.steps = steps;
    if (quick) c.n_fit = 100, c.n_calibration = 100, c.n_weibull = 500, c.n_null_test = 200;
    auto f = open_out(dir / "pvalue_calibration.csv");
    write_csv(f, run_pvalue_comparison(c));
  }
  if (want("cvar")) {
    CvarDemoConfig c;
    c.seed = derive_seed(seed, 6);
    if (quick) c.n_paths = 40, c.iterations = 5;
    auto f = open_out(dir / "cvar_descent.csv");
    write_csv(f, run_cvar_demo(c));
  }
  write_manifest(dir, "bench", reg);
  out << "wrote bench tables to " << dir.string() << '\n';
  return kExitOk;
}

// --- argument plumbing --------------------------------------------------------

bool flag_given(const std::vector<std::string>& args, const std::string& key) {
  const std::string flag = "--" + key;
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

std::string config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return {};
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return kExitConfig;
    case ErrorKind::kData:
      return kExitData;
    case ErrorKind::kNumerical:
      return kExitNumerical;
  }
  return kExitNumerical;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::vector<std::pair<std::string, std::string>> out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    for (const auto& [k, v] : j.items()) {
      if (v.is_string()) {
        out.emplace_back(k, v.get<std::string>());
      } else if (v.is_array()) {
        std::string joined;
        for (const auto& e : v) {
          if (!joined.empty()) joined += ',';
          joined += e.is_string() ? e.get<std::string>() : e.dump();
        }
        out.emplace_back(k, joined);
      } else if (v.is_object()) {
        throw ConfigError("config key '" + k + "' must be a scalar or a list");
      } else {
        out.emplace_back(k, v.dump());
      }
    }
    return out;
  }
  std::stringstream lines(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(n) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto l = s.find_first_not_of(" \t");
      const auto r = s.find_last_not_of(" \t");
      return l == std::string::npos ? std::string() : s.substr(l, r - l + 1);
    };
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

int run(const std::vector<std::string>& input_args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args = input_args;
  CLI::App app{"Signature-based novelty detection on path space", "sigtest"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::map<std::string, Registry> regs;
  std::map<std::string, CLI::App*> subs;

  {
    auto* s = app.add_subcommand("simulate", "Generate synthetic path datasets");
    auto& r = regs["simulate"];
    add_shared(s, r);
    r.add(s, "generator", "bm", "bm | spike | fbm | researcher");
    r.add(s, "n", "100", "Number of paths");
    r.add(s, "steps", "200", "Grid steps L");
    r.add(s, "dim", "1", "Dimension (bm)");
    r.add(s, "horizon", "2", "Time horizon T");
    r.add(s, "covariance", "", "Row-major d*d covariance (bm); identity when empty");
    r.add(s, "epsilon", "0", "Spike magnitude");
    r.add(s, "envelope", "scaled", "Spike envelope: scaled | capped");
    r.add(s, "hurst", "0.5", "Hurst index (fbm)");
    r.add(s, "researchers", "100", "Researcher preset: J");
    r.add(s, "reference-size", "2000", "Researcher preset: reference paths per researcher");
    r.add(s, "test-sets", "50", "Researcher preset: test sets per researcher");
    r.add(s, "test-size", "1000", "Researcher preset: paths per test set");
    r.add(s, "outlier-fraction", "0.1", "Researcher preset: spiked fraction per test set");
    subs["simulate"] = s;
  }
  {
    auto* s = app.add_subcommand("fit", "Fit a score model (or a Weibull tail model)");
    auto& r = regs["fit"];
    add_shared(s, r);
    r.add(s, "nu", "0.1", "OCSVM nu");
    r.add(s, "ridge", "-1", "Conformance ridge (< 0 selects 1e-8 trace/dim)");
    r.add(s, "tail-fraction", "0.2", "Weibull fit: top fraction of scores");
    subs["fit"] = s;
  }
  {
    auto* s = app.add_subcommand("score", "Score paths with a fitted model");
    auto& r = regs["score"];
    add_shared(s, r);
    r.add(s, "model", "", "Model JSON from fit");
    subs["score"] = s;
  }
  {
    auto* s = app.add_subcommand("test", "p-values, corrections and error rates for scores");
    auto& r = regs["test"];
    add_shared(s, r);
    r.add(s, "calibration", "", "Calibration scores CSV (empirical p-values)");
    r.add(s, "tail-model", "", "Weibull tail model JSON (weibull p-values)");
    r.add(s, "labels", "", "Labels CSV path_id,label (optional)");
    r.add(s, "storey-lambda", "0.5", "Storey lambda");
    subs["test"] = s;
  }
  {
    auto* s = app.add_subcommand("bench", "Run the synthetic experiment panels");
    auto& r = regs["bench"];
    add_shared(s, r);
    r.add(s, "panels", "all", "Comma list: spike, researcher, tamsd, stats, pvalues, cvar");
    r.add(s, "scale", "desk", "desk | quick");
    r.add(s, "steps", "200", "Grid steps L");
    r.add(s, "envelope", "scaled", "Spike envelope: scaled | capped");
    r.add(s, "storey-lambda", "0.5", "Storey lambda");
    subs["bench"] = s;
  }

  try {
    const std::string cfg_path = config_path(args);
    if (!cfg_path.empty()) {
      const auto cfg = read_config(cfg_path);
      const bool has_command = std::any_of(args.begin(), args.end(), [](const std::string& a) {
        return std::find(kCommands.begin(), kCommands.end(), a) != kCommands.end();
      });
      if (!has_command) {
        for (const auto& [k, v] : cfg) {
          if (k == "command") args.insert(args.begin(), v);
        }
      }
      for (const auto& [k, v] : cfg) {
        if (k == "command" || k == "version" || k == "config" || v.empty()) continue;
        if (!flag_given(args, k)) args.push_back("--" + k + "=" + v);
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    for (const auto& [name, sub] : subs) {
      if (!sub->parsed()) continue;
      const auto& reg = regs.at(name);
      if (name == "simulate") return cmd_simulate(reg, out);
      if (name == "fit") return cmd_fit(reg, out);
      if (name == "score") return cmd_score(reg, out);
      if (name == "test") return cmd_test(reg, out);
      if (name == "bench") return cmd_bench(reg, out, err);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON input: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return kExitNumerical;
  }
  return kExitConfig;
}

}  // namespace sigtest::cli
