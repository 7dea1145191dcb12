#include "sigtest/model_io.hpp"

#include <fstream>
#include <sstream>

#include "sigtest/error.hpp"

namespace sigtest {

StatKind parse_stat_kind(const std::string& name) {
  if (name == "dist") return StatKind::kDistance;
  if (name == "conf") return StatKind::kConformance;
  if (name == "ocsvm") return StatKind::kOcsvm;
  throw ConfigError("unknown statistic '" + name + "' (expected dist | conf | ocsvm)");
}

std::string stat_kind_name(StatKind kind) {
  switch (kind) {
    case StatKind::kDistance:
      return "dist";
    case StatKind::kConformance:
      return "conf";
    case StatKind::kOcsvm:
      return "ocsvm";
  }
  return "dist";
}

std::vector<PathStream> transform_all(std::span<const PathStream> paths,
                                      std::span<const PathTransform> transforms) {
  std::vector<PathStream> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(apply_transforms(p, transforms));
  return out;
}

int ScoreModel::level() const {
  return std::visit([](const auto& m) { return m.level; }, model);
}

int ScoreModel::dim() const {
  return std::visit([](const auto& m) { return m.dim; }, model);
}

double ScoreModel::score(const PathStream& raw) const {
  const PathStream x = apply_transforms(raw, transforms);
  if (x.dim() != dim()) {
    throw DataError("path '" + raw.id() + "' has dimension " + std::to_string(x.dim()) +
                    " after transforms, model expects " + std::to_string(dim()));
  }
  switch (kind) {
    case StatKind::kDistance:
      return distance_to_mean(x, std::get<ExpectedSignatureModel>(model));
    case StatKind::kConformance:
      return conformance_score(x, std::get<ConformanceModel>(model));
    case StatKind::kOcsvm:
      return -ocsvm_score(x, std::get<OcsvmModel>(model));
  }
  return 0.0;
}

std::vector<double> ScoreModel::score(std::span<const PathStream> raw) const {
  std::vector<double> out;
  out.reserve(raw.size());
  for (const auto& p : raw) out.push_back(score(p));
  return out;
}

ScoreModel fit_score_model(StatKind kind, std::span<const PathStream> paths, const FitOptions& opts) {
  if (paths.empty()) throw DataError("cannot fit a model on an empty dataset");
  if (opts.level < 1) throw ConfigError("signature level must be >= 1");
  const auto x = transform_all(paths, opts.transforms);
  ScoreModel m;
  m.kind = kind;
  m.transforms = opts.transforms;
  switch (kind) {
    case StatKind::kDistance:
      m.model = fit_expected_signature(x, opts.level, opts.retain_corpus);
      break;
    case StatKind::kConformance:
      m.model = fit_conformance(x, opts.level, opts.conformance_ridge);
      break;
    case StatKind::kOcsvm:
      m.model = fit_ocsvm(x, opts.level, opts.ocsvm_nu, opts.ocsvm);
      break;
  }
  return m;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.cols(); ++k) r[static_cast<std::size_t>(k)] = m(i, k);
    rows.push_back(std::move(r));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != n) throw DataError("covariance must be square");
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
  }
  return m;
}

}  // namespace

void to_json(nlohmann::json& j, const ExpectedSignatureModel& m) {
  j = nlohmann::json{{"N", m.level},
                     {"d", m.dim},
                     {"sample_count", m.sample_count},
                     {"mean_sq_norm", m.mean_sq_norm},
                     {"mean", m.mean}};
}

void to_json(nlohmann::json& j, const ConformanceModel& m) {
  j = nlohmann::json{{"N", m.level},
                     {"d", m.dim},
                     {"ridge", m.ridge},
                     {"corpus", m.corpus},
                     {"covariance", matrix_to_json(m.covariance)}};
}

void to_json(nlohmann::json& j, const OcsvmModel& m) {
  j = nlohmann::json{{"N", m.level},         {"d", m.dim},
                     {"nu", m.nu},           {"rho", m.rho},
                     {"alphas", m.alphas},   {"support_ids", m.support_ids},
                     {"support", m.support}};
}

nlohmann::json model_to_json(const ScoreModel& m) {
  nlohmann::json j;
  j["kind"] = stat_kind_name(m.kind);
  auto t = nlohmann::json::array();
  for (auto tr : m.transforms) t.push_back(transform_name(tr));
  j["transforms"] = t;
  std::visit([&](const auto& inner) { j["model"] = inner; }, m.model);
  return j;
}

ScoreModel model_from_json(const nlohmann::json& j) {
  try {
    ScoreModel m;
    m.kind = parse_stat_kind(j.at("kind").get<std::string>());
    for (const auto& t : j.at("transforms")) m.transforms.push_back(parse_transform(t.get<std::string>()));
    const auto& body = j.at("model");
    switch (m.kind) {
      case StatKind::kDistance: {
        ExpectedSignatureModel e;
        e.level = body.at("N").get<int>();
        e.dim = body.at("d").get<int>();
        e.sample_count = body.at("sample_count").get<std::size_t>();
        e.mean = body.at("mean").get<TruncatedTensor>();
        e.mean_sq_norm = pairing(e.mean, e.mean);
        if (e.mean.level() != e.level || e.mean.dim() != e.dim) {
          throw DataError("model mean does not match its declared shape");
        }
        m.model = std::move(e);
        break;
      }
      case StatKind::kConformance: {
        auto corpus = body.at("corpus").get<std::vector<TruncatedTensor>>();
        m.model = make_conformance_model(std::move(corpus), matrix_from_json(body.at("covariance")),
                                         body.at("ridge").get<double>());
        break;
      }
      case StatKind::kOcsvm: {
        OcsvmModel o;
        o.level = body.at("N").get<int>();
        o.dim = body.at("d").get<int>();
        o.nu = body.at("nu").get<double>();
        o.rho = body.at("rho").get<double>();
        o.alphas = body.at("alphas").get<std::vector<double>>();
        o.support_ids = body.at("support_ids").get<std::vector<std::string>>();
        o.support = body.at("support").get<std::vector<TruncatedTensor>>();
        if (o.alphas.size() != o.support.size() || o.support.empty()) {
          throw DataError("OCSVM model alphas and support vectors disagree");
        }
        o.primal = TruncatedTensor(o.dim, o.level);
        for (std::size_t i = 0; i < o.support.size(); ++i) o.primal += o.alphas[i] * o.support[i];
        m.model = std::move(o);
        break;
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  }
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace sigtest
