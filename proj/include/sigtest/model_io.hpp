#pragma once

// Fitted score models, their JSON form, and batch scoring.

#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sigtest/statistics.hpp"

namespace sigtest {

enum class StatKind { kDistance, kConformance, kOcsvm };
StatKind parse_stat_kind(const std::string& name);
std::string stat_kind_name(StatKind kind);

struct FitOptions {
  int level = 4;
  std::vector<PathTransform> transforms;
  double conformance_ridge = -1.0;  // < 0 selects the default
  double ocsvm_nu = 0.1;
  OcsvmOptions ocsvm;
  bool retain_corpus = false;  // distance model: keep paths for the kernel route
};

// A fitted statistic plus the transforms applied before signatures are taken.
// score() is oriented so that larger means more anomalous: the distance and
// conformance values as they are, the negated decision value for the OCSVM.
struct ScoreModel {
  StatKind kind = StatKind::kDistance;
  std::vector<PathTransform> transforms;
  std::variant<ExpectedSignatureModel, ConformanceModel, OcsvmModel> model;

  int level() const;
  int dim() const;  // dimension after transforms
  double score(const PathStream& raw) const;
  std::vector<double> score(std::span<const PathStream> raw) const;
};

ScoreModel fit_score_model(StatKind kind, std::span<const PathStream> paths, const FitOptions& opts);

std::vector<PathStream> transform_all(std::span<const PathStream> paths,
                                      std::span<const PathTransform> transforms);

nlohmann::json model_to_json(const ScoreModel& m);
ScoreModel model_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const ExpectedSignatureModel& m);
void to_json(nlohmann::json& j, const ConformanceModel& m);
void to_json(nlohmann::json& j, const OcsvmModel& m);

// Reads a JSON document; DataError with the file name on failure.
nlohmann::json read_json_file(const std::string& path);
// Writes j.dump(2) plus a trailing newline.
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace sigtest
