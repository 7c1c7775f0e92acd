#pragma once

#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "rhetseg/crf_model.hpp"
#include "rhetseg/errors.hpp"
#include "rhetseg/neural.hpp"

namespace rhetseg {

// Unresolved training options as they arrive from flags or a config file.
// Precedence is handled by merge(); resolve_train_config() applies model
// defaults and validates flag combinations.
struct ConfigValues {
  std::optional<std::string> model;
  std::optional<std::string> feature_set;
  std::optional<std::string> embedding_mode;
  std::optional<double> lr;
  std::optional<double> lambda;
  std::optional<double> clip;
  std::optional<int> epochs;
  std::optional<int> min_token_freq;
  std::optional<long> d_w;
  std::optional<long> h_tok;
  std::optional<long> h_doc;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> lexicons;
  std::optional<std::string> embeddings;
};

inline ConfigValues config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("config must be a JSON object");
  ConfigValues v;
  for (const auto& [key, value] : j.items()) {
    if (key == "model") v.model = value.get<std::string>();
    else if (key == "feature_set") v.feature_set = value.get<std::string>();
    else if (key == "embedding_mode") v.embedding_mode = value.get<std::string>();
    else if (key == "lr") v.lr = value.get<double>();
    else if (key == "lambda") v.lambda = value.get<double>();
    else if (key == "clip") v.clip = value.get<double>();
    else if (key == "epochs") v.epochs = value.get<int>();
    else if (key == "min_token_freq") v.min_token_freq = value.get<int>();
    else if (key == "d_w") v.d_w = value.get<long>();
    else if (key == "h_tok") v.h_tok = value.get<long>();
    else if (key == "h_doc") v.h_doc = value.get<long>();
    else if (key == "seed") v.seed = value.get<std::uint64_t>();
    else if (key == "lexicons") v.lexicons = value.get<std::string>();
    else if (key == "embeddings") v.embeddings = value.get<std::string>();
    else throw FormatError("unknown config key: " + key);
  }
  return v;
}

inline ConfigValues load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return config_from_json(j);
}

// preferred wins field by field
inline ConfigValues merge_config(const ConfigValues& preferred,
                                 const ConfigValues& fallback) {
  ConfigValues out = fallback;
  auto take = [](auto& dst, const auto& src) {
    if (src.has_value()) dst = src;
  };
  take(out.model, preferred.model);
  take(out.feature_set, preferred.feature_set);
  take(out.embedding_mode, preferred.embedding_mode);
  take(out.lr, preferred.lr);
  take(out.lambda, preferred.lambda);
  take(out.clip, preferred.clip);
  take(out.epochs, preferred.epochs);
  take(out.min_token_freq, preferred.min_token_freq);
  take(out.d_w, preferred.d_w);
  take(out.h_tok, preferred.h_tok);
  take(out.h_doc, preferred.h_doc);
  take(out.seed, preferred.seed);
  take(out.lexicons, preferred.lexicons);
  take(out.embeddings, preferred.embeddings);
  return out;
}

struct ResolvedTrainConfig {
  std::string model;
  FeatureSet feature_set = FeatureSet::combined;     // crf_baseline only
  EmbeddingMode embedding_mode = EmbeddingMode::random_init;  // neural only
  double lr = 0.0;
  double lambda = 1e-4;
  double clip = 5.0;
  int epochs = 0;
  int min_token_freq = 2;
  HierDims dims;
  std::uint64_t seed = 0;
  std::string lexicons;
  std::string embeddings;

  bool neural() const { return model != "crf_baseline"; }
  HeadType head() const {
    return model == "hier_bilstm" ? HeadType::softmax : HeadType::crf;
  }
};

inline ResolvedTrainConfig resolve_train_config(const ConfigValues& v) {
  ResolvedTrainConfig r;
  r.model = v.model.value_or("crf_baseline");
  if (r.model != "crf_baseline" && r.model != "hier_bilstm" &&
      r.model != "hier_bilstm_crf")
    throw ArgumentError("unknown model: " + r.model);

  if (v.feature_set && r.model != "crf_baseline")
    throw ArgumentError("feature_set is only valid with crf_baseline");
  if (v.embedding_mode && r.model == "crf_baseline")
    throw ArgumentError("embedding_mode is only valid with neural models");

  r.feature_set = parse_feature_set(v.feature_set.value_or("combined"));
  r.embedding_mode = parse_embedding_mode(v.embedding_mode.value_or("random_init"));
  r.lr = v.lr.value_or(r.model == "crf_baseline" ? 0.01 : 1e-3);
  if (r.lr <= 0.0) throw ArgumentError("lr must be positive");
  r.lambda = v.lambda.value_or(1e-4);
  if (r.lambda < 0.0) throw ArgumentError("lambda must be non-negative");
  r.clip = v.clip.value_or(5.0);
  r.epochs = v.epochs.value_or(r.model == "crf_baseline" ? 100 : 30);
  if (r.epochs <= 0) throw ArgumentError("epochs must be positive");
  r.min_token_freq = v.min_token_freq.value_or(2);
  r.dims.d_w = v.d_w.value_or(50);
  r.dims.h_tok = v.h_tok.value_or(64);
  r.dims.h_doc = v.h_doc.value_or(64);
  if (r.dims.d_w <= 0 || r.dims.h_tok <= 0 || r.dims.h_doc <= 0)
    throw ArgumentError("dims must be positive");
  r.seed = v.seed.value_or(0);
  r.lexicons = v.lexicons.value_or("");
  r.embeddings = v.embeddings.value_or("");
  if (r.neural() && r.embedding_mode == EmbeddingMode::pretrained &&
      r.embeddings.empty())
    throw ArgumentError("pretrained embedding_mode requires an embeddings file");
  return r;
}

inline nlohmann::json resolved_config_json(const ResolvedTrainConfig& r) {
  nlohmann::json j;
  j["model"] = r.model;
  if (!r.neural()) {
    j["feature_set"] = feature_set_name(r.feature_set);
    j["lambda"] = r.lambda;
  } else {
    j["embedding_mode"] = embedding_mode_name(r.embedding_mode);
    j["clip"] = r.clip;
    j["min_token_freq"] = r.min_token_freq;
    j["d_w"] = r.dims.d_w;
    j["h_tok"] = r.dims.h_tok;
    j["h_doc"] = r.dims.h_doc;
  }
  j["lr"] = r.lr;
  j["epochs"] = r.epochs;
  j["seed"] = r.seed;
  if (!r.lexicons.empty()) j["lexicons"] = r.lexicons;
  if (!r.embeddings.empty()) j["embeddings"] = r.embeddings;
  return j;
}

}  // namespace rhetseg
