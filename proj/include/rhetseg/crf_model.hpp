#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rhetseg/adam.hpp"
#include "rhetseg/corpus.hpp"
#include "rhetseg/crf.hpp"
#include "rhetseg/errors.hpp"
#include "rhetseg/features.hpp"
#include "rhetseg/tensor_json.hpp"
#include "rhetseg/util.hpp"

namespace rhetseg {

// sparse features -> per-label emission scores
struct LinearEmitter {
  Eigen::MatrixXd weights;  // F x K
  Eigen::VectorXd bias;     // K

  Eigen::MatrixXd emissions(const std::vector<FeatureVector>& features) const {
    const long T = static_cast<long>(features.size());
    const long K = bias.size();
    Eigen::MatrixXd em(T, K);
    for (long t = 0; t < T; ++t) {
      em.row(t) = bias.transpose();
      for (const auto& [idx, value] : features[static_cast<std::size_t>(t)].entries)
        em.row(t) += value * weights.row(idx);
    }
    return em;
  }
};

enum class FeatureSet { saravanan, savelka, combined };

inline FeatureOptions feature_options(FeatureSet set) {
  FeatureOptions o;
  switch (set) {
    case FeatureSet::saravanan:  // layout + cues + entities
      o.pos = false;
      break;
    case FeatureSet::savelka:  // layout + pos counts
      o.cue = false;
      o.entity = false;
      break;
    case FeatureSet::combined:
      break;
  }
  return o;
}

inline FeatureSet parse_feature_set(const std::string& s) {
  if (s == "saravanan") return FeatureSet::saravanan;
  if (s == "savelka") return FeatureSet::savelka;
  if (s == "combined") return FeatureSet::combined;
  throw ArgumentError("unknown feature set: " + s);
}

inline const char* feature_set_name(FeatureSet set) {
  switch (set) {
    case FeatureSet::saravanan: return "saravanan";
    case FeatureSet::savelka: return "savelka";
    case FeatureSet::combined: return "combined";
  }
  return "combined";
}

struct CrfTrainConfig {
  double lr = 0.01;
  double lambda = 1e-4;  // L2 on weights and transitions; bias/start/stop free
  int epochs = 100;
  std::uint64_t seed = 0;
  bool verbose = false;
};

struct FeaturizedDoc {
  std::vector<FeatureVector> features;
  std::vector<int> labels;
};

struct CrfModel {
  FeatureVocabulary vocab;
  Lexicons lexicons;
  FeatureSet feature_set = FeatureSet::combined;
  LinearEmitter emitter;
  crf::CrfParams params;
  std::vector<double> loss_log;
};

namespace detail {

struct PackedCrf {
  long F, K;

  long dim() const { return F * K + K + K * K + K + K; }

  Eigen::VectorXd pack(const LinearEmitter& e, const crf::CrfParams& p) const {
    Eigen::VectorXd v(dim());
    long at = 0;
    v.segment(at, F * K) = Eigen::Map<const Eigen::VectorXd>(e.weights.data(), F * K);
    at += F * K;
    v.segment(at, K) = e.bias;
    at += K;
    v.segment(at, K * K) =
        Eigen::Map<const Eigen::VectorXd>(p.transitions.data(), K * K);
    at += K * K;
    v.segment(at, K) = p.start;
    at += K;
    v.segment(at, K) = p.stop;
    return v;
  }

  void unpack(const Eigen::VectorXd& v, LinearEmitter& e, crf::CrfParams& p) const {
    long at = 0;
    e.weights = Eigen::Map<const Eigen::MatrixXd>(v.data() + at, F, K);
    at += F * K;
    e.bias = v.segment(at, K);
    at += K;
    p.transitions = Eigen::Map<const Eigen::MatrixXd>(v.data() + at, K, K);
    at += K * K;
    p.start = v.segment(at, K);
    at += K;
    p.stop = v.segment(at, K);
  }
};

}  // namespace detail

// Adam on per-document NLL with L2 on weights and transitions. Documents are
// visited in a seeded shuffle each epoch; the logged loss is a full pass of
// the objective after the epoch.
inline void train_crf(const std::vector<FeaturizedDoc>& docs, long num_features,
                      int num_labels, const CrfTrainConfig& config,
                      LinearEmitter& emitter, crf::CrfParams& params,
                      std::vector<double>& loss_log) {
  if (docs.empty()) throw ArgumentError("empty training set");
  const long F = num_features;
  const long K = num_labels;

  emitter.weights = Eigen::MatrixXd::Zero(F, K);
  emitter.bias = Eigen::VectorXd::Zero(K);
  params = crf::CrfParams::zeros(static_cast<int>(K));

  detail::PackedCrf packer{F, K};
  Adam opt(packer.dim(), AdamConfig{config.lr, 0.9, 0.999, 1e-8});
  SeededRng rng(derive_seed(config.seed, 0xc2f));

  auto objective = [&]() {
    double total = 0.0;
    for (const auto& doc : docs)
      total += crf::nll_and_grad(emitter.emissions(doc.features), params, doc.labels).first;
    total /= static_cast<double>(docs.size());
    total += config.lambda *
             (emitter.weights.squaredNorm() + params.transitions.squaredNorm());
    return total;
  };

  loss_log.clear();
  loss_log.push_back(objective());

  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    seeded_shuffle(order, rng);
    for (std::size_t oi : order) {
      const FeaturizedDoc& doc = docs[oi];
      const Eigen::MatrixXd em = emitter.emissions(doc.features);
      auto [nll, grad] = crf::nll_and_grad(em, params, doc.labels);
      if (!std::isfinite(nll))
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch));

      LinearEmitter ge;
      ge.weights = Eigen::MatrixXd::Zero(F, K);
      ge.bias = Eigen::VectorXd::Zero(K);
      const long T = static_cast<long>(doc.features.size());
      for (long t = 0; t < T; ++t) {
        ge.bias += grad.d_em.row(t).transpose();
        for (const auto& [idx, value] : doc.features[static_cast<std::size_t>(t)].entries)
          ge.weights.row(idx) += value * grad.d_em.row(t);
      }
      ge.weights += 2.0 * config.lambda * emitter.weights;
      grad.d_params.transitions += 2.0 * config.lambda * params.transitions;

      Eigen::VectorXd flat = packer.pack(emitter, params);
      const Eigen::VectorXd gflat = packer.pack(ge, grad.d_params);
      opt.step(flat, gflat);
      packer.unpack(flat, emitter, params);
    }
    const double loss = objective();
    if (!std::isfinite(loss))
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch));
    loss_log.push_back(loss);
  }
}

inline CrfModel train_crf_model(const Corpus& corpus, const Lexicons& lexicons,
                                FeatureSet set, const CrfTrainConfig& config) {
  if (corpus.empty()) throw ArgumentError("empty training set");
  CrfModel model;
  model.lexicons = lexicons;
  model.feature_set = set;
  const FeatureOptions options = feature_options(set);

  std::vector<FeaturizedDoc> docs;
  for (const Document& doc : corpus.documents) {
    if (!doc.has_gold())
      throw ValidationError("training document \"" + doc.doc_id + "\" has no gold labels");
    FeaturizedDoc fd;
    fd.features = extract_features(doc, lexicons, model.vocab, true, options);
    for (Label l : doc.gold_labels()) fd.labels.push_back(label_index(l));
    docs.push_back(std::move(fd));
  }
  model.vocab.freeze();

  train_crf(docs, static_cast<long>(model.vocab.size()), kNumLabels, config,
            model.emitter, model.params, model.loss_log);
  return model;
}

inline std::vector<Label> predict_crf(const CrfModel& model, const Document& doc) {
  const auto features = transform_features(doc, model.lexicons, model.vocab,
                                           feature_options(model.feature_set));
  const auto [labels, score] = crf::viterbi(model.emitter.emissions(features), model.params);
  std::vector<Label> out;
  for (int l : labels) out.push_back(label_from_index(l));
  return out;
}

inline constexpr int kCrfModelVersion = 1;

inline nlohmann::json crf_model_to_json(const CrfModel& model) {
  nlohmann::json j;
  j["format"] = "crf_baseline";
  j["version"] = kCrfModelVersion;
  j["vocab_hash"] = to_hex(model.vocab.hash());
  j["vocabulary"] = model.vocab.to_json();
  j["lexicons"] = lexicons_to_json(model.lexicons);
  j["feature_set"] = feature_set_name(model.feature_set);
  j["weights"] = matrix_to_json(model.emitter.weights);
  j["bias"] = vector_to_json(model.emitter.bias);
  j["transitions"] = matrix_to_json(model.params.transitions);
  j["start"] = vector_to_json(model.params.start);
  j["stop"] = vector_to_json(model.params.stop);
  return j;
}

inline CrfModel crf_model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "crf_baseline")
    throw FormatError("not a crf_baseline model file");
  if (j.value("version", -1) != kCrfModelVersion)
    throw FormatError("unsupported crf model version");
  CrfModel model;
  model.vocab = FeatureVocabulary::from_json(j.at("vocabulary"));
  if (to_hex(model.vocab.hash()) != j.at("vocab_hash").get<std::string>())
    throw FormatError("vocabulary hash mismatch: model file does not match its vocabulary");
  model.lexicons = lexicons_from_json(j.at("lexicons"));
  model.feature_set = parse_feature_set(j.at("feature_set").get<std::string>());
  model.emitter.weights = matrix_from_json(j.at("weights"));
  model.emitter.bias = vector_from_json(j.at("bias"));
  model.params.transitions = matrix_from_json(j.at("transitions"));
  model.params.start = vector_from_json(j.at("start"));
  model.params.stop = vector_from_json(j.at("stop"));
  if (model.emitter.weights.rows() != static_cast<long>(model.vocab.size()) ||
      model.emitter.bias.size() != kNumLabels)
    throw FormatError("model tensor dimensions do not match the vocabulary");
  return model;
}

inline void save_crf_model(const CrfModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open model file for writing: " + path);
  out << crf_model_to_json(model).dump(2) << "\n";
}

inline CrfModel load_crf_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return crf_model_from_json(j);
}

}  // namespace rhetseg
