#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rhetseg/adam.hpp"
#include "rhetseg/corpus.hpp"
#include "rhetseg/crf.hpp"
#include "rhetseg/embeddings.hpp"
#include "rhetseg/errors.hpp"
#include "rhetseg/lstm.hpp"
#include "rhetseg/tape.hpp"
#include "rhetseg/tensor_json.hpp"
#include "rhetseg/tokenizer.hpp"
#include "rhetseg/util.hpp"

namespace rhetseg {

enum class EmbeddingMode { random_init, pretrained };
enum class HeadType { softmax, crf };

inline EmbeddingMode parse_embedding_mode(const std::string& s) {
  if (s == "random_init") return EmbeddingMode::random_init;
  if (s == "pretrained") return EmbeddingMode::pretrained;
  throw ArgumentError("unknown embedding mode: " + s);
}

inline const char* embedding_mode_name(EmbeddingMode m) {
  return m == EmbeddingMode::random_init ? "random_init" : "pretrained";
}

inline HeadType parse_head(const std::string& s) {
  if (s == "softmax") return HeadType::softmax;
  if (s == "crf") return HeadType::crf;
  throw ArgumentError("unknown head type: " + s);
}

inline const char* head_name(HeadType h) {
  return h == HeadType::softmax ? "softmax" : "crf";
}

struct HierDims {
  long d_w = 50;    // word embedding size
  long h_tok = 64;  // token-level hidden per direction
  long d_sent = 128;  // 2*h_tok in random_init mode, external dim otherwise
  long h_doc = 64;  // document-level hidden per direction
  long f = 128;     // 2*h_doc

  bool operator==(const HierDims&) const = default;
};

struct HierModel {
  EmbeddingMode mode = EmbeddingMode::random_init;
  HeadType head = HeadType::crf;
  HierDims dims;
  int num_labels = kNumLabels;

  // token level, random_init mode only
  std::map<std::string, int> token_vocab;  // "<unk>" -> 0
  Eigen::MatrixXd embeddings;              // V x d_w
  autodiff::BiLstmParams tok_rnn;

  autodiff::BiLstmParams doc_rnn;
  Eigen::MatrixXd w_out;  // K x f
  Eigen::MatrixXd b_out;  // K x 1
  crf::CrfParams crf_params;  // crf head only

  std::vector<double> loss_log;
};

inline std::map<std::string, int> build_token_vocab(const Corpus& corpus,
                                                    int min_freq) {
  std::map<std::string, long> counts;
  for (const Document& doc : corpus.documents)
    for (const Sentence& s : doc.sentences)
      for (const auto& tok : tokenize(s.text)) counts[lowercase(tok)] += 1;
  std::map<std::string, int> vocab;
  vocab["<unk>"] = 0;
  int next = 1;
  for (const auto& [tok, c] : counts)
    if (c >= min_freq && tok != "<unk>") vocab[tok] = next++;
  return vocab;
}

inline std::vector<int> token_ids(const HierModel& model, const std::string& text) {
  std::vector<int> ids;
  for (const auto& tok : tokenize(text)) {
    auto it = model.token_vocab.find(lowercase(tok));
    ids.push_back(it == model.token_vocab.end() ? 0 : it->second);
  }
  if (ids.empty()) ids.push_back(0);  // empty sentence -> unk singleton
  return ids;
}

namespace detail {

inline Eigen::MatrixXd uniform_matrix(long rows, long cols, SeededRng& rng,
                                      double scale = 0.1) {
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) m(i, j) = rng.uniform(-scale, scale);
  return m;
}

}  // namespace detail

inline HierModel init_hier_model(EmbeddingMode mode, HeadType head, HierDims dims,
                                 const Corpus& train, int min_token_freq,
                                 long pretrained_dim, std::uint64_t seed,
                                 int num_labels = kNumLabels) {
  HierModel m;
  m.mode = mode;
  m.head = head;
  m.num_labels = num_labels;
  SeededRng rng(derive_seed(seed, 0x11e2));

  if (mode == EmbeddingMode::random_init) {
    dims.d_sent = 2 * dims.h_tok;
    m.token_vocab = build_token_vocab(train, min_token_freq);
    m.embeddings = detail::uniform_matrix(
        static_cast<long>(m.token_vocab.size()), dims.d_w, rng);
    m.tok_rnn = autodiff::BiLstmParams::init(dims.d_w, dims.h_tok, rng);
  } else {
    if (pretrained_dim <= 0)
      throw ArgumentError("pretrained mode needs the embedding dimension");
    dims.d_sent = pretrained_dim;
  }
  dims.f = 2 * dims.h_doc;
  m.dims = dims;

  m.doc_rnn = autodiff::BiLstmParams::init(dims.d_sent, dims.h_doc, rng);
  m.w_out = detail::uniform_matrix(num_labels, dims.f, rng);
  m.b_out = Eigen::MatrixXd::Zero(num_labels, 1);
  if (head == HeadType::crf) m.crf_params = crf::CrfParams::zeros(num_labels);
  return m;
}

// Trainable tensors in one fixed order; var registration and gradient
// collection both walk this list so they can never disagree.
inline std::vector<Eigen::MatrixXd*> trainable_tensors(HierModel& m) {
  std::vector<Eigen::MatrixXd*> ts;
  if (m.mode == EmbeddingMode::random_init) {
    ts.push_back(&m.embeddings);
    ts.push_back(&m.tok_rnn.fwd.w);
    ts.push_back(&m.tok_rnn.fwd.b);
    ts.push_back(&m.tok_rnn.bwd.w);
    ts.push_back(&m.tok_rnn.bwd.b);
  }
  ts.push_back(&m.doc_rnn.fwd.w);
  ts.push_back(&m.doc_rnn.fwd.b);
  ts.push_back(&m.doc_rnn.bwd.w);
  ts.push_back(&m.doc_rnn.bwd.b);
  ts.push_back(&m.w_out);
  ts.push_back(&m.b_out);
  if (m.head == HeadType::crf) ts.push_back(&m.crf_params.transitions);
  // crf start/stop are vectors; pack/unpack append them after the list
  return ts;
}

struct HierBinding {
  std::vector<int> vars;  // parallel to trainable_tensors order (+start/stop)
  int emb = -1;
  autodiff::BiLstmVars tok;
  autodiff::BiLstmVars doc;
  int w_out = -1;
  int b_out = -1;
  int trans = -1;
  int start = -1;
  int stop = -1;
};

inline HierBinding bind_hier(autodiff::Tape& tape, const HierModel& m) {
  HierBinding b;
  if (m.mode == EmbeddingMode::random_init) {
    b.emb = tape.input(m.embeddings);
    b.tok.fwd.w = tape.input(m.tok_rnn.fwd.w);
    b.tok.fwd.b = tape.input(m.tok_rnn.fwd.b);
    b.tok.bwd.w = tape.input(m.tok_rnn.bwd.w);
    b.tok.bwd.b = tape.input(m.tok_rnn.bwd.b);
    b.vars.insert(b.vars.end(),
                  {b.emb, b.tok.fwd.w, b.tok.fwd.b, b.tok.bwd.w, b.tok.bwd.b});
  }
  b.doc.fwd.w = tape.input(m.doc_rnn.fwd.w);
  b.doc.fwd.b = tape.input(m.doc_rnn.fwd.b);
  b.doc.bwd.w = tape.input(m.doc_rnn.bwd.w);
  b.doc.bwd.b = tape.input(m.doc_rnn.bwd.b);
  b.w_out = tape.input(m.w_out);
  b.b_out = tape.input(m.b_out);
  b.vars.insert(b.vars.end(), {b.doc.fwd.w, b.doc.fwd.b, b.doc.bwd.w, b.doc.bwd.b,
                               b.w_out, b.b_out});
  if (m.head == HeadType::crf) {
    b.trans = tape.input(m.crf_params.transitions);
    b.start = tape.input(m.crf_params.start);
    b.stop = tape.input(m.crf_params.stop);
    b.vars.insert(b.vars.end(), {b.trans, b.start, b.stop});
  }
  return b;
}

struct HierForward {
  double loss = 0.0;
  int loss_var = -1;
  std::vector<int> predictions;  // label indices
};

// One document through the hierarchy. Sentence vectors come from the token
// BiLSTM (random_init) or the external store (pretrained, frozen). gold may
// be null for inference; loss is skipped then.
inline HierForward hier_forward(autodiff::Tape& tape, const HierBinding& bind,
                                const HierModel& model, const Document& doc,
                                const SentenceEmbeddingStore* store,
                                const std::vector<int>* gold) {
  const long T = static_cast<long>(doc.sentences.size());
  if (T == 0) throw ArgumentError("document has no sentences: " + doc.doc_id);
  if (gold && static_cast<long>(gold->size()) != T)
    throw ArgumentError("gold length mismatch for " + doc.doc_id);

  std::vector<int> sent_vecs;
  if (model.mode == EmbeddingMode::random_init) {
    for (const Sentence& s : doc.sentences) {
      std::vector<int> xs;
      for (int id : token_ids(model, s.text))
        xs.push_back(tape.transpose(tape.slice_rows(bind.emb, id, 1)));
      sent_vecs.push_back(
          autodiff::bilstm_final(tape, bind.tok, xs, model.dims.h_tok));
    }
  } else {
    if (!store) throw CoverageError("pretrained mode requires a sentence embedding store");
    for (const Sentence& s : doc.sentences)
      sent_vecs.push_back(tape.input(store->require(doc.doc_id, s.index)));
  }

  const auto feats =
      autodiff::bilstm_sequence(tape, bind.doc, sent_vecs, model.dims.h_doc);

  std::vector<int> logit_cols;
  for (int f : feats)
    logit_cols.push_back(tape.add(tape.matmul(bind.w_out, f), bind.b_out));
  const int logits = tape.concat_cols(logit_cols);  // K x T

  HierForward out;
  if (model.head == HeadType::softmax) {
    const auto& lv = tape.value(logits);
    for (long t = 0; t < T; ++t) {
      int arg = 0;
      for (int k = 1; k < model.num_labels; ++k)
        if (lv(k, t) > lv(arg, t)) arg = k;
      out.predictions.push_back(arg);
    }
    if (gold) {
      out.loss_var = tape.softmax_xent(logits, *gold);
      out.loss = tape.value(out.loss_var)(0, 0);
    }
  } else {
    const int emissions = tape.transpose(logits);  // T x K
    crf::CrfParams p;
    p.transitions = tape.value(bind.trans);
    p.start = tape.value(bind.start).col(0);
    p.stop = tape.value(bind.stop).col(0);
    out.predictions = crf::viterbi(tape.value(emissions), p).first;
    if (gold) {
      out.loss_var = tape.crf_nll(emissions, bind.trans, bind.start, bind.stop, *gold);
      out.loss = tape.value(out.loss_var)(0, 0);
    }
  }
  return out;
}

struct HierTrainConfig {
  EmbeddingMode mode = EmbeddingMode::random_init;
  HeadType head = HeadType::crf;
  HierDims dims;
  double lr = 1e-3;
  double clip = 5.0;  // global gradient norm
  int epochs = 30;
  int min_token_freq = 2;
  std::uint64_t seed = 0;
  bool verbose = false;
};

inline HierModel train_hier(const Corpus& corpus, const HierTrainConfig& config,
                            const SentenceEmbeddingStore* store = nullptr) {
  if (corpus.empty()) throw ArgumentError("empty training set");
  if (config.mode == EmbeddingMode::pretrained && !store)
    throw ArgumentError("pretrained mode requires a sentence embedding store");

  std::vector<std::vector<int>> gold;
  for (const Document& doc : corpus.documents) {
    if (!doc.has_gold())
      throw ValidationError("training document \"" + doc.doc_id + "\" has no gold labels");
    std::vector<int> g;
    for (Label l : doc.gold_labels()) g.push_back(label_index(l));
    gold.push_back(std::move(g));
  }

  HierModel model = init_hier_model(
      config.mode, config.head, config.dims, corpus, config.min_token_freq,
      store ? store->dim() : 0, config.seed);

  auto tensors = trainable_tensors(model);
  const bool crf_head = model.head == HeadType::crf;
  long dim = 0;
  for (auto* t : tensors) dim += t->size();
  if (crf_head) dim += model.crf_params.start.size() + model.crf_params.stop.size();

  Adam opt(dim, AdamConfig{config.lr, 0.9, 0.999, 1e-8});
  SeededRng order_rng(derive_seed(config.seed, 0x04de4));

  auto pack_params = [&]() {
    Eigen::VectorXd flat(dim);
    long at = 0;
    for (auto* t : tensors) {
      flat.segment(at, t->size()) =
          Eigen::Map<const Eigen::VectorXd>(t->data(), t->size());
      at += t->size();
    }
    if (crf_head) {
      flat.segment(at, model.crf_params.start.size()) = model.crf_params.start;
      at += model.crf_params.start.size();
      flat.segment(at, model.crf_params.stop.size()) = model.crf_params.stop;
    }
    return flat;
  };
  auto unpack_params = [&](const Eigen::VectorXd& flat) {
    long at = 0;
    for (auto* t : tensors) {
      *t = Eigen::Map<const Eigen::MatrixXd>(flat.data() + at, t->rows(), t->cols());
      at += t->size();
    }
    if (crf_head) {
      model.crf_params.start = flat.segment(at, model.crf_params.start.size());
      at += model.crf_params.start.size();
      model.crf_params.stop = flat.segment(at, model.crf_params.stop.size());
    }
  };

  std::vector<std::size_t> order(corpus.documents.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  model.loss_log.clear();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    seeded_shuffle(order, order_rng);
    double epoch_loss = 0.0;
    for (std::size_t oi : order) {
      autodiff::Tape tape;
      const HierBinding bind = bind_hier(tape, model);
      const HierForward fwd = hier_forward(tape, bind, model,
                                           corpus.documents[oi], store, &gold[oi]);
      if (!std::isfinite(fwd.loss))
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch));
      epoch_loss += fwd.loss;
      tape.backward(fwd.loss_var);

      Eigen::VectorXd gflat(dim);
      long at = 0;
      for (int v : bind.vars) {
        const auto& g = tape.grad(v);
        gflat.segment(at, g.size()) = Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
        at += g.size();
      }
      const double norm = gflat.norm();
      if (config.clip > 0.0 && norm > config.clip) gflat *= config.clip / norm;

      Eigen::VectorXd flat = pack_params();
      opt.step(flat, gflat);
      unpack_params(flat);
    }
    epoch_loss /= static_cast<double>(corpus.documents.size());
    if (!std::isfinite(epoch_loss))
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch));
    model.loss_log.push_back(epoch_loss);
  }
  return model;
}

inline std::vector<Label> predict_hier(const HierModel& model, const Document& doc,
                                       const SentenceEmbeddingStore* store = nullptr) {
  autodiff::Tape tape;
  const HierBinding bind = bind_hier(tape, model);
  const HierForward fwd = hier_forward(tape, bind, model, doc, store, nullptr);
  std::vector<Label> out;
  for (int l : fwd.predictions) out.push_back(label_from_index(l));
  return out;
}

// --- model file ---

inline constexpr int kHierModelVersion = 1;

inline nlohmann::json hier_model_to_json(const HierModel& m) {
  nlohmann::json j;
  j["format"] = "hier_bilstm";
  j["version"] = kHierModelVersion;
  j["mode"] = embedding_mode_name(m.mode);
  j["head"] = head_name(m.head);
  j["num_labels"] = m.num_labels;
  j["dims"] = {{"d_w", m.dims.d_w}, {"h_tok", m.dims.h_tok},
               {"d_sent", m.dims.d_sent}, {"h_doc", m.dims.h_doc}, {"f", m.dims.f}};
  if (m.mode == EmbeddingMode::random_init) {
    std::vector<std::string> tokens(m.token_vocab.size());
    for (const auto& [tok, idx] : m.token_vocab)
      tokens[static_cast<std::size_t>(idx)] = tok;
    j["token_vocab"] = tokens;
    j["embeddings"] = matrix_to_json(m.embeddings);
    j["tok_fwd_w"] = matrix_to_json(m.tok_rnn.fwd.w);
    j["tok_fwd_b"] = matrix_to_json(m.tok_rnn.fwd.b);
    j["tok_bwd_w"] = matrix_to_json(m.tok_rnn.bwd.w);
    j["tok_bwd_b"] = matrix_to_json(m.tok_rnn.bwd.b);
  }
  j["doc_fwd_w"] = matrix_to_json(m.doc_rnn.fwd.w);
  j["doc_fwd_b"] = matrix_to_json(m.doc_rnn.fwd.b);
  j["doc_bwd_w"] = matrix_to_json(m.doc_rnn.bwd.w);
  j["doc_bwd_b"] = matrix_to_json(m.doc_rnn.bwd.b);
  j["w_out"] = matrix_to_json(m.w_out);
  j["b_out"] = matrix_to_json(m.b_out);
  if (m.head == HeadType::crf) {
    j["transitions"] = matrix_to_json(m.crf_params.transitions);
    j["start"] = vector_to_json(m.crf_params.start);
    j["stop"] = vector_to_json(m.crf_params.stop);
  }
  return j;
}

inline HierModel hier_model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "hier_bilstm")
    throw FormatError("not a hier_bilstm model file");
  if (j.value("version", -1) != kHierModelVersion)
    throw FormatError("unsupported hier model version");
  HierModel m;
  m.mode = parse_embedding_mode(j.at("mode").get<std::string>());
  m.head = parse_head(j.at("head").get<std::string>());
  m.num_labels = j.value("num_labels", kNumLabels);
  const auto& d = j.at("dims");
  m.dims = {d.at("d_w").get<long>(), d.at("h_tok").get<long>(),
            d.at("d_sent").get<long>(), d.at("h_doc").get<long>(),
            d.at("f").get<long>()};
  if (m.mode == EmbeddingMode::random_init) {
    int idx = 0;
    for (const auto& tok : j.at("token_vocab"))
      m.token_vocab[tok.get<std::string>()] = idx++;
    m.embeddings = matrix_from_json(j.at("embeddings"));
    m.tok_rnn.fwd.w = matrix_from_json(j.at("tok_fwd_w"));
    m.tok_rnn.fwd.b = matrix_from_json(j.at("tok_fwd_b"));
    m.tok_rnn.bwd.w = matrix_from_json(j.at("tok_bwd_w"));
    m.tok_rnn.bwd.b = matrix_from_json(j.at("tok_bwd_b"));
    if (m.embeddings.rows() != static_cast<long>(m.token_vocab.size()) ||
        m.embeddings.cols() != m.dims.d_w)
      throw FormatError("embedding table does not match dims/vocabulary");
  }
  m.doc_rnn.fwd.w = matrix_from_json(j.at("doc_fwd_w"));
  m.doc_rnn.fwd.b = matrix_from_json(j.at("doc_fwd_b"));
  m.doc_rnn.bwd.w = matrix_from_json(j.at("doc_bwd_w"));
  m.doc_rnn.bwd.b = matrix_from_json(j.at("doc_bwd_b"));
  m.w_out = matrix_from_json(j.at("w_out"));
  m.b_out = matrix_from_json(j.at("b_out"));
  if (m.head == HeadType::crf) {
    m.crf_params.transitions = matrix_from_json(j.at("transitions"));
    m.crf_params.start = vector_from_json(j.at("start"));
    m.crf_params.stop = vector_from_json(j.at("stop"));
  }
  if (m.w_out.rows() != m.num_labels || m.w_out.cols() != m.dims.f)
    throw FormatError("projection does not match dims");
  return m;
}

inline void save_hier_model(const HierModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open model file for writing: " + path);
  out << hier_model_to_json(m).dump() << "\n";
}

inline HierModel load_hier_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return hier_model_from_json(j);
}

}  // namespace rhetseg
