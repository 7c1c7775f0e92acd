#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "rhetseg/embeddings.hpp"
#include "rhetseg/neural.hpp"

using namespace rhetseg;
using autodiff::Matrix;
using autodiff::Tape;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/rhetseg_nn_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

Document doc_from_texts(const std::string& id,
                        const std::vector<std::string>& texts,
                        const std::vector<Label>& gold = {}) {
  Document doc;
  doc.doc_id = id;
  doc.domain = "rent";
  std::size_t at = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (i > 0) {
      doc.raw_text += " ";
      at += 1;
    }
    doc.sentences.push_back({static_cast<int>(i), texts[i], at, at + texts[i].size()});
    doc.raw_text += texts[i];
    at += texts[i].size();
  }
  if (!gold.empty()) {
    std::vector<std::pair<int, Label>> g;
    for (std::size_t i = 0; i < gold.size(); ++i)
      g.emplace_back(static_cast<int>(i), gold[i]);
    doc.gold = std::move(g);
  }
  return doc;
}

double rel_err(double a, double f) {
  return std::abs(a - f) / std::max({1e-3, std::abs(a), std::abs(f)});
}

HierDims tiny_dims() {
  HierDims d;
  d.d_w = 3;
  d.h_tok = 2;
  d.h_doc = 2;
  return d;  // d_sent and f derived in init
}

// toy corpus: label-specific tokens so even a tiny model can overfit
Corpus toy_corpus() {
  Corpus c;
  c.documents.push_back(doc_from_texts(
      "t1",
      {"facts happened here today.", "statute section applies now.",
       "reasoning leads to conclusion.", "appeal allowed with costs."},
      {Label::FAC, Label::STA, Label::RATIO, Label::RPC}));
  c.documents.push_back(doc_from_texts(
      "t2",
      {"facts happened again yesterday.", "arguments were made loudly.",
       "reasoning leads the court.", "appeal allowed in part."},
      {Label::FAC, Label::ARG, Label::RATIO, Label::RPC}));
  return c;
}

double forward_loss_value(const HierModel& model, const Document& doc,
                          const SentenceEmbeddingStore* store,
                          const std::vector<int>& gold) {
  Tape tape;
  const HierBinding bind = bind_hier(tape, model);
  return hier_forward(tape, bind, model, doc, store, &gold).loss;
}

std::vector<int> gold_indices(const Document& doc) {
  std::vector<int> g;
  for (Label l : doc.gold_labels()) g.push_back(label_index(l));
  return g;
}

}  // namespace

TEST_CASE("sentence embedding store inserts, finds, and rejects bad rows") {
  SentenceEmbeddingStore store(3);
  Eigen::VectorXd v(3);
  v << 1.0, 2.0, 3.0;
  store.insert("d1", 0, v);
  REQUIRE(store.dim() == 3);
  REQUIRE(store.find("d1", 0) != nullptr);
  REQUIRE(store.find("d1", 1) == nullptr);
  REQUIRE(store.require("d1", 0)(1) == 2.0);
  REQUIRE_THROWS_AS(store.require("d1", 1), CoverageError);
  REQUIRE_THROWS_WITH(store.require("dx", 7),
                      Catch::Matchers::ContainsSubstring("dx") &&
                          Catch::Matchers::ContainsSubstring("7"));

  Eigen::VectorXd wrong(2);
  wrong << 1.0, 2.0;
  REQUIRE_THROWS_AS(store.insert("d1", 2, wrong), FormatError);
  REQUIRE_THROWS_AS(store.insert("d1", 0, v), FormatError);  // duplicate
}

TEST_CASE("embedding file round-trip preserves exact doubles") {
  TempFile tmp("store.tsv");
  SentenceEmbeddingStore store(4);
  SeededRng rng(31);
  for (int d = 0; d < 3; ++d)
    for (int s = 0; s < 2; ++s) {
      Eigen::VectorXd v(4);
      for (int i = 0; i < 4; ++i) v(i) = rng.uniform(-2.0, 2.0);
      store.insert("doc" + std::to_string(d), s, v);
    }
  save_sentence_embeddings(store, tmp.path);
  const auto loaded = load_sentence_embeddings(tmp.path);
  REQUIRE(loaded.dim() == 4);
  REQUIRE(loaded.all().size() == store.all().size());
  for (const auto& [key, v] : store.all())
    REQUIRE((loaded.require(key.first, key.second) - v).norm() == 0.0);
}

TEST_CASE("embedding file header and row validation") {
  TempFile tmp("bad.tsv");
  {
    std::ofstream out(tmp.path);
    out << "dims=4\n";
  }
  REQUIRE_THROWS_WITH(load_sentence_embeddings(tmp.path),
                      Catch::Matchers::ContainsSubstring(":1:"));
  {
    std::ofstream out(tmp.path);
    out << "dim=4\nd1\t0\t1.0 2.0 3.0\n";
  }
  REQUIRE_THROWS_WITH(load_sentence_embeddings(tmp.path),
                      Catch::Matchers::ContainsSubstring(":2:"));
  {
    std::ofstream out(tmp.path);
    out << "dim=128\n";
  }
  const auto empty = load_sentence_embeddings(tmp.path);
  REQUIRE(empty.dim() == 128);
  REQUIRE(empty.all().empty());
}

TEST_CASE("fallback embeddings are deterministic unit vectors") {
  const auto a = fallback_embed("The court held that the appeal fails.", 16);
  const auto b = fallback_embed("The court held that the appeal fails.", 16);
  REQUIRE((a - b).norm() == 0.0);
  REQUIRE(a.size() == 16);
  REQUIRE(a.norm() == Catch::Approx(1.0).margin(1e-12));

  const auto empty = fallback_embed("", 16);
  REQUIRE(empty.norm() == 0.0);

  // case-insensitive tokens
  const auto upper = fallback_embed("THE COURT HELD THAT THE APPEAL FAILS.", 16);
  REQUIRE((a - upper).norm() == 0.0);
}

TEST_CASE("fallback embeddings put similar sentences closer") {
  const std::string base = "one two three four five six seven eight nine ten";
  const std::string near = "one two three four five six seven eight nine other";
  const std::string far = "alpha beta gamma delta epsilon zeta eta theta iota kappa";
  const auto vb = fallback_embed(base, 64);
  const auto vn = fallback_embed(near, 64);
  const auto vf = fallback_embed(far, 64);
  REQUIRE(vb.dot(vn) > vb.dot(vf));
  REQUIRE(vb.dot(vn) > 0.5);
}

TEST_CASE("token vocabulary keeps frequent lowercased tokens, unk at 0") {
  Corpus c;
  c.documents.push_back(doc_from_texts(
      "v1", {"The court held.", "The COURT agreed.", "rare word here."}));
  const auto vocab = build_token_vocab(c, 2);
  REQUIRE(vocab.at("<unk>") == 0);
  REQUIRE(vocab.count("court") == 1);
  REQUIRE(vocab.count("the") == 1);
  REQUIRE(vocab.count("rare") == 0);
  REQUIRE(vocab.count(".") == 1);  // punct token appears 3 times

  HierModel m;
  m.token_vocab = vocab;
  const auto ids = token_ids(m, "the COURT ruled");
  REQUIRE(ids.size() == 3);
  REQUIRE(ids[0] == vocab.at("the"));
  REQUIRE(ids[1] == vocab.at("court"));
  REQUIRE(ids[2] == 0);  // "ruled" unseen
  REQUIRE(token_ids(m, "") == std::vector<int>{0});
}

TEST_CASE("zeroed model gives analytic losses for both heads") {
  const Corpus c = toy_corpus();
  const Document& doc = c.documents[0];
  const long T = static_cast<long>(doc.sentences.size());

  for (HeadType head : {HeadType::softmax, HeadType::crf}) {
    HierModel m = init_hier_model(EmbeddingMode::random_init, head, tiny_dims(),
                                  c, 1, 0, 7);
    m.w_out.setZero();
    m.b_out.setZero();
    // logits are all zero regardless of the encoder
    const double loss = forward_loss_value(m, doc, nullptr, gold_indices(doc));
    const double expect = head == HeadType::softmax
                              ? std::log(7.0)
                              : static_cast<double>(T) * std::log(7.0);
    REQUIRE(loss == Catch::Approx(expect).margin(1e-10));
  }
}

TEST_CASE("crf head loss matches the direct crf computation") {
  const Corpus c = toy_corpus();
  const Document& doc = c.documents[0];
  HierModel m = init_hier_model(EmbeddingMode::random_init, HeadType::crf,
                                tiny_dims(), c, 1, 0, 7);
  SeededRng rng(41);
  for (long i = 0; i < m.crf_params.transitions.size(); ++i)
    m.crf_params.transitions.data()[i] = rng.uniform(-0.5, 0.5);

  // reconstruct the emissions by zeroing the head bias contribution per label
  Tape tape;
  const HierBinding bind = bind_hier(tape, m);
  const auto fwd = hier_forward(tape, bind, m, doc, nullptr, nullptr);

  // rebuild emissions from a second pass with an argmax-free probe: run the
  // encoder by hand through the public pieces
  std::vector<int> sent_vecs;
  for (const Sentence& s : doc.sentences) {
    std::vector<int> xs;
    for (int id : token_ids(m, s.text))
      xs.push_back(tape.transpose(tape.slice_rows(bind.emb, id, 1)));
    sent_vecs.push_back(autodiff::bilstm_final(tape, bind.tok, xs, m.dims.h_tok));
  }
  const auto feats = autodiff::bilstm_sequence(tape, bind.doc, sent_vecs, m.dims.h_doc);
  Matrix em(static_cast<long>(feats.size()), 7);
  for (std::size_t t = 0; t < feats.size(); ++t)
    em.row(static_cast<long>(t)) =
        (m.w_out * tape.value(feats[t]) + m.b_out).transpose();

  const auto direct = crf::nll_and_grad(em, m.crf_params, gold_indices(doc));
  const double loss = forward_loss_value(m, doc, nullptr, gold_indices(doc));
  REQUIRE(loss == Catch::Approx(direct.first).margin(1e-10));

  // and the predictions are the viterbi path over those emissions
  REQUIRE(fwd.predictions == crf::viterbi(em, m.crf_params).first);
}

TEST_CASE("finite differences over every trainable tensor, both heads and modes") {
  Corpus c;
  c.documents.push_back(doc_from_texts("fd1", {"alpha beta gamma", "beta delta"},
                                       {Label::FAC, Label::RPC}));
  const Document& doc = c.documents[0];
  const std::vector<int> gold = gold_indices(doc);

  SentenceEmbeddingStore store(4);
  Eigen::VectorXd e0(4), e1(4);
  e0 << 0.3, -0.2, 0.5, 0.1;
  e1 << -0.4, 0.1, 0.2, -0.3;
  store.insert("fd1", 0, e0);
  store.insert("fd1", 1, e1);

  const double h = 1e-4;
  const double tol = 1e-3;

  for (EmbeddingMode mode : {EmbeddingMode::random_init, EmbeddingMode::pretrained}) {
    for (HeadType head : {HeadType::softmax, HeadType::crf}) {
      HierModel m = init_hier_model(mode, head, tiny_dims(), c, 1,
                                    store.dim(), /*seed=*/97);
      const SentenceEmbeddingStore* sp =
          mode == EmbeddingMode::pretrained ? &store : nullptr;

      Tape tape;
      const HierBinding bind = bind_hier(tape, m);
      const auto fwd = hier_forward(tape, bind, m, doc, sp, &gold);
      tape.backward(fwd.loss_var);

      auto tensors = trainable_tensors(m);
      std::vector<Matrix> grads;
      for (int v : bind.vars) grads.push_back(tape.grad(v));
      REQUIRE(grads.size() >= tensors.size());

      int checked = 0;
      for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
        Matrix& tensor = *tensors[ti];
        for (long r = 0; r < tensor.rows(); ++r)
          for (long col = 0; col < tensor.cols(); ++col) {
            const double keep = tensor(r, col);
            tensor(r, col) = keep + h;
            const double up = forward_loss_value(m, doc, sp, gold);
            tensor(r, col) = keep - h;
            const double down = forward_loss_value(m, doc, sp, gold);
            tensor(r, col) = keep;
            const double fd = (up - down) / (2.0 * h);
            INFO("mode " << embedding_mode_name(mode) << " head "
                         << head_name(head) << " tensor " << ti << " ("
                         << r << "," << col << ")");
            REQUIRE(rel_err(grads[ti](r, col), fd) < tol);
            ++checked;
          }
      }
      // crf head: start/stop packed after the matrix tensors
      if (head == HeadType::crf) {
        for (int which = 0; which < 2; ++which) {
          Eigen::VectorXd& vec =
              which == 0 ? m.crf_params.start : m.crf_params.stop;
          const Matrix& g = grads[tensors.size() + static_cast<std::size_t>(which)];
          for (long k = 0; k < vec.size(); ++k) {
            const double keep = vec(k);
            vec(k) = keep + h;
            const double up = forward_loss_value(m, doc, sp, gold);
            vec(k) = keep - h;
            const double down = forward_loss_value(m, doc, sp, gold);
            vec(k) = keep;
            const double fd = (up - down) / (2.0 * h);
            REQUIRE(rel_err(g(k, 0), fd) < tol);
            ++checked;
          }
        }
      }
      REQUIRE(checked > 100);
    }
  }
}

TEST_CASE("pretrained mode requires the store and full coverage") {
  const Corpus c = toy_corpus();
  HierModel m = init_hier_model(EmbeddingMode::pretrained, HeadType::softmax,
                                tiny_dims(), c, 1, 4, 7);
  REQUIRE_THROWS_AS(predict_hier(m, c.documents[0], nullptr), CoverageError);

  SentenceEmbeddingStore store(4);
  store.insert("t1", 0, Eigen::VectorXd::Zero(4));
  REQUIRE_THROWS_AS(predict_hier(m, c.documents[0], &store), CoverageError);

  HierTrainConfig cfg;
  cfg.mode = EmbeddingMode::pretrained;
  cfg.epochs = 1;
  REQUIRE_THROWS_AS(train_hier(c, cfg, nullptr), ArgumentError);
}

TEST_CASE("training demands gold labels and a non-empty corpus") {
  HierTrainConfig cfg;
  cfg.dims = tiny_dims();
  cfg.epochs = 1;
  REQUIRE_THROWS_AS(train_hier(Corpus{}, cfg), ArgumentError);

  Corpus c;
  c.documents.push_back(doc_from_texts("g1", {"no gold here."}));
  REQUIRE_THROWS_WITH(train_hier(c, cfg),
                      Catch::Matchers::ContainsSubstring("g1"));
}

TEST_CASE("hier training overfits the toy corpus with both heads") {
  const Corpus c = toy_corpus();
  for (HeadType head : {HeadType::softmax, HeadType::crf}) {
    HierTrainConfig cfg;
    cfg.mode = EmbeddingMode::random_init;
    cfg.head = head;
    cfg.dims.d_w = 12;
    cfg.dims.h_tok = 8;
    cfg.dims.h_doc = 8;
    cfg.lr = 0.02;
    cfg.epochs = 120;
    cfg.min_token_freq = 1;
    cfg.seed = 7;
    const HierModel m = train_hier(c, cfg);

    REQUIRE(m.loss_log.size() == 120);
    REQUIRE(m.loss_log.back() < m.loss_log.front());
    REQUIRE(m.loss_log.back() < 0.05);

    for (const Document& doc : c.documents) {
      INFO("head " << head_name(head) << " doc " << doc.doc_id);
      REQUIRE(predict_hier(m, doc) == doc.gold_labels());
    }
  }
}

TEST_CASE("pretrained mode trains on fallback sentence vectors") {
  const Corpus c = toy_corpus();
  SentenceEmbeddingStore store(24);
  for (const Document& doc : c.documents)
    for (const Sentence& s : doc.sentences)
      store.insert(doc.doc_id, s.index, fallback_embed(s.text, 24));

  HierTrainConfig cfg;
  cfg.mode = EmbeddingMode::pretrained;
  cfg.head = HeadType::crf;
  cfg.dims.h_doc = 8;
  cfg.lr = 0.02;
  cfg.epochs = 150;
  cfg.seed = 3;
  const HierModel m = train_hier(c, cfg, &store);
  REQUIRE(m.dims.d_sent == 24);
  for (const Document& doc : c.documents)
    REQUIRE(predict_hier(m, doc, &store) == doc.gold_labels());
}

TEST_CASE("same seed reproduces the loss trajectory bitwise") {
  const Corpus c = toy_corpus();
  HierTrainConfig cfg;
  cfg.dims = tiny_dims();
  cfg.lr = 0.01;
  cfg.epochs = 8;
  cfg.min_token_freq = 1;
  cfg.seed = 123;

  const HierModel a = train_hier(c, cfg);
  const HierModel b = train_hier(c, cfg);
  REQUIRE(a.loss_log == b.loss_log);
  REQUIRE(a.w_out == b.w_out);
  REQUIRE(a.embeddings == b.embeddings);

  cfg.seed = 124;
  const HierModel d = train_hier(c, cfg);
  REQUIRE(a.loss_log != d.loss_log);
}

TEST_CASE("hier model json round-trips for both modes") {
  const Corpus c = toy_corpus();
  TempFile tmp("hier.json");

  HierTrainConfig cfg;
  cfg.dims = tiny_dims();
  cfg.epochs = 3;
  cfg.min_token_freq = 1;
  cfg.head = HeadType::crf;
  const HierModel m = train_hier(c, cfg);
  save_hier_model(m, tmp.path);
  const HierModel back = load_hier_model(tmp.path);
  REQUIRE(back.token_vocab == m.token_vocab);
  REQUIRE(back.dims == m.dims);
  REQUIRE((back.w_out - m.w_out).norm() == 0.0);
  REQUIRE((back.crf_params.transitions - m.crf_params.transitions).norm() == 0.0);
  for (const Document& doc : c.documents)
    REQUIRE(predict_hier(back, doc) == predict_hier(m, doc));

  SentenceEmbeddingStore store(8);
  for (const Document& doc : c.documents)
    for (const Sentence& s : doc.sentences)
      store.insert(doc.doc_id, s.index, fallback_embed(s.text, 8));
  cfg.mode = EmbeddingMode::pretrained;
  cfg.head = HeadType::softmax;
  const HierModel p = train_hier(c, cfg, &store);
  save_hier_model(p, tmp.path);
  const HierModel pback = load_hier_model(tmp.path);
  REQUIRE(pback.mode == EmbeddingMode::pretrained);
  REQUIRE(pback.head == HeadType::softmax);
  for (const Document& doc : c.documents)
    REQUIRE(predict_hier(pback, doc, &store) == predict_hier(p, doc, &store));
}

TEST_CASE("model file rejects wrong format or version") {
  TempFile tmp("badmodel.json");
  {
    std::ofstream out(tmp.path);
    out << R"({"format":"other","version":1})" << "\n";
  }
  REQUIRE_THROWS_AS(load_hier_model(tmp.path), FormatError);
  {
    std::ofstream out(tmp.path);
    out << R"({"format":"hier_bilstm","version":99})" << "\n";
  }
  REQUIRE_THROWS_AS(load_hier_model(tmp.path), FormatError);
  REQUIRE_THROWS_AS(load_hier_model("/nonexistent/model.json"), IoError);
}
