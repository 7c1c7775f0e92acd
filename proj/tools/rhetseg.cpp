// rhetseg: rhetorical role labeling for legal judgments.
// Subcommands cover the full workflow: sentence splitting, agreement
// analysis, gold curation, feature extraction, training, prediction,
// evaluation, and cross-validation.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rhetseg/agreement.hpp"
#include "rhetseg/config.hpp"
#include "rhetseg/corpus.hpp"
#include "rhetseg/crf_model.hpp"
#include "rhetseg/embeddings.hpp"
#include "rhetseg/errors.hpp"
#include "rhetseg/eval.hpp"
#include "rhetseg/neural.hpp"
#include "rhetseg/sampling.hpp"
#include "rhetseg/splitter.hpp"

namespace {

using namespace rhetseg;
using nlohmann::json;

void write_text(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file: " + path);
  out << content;
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Lexicons lexicons_or_default(const std::string& path) {
  return path.empty() ? default_lexicons() : load_lexicons(path);
}

// options shared by train and cross-validate, with flag > config > default
struct TrainCli {
  ConfigValues flags;
  std::string config_path;

  void attach(CLI::App* cmd) {
    auto opt = [cmd](const char* name, auto& slot, const char* desc) {
      cmd->add_option_function<typename std::decay_t<decltype(slot)>::value_type>(
          name, [&slot](const auto& v) { slot = v; }, desc);
    };
    opt("--model", flags.model, "crf_baseline | hier_bilstm | hier_bilstm_crf");
    opt("--feature-set", flags.feature_set,
        "saravanan | savelka | combined (crf_baseline only)");
    opt("--embedding-mode", flags.embedding_mode,
        "random_init | pretrained (neural models only)");
    opt("--lr", flags.lr, "learning rate");
    opt("--lambda", flags.lambda, "L2 strength on weights and transitions");
    opt("--clip", flags.clip, "global gradient norm clip");
    opt("--epochs", flags.epochs, "training epochs");
    opt("--min-token-freq", flags.min_token_freq, "token vocabulary cutoff");
    opt("--d-w", flags.d_w, "word embedding size");
    opt("--h-tok", flags.h_tok, "token BiLSTM hidden size per direction");
    opt("--h-doc", flags.h_doc, "document BiLSTM hidden size per direction");
    opt("--seed", flags.seed, "seed for all randomness");
    opt("--lexicons", flags.lexicons, "cue/entity lexicon JSON");
    opt("--embeddings", flags.embeddings, "sentence embedding file (pretrained mode)");
    cmd->add_option("--config", config_path, "JSON config file; flags win");
  }

  ResolvedTrainConfig resolve() const {
    ConfigValues merged = flags;
    if (!config_path.empty())
      merged = merge_config(flags, load_config_file(config_path));
    return resolve_train_config(merged);
  }
};

struct TrainedModel {
  std::optional<CrfModel> crf;
  std::optional<HierModel> hier;
};

TrainedModel train_with(const ResolvedTrainConfig& cfg, const Corpus& corpus,
                        const SentenceEmbeddingStore* store,
                        std::uint64_t seed) {
  TrainedModel out;
  if (!cfg.neural()) {
    CrfTrainConfig tc;
    tc.lr = cfg.lr;
    tc.lambda = cfg.lambda;
    tc.epochs = cfg.epochs;
    tc.seed = seed;
    out.crf = train_crf_model(corpus, lexicons_or_default(cfg.lexicons),
                              cfg.feature_set, tc);
  } else {
    HierTrainConfig tc;
    tc.mode = cfg.embedding_mode;
    tc.head = cfg.head();
    tc.dims = cfg.dims;
    tc.lr = cfg.lr;
    tc.clip = cfg.clip;
    tc.epochs = cfg.epochs;
    tc.min_token_freq = cfg.min_token_freq;
    tc.seed = seed;
    out.hier = train_hier(corpus, tc, store);
  }
  return out;
}

std::vector<Label> predict_with(const TrainedModel& model, const Document& doc,
                                const SentenceEmbeddingStore* store) {
  if (model.crf) return predict_crf(*model.crf, doc);
  return predict_hier(*model.hier, doc, store);
}

int run_split(const std::string& corpus_path, const std::string& text_path,
              const std::string& doc_id, const std::string& domain,
              const std::string& output) {
  Corpus corpus;
  if (!text_path.empty()) {
    std::ifstream in(text_path);
    if (!in) throw IoError("cannot open text file: " + text_path);
    std::string raw((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    Document doc;
    doc.doc_id = doc_id.empty() ? std::filesystem::path(text_path).stem().string()
                                : doc_id;
    doc.domain = domain;
    doc.raw_text = raw;
    corpus.documents.push_back(std::move(doc));
  } else {
    corpus = load_corpus(corpus_path);
  }
  for (Document& doc : corpus.documents) resplit_document(doc);
  write_text(output, corpus_to_jsonl(corpus));
  return 0;
}

int run_iaa(const std::string& corpus_path, const std::string& annotators_csv,
            double beta, const std::string& output) {
  const Corpus corpus = load_corpus(corpus_path);
  std::vector<std::string> annotators = split_csv_list(annotators_csv);
  if (annotators.empty()) {
    std::set<std::string> seen;
    for (const Document& d : corpus.documents)
      for (const auto& [name, spans] : d.annotations) seen.insert(name);
    annotators.assign(seen.begin(), seen.end());
  }
  const IaaReport report = pairwise_average_iaa(corpus, annotators, beta);
  write_text(output, iaa_report_json(report).dump(2) + "\n");
  return 0;
}

int run_agreement_matrix(const std::string& corpus_path, const std::string& x,
                         const std::string& y, const std::string& format,
                         const std::string& output) {
  const Corpus corpus = load_corpus(corpus_path);
  const AgreementMatrix m = agreement_matrix(corpus, x, y);
  if (format == "csv") {
    write_text(output, agreement_matrix_csv(m));
  } else {
    json j;
    std::vector<std::string> names;
    for (Label l : m.labels) names.push_back(label_name(l));
    j["labels"] = names;
    j["counts"] = m.counts;
    j["x"] = x;
    j["y"] = y;
    write_text(output, j.dump(2) + "\n");
  }
  return 0;
}

int run_curate(const std::string& corpus_path, const std::string& tie_policy,
               const std::string& priority_csv, const std::string& output) {
  const Corpus corpus = load_corpus(corpus_path);
  CurationOptions options;
  if (tie_policy == "error") {
    options.policy = TiePolicy::error;
  } else if (tie_policy == "annotator_priority") {
    options.policy = TiePolicy::annotator_priority;
    options.priority = split_csv_list(priority_csv);
    if (options.priority.empty())
      throw ArgumentError("annotator_priority needs --priority");
  } else {
    throw ArgumentError("unknown tie policy: " + tie_policy);
  }
  write_text(output, corpus_to_jsonl(majority_vote_gold(corpus, options)));
  return 0;
}

int run_featurize(const std::string& corpus_path, const std::string& set_name,
                  const std::string& lexicons_path, const std::string& fit_vocab,
                  const std::string& vocab_path, const std::string& output) {
  const Corpus corpus = load_corpus(corpus_path);
  const FeatureSet set = parse_feature_set(set_name);
  const Lexicons lexicons = lexicons_or_default(lexicons_path);
  const FeatureOptions options = feature_options(set);

  FeatureVocabulary vocab;
  if (!vocab_path.empty()) {
    std::ifstream in(vocab_path);
    if (!in) throw IoError("cannot open vocabulary file: " + vocab_path);
    json j;
    in >> j;
    vocab = FeatureVocabulary::from_json(j);
  }

  std::vector<std::vector<FeatureVector>> features;
  if (vocab_path.empty()) {
    for (const Document& doc : corpus.documents)
      features.push_back(extract_features(doc, lexicons, vocab, true, options));
    vocab.freeze();
  } else {
    for (const Document& doc : corpus.documents)
      features.push_back(transform_features(doc, lexicons, vocab, options));
  }

  if (!fit_vocab.empty()) {
    std::ofstream out(fit_vocab);
    if (!out) throw IoError("cannot open vocabulary file for writing: " + fit_vocab);
    out << vocab.to_json().dump(2) << "\n";
  }

  std::ostringstream out;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    json j;
    j["doc_id"] = corpus.documents[d].doc_id;
    json sentences = json::array();
    for (const FeatureVector& fv : features[d]) {
      json entries = json::array();
      for (const auto& [idx, value] : fv.entries)
        entries.push_back({idx, value});
      sentences.push_back(std::move(entries));
    }
    j["features"] = std::move(sentences);
    out << j.dump() << "\n";
  }
  write_text(output, out.str());
  return 0;
}

int run_embed(const std::string& corpus_path, long dim, const std::string& output) {
  if (dim <= 0) throw ArgumentError("embedding dim must be positive");
  const Corpus corpus = load_corpus(corpus_path);
  SentenceEmbeddingStore store(dim);
  for (const Document& doc : corpus.documents)
    for (const Sentence& s : doc.sentences)
      store.insert(doc.doc_id, s.index, fallback_embed(s.text, dim));
  save_sentence_embeddings(store, output);
  std::cerr << "embedded " << store.all().size() << " sentences at dim " << dim << "\n";
  return 0;
}

int run_train(const TrainCli& cli, const std::string& corpus_path,
              const std::string& model_out, bool verbose) {
  const ResolvedTrainConfig cfg = cli.resolve();
  std::cerr << "config: " << resolved_config_json(cfg).dump() << "\n";
  const Corpus corpus = load_corpus(corpus_path);

  SentenceEmbeddingStore store(0);
  const SentenceEmbeddingStore* sp = nullptr;
  if (cfg.neural() && cfg.embedding_mode == EmbeddingMode::pretrained) {
    store = load_sentence_embeddings(cfg.embeddings);
    sp = &store;
  }

  const TrainedModel model = train_with(cfg, corpus, sp, cfg.seed);
  const auto& loss_log = model.crf ? model.crf->loss_log : model.hier->loss_log;
  if (verbose)
    for (std::size_t i = 0; i < loss_log.size(); ++i)
      std::cerr << "epoch " << i << " loss " << loss_log[i] << "\n";
  else if (!loss_log.empty())
    std::cerr << "final loss " << loss_log.back() << "\n";

  if (model.crf) save_crf_model(*model.crf, model_out);
  else save_hier_model(*model.hier, model_out);
  std::cerr << "model written to " << model_out << "\n";
  return 0;
}

int run_predict(const std::string& corpus_path, const std::string& model_path,
                const std::string& embeddings_path, const std::string& output) {
  const Corpus corpus = load_corpus(corpus_path);

  std::ifstream in(model_path);
  if (!in) throw IoError("cannot open model file: " + model_path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(model_path + ": " + e.what());
  }
  const std::string format = j.value("format", "");

  TrainedModel model;
  SentenceEmbeddingStore store(0);
  const SentenceEmbeddingStore* sp = nullptr;
  if (format == "crf_baseline") {
    model.crf = crf_model_from_json(j);
  } else if (format == "hier_bilstm") {
    model.hier = hier_model_from_json(j);
    if (model.hier->mode == EmbeddingMode::pretrained) {
      if (embeddings_path.empty())
        throw ArgumentError("pretrained model requires --embeddings");
      store = load_sentence_embeddings(embeddings_path);
      sp = &store;
    }
  } else {
    throw FormatError("unrecognized model format: " + format);
  }

  std::ostringstream out;
  for (const Document& doc : corpus.documents) {
    const auto labels = predict_with(model, doc, sp);
    json row;
    row["doc_id"] = doc.doc_id;
    std::vector<std::string> names;
    for (Label l : labels) names.push_back(label_name(l));
    row["labels"] = names;
    out << row.dump() << "\n";
  }
  write_text(output, out.str());
  return 0;
}

int run_evaluate(const std::string& corpus_path, const std::string& predictions_path,
                 const std::string& output, const std::string& csv_path) {
  const Corpus corpus = load_corpus(corpus_path);

  std::ifstream in(predictions_path);
  if (!in) throw IoError("cannot open predictions file: " + predictions_path);
  std::map<std::string, std::vector<Label>> by_doc;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(predictions_path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    std::vector<Label> labels;
    for (const auto& name : row.at("labels"))
      labels.push_back(parse_label(name.get<std::string>()));
    by_doc[row.at("doc_id").get<std::string>()] = std::move(labels);
  }

  std::vector<std::vector<Label>> predictions;
  for (const Document& doc : corpus.documents) {
    auto it = by_doc.find(doc.doc_id);
    if (it == by_doc.end())
      throw ValidationError("no predictions for document " + doc.doc_id);
    predictions.push_back(it->second);
  }

  const MetricsReport report = evaluate(corpus, predictions);
  write_text(output, metrics_report_json(report).dump(2) + "\n");
  if (!csv_path.empty()) write_text(csv_path, domain_f_csv(report));
  return 0;
}

int run_cross_validate(const TrainCli& cli, const std::string& corpus_path, int k,
                       int jobs, bool stratify, const std::string& output_dir,
                       const std::string& csv_path) {
  const ResolvedTrainConfig cfg = cli.resolve();
  std::cerr << "config: " << resolved_config_json(cfg).dump() << "\n";
  const Corpus corpus = load_corpus(corpus_path);

  SentenceEmbeddingStore store(0);
  const SentenceEmbeddingStore* sp = nullptr;
  if (cfg.neural() && cfg.embedding_mode == EmbeddingMode::pretrained) {
    store = load_sentence_embeddings(cfg.embeddings);
    sp = &store;
  }

  const auto result = cross_validate(
      corpus, k, cfg.seed,
      [&cfg, sp](const Corpus& train, const Corpus& test, std::uint64_t fold_seed) {
        const TrainedModel model = train_with(cfg, train, sp, fold_seed);
        std::vector<std::vector<Label>> preds;
        for (const Document& doc : test.documents)
          preds.push_back(predict_with(model, doc, sp));
        return preds;
      },
      jobs, stratify);

  std::filesystem::create_directories(output_dir);
  for (const MetricsReport& fold : result.folds) {
    const std::string path =
        output_dir + "/fold_" + std::to_string(fold.fold_id) + ".json";
    write_text(path, metrics_report_json(fold).dump(2) + "\n");
  }
  write_text(output_dir + "/mean.json", metrics_report_json(result.mean).dump(2) + "\n");
  json plan;
  plan["k"] = result.plan.k;
  plan["seed"] = result.plan.seed;
  plan["assignments"] = result.plan.assignments;
  plan["config"] = resolved_config_json(cfg);
  write_text(output_dir + "/plan.json", plan.dump(2) + "\n");
  if (!csv_path.empty()) write_text(csv_path, domain_f_csv(result.mean));
  std::cerr << "mean macro F " << result.mean.macro.f1 << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rhetorical role labeling for legal judgments"};
  app.require_subcommand(1);

  // split
  auto* split_cmd = app.add_subcommand("split", "sentence-split raw text into JSONL");
  std::string split_corpus, split_text, split_doc_id, split_domain = "unknown",
              split_output = "-";
  split_cmd->add_option("--corpus", split_corpus, "JSONL corpus to re-split");
  split_cmd->add_option("--text", split_text, "plain text file for a single document");
  split_cmd->add_option("--doc-id", split_doc_id, "doc id for --text input");
  split_cmd->add_option("--domain", split_domain, "domain for --text input");
  split_cmd->add_option("--output", split_output, "output JSONL path or -");

  // iaa
  auto* iaa_cmd = app.add_subcommand("iaa", "pairwise inter-annotator agreement");
  std::string iaa_corpus, iaa_annotators, iaa_output = "-";
  double iaa_beta = 1.0;
  iaa_cmd->add_option("--corpus", iaa_corpus, "JSONL corpus")->required();
  iaa_cmd->add_option("--annotators", iaa_annotators, "comma-separated annotator ids");
  iaa_cmd->add_option("--beta", iaa_beta, "F-measure beta");
  iaa_cmd->add_option("--output", iaa_output, "report path or -");

  // agreement-matrix
  auto* am_cmd = app.add_subcommand("agreement-matrix",
                                    "label agreement matrix for two annotators");
  std::string am_corpus, am_x, am_y, am_format = "json", am_output = "-";
  am_cmd->add_option("--corpus", am_corpus, "JSONL corpus")->required();
  am_cmd->add_option("--x", am_x, "row annotator")->required();
  am_cmd->add_option("--y", am_y, "column annotator")->required();
  am_cmd->add_option("--format", am_format, "json | csv");
  am_cmd->add_option("--output", am_output, "output path or -");

  // curate
  auto* curate_cmd = app.add_subcommand("curate", "majority-vote gold labels");
  std::string curate_corpus, curate_policy = "error", curate_priority,
              curate_output = "-";
  curate_cmd->add_option("--corpus", curate_corpus, "JSONL corpus")->required();
  curate_cmd->add_option("--tie-policy", curate_policy, "error | annotator_priority");
  curate_cmd->add_option("--priority", curate_priority,
                         "comma-separated annotators, most trusted first");
  curate_cmd->add_option("--output", curate_output, "output JSONL path or -");

  // featurize
  auto* feat_cmd = app.add_subcommand("featurize", "extract sparse features");
  std::string feat_corpus, feat_set = "combined", feat_lexicons, feat_fit_vocab,
              feat_vocab, feat_output = "-";
  feat_cmd->add_option("--corpus", feat_corpus, "JSONL corpus")->required();
  feat_cmd->add_option("--feature-set", feat_set, "saravanan | savelka | combined");
  feat_cmd->add_option("--lexicons", feat_lexicons, "lexicon JSON");
  feat_cmd->add_option("--fit-vocab", feat_fit_vocab,
                       "fit a vocabulary on this corpus and write it here");
  feat_cmd->add_option("--vocab", feat_vocab, "use a previously fitted vocabulary");
  feat_cmd->add_option("--output", feat_output, "feature JSONL path or -");

  // embed
  auto* embed_cmd = app.add_subcommand("embed",
                                       "hash-based fallback sentence embeddings");
  std::string embed_corpus, embed_output;
  long embed_dim = 128;
  embed_cmd->add_option("--corpus", embed_corpus, "JSONL corpus")->required();
  embed_cmd->add_option("--dim", embed_dim, "embedding dimension");
  embed_cmd->add_option("--output", embed_output, "embedding TSV path")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train a labeling model");
  TrainCli train_cli;
  train_cli.attach(train_cmd);
  std::string train_corpus, train_model_out;
  bool train_verbose = false;
  train_cmd->add_option("--corpus", train_corpus, "gold-labeled JSONL corpus")->required();
  train_cmd->add_option("--model-out", train_model_out, "model JSON path")->required();
  train_cmd->add_flag("--verbose", train_verbose, "log per-epoch losses");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "label documents with a model");
  std::string pred_corpus, pred_model, pred_embeddings, pred_output = "-";
  predict_cmd->add_option("--corpus", pred_corpus, "JSONL corpus")->required();
  predict_cmd->add_option("--model-file", pred_model, "trained model JSON")->required();
  predict_cmd->add_option("--embeddings", pred_embeddings,
                          "sentence embeddings (pretrained models)");
  predict_cmd->add_option("--output", pred_output, "prediction JSONL path or -");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "score predictions against gold");
  std::string eval_corpus, eval_predictions, eval_output = "-", eval_csv;
  eval_cmd->add_option("--corpus", eval_corpus, "gold-labeled JSONL corpus")->required();
  eval_cmd->add_option("--predictions", eval_predictions, "prediction JSONL")->required();
  eval_cmd->add_option("--output", eval_output, "report path or -");
  eval_cmd->add_option("--csv", eval_csv, "also write a domain/label F table");

  // cross-validate
  auto* cv_cmd = app.add_subcommand("cross-validate", "k-fold cross-validation");
  TrainCli cv_cli;
  cv_cli.attach(cv_cmd);
  std::string cv_corpus, cv_output_dir, cv_csv;
  int cv_k = 5;
  int cv_jobs = 1;
  bool cv_stratify = false;
  cv_cmd->add_option("--corpus", cv_corpus, "gold-labeled JSONL corpus")->required();
  cv_cmd->add_option("--k", cv_k, "number of folds");
  cv_cmd->add_option("--jobs", cv_jobs, "parallel fold workers");
  cv_cmd->add_flag("--stratify-domain", cv_stratify, "stratify folds by domain");
  cv_cmd->add_option("--output-dir", cv_output_dir, "directory for fold reports")->required();
  cv_cmd->add_option("--csv", cv_csv, "also write the mean domain/label F table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (split_cmd->parsed()) {
      if (split_corpus.empty() == split_text.empty())
        throw ArgumentError("split needs exactly one of --corpus or --text");
      return run_split(split_corpus, split_text, split_doc_id, split_domain,
                       split_output);
    }
    if (iaa_cmd->parsed())
      return run_iaa(iaa_corpus, iaa_annotators, iaa_beta, iaa_output);
    if (am_cmd->parsed())
      return run_agreement_matrix(am_corpus, am_x, am_y, am_format, am_output);
    if (curate_cmd->parsed())
      return run_curate(curate_corpus, curate_policy, curate_priority, curate_output);
    if (feat_cmd->parsed()) {
      if (feat_vocab.empty() && feat_fit_vocab.empty())
        throw ArgumentError("featurize needs --fit-vocab or --vocab");
      if (!feat_vocab.empty() && !feat_fit_vocab.empty())
        throw ArgumentError("--fit-vocab and --vocab are mutually exclusive");
      return run_featurize(feat_corpus, feat_set, feat_lexicons, feat_fit_vocab,
                           feat_vocab, feat_output);
    }
    if (embed_cmd->parsed())
      return run_embed(embed_corpus, embed_dim, embed_output);
    if (train_cmd->parsed())
      return run_train(train_cli, train_corpus, train_model_out, train_verbose);
    if (predict_cmd->parsed())
      return run_predict(pred_corpus, pred_model, pred_embeddings, pred_output);
    if (eval_cmd->parsed())
      return run_evaluate(eval_corpus, eval_predictions, eval_output, eval_csv);
    if (cv_cmd->parsed())
      return run_cross_validate(cv_cli, cv_corpus, cv_k, cv_jobs, cv_stratify,
                                cv_output_dir, cv_csv);
    std::cerr << "no subcommand\n";
    return 1;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::runtime_error& e) {
    // fold-annotated divergence keeps its exit code
    const std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    return what.find("diverged") != std::string::npos ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
