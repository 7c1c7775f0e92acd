#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rhetseg/agreement.hpp"
#include "rhetseg/corpus.hpp"
#include "rhetseg/errors.hpp"
#include "rhetseg/label.hpp"
#include "rhetseg/util.hpp"

namespace rhetseg {

inline std::vector<Label> full_label_universe() {
  return {kAllLabels.begin(), kAllLabels.end()};
}

struct FoldPlan {
  int k = 0;
  std::uint64_t seed = 0;
  std::map<std::string, int> assignments;  // doc_id -> fold index

  std::vector<std::vector<std::size_t>> fold_doc_indices(const Corpus& corpus) const {
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
      auto it = assignments.find(corpus.documents[i].doc_id);
      if (it == assignments.end())
        throw ArgumentError("document not in fold plan: " + corpus.documents[i].doc_id);
      folds[static_cast<std::size_t>(it->second)].push_back(i);
    }
    return folds;
  }
};

// Deterministic shuffle then round-robin. With stratify, the shuffle and
// round-robin run within each domain so every fold sees each domain's share.
inline FoldPlan make_folds(const Corpus& corpus, int k, std::uint64_t seed,
                           bool stratify_by_domain = false) {
  if (k <= 0) throw ArgumentError("fold count must be positive");
  if (static_cast<std::size_t>(k) > corpus.size())
    throw ArgumentError("fold count exceeds document count");
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;

  std::map<std::string, std::vector<std::string>> groups;
  if (stratify_by_domain) {
    for (const Document& d : corpus.documents) groups[d.domain].push_back(d.doc_id);
  } else {
    for (const Document& d : corpus.documents) groups[""].push_back(d.doc_id);
  }

  std::uint64_t stream = 0;
  int offset = 0;  // continue round-robin across groups to keep sizes balanced
  for (auto& [domain, ids] : groups) {
    SeededRng rng(derive_seed(seed, stream++));
    seeded_shuffle(ids, rng);
    for (std::size_t i = 0; i < ids.size(); ++i)
      plan.assignments[ids[i]] = (offset + static_cast<int>(i)) % k;
    offset = (offset + static_cast<int>(ids.size())) % k;
  }
  return plan;
}

struct LabelMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;  // gold occurrences

  bool operator==(const LabelMetrics&) const = default;
};

struct MacroMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const MacroMetrics&) const = default;
};

struct DomainMetrics {
  std::map<Label, LabelMetrics> per_label;
  MacroMetrics macro;
  long sentences = 0;
};

struct MetricsReport {
  std::vector<Label> universe;
  std::map<Label, LabelMetrics> per_label;
  MacroMetrics macro;
  double accuracy = 0.0;  // micro sentence accuracy
  AgreementMatrix confusion;  // gold rows x predicted columns
  std::map<std::string, DomainMetrics> per_domain;
  std::vector<Label> degenerate;  // universe labels with no gold and no predictions
  int fold_id = -1;
};

namespace detail {

inline std::map<Label, LabelMetrics> metrics_from_confusion(
    const std::vector<Label>& universe,
    const std::vector<std::vector<long>>& counts) {
  std::map<Label, LabelMetrics> out;
  const std::size_t n = universe.size();
  for (std::size_t i = 0; i < n; ++i) {
    long tp = counts[i][i];
    long gold_total = 0;
    long pred_total = 0;
    for (std::size_t j = 0; j < n; ++j) {
      gold_total += counts[i][j];
      pred_total += counts[j][i];
    }
    LabelMetrics m;
    m.support = gold_total;
    m.precision = pred_total == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(pred_total);
    m.recall = gold_total == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(gold_total);
    m.f1 = (m.precision + m.recall) == 0.0
               ? 0.0
               : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    out[universe[i]] = m;
  }
  return out;
}

inline MacroMetrics macro_of(const std::map<Label, LabelMetrics>& per_label) {
  MacroMetrics m;
  if (per_label.empty()) return m;
  for (const auto& [label, lm] : per_label) {
    m.precision += lm.precision;
    m.recall += lm.recall;
    m.f1 += lm.f1;
  }
  const double n = static_cast<double>(per_label.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

}  // namespace detail

// Aligned per-document predictions against gold. Macro averages run over
// `universe` (the full label set by default); labels missing from both gold
// and predictions still divide the macro and are reported as degenerate.
inline MetricsReport evaluate(const Corpus& corpus,
                              const std::vector<std::vector<Label>>& predictions,
                              const std::vector<Label>& universe = full_label_universe(),
                              int fold_id = -1) {
  if (predictions.size() != corpus.documents.size())
    throw ArgumentError("one prediction sequence per document required");
  if (universe.empty()) throw ArgumentError("empty label universe");

  std::map<Label, std::size_t> uindex;
  for (std::size_t i = 0; i < universe.size(); ++i) uindex[universe[i]] = i;
  if (uindex.size() != universe.size())
    throw ArgumentError("duplicate label in universe");

  const std::size_t n = universe.size();
  std::vector<std::vector<long>> counts(n, std::vector<long>(n, 0));
  std::map<std::string, std::vector<std::vector<long>>> domain_counts;
  long correct = 0;
  long total = 0;

  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    const Document& doc = corpus.documents[d];
    const auto gold = doc.gold_labels();
    if (predictions[d].size() != gold.size())
      throw ArgumentError("prediction length mismatch for " + doc.doc_id);
    auto& dc = domain_counts
                   .try_emplace(doc.domain,
                                std::vector<std::vector<long>>(n, std::vector<long>(n, 0)))
                   .first->second;
    for (std::size_t s = 0; s < gold.size(); ++s) {
      auto gi = uindex.find(gold[s]);
      auto pi = uindex.find(predictions[d][s]);
      if (gi == uindex.end())
        throw ArgumentError("gold label outside universe in " + doc.doc_id);
      if (pi == uindex.end())
        throw ArgumentError("predicted label outside universe in " + doc.doc_id);
      counts[gi->second][pi->second] += 1;
      dc[gi->second][pi->second] += 1;
      correct += gold[s] == predictions[d][s] ? 1 : 0;
      total += 1;
    }
  }

  MetricsReport report;
  report.universe = universe;
  report.fold_id = fold_id;
  report.per_label = detail::metrics_from_confusion(universe, counts);
  report.macro = detail::macro_of(report.per_label);
  report.accuracy = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  report.confusion.labels = universe;
  report.confusion.counts = counts;

  for (auto& [domain, dc] : domain_counts) {
    DomainMetrics dm;
    dm.per_label = detail::metrics_from_confusion(universe, dc);
    dm.macro = detail::macro_of(dm.per_label);
    for (const auto& row : dc)
      for (long v : row) dm.sentences += v;
    report.per_domain.emplace(domain, std::move(dm));
  }

  for (std::size_t i = 0; i < n; ++i) {
    long seen = 0;
    for (std::size_t j = 0; j < n; ++j) seen += counts[i][j] + counts[j][i];
    if (seen == 0) report.degenerate.push_back(universe[i]);
  }
  return report;
}

struct CrossValidationResult {
  FoldPlan plan;
  std::vector<MetricsReport> folds;
  MetricsReport mean;  // macro/per-label means across folds; pooled confusion
};

namespace detail {

inline MetricsReport mean_report(const std::vector<MetricsReport>& folds,
                                 const std::vector<Label>& universe) {
  MetricsReport mean;
  mean.universe = universe;
  mean.fold_id = -1;
  if (folds.empty()) return mean;
  const double n = static_cast<double>(folds.size());

  const std::size_t u = universe.size();
  mean.confusion.labels = universe;
  mean.confusion.counts.assign(u, std::vector<long>(u, 0));
  std::set<Label> degenerate;
  for (const MetricsReport& f : folds) {
    mean.macro.precision += f.macro.precision / n;
    mean.macro.recall += f.macro.recall / n;
    mean.macro.f1 += f.macro.f1 / n;
    mean.accuracy += f.accuracy / n;
    for (const auto& [label, lm] : f.per_label) {
      LabelMetrics& m = mean.per_label[label];
      m.precision += lm.precision / n;
      m.recall += lm.recall / n;
      m.f1 += lm.f1 / n;
      m.support += lm.support;
    }
    for (std::size_t i = 0; i < u; ++i)
      for (std::size_t j = 0; j < u; ++j)
        mean.confusion.counts[i][j] += f.confusion.counts[i][j];
    for (Label l : f.degenerate) degenerate.insert(l);
    for (const auto& [domain, dm] : f.per_domain) {
      DomainMetrics& md = mean.per_domain[domain];
      md.sentences += dm.sentences;
    }
  }
  // per-domain means over the folds that contain the domain
  for (auto& [domain, md] : mean.per_domain) {
    double hits = 0.0;
    for (const MetricsReport& f : folds) hits += f.per_domain.count(domain) ? 1.0 : 0.0;
    for (const MetricsReport& f : folds) {
      auto it = f.per_domain.find(domain);
      if (it == f.per_domain.end()) continue;
      md.macro.precision += it->second.macro.precision / hits;
      md.macro.recall += it->second.macro.recall / hits;
      md.macro.f1 += it->second.macro.f1 / hits;
      for (const auto& [label, lm] : it->second.per_label) {
        LabelMetrics& m = md.per_label[label];
        m.precision += lm.precision / hits;
        m.recall += lm.recall / hits;
        m.f1 += lm.f1 / hits;
        m.support += lm.support;
      }
    }
  }
  mean.degenerate.assign(degenerate.begin(), degenerate.end());
  return mean;
}

}  // namespace detail

// fold_fn(train, test, fold_seed) -> aligned predictions for test.documents.
// Folds run on up to `jobs` threads; each gets an isolated corpus copy and a
// fold-derived seed, so results do not depend on scheduling.
template <typename FoldFn>
CrossValidationResult cross_validate(const Corpus& corpus, int k, std::uint64_t seed,
                                     FoldFn&& fold_fn, int jobs = 1,
                                     bool stratify_by_domain = false,
                                     const std::vector<Label>& universe = full_label_universe()) {
  for (const Document& doc : corpus.documents)
    if (!doc.has_gold())
      throw ValidationError("document \"" + doc.doc_id + "\" has no gold labels");

  CrossValidationResult result;
  result.plan = make_folds(corpus, k, seed, stratify_by_domain);
  const auto folds = result.plan.fold_doc_indices(corpus);
  result.folds.resize(static_cast<std::size_t>(k));

  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(k));
  auto run_fold = [&](int fold) {
    try {
      Corpus train;
      Corpus test;
      for (int other = 0; other < k; ++other)
        for (std::size_t idx : folds[static_cast<std::size_t>(other)])
          (other == fold ? test : train).documents.push_back(corpus.documents[idx]);
      const auto preds = fold_fn(train, test, derive_seed(seed, static_cast<std::uint64_t>(fold)));
      result.folds[static_cast<std::size_t>(fold)] = evaluate(test, preds, universe, fold);
    } catch (...) {
      errors[static_cast<std::size_t>(fold)] = std::current_exception();
    }
  };

  if (jobs <= 1) {
    for (int fold = 0; fold < k; ++fold) run_fold(fold);
  } else {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    while (next < static_cast<std::size_t>(k)) {
      pool.clear();
      for (int j = 0; j < jobs && next < static_cast<std::size_t>(k); ++j, ++next)
        pool.emplace_back(run_fold, static_cast<int>(next));
      for (auto& t : pool) t.join();
    }
  }

  for (int fold = 0; fold < k; ++fold) {
    if (!errors[static_cast<std::size_t>(fold)]) continue;
    try {
      std::rethrow_exception(errors[static_cast<std::size_t>(fold)]);
    } catch (const std::exception& e) {
      throw std::runtime_error("fold " + std::to_string(fold) + ": " + e.what());
    }
  }

  result.mean = detail::mean_report(result.folds, universe);
  return result;
}

// --- report serialization ---

inline nlohmann::json label_metrics_json(const std::map<Label, LabelMetrics>& per_label) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [label, m] : per_label)
    j[label_name(label)] = {{"precision", m.precision},
                            {"recall", m.recall},
                            {"f1", m.f1},
                            {"support", m.support}};
  return j;
}

inline nlohmann::json metrics_report_json(const MetricsReport& r) {
  nlohmann::json j;
  j["fold"] = r.fold_id;
  std::vector<std::string> universe;
  for (Label l : r.universe) universe.push_back(label_name(l));
  j["universe"] = universe;
  j["per_label"] = label_metrics_json(r.per_label);
  j["macro"] = {{"precision", r.macro.precision},
                {"recall", r.macro.recall},
                {"f1", r.macro.f1}};
  j["accuracy"] = r.accuracy;
  j["confusion"] = r.confusion.counts;
  nlohmann::json domains = nlohmann::json::object();
  for (const auto& [domain, dm] : r.per_domain)
    domains[domain] = {{"per_label", label_metrics_json(dm.per_label)},
                       {"macro",
                        {{"precision", dm.macro.precision},
                         {"recall", dm.macro.recall},
                         {"f1", dm.macro.f1}}},
                       {"sentences", dm.sentences}};
  j["per_domain"] = domains;
  std::vector<std::string> degenerate;
  for (Label l : r.degenerate) degenerate.push_back(label_name(l));
  j["degenerate_labels"] = degenerate;
  return j;
}

inline nlohmann::json cross_validation_json(const CrossValidationResult& r) {
  nlohmann::json j;
  j["k"] = r.plan.k;
  j["seed"] = r.plan.seed;
  j["assignments"] = r.plan.assignments;
  j["folds"] = nlohmann::json::array();
  for (const MetricsReport& f : r.folds) j["folds"].push_back(metrics_report_json(f));
  j["mean"] = metrics_report_json(r.mean);
  return j;
}

// domains x labels table of per-domain F scores
inline std::string domain_f_csv(const MetricsReport& r) {
  std::ostringstream out;
  out << "domain";
  for (Label l : r.universe) out << "," << label_name(l);
  out << ",macro_f\n";
  out.setf(std::ios::fixed);
  out.precision(4);
  for (const auto& [domain, dm] : r.per_domain) {
    out << domain;
    for (Label l : r.universe) {
      auto it = dm.per_label.find(l);
      out << "," << (it == dm.per_label.end() ? 0.0 : it->second.f1);
    }
    out << "," << dm.macro.f1 << "\n";
  }
  return out.str();
}

}  // namespace rhetseg
