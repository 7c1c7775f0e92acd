#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rhetseg/corpus.hpp"
#include "rhetseg/errors.hpp"
#include "rhetseg/label.hpp"

namespace rhetseg {

struct MatchCounts {
  long correct = 0;
  long partial = 0;
  long missing = 0;
  long spurious = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    correct += o.correct;
    partial += o.partial;
    missing += o.missing;
    spurious += o.spurious;
    return *this;
  }
  bool operator==(const MatchCounts&) const = default;
};

struct MatchTally {
  MatchCounts total;
  std::map<Label, MatchCounts> by_label;

  MatchTally& operator+=(const MatchTally& o) {
    total += o.total;
    for (const auto& [label, counts] : o.by_label) by_label[label] += counts;
    return *this;
  }
};

// Greedy one-to-one span matching, left to right. A pair matches when labels
// agree and the spans share at least one character; an identical span is
// Correct, any other overlap is Partial. Spans of `a` left unmatched count as
// missing, of `b` as spurious. Within-list spans must be non-overlapping, so
// an exact partner can never be stolen by an earlier span.
inline MatchTally match_spans(std::vector<LabeledSpan> a,
                              std::vector<LabeledSpan> b) {
  auto by_pos = [](const LabeledSpan& x, const LabeledSpan& y) {
    return x.begin < y.begin || (x.begin == y.begin && x.end < y.end);
  };
  std::sort(a.begin(), a.end(), by_pos);
  std::sort(b.begin(), b.end(), by_pos);

  MatchTally t;
  std::vector<char> used(b.size(), 0);
  for (const LabeledSpan& sa : a) {
    long found = -1;
    bool exact = false;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j] || b[j].label != sa.label) continue;
      if (!(sa.begin < b[j].end && b[j].begin < sa.end)) continue;
      found = static_cast<long>(j);
      exact = b[j].begin == sa.begin && b[j].end == sa.end;
      break;
    }
    if (found >= 0) {
      used[static_cast<std::size_t>(found)] = 1;
      if (exact) {
        t.total.correct += 1;
        t.by_label[sa.label].correct += 1;
      } else {
        t.total.partial += 1;
        t.by_label[sa.label].partial += 1;
      }
    } else {
      t.total.missing += 1;
      t.by_label[sa.label].missing += 1;
    }
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (!used[j]) {
      t.total.spurious += 1;
      t.by_label[b[j].label].spurious += 1;
    }
  }
  return t;
}

struct ScoreTriple {
  double strict = 0.0;
  double lenient = 0.0;
  double average = 0.0;

  bool operator==(const ScoreTriple&) const = default;
};

struct IaaScores {
  ScoreTriple precision;
  ScoreTriple recall;
  ScoreTriple fscore;
  double beta = 1.0;
};

namespace detail {

inline double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

inline double f_beta(double p, double r, double beta) {
  const double den = beta * beta * p + r;
  return safe_div((beta * beta + 1.0) * p * r, den);
}

}  // namespace detail

// Precision/recall/F over match counts. The average variant credits a partial
// match half; strict credits it nothing; lenient credits it fully. The
// denominators never change. 0/0 is reported as 0.
inline IaaScores iaa_scores(const MatchCounts& mc, double beta = 1.0) {
  if (mc.correct < 0 || mc.partial < 0 || mc.missing < 0 || mc.spurious < 0)
    throw ArgumentError("match counts must be non-negative");
  const double c = static_cast<double>(mc.correct);
  const double pt = static_cast<double>(mc.partial);
  const double den_p = c + static_cast<double>(mc.spurious) + pt;
  const double den_r = c + static_cast<double>(mc.missing) + pt;

  IaaScores s;
  s.beta = beta;
  s.precision.strict = detail::safe_div(c, den_p);
  s.precision.lenient = detail::safe_div(c + pt, den_p);
  s.precision.average = detail::safe_div(c + 0.5 * pt, den_p);
  s.recall.strict = detail::safe_div(c, den_r);
  s.recall.lenient = detail::safe_div(c + pt, den_r);
  s.recall.average = detail::safe_div(c + 0.5 * pt, den_r);
  s.fscore.strict = detail::f_beta(s.precision.strict, s.recall.strict, beta);
  s.fscore.lenient = detail::f_beta(s.precision.lenient, s.recall.lenient, beta);
  s.fscore.average = detail::f_beta(s.precision.average, s.recall.average, beta);
  return s;
}

// --- span -> sentence resolution ---

// Index of the sentence sharing the most characters with [begin, end); ties
// go to the earlier sentence; -1 when nothing overlaps.
inline long resolve_sentence(const std::vector<Sentence>& sentences,
                             std::size_t begin, std::size_t end) {
  long best = -1;
  std::size_t best_overlap = 0;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const Sentence& s = sentences[i];
    const std::size_t lo = std::max(begin, s.begin);
    const std::size_t hi = std::min(end, s.end);
    const std::size_t overlap = hi > lo ? hi - lo : 0;
    if (overlap > best_overlap) {
      best_overlap = overlap;
      best = static_cast<long>(i);
    }
  }
  return best;
}

// One label per sentence for one annotator. When several of the annotator's
// spans resolve to the same sentence, the span with the larger overlap wins
// (earlier span on ties).
inline std::vector<std::optional<Label>> sentence_labels(
    const Document& doc, const std::string& annotator) {
  std::vector<std::optional<Label>> out(doc.sentences.size());
  std::vector<std::size_t> best(doc.sentences.size(), 0);
  auto it = doc.annotations.find(annotator);
  if (it == doc.annotations.end()) return out;
  for (const LabeledSpan& sp : it->second) {
    const long idx = resolve_sentence(doc.sentences, sp.begin, sp.end);
    if (idx < 0) continue;
    const Sentence& s = doc.sentences[static_cast<std::size_t>(idx)];
    const std::size_t lo = std::max(sp.begin, s.begin);
    const std::size_t hi = std::min(sp.end, s.end);
    const std::size_t overlap = hi - lo;
    if (overlap > best[static_cast<std::size_t>(idx)]) {
      best[static_cast<std::size_t>(idx)] = overlap;
      out[static_cast<std::size_t>(idx)] = sp.label;
    }
  }
  return out;
}

// --- sentence-level agreement matrix ---

struct AgreementMatrix {
  std::vector<Label> labels;
  std::vector<std::vector<long>> counts;  // counts[i][j]: x said labels[i], y said labels[j]

  long total() const {
    long t = 0;
    for (const auto& row : counts)
      for (long v : row) t += v;
    return t;
  }
};

inline AgreementMatrix agreement_matrix(const Corpus& corpus, const std::string& x,
                                        const std::string& y) {
  bool seen_x = false, seen_y = false;
  for (const Document& doc : corpus.documents) {
    seen_x = seen_x || doc.annotations.count(x) > 0;
    seen_y = seen_y || doc.annotations.count(y) > 0;
  }
  if (!seen_x) throw ArgumentError("unknown annotator: " + x);
  if (!seen_y) throw ArgumentError("unknown annotator: " + y);

  AgreementMatrix m;
  m.labels.assign(kAllLabels.begin(), kAllLabels.end());
  m.counts.assign(kNumLabels, std::vector<long>(kNumLabels, 0));
  for (const Document& doc : corpus.documents) {
    if (!doc.annotations.count(x) || !doc.annotations.count(y)) continue;
    const auto lx = sentence_labels(doc, x);
    const auto ly = sentence_labels(doc, y);
    for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
      if (lx[i] && ly[i])
        m.counts[static_cast<std::size_t>(label_index(*lx[i]))]
                [static_cast<std::size_t>(label_index(*ly[i]))] += 1;
    }
  }
  return m;
}

inline std::string agreement_matrix_csv(const AgreementMatrix& m) {
  std::ostringstream out;
  out << "label";
  for (Label l : m.labels) out << "," << label_name(l);
  out << "\n";
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    out << label_name(m.labels[i]);
    for (std::size_t j = 0; j < m.labels.size(); ++j) out << "," << m.counts[i][j];
    out << "\n";
  }
  return out.str();
}

// --- pairwise IAA over a corpus ---

struct PairIaa {
  std::string first;
  std::string second;
  MatchCounts counts;
  IaaScores scores;
  std::map<Label, IaaScores> per_label;
  std::map<std::string, IaaScores> per_domain;
  std::vector<std::string> skipped_docs;  // one annotator absent
};

struct IaaReport {
  std::vector<PairIaa> pairs;
  IaaScores overall;                      // mean of pair scores
  std::map<Label, IaaScores> per_label;   // mean across pairs
  std::map<std::string, IaaScores> per_domain;
  double beta = 1.0;
};

namespace detail {

inline IaaScores mean_scores(const std::vector<IaaScores>& all, double beta) {
  IaaScores m;
  m.beta = beta;
  if (all.empty()) return m;
  const double n = static_cast<double>(all.size());
  for (const IaaScores& s : all) {
    m.precision.strict += s.precision.strict / n;
    m.precision.lenient += s.precision.lenient / n;
    m.precision.average += s.precision.average / n;
    m.recall.strict += s.recall.strict / n;
    m.recall.lenient += s.recall.lenient / n;
    m.recall.average += s.recall.average / n;
    m.fscore.strict += s.fscore.strict / n;
    m.fscore.lenient += s.fscore.lenient / n;
    m.fscore.average += s.fscore.average / n;
  }
  return m;
}

}  // namespace detail

// Aggregates match counts per unordered annotator pair over the corpus, scores
// each pair, then arithmetic-means the scores across pairs. Documents missing
// one side of a pair are skipped for that pair and recorded.
inline IaaReport pairwise_average_iaa(const Corpus& corpus,
                                      const std::vector<std::string>& annotators,
                                      double beta = 1.0) {
  if (annotators.size() < 2)
    throw ArgumentError("need at least two annotators for agreement");
  IaaReport report;
  report.beta = beta;

  for (std::size_t i = 0; i < annotators.size(); ++i) {
    for (std::size_t j = i + 1; j < annotators.size(); ++j) {
      PairIaa pair;
      pair.first = annotators[i];
      pair.second = annotators[j];
      MatchTally tally;
      std::map<std::string, MatchTally> domain_tally;
      for (const Document& doc : corpus.documents) {
        const auto ia = doc.annotations.find(pair.first);
        const auto ib = doc.annotations.find(pair.second);
        if (ia == doc.annotations.end() || ib == doc.annotations.end()) {
          pair.skipped_docs.push_back(doc.doc_id);
          continue;
        }
        const MatchTally t = match_spans(ia->second, ib->second);
        tally += t;
        domain_tally[doc.domain] += t;
      }
      pair.counts = tally.total;
      pair.scores = iaa_scores(tally.total, beta);
      for (const auto& [label, counts] : tally.by_label)
        pair.per_label[label] = iaa_scores(counts, beta);
      for (const auto& [domain, t] : domain_tally)
        pair.per_domain[domain] = iaa_scores(t.total, beta);
      report.pairs.push_back(std::move(pair));
    }
  }

  std::vector<IaaScores> overall;
  std::map<Label, std::vector<IaaScores>> by_label;
  std::map<std::string, std::vector<IaaScores>> by_domain;
  for (const PairIaa& p : report.pairs) {
    overall.push_back(p.scores);
    for (const auto& [label, s] : p.per_label) by_label[label].push_back(s);
    for (const auto& [domain, s] : p.per_domain) by_domain[domain].push_back(s);
  }
  report.overall = detail::mean_scores(overall, beta);
  for (const auto& [label, v] : by_label)
    report.per_label[label] = detail::mean_scores(v, beta);
  for (const auto& [domain, v] : by_domain)
    report.per_domain[domain] = detail::mean_scores(v, beta);
  return report;
}

// --- majority-vote curation ---

enum class TiePolicy { error, annotator_priority };

struct CurationOptions {
  TiePolicy policy = TiePolicy::error;
  std::vector<std::string> priority;  // used by annotator_priority
};

// Fills gold labels by majority vote over the annotators' sentence-level
// labels. A unique plurality wins outright. Ties either abort (after
// collecting every offending sentence) or fall to the first priority
// annotator whose label is among the tied leaders.
inline Corpus majority_vote_gold(const Corpus& corpus,
                                 const CurationOptions& options = {}) {
  Corpus out = corpus;
  std::vector<std::pair<std::string, int>> tie_sites;

  for (Document& doc : out.documents) {
    std::vector<std::string> annotators;
    for (const auto& [name, spans] : doc.annotations) annotators.push_back(name);

    std::map<std::string, std::vector<std::optional<Label>>> per_annotator;
    for (const auto& name : annotators)
      per_annotator[name] = sentence_labels(doc, name);

    std::vector<std::pair<int, Label>> gold;
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      std::map<Label, int> votes;
      for (const auto& name : annotators) {
        const auto& l = per_annotator[name][s];
        if (l) votes[*l] += 1;
      }
      if (votes.empty())
        throw CurationError("document \"" + doc.doc_id + "\" sentence " +
                            std::to_string(s) + " has no annotator label");
      int best = 0;
      for (const auto& [label, n] : votes) best = std::max(best, n);
      std::set<Label> leaders;
      for (const auto& [label, n] : votes)
        if (n == best) leaders.insert(label);

      if (leaders.size() == 1) {
        gold.emplace_back(static_cast<int>(s), *leaders.begin());
        continue;
      }
      if (options.policy == TiePolicy::error) {
        tie_sites.emplace_back(doc.doc_id, static_cast<int>(s));
        gold.emplace_back(static_cast<int>(s), *leaders.begin());  // placeholder
        continue;
      }
      bool resolved = false;
      for (const auto& name : options.priority) {
        auto it = per_annotator.find(name);
        if (it == per_annotator.end()) continue;
        const auto& l = it->second[s];
        if (l && leaders.count(*l)) {
          gold.emplace_back(static_cast<int>(s), *l);
          resolved = true;
          break;
        }
      }
      if (!resolved)
        throw TieError("document \"" + doc.doc_id + "\" sentence " +
                       std::to_string(s) + ": tie not covered by priority list");
    }
    doc.gold = std::move(gold);
  }

  if (!tie_sites.empty()) {
    std::ostringstream msg;
    msg << "majority vote tied at " << tie_sites.size() << " sentence(s):";
    for (const auto& [id, s] : tie_sites) msg << " (" << id << ", " << s << ")";
    throw TieError(msg.str());
  }
  return out;
}

// --- report serialization ---

namespace detail {

inline nlohmann::json triple_json(const ScoreTriple& t) {
  return {{"strict", t.strict}, {"lenient", t.lenient}, {"average", t.average}};
}

inline nlohmann::json scores_json(const IaaScores& s) {
  return {{"precision", triple_json(s.precision)},
          {"recall", triple_json(s.recall)},
          {"fscore", triple_json(s.fscore)},
          {"beta", s.beta}};
}

}  // namespace detail

inline nlohmann::json iaa_report_json(const IaaReport& report) {
  nlohmann::json j;
  j["beta"] = report.beta;
  j["overall"] = detail::scores_json(report.overall);
  nlohmann::json per_label = nlohmann::json::object();
  for (const auto& [label, s] : report.per_label)
    per_label[label_name(label)] = detail::scores_json(s);
  j["per_label"] = std::move(per_label);
  nlohmann::json per_domain = nlohmann::json::object();
  for (const auto& [domain, s] : report.per_domain)
    per_domain[domain] = detail::scores_json(s);
  j["per_domain"] = std::move(per_domain);
  nlohmann::json pairs = nlohmann::json::array();
  for (const PairIaa& p : report.pairs) {
    nlohmann::json pj;
    pj["annotators"] = {p.first, p.second};
    pj["counts"] = {{"correct", p.counts.correct},
                    {"partial", p.counts.partial},
                    {"missing", p.counts.missing},
                    {"spurious", p.counts.spurious}};
    pj["scores"] = detail::scores_json(p.scores);
    nlohmann::json pl = nlohmann::json::object();
    for (const auto& [label, s] : p.per_label) pl[label_name(label)] = detail::scores_json(s);
    pj["per_label"] = std::move(pl);
    nlohmann::json pd = nlohmann::json::object();
    for (const auto& [domain, s] : p.per_domain) pd[domain] = detail::scores_json(s);
    pj["per_domain"] = std::move(pd);
    pj["skipped_docs"] = p.skipped_docs;
    pairs.push_back(std::move(pj));
  }
  j["per_pair"] = std::move(pairs);
  return j;
}

}  // namespace rhetseg
