#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <string>
#include <vector>

#include "rhetseg/agreement.hpp"
#include "rhetseg/corpus.hpp"
#include "rhetseg/util.hpp"

using namespace rhetseg;

namespace {

// document with n one-word-ish sentences; annotator labels attach to exact
// sentence spans
Document doc_with_labels(const std::string& id,
                         const std::map<std::string, std::vector<Label>>& layers,
                         const std::string& domain = "criminal") {
  Document d;
  d.doc_id = id;
  d.domain = domain;
  std::size_t n = 0;
  for (const auto& [name, labels] : layers) n = std::max(n, labels.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (i) d.raw_text += " ";
    std::size_t b = d.raw_text.size();
    d.raw_text += "Sent " + std::to_string(i) + ".";
    Sentence s;
    s.index = static_cast<int>(i);
    s.begin = b;
    s.end = d.raw_text.size();
    s.text = d.raw_text.substr(b, s.end - b);
    d.sentences.push_back(std::move(s));
  }
  for (const auto& [name, labels] : layers) {
    std::vector<LabeledSpan> spans;
    for (std::size_t i = 0; i < labels.size(); ++i)
      spans.push_back({d.sentences[i].begin, d.sentences[i].end, labels[i]});
    d.annotations[name] = std::move(spans);
  }
  return d;
}

std::vector<LabeledSpan> random_layer(SeededRng& rng, std::size_t text_len) {
  std::vector<LabeledSpan> spans;
  std::size_t pos = rng.below(4);
  while (pos + 2 < text_len) {
    std::size_t len = 1 + rng.below(8);
    std::size_t end = std::min(pos + len, text_len);
    spans.push_back({pos, end, label_from_index(static_cast<int>(rng.below(7)))});
    pos = end + rng.below(4);
  }
  return spans;
}

}  // namespace

TEST_CASE("identical span lists are all correct") {
  std::vector<LabeledSpan> a = {{0, 10, Label::FAC}, {12, 20, Label::ARG}};
  auto t = match_spans(a, a);
  CHECK(t.total.correct == 2);
  CHECK(t.total.partial == 0);
  CHECK(t.total.missing == 0);
  CHECK(t.total.spurious == 0);
}

TEST_CASE("overlap with same label is a partial match") {
  auto t = match_spans({{0, 10, Label::FAC}}, {{0, 9, Label::FAC}});
  CHECK(t.total.partial == 1);
  CHECK(t.total.correct == 0);
  CHECK(t.total.missing == 0);
  CHECK(t.total.spurious == 0);
  CHECK(t.by_label.at(Label::FAC).partial == 1);
}

TEST_CASE("same span with different labels is missing plus spurious") {
  auto t = match_spans({{0, 10, Label::FAC}}, {{0, 10, Label::ARG}});
  CHECK(t.total.missing == 1);
  CHECK(t.total.spurious == 1);
  CHECK(t.total.correct == 0);
  CHECK(t.total.partial == 0);
  CHECK(t.by_label.at(Label::FAC).missing == 1);
  CHECK(t.by_label.at(Label::ARG).spurious == 1);
}

TEST_CASE("hand-tallied mixed fixture") {
  // a: exact FAC, partial ARG, mislabeled RATIO/STA, unmatched STA, exact PRE
  std::vector<LabeledSpan> a = {{0, 10, Label::FAC},
                                {12, 20, Label::ARG},
                                {22, 30, Label::RATIO},
                                {32, 40, Label::STA},
                                {45, 50, Label::PRE}};
  std::vector<LabeledSpan> b = {{0, 10, Label::FAC},
                                {12, 18, Label::ARG},
                                {22, 30, Label::STA},
                                {41, 44, Label::RPC},
                                {45, 50, Label::PRE}};
  auto t = match_spans(a, b);
  REQUIRE(t.total == MatchCounts{2, 1, 2, 2});

  // denominators both 5: strict 2/5, lenient 3/5, average 2.5/5
  auto s = iaa_scores(t.total);
  CHECK(s.precision.strict == Catch::Approx(0.4).margin(1e-12));
  CHECK(s.precision.average == Catch::Approx(0.5).margin(1e-12));
  CHECK(s.precision.lenient == Catch::Approx(0.6).margin(1e-12));
  CHECK(s.recall.strict == Catch::Approx(0.4).margin(1e-12));
  CHECK(s.recall.average == Catch::Approx(0.5).margin(1e-12));
  CHECK(s.recall.lenient == Catch::Approx(0.6).margin(1e-12));
  CHECK(s.fscore.strict == Catch::Approx(0.4).margin(1e-12));
  CHECK(s.fscore.average == Catch::Approx(0.5).margin(1e-12));
  CHECK(s.fscore.lenient == Catch::Approx(0.6).margin(1e-12));
}

TEST_CASE("score formulas on pinned counts") {
  auto s = iaa_scores({8, 2, 0, 0});
  CHECK(s.precision.strict == Catch::Approx(0.8).margin(1e-12));
  CHECK(s.precision.lenient == Catch::Approx(1.0).margin(1e-12));
  CHECK(s.precision.average == Catch::Approx(0.9).margin(1e-12));

  auto zero = iaa_scores({0, 0, 0, 0});
  CHECK(zero.precision.average == 0.0);
  CHECK(zero.recall.average == 0.0);
  CHECK(zero.fscore.average == 0.0);

  auto half = iaa_scores({5, 0, 0, 5});
  CHECK(half.precision.strict == Catch::Approx(0.5).margin(1e-12));
  CHECK(half.precision.lenient == Catch::Approx(0.5).margin(1e-12));
  CHECK(half.precision.average == Catch::Approx(0.5).margin(1e-12));
  CHECK(half.recall.average == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("beta weights recall against precision") {
  // P=0.5, R=1.0, beta=2: (4+1)*0.5/(4*0.5+1) = 2.5/3
  auto s = iaa_scores({5, 0, 0, 5}, 2.0);
  CHECK(s.fscore.strict == Catch::Approx(2.5 / 3.0).margin(1e-12));
  REQUIRE_THROWS_AS(iaa_scores({-1, 0, 0, 0}), ArgumentError);
}

TEST_CASE("strict <= average <= lenient on random counts") {
  SeededRng rng(7);
  for (int i = 0; i < 500; ++i) {
    MatchCounts mc{static_cast<long>(rng.below(20)), static_cast<long>(rng.below(20)),
                   static_cast<long>(rng.below(20)), static_cast<long>(rng.below(20))};
    auto s = iaa_scores(mc);
    CHECK(s.precision.strict <= s.precision.average + 1e-15);
    CHECK(s.precision.average <= s.precision.lenient + 1e-15);
    CHECK(s.recall.strict <= s.recall.average + 1e-15);
    CHECK(s.recall.average <= s.recall.lenient + 1e-15);
    CHECK(s.fscore.strict <= s.fscore.average + 1e-15);
    CHECK(s.fscore.average <= s.fscore.lenient + 1e-15);
  }
}

TEST_CASE("scores are scale-free") {
  MatchCounts mc{3, 2, 4, 1};
  auto s1 = iaa_scores(mc);
  auto s5 = iaa_scores({15, 10, 20, 5});
  CHECK(s1.precision.average == Catch::Approx(s5.precision.average).margin(1e-12));
  CHECK(s1.recall.strict == Catch::Approx(s5.recall.strict).margin(1e-12));
  CHECK(s1.fscore.lenient == Catch::Approx(s5.fscore.lenient).margin(1e-12));
}

TEST_CASE("annotator swap flips missing and spurious only") {
  SeededRng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    auto a = random_layer(rng, 60);
    auto b = random_layer(rng, 60);
    auto ab = match_spans(a, b);
    auto ba = match_spans(b, a);
    CHECK(ab.total.correct == ba.total.correct);
    CHECK(ab.total.partial == ba.total.partial);
    CHECK(ab.total.missing == ba.total.spurious);
    CHECK(ab.total.spurious == ba.total.missing);
  }
}

TEST_CASE("span resolves to the sentence with maximal overlap") {
  std::vector<Sentence> sents = {{0, "aaaaaaaaaa", 0, 10}, {1, "bbbbbbbbbb", 11, 21}};
  CHECK(resolve_sentence(sents, 0, 10) == 0);
  CHECK(resolve_sentence(sents, 8, 15) == 1);   // 2 chars in s0, 4 in s1
  CHECK(resolve_sentence(sents, 8, 13) == 0);   // 2 chars in each: earlier wins
  CHECK(resolve_sentence(sents, 30, 40) == -1);
}

TEST_CASE("perfect agreement gives a diagonal matrix") {
  Corpus c;
  c.documents.push_back(doc_with_labels(
      "d1", {{"x", {Label::FAC, Label::ARG, Label::RPC}},
             {"y", {Label::FAC, Label::ARG, Label::RPC}}}));
  auto m = agreement_matrix(c, "x", "y");
  REQUIRE(m.total() == 3);
  for (int i = 0; i < kNumLabels; ++i)
    for (int j = 0; j < kNumLabels; ++j)
      if (i != j) CHECK(m.counts[i][j] == 0);
  CHECK(m.counts[label_index(Label::FAC)][label_index(Label::FAC)] == 1);
}

TEST_CASE("disagreement lands in the off-diagonal cell") {
  Corpus c;
  c.documents.push_back(
      doc_with_labels("d1", {{"x", {Label::FAC}}, {"y", {Label::RATIO}}}));
  auto m = agreement_matrix(c, "x", "y");
  CHECK(m.counts[label_index(Label::FAC)][label_index(Label::RATIO)] == 1);
  CHECK(m.total() == 1);
  REQUIRE_THROWS_AS(agreement_matrix(c, "x", "nobody"), ArgumentError);
}

TEST_CASE("matrix matches an independent per-sentence tally and transposes on swap") {
  SeededRng rng(5);
  Corpus c;
  std::map<std::string, std::vector<std::vector<Label>>> truth;  // annotator -> doc -> labels
  for (int d = 0; d < 6; ++d) {
    std::map<std::string, std::vector<Label>> layers;
    for (const std::string name : {"x", "y"}) {
      std::vector<Label> labels;
      for (int s = 0; s < 12; ++s)
        labels.push_back(label_from_index(static_cast<int>(rng.below(7))));
      layers[name] = labels;
      truth[name].push_back(labels);
    }
    c.documents.push_back(doc_with_labels("d" + std::to_string(d), layers));
  }

  auto m = agreement_matrix(c, "x", "y");
  std::vector<std::vector<long>> expected(kNumLabels, std::vector<long>(kNumLabels, 0));
  for (int d = 0; d < 6; ++d)
    for (int s = 0; s < 12; ++s)
      expected[label_index(truth["x"][d][s])][label_index(truth["y"][d][s])] += 1;
  CHECK(m.counts == expected);

  auto mt = agreement_matrix(c, "y", "x");
  for (int i = 0; i < kNumLabels; ++i)
    for (int j = 0; j < kNumLabels; ++j) CHECK(mt.counts[j][i] == m.counts[i][j]);
}

TEST_CASE("clear majority wins") {
  Corpus c;
  c.documents.push_back(doc_with_labels("d1", {{"a1", {Label::FAC}},
                                               {"a2", {Label::FAC}},
                                               {"a3", {Label::RATIO}}}));
  Corpus curated = majority_vote_gold(c);
  REQUIRE(curated.documents[0].gold.has_value());
  CHECK(curated.documents[0].gold_labels() == std::vector<Label>{Label::FAC});
}

TEST_CASE("three-way tie aborts under the error policy, listing the site") {
  Corpus c;
  c.documents.push_back(doc_with_labels("doc9", {{"a1", {Label::FAC, Label::FAC}},
                                                 {"a2", {Label::ARG, Label::FAC}},
                                                 {"a3", {Label::RATIO, Label::FAC}}}));
  try {
    majority_vote_gold(c);
    FAIL("expected TieError");
  } catch (const TieError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("doc9") != std::string::npos);
    CHECK(msg.find("(doc9, 0)") != std::string::npos);
    CHECK(msg.find("(doc9, 1)") == std::string::npos);
  }
}

TEST_CASE("priority annotator settles ties") {
  Corpus c;
  c.documents.push_back(doc_with_labels("d1", {{"a1", {Label::FAC}},
                                               {"a2", {Label::ARG}},
                                               {"a3", {Label::RATIO}}}));
  CurationOptions opts;
  opts.policy = TiePolicy::annotator_priority;
  opts.priority = {"a1", "a2", "a3"};
  Corpus curated = majority_vote_gold(c, opts);
  CHECK(curated.documents[0].gold_labels() == std::vector<Label>{Label::FAC});

  opts.priority = {"a2", "a1"};
  CHECK(majority_vote_gold(c, opts).documents[0].gold_labels() ==
        std::vector<Label>{Label::ARG});

  // priority annotator outside the tied set defers to the next one
  c.documents[0] = doc_with_labels("d1", {{"a1", {Label::FAC}},
                                          {"a2", {Label::FAC}},
                                          {"a3", {Label::RATIO}},
                                          {"a4", {Label::RATIO}},
                                          {"a5", {Label::ARG}}});
  opts.priority = {"a5", "a3"};
  CHECK(majority_vote_gold(c, opts).documents[0].gold_labels() ==
        std::vector<Label>{Label::RATIO});
}

TEST_CASE("sentence with no annotator label is a curation error") {
  Corpus c;
  Document d = doc_with_labels("d1", {{"a1", {Label::FAC, Label::ARG}}});
  d.annotations["a1"].pop_back();  // second sentence now unlabeled
  c.documents.push_back(d);
  REQUIRE_THROWS_AS(majority_vote_gold(c), CurationError);
}

TEST_CASE("majority outcome ignores annotator naming order") {
  std::vector<Label> l1 = {Label::FAC, Label::RPC};
  std::vector<Label> l2 = {Label::FAC, Label::ARG};
  std::vector<Label> l3 = {Label::STA, Label::ARG};
  Corpus c1, c2;
  c1.documents.push_back(doc_with_labels("d", {{"p", l1}, {"q", l2}, {"r", l3}}));
  c2.documents.push_back(doc_with_labels("d", {{"p", l3}, {"q", l1}, {"r", l2}}));
  CHECK(majority_vote_gold(c1).documents[0].gold_labels() ==
        majority_vote_gold(c2).documents[0].gold_labels());
}

TEST_CASE("full agreement across three annotators scores one") {
  Corpus c;
  for (int d = 0; d < 3; ++d)
    c.documents.push_back(doc_with_labels(
        "d" + std::to_string(d), {{"a1", {Label::FAC, Label::RPC}},
                                  {"a2", {Label::FAC, Label::RPC}},
                                  {"a3", {Label::FAC, Label::RPC}}}));
  auto report = pairwise_average_iaa(c, {"a1", "a2", "a3"});
  REQUIRE(report.pairs.size() == 3);
  CHECK(report.overall.fscore.strict == Catch::Approx(1.0).margin(1e-12));
  CHECK(report.overall.fscore.lenient == Catch::Approx(1.0).margin(1e-12));
  CHECK(report.per_label.at(Label::FAC).fscore.average == Catch::Approx(1.0).margin(1e-12));
  CHECK(report.per_domain.at("criminal").fscore.average == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("total disagreement scores zero") {
  Corpus c;
  c.documents.push_back(doc_with_labels("d", {{"a1", {Label::FAC}}, {"a2", {Label::ARG}}}));
  auto report = pairwise_average_iaa(c, {"a1", "a2"});
  CHECK(report.overall.fscore.strict == 0.0);
  CHECK(report.overall.fscore.lenient == 0.0);
  CHECK(report.overall.fscore.average == 0.0);
}

TEST_CASE("documents missing an annotator are skipped and recorded") {
  Corpus c;
  c.documents.push_back(doc_with_labels("both", {{"a1", {Label::FAC}}, {"a2", {Label::FAC}}}));
  Document solo = doc_with_labels("only1", {{"a1", {Label::ARG}}});
  c.documents.push_back(solo);
  auto report = pairwise_average_iaa(c, {"a1", "a2"});
  REQUIRE(report.pairs.size() == 1);
  CHECK(report.pairs[0].skipped_docs == std::vector<std::string>{"only1"});
  CHECK(report.overall.fscore.strict == Catch::Approx(1.0).margin(1e-12));
  REQUIRE_THROWS_AS(pairwise_average_iaa(c, {"a1"}), ArgumentError);
}

TEST_CASE("pair scores average arithmetically across pairs") {
  // a1/a2 agree fully; a1/a3 and a2/a3 disagree fully on the single sentence.
  Corpus c;
  c.documents.push_back(doc_with_labels("d", {{"a1", {Label::FAC}},
                                              {"a2", {Label::FAC}},
                                              {"a3", {Label::ARG}}}));
  auto report = pairwise_average_iaa(c, {"a1", "a2", "a3"});
  CHECK(report.overall.fscore.strict == Catch::Approx(1.0 / 3.0).margin(1e-12));
  CHECK(report.overall.precision.lenient == Catch::Approx(1.0 / 3.0).margin(1e-12));
}

TEST_CASE("iaa report serializes the full block structure") {
  Corpus c;
  c.documents.push_back(doc_with_labels("d", {{"a1", {Label::FAC}}, {"a2", {Label::FAC}}}));
  auto j = iaa_report_json(pairwise_average_iaa(c, {"a1", "a2"}));
  CHECK(j.contains("overall"));
  CHECK(j.contains("per_label"));
  CHECK(j.contains("per_domain"));
  CHECK(j.contains("per_pair"));
  CHECK(j["per_pair"].size() == 1);
  CHECK(j["overall"]["fscore"]["strict"].get<double>() == 1.0);

  auto m = agreement_matrix(c, "a1", "a2");
  auto csv = agreement_matrix_csv(m);
  CHECK(csv.rfind("label,FAC,RLC,ARG,STA,PRE,RATIO,RPC\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 8);
}
