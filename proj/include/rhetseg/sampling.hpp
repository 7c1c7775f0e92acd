#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rhetseg/corpus.hpp"
#include "rhetseg/errors.hpp"
#include "rhetseg/util.hpp"

namespace rhetseg {

// Apportions `total` slots across groups proportionally to their sizes using
// largest remainders (Hamilton's method). Ties on remainder break toward the
// earlier group in iteration order. Keys iterate in sorted order so results
// are deterministic.
inline std::map<std::string, int> apportion(
    const std::map<std::string, std::size_t>& group_sizes, int total) {
  if (total < 0) throw ArgumentError("sample size must be non-negative");
  std::size_t universe = 0;
  for (const auto& [key, n] : group_sizes) universe += n;
  if (static_cast<std::size_t>(total) > universe)
    throw ArgumentError("sample size exceeds corpus size");

  std::map<std::string, int> counts;
  if (universe == 0 || total == 0) {
    for (const auto& [key, n] : group_sizes) counts[key] = 0;
    return counts;
  }

  struct Entry {
    std::string key;
    double remainder;
    std::size_t cap;
  };
  std::vector<Entry> entries;
  int assigned = 0;
  for (const auto& [key, n] : group_sizes) {
    const double quota =
        static_cast<double>(total) * static_cast<double>(n) / static_cast<double>(universe);
    const int floor_q = std::min<int>(static_cast<int>(quota), static_cast<int>(n));
    counts[key] = floor_q;
    assigned += floor_q;
    entries.push_back({key, quota - static_cast<double>(floor_q), n});
  }

  // stable sort keeps the sorted-key order among equal remainders
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.remainder > b.remainder; });
  int leftover = total - assigned;
  for (std::size_t i = 0; leftover > 0; i = (i + 1) % entries.size()) {
    auto& e = entries[i];
    if (static_cast<std::size_t>(counts[e.key]) < e.cap) {
      counts[e.key] += 1;
      --leftover;
    }
  }
  return counts;
}

// Draws `total` documents with domain proportions preserved. Within each
// domain, membership is a seeded uniform draw; output preserves corpus order.
inline Corpus sample_by_domain(const Corpus& corpus, int total, std::uint64_t seed) {
  std::map<std::string, std::size_t> sizes;
  for (const Document& doc : corpus.documents) sizes[doc.domain] += 1;
  const auto counts = apportion(sizes, total);

  // shuffle indices per domain, keep the first k, then restore corpus order
  std::map<std::string, std::vector<std::size_t>> by_domain;
  for (std::size_t i = 0; i < corpus.documents.size(); ++i)
    by_domain[corpus.documents[i].domain].push_back(i);

  std::vector<char> keep(corpus.documents.size(), 0);
  std::uint64_t stream = 0;
  for (auto& [domain, indices] : by_domain) {
    SeededRng rng(derive_seed(seed, stream++));
    seeded_shuffle(indices, rng);
    const int k = counts.at(domain);
    for (int j = 0; j < k; ++j) keep[indices[static_cast<std::size_t>(j)]] = 1;
  }

  Corpus out;
  for (std::size_t i = 0; i < corpus.documents.size(); ++i)
    if (keep[i]) out.documents.push_back(corpus.documents[i]);
  return out;
}

}  // namespace rhetseg
