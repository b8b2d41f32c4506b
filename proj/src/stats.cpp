#include "termdrift/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "termdrift/corpus.hpp"
#include "termdrift/errors.hpp"

namespace termdrift {

ConferenceStats aggregate(const ConferenceKey& key, std::vector<PaperCounts> counts) {
  if (counts.empty()) throw DataError("aggregate: empty paper set for " + key.label());
  std::sort(counts.begin(), counts.end(),
            [](const PaperCounts& a, const PaperCounts& b) { return a.paper_id < b.paper_id; });

  ConferenceStats stats;
  stats.key = key;
  stats.paper_count = static_cast<long long>(counts.size());
  long long sum_l = 0, sum_n = 0;
  for (const PaperCounts& c : counts) {
    if (c.n_l > 0) ++stats.lm_related_count;
    sum_l += c.n_l;
    sum_n += c.n;
  }
  stats.prop_lm_related =
      static_cast<double>(stats.lm_related_count) / static_cast<double>(stats.paper_count);
  stats.mean_n_l = static_cast<double>(sum_l) / static_cast<double>(stats.paper_count);
  stats.mean_n = static_cast<double>(sum_n) / static_cast<double>(stats.paper_count);
  stats.counts = std::move(counts);
  return stats;
}

double estimated_mean(const ConferenceStats& baseline, double target_prop) {
  if (baseline.prop_lm_related <= 0.0) {
    throw DataError("estimated_mean: baseline " + baseline.key.label() +
                    " has no LM-related papers");
  }
  return baseline.mean_n_l * (target_prop / baseline.prop_lm_related);
}

namespace {

// Largest |i*nb - j*na| over the tie-merged ECDF walk, i.e. D * na * nb as an
// exact integer.
long long ks_sup_numerator(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const long long na = static_cast<long long>(a.size());
  const long long nb = static_cast<long long>(b.size());
  size_t i = 0, j = 0;
  long long h = 0;
  while (i < a.size() || j < b.size()) {
    double x;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j])) {
      x = a[i];
    } else {
      x = b[j];
    }
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    h = std::max(h, std::llabs(static_cast<long long>(i) * nb -
                               static_cast<long long>(j) * na));
  }
  return h;
}

// Exact conditional P(D >= h/(na*nb)) for continuous data, by the standard
// lattice-path recursion on reach probabilities. O(na*nb) time and space.
double ks_exact_p(long long h, size_t na, size_t nb) {
  const size_t m = na, n = nb;
  std::vector<double> prev(n + 1, 0.0), cur(n + 1, 0.0);
  auto inside = [&](size_t i, size_t j) {
    return std::llabs(static_cast<long long>(i) * static_cast<long long>(n) -
                      static_cast<long long>(j) * static_cast<long long>(m)) < h;
  };
  prev[0] = 1.0;
  for (size_t j = 1; j <= n; ++j) {
    prev[j] = inside(0, j) ? prev[j - 1] : 0.0;
  }
  for (size_t i = 1; i <= m; ++i) {
    cur[0] = inside(i, 0) ? prev[0] : 0.0;
    for (size_t j = 1; j <= n; ++j) {
      if (!inside(i, j)) {
        cur[j] = 0.0;
        continue;
      }
      double tot = static_cast<double>(i + j);
      cur[j] = prev[j] * (static_cast<double>(i) / tot) +
               cur[j - 1] * (static_cast<double>(j) / tot);
    }
    std::swap(prev, cur);
  }
  double p = 1.0 - prev[n];
  return std::clamp(p, 0.0, 1.0);
}

// Asymptotic Kolmogorov tail with the (sqrt(ne) + 0.12 + 0.11/sqrt(ne))
// small-sample correction.
double ks_asymptotic_p(double d, size_t na, size_t nb) {
  double ne = static_cast<double>(na) * static_cast<double>(nb) /
              static_cast<double>(na + nb);
  double sq = std::sqrt(ne);
  double lambda = (sq + 0.12 + 0.11 / sq) * d;
  if (lambda < 1e-12) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    double term = 2.0 * sign * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::fabs(term) < 1e-12) break;
    sign = -sign;
  }
  return std::clamp(sum, 0.0, 1.0);
}

constexpr size_t kExactPairLimit = 40000;  // na*nb up to 200x200

}  // namespace

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DataError("ks_two_sample: empty sample");
  const size_t na = a.size(), nb = b.size();
  long long h = ks_sup_numerator(std::vector<double>(a.begin(), a.end()),
                                 std::vector<double>(b.begin(), b.end()));
  KsResult result;
  result.d = static_cast<double>(h) / (static_cast<double>(na) * static_cast<double>(nb));
  if (h == 0) {
    result.p_value = 1.0;
  } else if (na * nb <= kExactPairLimit) {
    result.p_value = ks_exact_p(h, na, nb);
  } else {
    result.p_value = ks_asymptotic_p(result.d, na, nb);
  }
  return result;
}

std::string significance_bucket(double p_value) {
  if (p_value < 0.001) return "p<0.001";
  if (p_value < 0.01) return "p<0.01";
  if (p_value < 0.05) return "p<0.05";
  return "ns";
}

namespace {

std::vector<double> metric_values(const ConferenceStats& conf, CountMetric metric) {
  std::vector<double> out;
  out.reserve(conf.counts.size());
  for (const PaperCounts& c : conf.counts) {
    out.push_back(static_cast<double>(metric == CountMetric::n_l ? c.n_l : c.n));
  }
  return out;
}

}  // namespace

std::vector<PairwiseCell> pairwise_matrix(const std::vector<ConferenceStats>& conferences,
                                          CountMetric metric) {
  if (conferences.size() < 2) {
    throw DataError("pairwise_matrix: need >= 2 conferences");
  }
  std::vector<const ConferenceStats*> ordered;
  for (const auto& c : conferences) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(), [](const ConferenceStats* a,
                                               const ConferenceStats* b) {
    return a->key.ordinal < b->key.ordinal;
  });

  std::vector<PairwiseCell> cells;
  for (size_t i = 0; i + 1 < ordered.size(); ++i) {
    std::vector<double> row_values = metric_values(*ordered[i], metric);
    for (size_t j = i + 1; j < ordered.size(); ++j) {
      std::vector<double> col_values = metric_values(*ordered[j], metric);
      KsResult ks = ks_two_sample(row_values, col_values);
      PairwiseCell cell;
      cell.row = ordered[i]->key;
      cell.col = ordered[j]->key;
      cell.ks_statistic = ks.d;
      cell.p_value = ks.p_value;
      double row_mean = std::accumulate(row_values.begin(), row_values.end(), 0.0) /
                        static_cast<double>(row_values.size());
      double col_mean = std::accumulate(col_values.begin(), col_values.end(), 0.0) /
                        static_cast<double>(col_values.size());
      cell.mean_diff = col_mean - row_mean;
      cell.significance_bucket = significance_bucket(ks.p_value);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

CompositionVector composition(const std::string& scope, std::span<const PaperCounts> counts,
                              const Lexicon& lexicon) {
  CompositionVector v;
  v.scope = scope;
  std::map<std::string, long long> totals;
  long long n_total = 0;
  for (const PaperCounts& c : counts) {
    for (const auto& [entry, cnt] : c.per_entry) {
      totals[entry] += cnt;
      n_total += cnt;
    }
  }
  if (n_total == 0) throw DataError("composition: zero model mentions in scope " + scope);
  v.total = n_total;
  for (const auto& [entry, cnt] : totals) {
    double share = static_cast<double>(cnt) / static_cast<double>(n_total);
    v.by_entry[entry] = share;
    v.by_component[lexicon.root_of(entry)] += share;
  }
  return v;
}

double jaccard(const CompositionVector& a, const CompositionVector& b, JaccardMode mode) {
  if (mode == JaccardMode::set) {
    size_t inter = 0;
    for (const auto& [entry, share] : a.by_entry) {
      inter += b.by_entry.count(entry);
    }
    size_t uni = a.by_entry.size() + b.by_entry.size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  }
  std::set<std::string> keys;
  for (const auto& [entry, share] : a.by_entry) keys.insert(entry);
  for (const auto& [entry, share] : b.by_entry) keys.insert(entry);
  double min_sum = 0.0, max_sum = 0.0;
  for (const auto& entry : keys) {
    auto ia = a.by_entry.find(entry);
    auto ib = b.by_entry.find(entry);
    double sa = ia == a.by_entry.end() ? 0.0 : ia->second;
    double sb = ib == b.by_entry.end() ? 0.0 : ib->second;
    min_sum += std::min(sa, sb);
    max_sum += std::max(sa, sb);
  }
  return max_sum == 0.0 ? 1.0 : min_sum / max_sum;
}

std::optional<std::string> absolute_majority(const PaperCounts& counts, const Lexicon& lexicon) {
  if (counts.n == 0) return std::nullopt;
  std::map<std::string, long long> by_root;
  for (const auto& [entry, cnt] : counts.per_entry) {
    by_root[lexicon.root_of(entry)] += cnt;
  }
  for (const auto& [root, cnt] : by_root) {
    if (2 * cnt > counts.n) return root;
  }
  return std::nullopt;
}

MajorityReport majority_rates(const ConferenceStats& conference, MajoritySelector selector,
                              const Lexicon& lexicon, bool include_zero_model_papers) {
  std::vector<const PaperCounts*> subset;
  if (selector == MajoritySelector::all) {
    for (const auto& c : conference.counts) subset.push_back(&c);
  } else {
    QuartileSplit split = quartile_split(conference);
    std::set<std::string> wanted(split.q4_plus.begin(), split.q4_plus.end());
    for (const auto& c : conference.counts) {
      if (wanted.count(c.paper_id)) subset.push_back(&c);
    }
  }

  MajorityReport report;
  report.scope = conference.key.label() +
                 (selector == MajoritySelector::all ? " (all)" : " (Q4+)");
  std::map<std::string, long long> wins;
  long long counted = 0, majorities = 0;
  for (const PaperCounts* c : subset) {
    if (c->n == 0 && !include_zero_model_papers) continue;
    ++counted;
    if (auto root = absolute_majority(*c, lexicon)) {
      ++majorities;
      wins[*root] += 1;
    }
  }
  if (counted == 0) {
    throw DataError("majority_rates: no counted papers in scope " + report.scope);
  }
  report.counted_papers = counted;
  for (const auto& [root, w] : wins) {
    report.by_component[root] = static_cast<double>(w) / static_cast<double>(counted);
  }
  report.majority_fraction = static_cast<double>(majorities) / static_cast<double>(counted);
  report.no_majority_fraction = 1.0 - report.majority_fraction;
  return report;
}

QuartileSplit quartile_split(const ConferenceStats& conference) {
  std::vector<const PaperCounts*> related;
  for (const auto& c : conference.counts) {
    if (c.n_l > 0) related.push_back(&c);
  }
  const size_t k = related.size();
  if (k < 4) {
    throw DataError("quartile_split: " + conference.key.label() + " has only " +
                    std::to_string(k) + " LM-related papers (need >= 4)");
  }
  std::sort(related.begin(), related.end(), [](const PaperCounts* a, const PaperCounts* b) {
    if (a->n_l != b->n_l) return a->n_l > b->n_l;
    return a->paper_id < b->paper_id;
  });
  const size_t q = (k + 3) / 4;  // ceil(k/4); 2q <= k whenever k >= 4
  QuartileSplit split;
  for (size_t i = 0; i < q; ++i) split.q4_plus.push_back(related[i]->paper_id);
  for (size_t i = k - q; i < k; ++i) split.q1_minus.push_back(related[i]->paper_id);
  return split;
}

std::vector<std::pair<std::string, double>> composition_diff(const CompositionVector& a,
                                                             const CompositionVector& b,
                                                             size_t top_k) {
  std::set<std::string> roots;
  for (const auto& [root, share] : a.by_component) roots.insert(root);
  for (const auto& [root, share] : b.by_component) roots.insert(root);
  std::vector<std::pair<std::string, double>> deltas;
  for (const auto& root : roots) {
    auto ia = a.by_component.find(root);
    auto ib = b.by_component.find(root);
    double da = ia == a.by_component.end() ? 0.0 : ia->second;
    double db = ib == b.by_component.end() ? 0.0 : ib->second;
    deltas.emplace_back(root, da - db);
  }
  std::sort(deltas.begin(), deltas.end(), [](const auto& x, const auto& y) {
    double ax = std::fabs(x.second), ay = std::fabs(y.second);
    if (ax != ay) return ax > ay;
    return x.first < y.first;
  });
  if (deltas.size() > top_k) deltas.resize(top_k);
  return deltas;
}

std::vector<ConferenceStats> conference_stats(const Corpus& corpus,
                                              const std::vector<PaperCounts>& counts) {
  std::map<std::string, const PaperCounts*> by_id;
  for (const auto& c : counts) by_id[c.paper_id] = &c;

  std::map<std::pair<std::string, int>, int> ordinals;
  for (const Paper& p : corpus.papers()) {
    ordinals[{p.meta.venue, p.meta.year}] = p.meta.ordinal;
  }

  std::vector<ConferenceStats> out;
  for (const auto& [venue_year, paper_ids] : corpus.conference_index()) {
    std::vector<PaperCounts> conf_counts;
    for (const auto& id : paper_ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw DataError("conference_stats: no counts for paper " + id);
      }
      conf_counts.push_back(*it->second);
    }
    ConferenceKey key{venue_year.first, venue_year.second, ordinals.at(venue_year)};
    out.push_back(aggregate(key, std::move(conf_counts)));
  }
  std::sort(out.begin(), out.end(), [](const ConferenceStats& a, const ConferenceStats& b) {
    return a.key.ordinal < b.key.ordinal;
  });
  return out;
}

}  // namespace termdrift
