#include "termdrift/analyses.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

#include "termdrift/errors.hpp"
#include "termdrift/util.hpp"

namespace termdrift {

using nlohmann::json;

namespace {

json key_to_json(const ConferenceKey& key) {
  return json{{"venue", key.venue}, {"year", key.year}, {"ordinal", key.ordinal}};
}

ConferenceKey key_from_json(const json& j) {
  return ConferenceKey{j.at("venue").get<std::string>(), j.at("year").get<int>(),
                       j.at("ordinal").get<int>()};
}

json composition_to_json(const CompositionVector& v) {
  return json{{"scope", v.scope},
              {"total", v.total},
              {"by_entry", v.by_entry},
              {"by_component", v.by_component}};
}

CompositionVector composition_from_json(const json& j) {
  CompositionVector v;
  v.scope = j.at("scope").get<std::string>();
  v.total = j.at("total").get<long long>();
  v.by_entry = j.at("by_entry").get<std::map<std::string, double>>();
  v.by_component = j.at("by_component").get<std::map<std::string, double>>();
  return v;
}

json deltas_to_json(const std::vector<std::pair<std::string, double>>& deltas) {
  json arr = json::array();
  for (const auto& [root, delta] : deltas) {
    arr.push_back({{"root", root}, {"delta", delta}});
  }
  return arr;
}

std::vector<std::pair<std::string, double>> deltas_from_json(const json& arr) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& item : arr) {
    out.emplace_back(item.at("root").get<std::string>(), item.at("delta").get<double>());
  }
  return out;
}

json cells_to_json(const std::vector<PairwiseCell>& cells) {
  json arr = json::array();
  for (const auto& c : cells) {
    arr.push_back({{"row", key_to_json(c.row)},
                   {"col", key_to_json(c.col)},
                   {"d", c.ks_statistic},
                   {"p_value", c.p_value},
                   {"mean_diff", c.mean_diff},
                   {"bucket", c.significance_bucket}});
  }
  return arr;
}

std::vector<PairwiseCell> cells_from_json(const json& arr) {
  std::vector<PairwiseCell> out;
  for (const auto& item : arr) {
    PairwiseCell c;
    c.row = key_from_json(item.at("row"));
    c.col = key_from_json(item.at("col"));
    c.ks_statistic = item.at("d").get<double>();
    c.p_value = item.at("p_value").get<double>();
    c.mean_diff = item.at("mean_diff").get<double>();
    c.significance_bucket = item.at("bucket").get<std::string>();
    out.push_back(std::move(c));
  }
  return out;
}

json majority_to_json(const ConferenceMajority& m) {
  return json{{"key", key_to_json(m.key)},
              {"scope", m.report.scope},
              {"counted_papers", m.report.counted_papers},
              {"majority_fraction", m.report.majority_fraction},
              {"no_majority_fraction", m.report.no_majority_fraction},
              {"by_component", m.report.by_component}};
}

ConferenceMajority majority_from_json(const json& j) {
  ConferenceMajority m;
  m.key = key_from_json(j.at("key"));
  m.report.scope = j.at("scope").get<std::string>();
  m.report.counted_papers = j.at("counted_papers").get<long long>();
  m.report.majority_fraction = j.at("majority_fraction").get<double>();
  m.report.no_majority_fraction = j.at("no_majority_fraction").get<double>();
  m.report.by_component = j.at("by_component").get<std::map<std::string, double>>();
  return m;
}

}  // namespace

AnalysisSet compute_analyses(const Corpus& corpus, const std::vector<PaperCounts>& counts,
                             const Lexicon& lexicon, size_t diff_top_k) {
  std::vector<ConferenceStats> confs = conference_stats(corpus, counts);
  if (confs.empty()) throw DataError("compute_analyses: empty corpus");

  AnalysisSet set;

  const ConferenceStats& baseline = confs.front();
  for (const ConferenceStats& c : confs) {
    TimeseriesPoint p;
    p.key = c.key;
    p.paper_count = c.paper_count;
    p.lm_related_count = c.lm_related_count;
    p.prop_lm_related = c.prop_lm_related;
    p.mean_n_l = c.mean_n_l;
    p.mean_n = c.mean_n;
    if (baseline.prop_lm_related > 0.0) {
      p.estimated_mean_n_l = estimated_mean(baseline, c.prop_lm_related);
    }
    set.timeseries.push_back(std::move(p));
  }

  if (confs.size() >= 2) {
    set.ks_n_l = pairwise_matrix(confs, CountMetric::n_l);
    set.ks_n = pairwise_matrix(confs, CountMetric::n);
  }

  for (const ConferenceStats& c : confs) {
    ConferenceComposition cc;
    cc.key = c.key;
    cc.composition = composition(c.key.label(), c.counts, lexicon);
    for (const PaperCounts& pc : c.counts) {
      for (const auto& [entry, cnt] : pc.per_entry) cc.entry_counts[entry] += cnt;
    }
    set.compositions.push_back(std::move(cc));
  }

  const size_t k = set.compositions.size();
  for (const auto& comp : set.compositions) set.jaccard_labels.push_back(comp.key.label());
  set.jaccard_set.assign(k, std::vector<double>(k, 1.0));
  set.jaccard_weighted.assign(k, std::vector<double>(k, 1.0));
  for (size_t i = 0; i < k; ++i) {
    for (size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      set.jaccard_set[i][j] = jaccard(set.compositions[i].composition,
                                      set.compositions[j].composition, JaccardMode::set);
      set.jaccard_weighted[i][j] =
          jaccard(set.compositions[i].composition, set.compositions[j].composition,
                  JaccardMode::weighted);
    }
  }

  for (const ConferenceStats& c : confs) {
    set.majority_all.push_back({c.key, majority_rates(c, MajoritySelector::all, lexicon)});
    set.majority_top_quarter.push_back(
        {c.key, majority_rates(c, MajoritySelector::top_quarter_by_nl, lexicon)});
  }

  for (const ConferenceStats& c : confs) {
    QuartileAnalysis qa;
    qa.key = c.key;
    qa.split = quartile_split(c);
    auto quarter_counts = [&](const std::vector<std::string>& ids) {
      std::set<std::string> wanted(ids.begin(), ids.end());
      std::vector<PaperCounts> out;
      for (const auto& pc : c.counts) {
        if (wanted.count(pc.paper_id)) out.push_back(pc);
      }
      return out;
    };
    std::vector<PaperCounts> q4 = quarter_counts(qa.split.q4_plus);
    std::vector<PaperCounts> q1 = quarter_counts(qa.split.q1_minus);
    try {
      qa.q4_composition = composition(c.key.label() + " Q4+", q4, lexicon);
    } catch (const DataError&) {
    }
    try {
      qa.q1_composition = composition(c.key.label() + " Q1-", q1, lexicon);
    } catch (const DataError&) {
    }
    if (qa.q4_composition && qa.q1_composition) {
      qa.diff = composition_diff(*qa.q4_composition, *qa.q1_composition, diff_top_k);
    }
    set.quartiles.push_back(std::move(qa));
  }

  if (set.quartiles.size() >= 2) {
    const QuartileAnalysis& first = set.quartiles.front();
    const QuartileAnalysis& last = set.quartiles.back();
    if (first.q4_composition && last.q4_composition && first.q1_composition &&
        last.q1_composition) {
      OvertimeDiff od;
      od.first = first.key;
      od.last = last.key;
      od.q4_diff = composition_diff(*last.q4_composition, *first.q4_composition, diff_top_k);
      od.q1_diff = composition_diff(*last.q1_composition, *first.q1_composition, diff_top_k);
      set.overtime = std::move(od);
    }
  }

  return set;
}

namespace {

json analysis_to_json(const AnalysisSet& set, const std::string& name) {
  json j{{"schema", "termdrift.stats." + name}, {"version", 1}};
  if (name == "timeseries") {
    json arr = json::array();
    for (const auto& p : set.timeseries) {
      json item{{"key", key_to_json(p.key)},
                {"paper_count", p.paper_count},
                {"lm_related_count", p.lm_related_count},
                {"prop_lm_related", p.prop_lm_related},
                {"mean_n_l", p.mean_n_l},
                {"mean_n", p.mean_n}};
      if (p.estimated_mean_n_l) item["estimated_mean_n_l"] = *p.estimated_mean_n_l;
      arr.push_back(std::move(item));
    }
    j["conferences"] = std::move(arr);
  } else if (name == "ks") {
    j["matrices"] = json{{"n_l", cells_to_json(set.ks_n_l)}, {"n", cells_to_json(set.ks_n)}};
  } else if (name == "composition") {
    json arr = json::array();
    for (const auto& c : set.compositions) {
      arr.push_back({{"key", key_to_json(c.key)},
                     {"composition", composition_to_json(c.composition)},
                     {"by_entry_counts", c.entry_counts}});
    }
    j["scopes"] = std::move(arr);
  } else if (name == "jaccard") {
    j["labels"] = set.jaccard_labels;
    j["set"] = set.jaccard_set;
    j["weighted"] = set.jaccard_weighted;
  } else if (name == "majority") {
    json all = json::array(), top = json::array();
    for (const auto& m : set.majority_all) all.push_back(majority_to_json(m));
    for (const auto& m : set.majority_top_quarter) top.push_back(majority_to_json(m));
    j["all"] = std::move(all);
    j["top_quarter"] = std::move(top);
  } else if (name == "quartiles") {
    json arr = json::array();
    for (const auto& qa : set.quartiles) {
      json item{{"key", key_to_json(qa.key)},
                {"q4_plus", qa.split.q4_plus},
                {"q1_minus", qa.split.q1_minus},
                {"diff", deltas_to_json(qa.diff)}};
      item["q4_composition"] =
          qa.q4_composition ? composition_to_json(*qa.q4_composition) : json(nullptr);
      item["q1_composition"] =
          qa.q1_composition ? composition_to_json(*qa.q1_composition) : json(nullptr);
      arr.push_back(std::move(item));
    }
    j["conferences"] = std::move(arr);
    if (set.overtime) {
      j["overtime"] = json{{"first", key_to_json(set.overtime->first)},
                           {"last", key_to_json(set.overtime->last)},
                           {"q4_diff", deltas_to_json(set.overtime->q4_diff)},
                           {"q1_diff", deltas_to_json(set.overtime->q1_diff)}};
    } else {
      j["overtime"] = nullptr;
    }
  } else {
    throw UsageError("unknown analysis: " + name);
  }
  return j;
}

}  // namespace

void write_analysis_file(const AnalysisSet& set, const std::string& name,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / (name + ".json"), analysis_to_json(set, name).dump(2) + "\n");
}

void write_analysis_files(const AnalysisSet& set, const std::filesystem::path& dir) {
  for (const auto& name : analysis_names()) write_analysis_file(set, name, dir);
}

AnalysisSet load_analyses(const std::filesystem::path& dir) {
  AnalysisSet set;
  auto load = [&](const std::string& name) {
    std::filesystem::path file = dir / (name + ".json");
    if (!std::filesystem::exists(file)) {
      throw DataError("missing analysis file: " + file.string() +
                      " (run the stats command first)");
    }
    try {
      json j = json::parse(read_file(file));
      if (j.at("schema") != "termdrift.stats." + name) {
        throw DataError(file.string() + ": unexpected schema");
      }
      return j;
    } catch (const json::exception& e) {
      throw DataError(file.string() + ": " + e.what());
    }
  };

  {
    json j = load("timeseries");
    for (const auto& item : j.at("conferences")) {
      TimeseriesPoint p;
      p.key = key_from_json(item.at("key"));
      p.paper_count = item.at("paper_count").get<long long>();
      p.lm_related_count = item.at("lm_related_count").get<long long>();
      p.prop_lm_related = item.at("prop_lm_related").get<double>();
      p.mean_n_l = item.at("mean_n_l").get<double>();
      p.mean_n = item.at("mean_n").get<double>();
      if (item.contains("estimated_mean_n_l")) {
        p.estimated_mean_n_l = item.at("estimated_mean_n_l").get<double>();
      }
      set.timeseries.push_back(std::move(p));
    }
  }
  {
    json j = load("ks");
    set.ks_n_l = cells_from_json(j.at("matrices").at("n_l"));
    set.ks_n = cells_from_json(j.at("matrices").at("n"));
  }
  {
    json j = load("composition");
    for (const auto& item : j.at("scopes")) {
      ConferenceComposition cc;
      cc.key = key_from_json(item.at("key"));
      cc.composition = composition_from_json(item.at("composition"));
      cc.entry_counts = item.at("by_entry_counts").get<std::map<std::string, long long>>();
      set.compositions.push_back(std::move(cc));
    }
  }
  {
    json j = load("jaccard");
    set.jaccard_labels = j.at("labels").get<std::vector<std::string>>();
    set.jaccard_set = j.at("set").get<std::vector<std::vector<double>>>();
    set.jaccard_weighted = j.at("weighted").get<std::vector<std::vector<double>>>();
  }
  {
    json j = load("majority");
    for (const auto& item : j.at("all")) set.majority_all.push_back(majority_from_json(item));
    for (const auto& item : j.at("top_quarter")) {
      set.majority_top_quarter.push_back(majority_from_json(item));
    }
  }
  {
    json j = load("quartiles");
    for (const auto& item : j.at("conferences")) {
      QuartileAnalysis qa;
      qa.key = key_from_json(item.at("key"));
      qa.split.q4_plus = item.at("q4_plus").get<std::vector<std::string>>();
      qa.split.q1_minus = item.at("q1_minus").get<std::vector<std::string>>();
      if (!item.at("q4_composition").is_null()) {
        qa.q4_composition = composition_from_json(item.at("q4_composition"));
      }
      if (!item.at("q1_composition").is_null()) {
        qa.q1_composition = composition_from_json(item.at("q1_composition"));
      }
      qa.diff = deltas_from_json(item.at("diff"));
      set.quartiles.push_back(std::move(qa));
    }
    if (!j.at("overtime").is_null()) {
      OvertimeDiff od;
      od.first = key_from_json(j.at("overtime").at("first"));
      od.last = key_from_json(j.at("overtime").at("last"));
      od.q4_diff = deltas_from_json(j.at("overtime").at("q4_diff"));
      od.q1_diff = deltas_from_json(j.at("overtime").at("q1_diff"));
      set.overtime = std::move(od);
    }
  }
  return set;
}

void write_counts(const std::vector<PaperCounts>& counts, const std::filesystem::path& path) {
  std::vector<const PaperCounts*> ordered;
  for (const auto& c : counts) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(),
            [](const PaperCounts* a, const PaperCounts* b) { return a->paper_id < b->paper_id; });
  std::ostringstream out;
  json header{{"schema", "termdrift.counts"}, {"version", 1}, {"paper_count", counts.size()}};
  out << header.dump() << "\n";
  for (const PaperCounts* c : ordered) {
    json j{{"paper_id", c->paper_id},
           {"n_l", c->n_l},
           {"per_term_l", c->per_term_l},
           {"per_entry", c->per_entry},
           {"n", c->n}};
    out << j.dump() << "\n";
  }
  write_file_atomic(path, out.str());
}

std::vector<PaperCounts> load_counts(const std::filesystem::path& path) {
  std::string content = read_file(path);
  std::vector<std::string> lines = split_lines(content);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw DataError(path.string() + ":1: missing counts header");
  std::vector<PaperCounts> out;
  for (size_t i = 0; i < lines.size(); ++i) {
    try {
      json j = json::parse(lines[i]);
      if (i == 0) {
        if (j.at("schema") != "termdrift.counts") throw DataError("not a counts file");
        continue;
      }
      PaperCounts c;
      c.paper_id = j.at("paper_id").get<std::string>();
      c.n_l = j.at("n_l").get<long long>();
      c.per_term_l = j.at("per_term_l").get<std::map<std::string, long long>>();
      c.per_entry = j.at("per_entry").get<std::map<std::string, long long>>();
      c.n = j.at("n").get<long long>();
      out.push_back(std::move(c));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(i + 1) +
                      ": malformed counts record: " + e.what());
    }
  }
  return out;
}

}  // namespace termdrift
