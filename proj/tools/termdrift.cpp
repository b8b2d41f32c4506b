#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "termdrift/analyses.hpp"
#include "termdrift/config.hpp"
#include "termdrift/corpus.hpp"
#include "termdrift/decision_log.hpp"
#include "termdrift/errors.hpp"
#include "termdrift/extractor.hpp"
#include "termdrift/lexicon.hpp"
#include "termdrift/matcher.hpp"
#include "termdrift/report.hpp"
#include "termdrift/stats.hpp"
#include "termdrift/util.hpp"

namespace fs = std::filesystem;
using namespace termdrift;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* value = std::getenv(name);
  return value ? value : fallback;
}

std::string now_iso8601() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Corpus load_or_empty_corpus(const fs::path& path) {
  if (!fs::exists(path)) return Corpus{};
  return load_corpus(path);
}

// Merges new papers into an existing corpus (same paper_id wins over old) and
// recomputes ordinals.
Corpus merge_into_corpus(Corpus existing, std::vector<Paper> fresh,
                         const std::vector<std::string>& venue_order) {
  std::set<std::string> fresh_ids;
  for (const Paper& p : fresh) fresh_ids.insert(p.meta.paper_id);
  for (const Paper& p : existing.papers()) {
    if (!fresh_ids.count(p.meta.paper_id)) fresh.push_back(p);
  }
  assign_ordinals(fresh, venue_order);
  return Corpus(std::move(fresh));
}

int cmd_ingest(const Config& config, const std::string& venue, int year,
               const std::string& from_text, const std::string& endpoint_flag) {
  std::vector<Paper> papers;

  if (!from_text.empty()) {
    fs::path dir = from_text;
    fs::path meta_file = dir / "metadata.jsonl";
    if (!fs::exists(meta_file)) {
      throw DataError("from-text directory has no metadata.jsonl: " + dir.string());
    }
    std::string content = read_file(meta_file);
    size_t line_no = 0;
    for (const auto& line : split_lines(content)) {
      ++line_no;
      if (trim(line).empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw DataError(meta_file.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
      Paper p;
      p.meta.paper_id = j.at("paper_id").get<std::string>();
      p.meta.venue = j.at("venue").get<std::string>();
      p.meta.year = j.at("year").get<int>();
      p.meta.title = j.value("title", "");
      p.meta.abstract_text = j.value("abstract", "");
      fs::path text_file = dir / "text" / (p.meta.paper_id + ".txt");
      if (!fs::exists(text_file)) {
        throw DataError("missing text file: " + text_file.string());
      }
      ExtractionResult extracted = extract_body(read_file(text_file));
      p.body_text = std::move(extracted.body_text);
      p.sections = std::move(extracted.sections);
      for (const auto& w : extracted.warnings) {
        std::cerr << "warning: " << p.meta.paper_id << ": " << w << "\n";
      }
      papers.push_back(std::move(p));
    }
  } else {
    if (std::find(config.venue_order.begin(), config.venue_order.end(), venue) ==
        config.venue_order.end()) {
      throw UsageError("unknown venue: " + venue + " (configure venue_order to add venues)");
    }
    std::string endpoint = !endpoint_flag.empty()
                               ? endpoint_flag
                               : env_or("TERMDRIFT_METADATA_URL", config.metadata_endpoint);
    if (endpoint.empty()) {
      throw UsageError("no metadata endpoint configured (flag, config or env)");
    }
    FetchOptions options;
    options.concurrency = config.fetch_concurrency;
    std::vector<PaperMeta> metas = fetch_metadata(venue, year, endpoint, options);

    papers.resize(metas.size());
    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mutex;
    int workers = std::max(1, std::min<int>(options.concurrency, static_cast<int>(metas.size())));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        while (!failed.load()) {
          size_t i = next.fetch_add(1);
          if (i >= metas.size()) break;
          Paper p;
          p.meta = metas[i];
          try {
            std::string raw = p.meta.source_url ? fetch_text(*p.meta.source_url, options) : "";
            ExtractionResult extracted = extract_body(raw);
            p.body_text = std::move(extracted.body_text);
            p.sections = std::move(extracted.sections);
          } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!failed.exchange(true)) first_error = e.what();
            return;
          }
          papers[i] = std::move(p);
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failed.load()) throw ServiceError(first_error);
  }

  Corpus corpus = merge_into_corpus(load_or_empty_corpus(config.corpus_path), std::move(papers),
                                    config.venue_order);
  store_corpus(corpus, config.corpus_path);
  std::cout << "corpus: " << corpus.papers().size() << " papers, "
            << corpus.conference_index().size() << " conferences -> "
            << config.corpus_path.string() << "\n";
  return 0;
}

int cmd_scan(const Config& config) {
  Corpus corpus = load_corpus(config.corpus_path);
  Lexicon lexicon = parse_lexicon(config.lexicon_path);
  std::vector<PaperCounts> counts =
      scan_corpus(corpus, lexicon, config.scan_threads, config.scan_abstract_only);
  write_counts(counts, config.counts_path);
  long long related = 0;
  for (const auto& c : counts) {
    if (c.n_l > 0) ++related;
  }
  std::cout << "scanned " << counts.size() << " papers (" << related
            << " LM-related) -> " << config.counts_path.string() << "\n";
  return 0;
}

int cmd_stats(const Config& config, const std::string& analysis) {
  Corpus corpus = load_corpus(config.corpus_path);
  Lexicon lexicon = parse_lexicon(config.lexicon_path);
  std::vector<PaperCounts> counts = load_counts(config.counts_path);

  std::vector<std::string> wanted;
  if (analysis == "all") {
    wanted = analysis_names();
  } else if (std::find(analysis_names().begin(), analysis_names().end(), analysis) !=
             analysis_names().end()) {
    wanted.push_back(analysis);
  } else {
    throw UsageError("unknown analysis: " + analysis);
  }

  std::vector<ConferenceStats> confs = conference_stats(corpus, counts);
  if (std::find(wanted.begin(), wanted.end(), "ks") != wanted.end() && confs.size() < 2) {
    throw DataError("ks analysis: need >= 2 conferences");
  }

  // compute_analyses fills every analysis; cheap at the scale this tool
  // processes, and it keeps the files mutually consistent.
  AnalysisSet set = compute_analyses(corpus, counts, lexicon);
  for (const auto& name : wanted) {
    write_analysis_file(set, name, config.stats_dir);
    std::cout << "wrote " << (config.stats_dir / (name + ".json")).string() << "\n";
  }
  return 0;
}

int cmd_extract(const Config& config, const std::string& endpoint_flag,
                const std::string& model_flag) {
  Corpus corpus = load_corpus(config.corpus_path);
  ChatEndpoint endpoint;
  endpoint.base_url = !endpoint_flag.empty() ? endpoint_flag : config.chat_endpoint;
  endpoint.model = !model_flag.empty() ? model_flag : config.chat_model;
  endpoint.api_key = env_or(config.api_key_env.c_str(), "");
  if (endpoint.base_url.empty()) throw UsageError("no chat endpoint configured");
  if (endpoint.model.empty()) throw UsageError("no chat model configured");
  if (endpoint.api_key.empty()) {
    throw ServiceError("API credential missing: set " + config.api_key_env);
  }

  ResponseCache cache(config.cache_path);
  ExtractionLimits limits;
  limits.concurrency = config.extract_concurrency;
  ExtractionRun run = run_extraction(corpus, endpoint, cache, limits);
  write_candidates(run.candidates, config.candidates_path);
  std::cout << "extraction: " << run.network_calls << " requests, "
            << run.candidates.size() << " candidates, " << run.failed_paper_ids.size()
            << " failures -> " << config.candidates_path.string() << "\n";
  for (const auto& id : run.failed_paper_ids) std::cerr << "failed: " << id << "\n";
  return 0;
}

struct TriageSession {
  const Config& config;
  Lexicon lexicon;
  std::vector<CandidateName> candidates;
  std::set<std::string> decided;

  explicit TriageSession(const Config& cfg) : config(cfg) {
    lexicon = parse_lexicon(cfg.lexicon_path);
    candidates = load_candidates(cfg.candidates_path);
    for (const auto& d : load_decision_log(cfg.decision_log_path)) {
      decided.insert(d.candidate);
    }
  }

  // Applies and persists one decision; the lexicon file is rewritten
  // atomically and only after revalidation, so it can never be left invalid.
  bool commit(const TriageDecision& decision, std::string* error) {
    try {
      Lexicon updated = lexicon.apply(decision);
      write_lexicon(updated, config.lexicon_path);
      append_decision(config.decision_log_path, decision);
      lexicon = std::move(updated);
      decided.insert(decision.candidate);
      return true;
    } catch (const DataError& e) {
      *error = e.what();
      return false;
    }
  }
};

int cmd_triage(const Config& config, const std::string& replay_file,
               const std::string& decided_by) {
  TriageSession session(config);

  if (!replay_file.empty()) {
    size_t applied = 0, skipped = 0;
    for (const auto& d : load_decision_log(replay_file)) {
      if (session.decided.count(d.candidate)) {
        ++skipped;
        continue;
      }
      std::string error;
      if (session.commit(d, &error)) {
        ++applied;
      } else {
        std::cerr << "conflict: " << d.candidate << ": " << error << "\n";
        ++skipped;
      }
    }
    std::cout << "replayed " << applied << " decisions (" << skipped << " skipped)\n";
    return 0;
  }

  Corpus corpus = load_or_empty_corpus(config.corpus_path);
  size_t pending = 0;
  for (const auto& c : session.candidates) {
    if (!session.decided.count(c.surface)) ++pending;
  }
  std::cout << pending << " pending candidate(s). Keys: [n]ew entry, [a]lias of, "
               "[v]ariation of, [d]iscard, [s]kip, [q]uit\n\n";

  for (const auto& candidate : session.candidates) {
    if (session.decided.count(candidate.surface)) continue;

    Suggestion suggestion = suggest_classification(candidate.surface, session.lexicon);
    std::cout << "candidate: \"" << candidate.surface << "\"  (in " << candidate.frequency
              << " abstracts)\n";
    for (const auto& id : candidate.example_paper_ids) {
      const Paper* paper = corpus.find(id);
      std::cout << "    " << id << (paper ? ": " + paper->meta.title : "") << "\n";
    }
    std::cout << "  suggestion: " << suggestion_name(suggestion.kind)
              << (suggestion.entry_id.empty() ? "" : " -> " + suggestion.entry_id) << "\n";

    while (true) {
      std::cout << "  action [n/a/v/d/s/q]: " << std::flush;
      std::string line;
      if (!std::getline(std::cin, line)) return 0;
      line = trim(line);
      if (line == "q") return 0;
      if (line == "s" || line.empty()) break;

      TriageDecision decision;
      decision.candidate = candidate.surface;
      decision.decided_by = decided_by;
      decision.timestamp = now_iso8601();
      if (line == "n") {
        decision.action = TriageDecision::Action::new_entry;
      } else if (line == "d") {
        decision.action = TriageDecision::Action::discard;
      } else if (line == "a" || line == "v") {
        decision.action = line == "a" ? TriageDecision::Action::alias_of
                                      : TriageDecision::Action::variation_of;
        std::string fallback = suggestion.entry_id;
        std::cout << "  target entry" << (fallback.empty() ? "" : " [" + fallback + "]")
                  << ": " << std::flush;
        std::string target;
        if (!std::getline(std::cin, target)) return 0;
        target = trim(target);
        decision.target = target.empty() ? fallback : target;
      } else {
        std::cout << "  unrecognized key\n";
        continue;
      }

      std::string error;
      if (session.commit(decision, &error)) {
        std::cout << "  recorded: " << action_name(decision.action)
                  << (decision.target.empty() ? "" : " -> " + decision.target) << "\n\n";
        break;
      }
      std::cout << "  rejected: " << error << " (candidate stays pending)\n";
    }
  }
  std::cout << "triage complete\n";
  return 0;
}

int cmd_report(const Config& config, bool force) {
  Lexicon lexicon = parse_lexicon(config.lexicon_path);
  AnalysisSet analyses = load_analyses(config.stats_dir);
  EmitResult result = emit_all(analyses, lexicon, config.output_dir, force);
  std::cout << "wrote " << result.written.size() << " files under "
            << config.output_dir.string() << " (manifest.json lists checksums)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"termdrift: tracks how a field's generic model terms and the "
               "specific model names behind them drift across conferences"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file");

  // flag overrides shared by subcommands
  std::string corpus_flag, lexicon_flag, counts_flag, stats_dir_flag, out_flag;

  auto* ingest = app.add_subcommand("ingest", "fetch or import papers into the corpus store");
  std::string venue, from_text, endpoint_flag;
  int year = 0;
  ingest->add_option("venue", venue, "venue name, e.g. ACL");
  ingest->add_option("year", year, "proceedings year");
  ingest->add_option("--from-text", from_text,
                     "ingest pre-extracted text files (metadata.jsonl + text/)");
  ingest->add_option("--endpoint", endpoint_flag, "metadata endpoint base URL");
  ingest->add_option("--corpus", corpus_flag, "corpus file path");

  auto* scan = app.add_subcommand("scan", "count generic terms and model names per paper");
  bool abstract_only = false;
  int threads_flag = 0;
  scan->add_option("--corpus", corpus_flag, "corpus file path");
  scan->add_option("--lexicon", lexicon_flag, "lexicon file path");
  scan->add_option("--counts", counts_flag, "output counts file");
  scan->add_option("--threads", threads_flag, "scan threads");
  scan->add_flag("--abstract-only", abstract_only, "scan abstracts instead of body text");

  auto* stats = app.add_subcommand("stats", "run the diachronic analyses");
  std::string analysis = "all";
  stats->add_option("--analysis", analysis,
                    "timeseries|ks|composition|jaccard|majority|quartiles|all");
  stats->add_option("--corpus", corpus_flag, "corpus file path");
  stats->add_option("--lexicon", lexicon_flag, "lexicon file path");
  stats->add_option("--counts", counts_flag, "counts file path");
  stats->add_option("--stats-dir", stats_dir_flag, "analysis output directory");

  auto* extract = app.add_subcommand("extract", "query the extraction service for candidates");
  std::string chat_endpoint_flag, chat_model_flag, cache_flag, candidates_flag;
  extract->add_option("--endpoint", chat_endpoint_flag, "chat-completion endpoint base URL");
  extract->add_option("--model", chat_model_flag, "model name sent to the endpoint");
  extract->add_option("--cache", cache_flag, "response cache file");
  extract->add_option("--candidates", candidates_flag, "candidate output file");
  extract->add_option("--corpus", corpus_flag, "corpus file path");

  auto* triage = app.add_subcommand("triage", "review candidates into the lexicon");
  std::string replay_file, decided_by = "anonymous";
  triage->add_option("--decisions", replay_file, "replay decisions from this log");
  triage->add_option("--decided-by", decided_by, "reviewer name recorded in the log");
  triage->add_option("--candidates", candidates_flag, "candidate file");
  triage->add_option("--lexicon", lexicon_flag, "lexicon file path");
  triage->add_option("--corpus", corpus_flag, "corpus file (for example titles)");

  auto* report = app.add_subcommand("report", "emit chart data and SVG figures");
  bool force = false;
  report->add_option("--stats-dir", stats_dir_flag, "analysis input directory");
  report->add_option("--out", out_flag, "chart output directory");
  report->add_flag("--force", force, "overwrite existing outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    Config config;
    if (!config_path.empty()) {
      config = Config::load(config_path);
    } else if (fs::exists("termdrift.json")) {
      config = Config::load("termdrift.json");
    }
    if (!corpus_flag.empty()) config.corpus_path = corpus_flag;
    if (!lexicon_flag.empty()) config.lexicon_path = lexicon_flag;
    if (!counts_flag.empty()) config.counts_path = counts_flag;
    if (!stats_dir_flag.empty()) config.stats_dir = stats_dir_flag;
    if (!out_flag.empty()) config.output_dir = out_flag;
    if (!cache_flag.empty()) config.cache_path = cache_flag;
    if (!candidates_flag.empty()) config.candidates_path = candidates_flag;
    if (threads_flag > 0) config.scan_threads = threads_flag;
    if (abstract_only) config.scan_abstract_only = true;

    if (ingest->parsed()) {
      if (from_text.empty() && (venue.empty() || year == 0)) {
        throw UsageError("ingest needs either venue+year or --from-text DIR");
      }
      return cmd_ingest(config, venue, year, from_text, endpoint_flag);
    }
    if (scan->parsed()) return cmd_scan(config);
    if (stats->parsed()) return cmd_stats(config, analysis);
    if (extract->parsed()) return cmd_extract(config, chat_endpoint_flag, chat_model_flag);
    if (triage->parsed()) return cmd_triage(config, replay_file, decided_by);
    if (report->parsed()) return cmd_report(config, force);
    throw UsageError("no subcommand");
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const ServiceError& e) {
    std::cerr << "service error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
