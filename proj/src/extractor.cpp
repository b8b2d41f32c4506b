#include "termdrift/extractor.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "termdrift/corpus.hpp"
#include "termdrift/errors.hpp"
#include "termdrift/util.hpp"

namespace termdrift {

using nlohmann::json;

namespace {

const char* const kSystemPrompt =
    R"(You are an assistant with excellent expertise in searching through academic text. You will be given the Abstract of an academic paper in the field of Natural Language Processing. Your task is to retrieve whether the authors mention that they mentioned some *specific* language model in their writing. And if so, you need to accurately find the names of all such models.

Important note 1: "LLM" and "PLM" are not model names, they refer to the generic terms of "Large Language Model" and "Pretrained Language Model".

Important note 2: Do not include any models that are proposed by the authors themselves. For instance, if a paper says "we propose a new model, GPT-OURNEW, which performs better than GPT-3", your answer should only include "GPT-3" and not "GPT-OURNEW".

Return all the specific model names (don't miss out any), separated by a comma. If you believe you didn't see any model name, simply return "None". Only respond with the comma-separated model names. Do not include any other text in your response!!!

Some examples:

Input: This paper explores the potential of leveraging Large Language Models (LLMs) for data augmentation in multilingual commonsense reasoning datasets where the available training data is extremely limited. To achieve this, we utilise several LLMs, namely Dolly-v2, StableVicuna, ChatGPT, and GPT-4, to augment three datasets: XCOPA, XWinograd, and XStoryCloze. Subsequently, we evaluate the effectiveness of fine-tuning smaller multilingual models, mBERT and XLMR, using the synthesised data. We compare the performance of training with data generated in English and target languages, as well as translated English-generated data, revealing the overall advantages of incorporating data generated by LLMs, e.g. a notable 13.4 accuracy score improvement for the best case. Furthermore, we conduct a human evaluation by asking native speakers to assess the naturalness and logical coherence of the generated examples across different languages. The results of the evaluation indicate that LLMs such as ChatGPT and GPT-4 excel at producing natural and coherent text in most languages, however, they struggle to generate meaningful text in certain languages like Tamil. We also observe that ChatGPT falls short in generating plausible alternatives compared to the original dataset, whereas examples from GPT-4 exhibit competitive logical consistency.

Output: Dolly-v2,StableVicuna,ChatGPT,GPT-4,mBERT,XLMR

Input: Large Language Models (LLMs) have showcased impressive performance. However, due to their inability to capture relationships among samples, these frozen LLMs inevitably keep repeating similar mistakes. In this work, we propose our Tuning-free Rule Accumulation (TRAN) framework, which guides LLMs in improving their performance by learning from previous mistakes. Considering data arrives sequentially, LLMs gradually accumulate rules from incorrect cases, forming a rule collection. These rules are then utilized by the LLMs to avoid making similar mistakes when processing subsequent inputs. Moreover, the rules remain independent of the primary prompts, seamlessly complementing prompt design strategies. Experimentally, we show that TRAN improves over recent baselines by a large margin.

Output: None

Input: Dialogue State Tracking (DST) is of paramount importance in ensuring accurate tracking of user goals and system actions within task-oriented dialogue systems. The emergence of large language models (LLMs) such as GPT3 and ChatGPT has sparked considerable interest in assessing their efficacy across diverse applications. In this study, we conduct an initial examination of ChatGPT's capabilities in DST. Our evaluation uncovers the exceptional performance of ChatGPT in this task, offering valuable insights to researchers regarding its capabilities and providing useful directions for designing and enhancing dialogue systems. Despite its impressive performance, ChatGPT has significant limitations including its closed-source nature, request restrictions, raising data privacy concerns, and lacking local deployment capabilities. To address these concerns, we present LDST, an LLM-driven DST framework based on smaller, open-source foundation models. By utilizing a novel domain-slot instruction tuning method, LDST achieves performance on par with ChatGPT. Comprehensive evaluations across three distinct experimental settings, we find that LDST exhibits remarkable performance improvements in both zero-shot and few-shot setting compared to previous SOTA methods. The source code is provided for reproducibility.

Output: ChatGPT)";

}  // namespace

const std::string& extraction_system_prompt() {
  static const std::string prompt = kSystemPrompt;
  return prompt;
}

ExtractionRequest build_prompt(const std::string& title, const std::string& abstract_text) {
  if (trim(abstract_text).empty()) {
    throw DataError("build_prompt: empty abstract");
  }
  ExtractionRequest request;
  request.title = title;
  request.system_text = extraction_system_prompt();
  request.user_text = "Input: " + abstract_text + "\nOutput: ";
  return request;
}

std::vector<std::string> parse_response(std::string_view raw) {
  std::string whole = trim(raw);
  if (whole == "None") return {};
  std::vector<std::string> names;
  for (auto& piece : split_trimmed(whole, ',')) names.push_back(std::move(piece));
  return names;
}

ResponseCache::ResponseCache(std::filesystem::path file) : file_(std::move(file)) {
  if (!std::filesystem::exists(file_)) return;
  std::string content = read_file(file_);
  size_t line_no = 0;
  for (const auto& line : split_lines(content)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      entries_[j.at("paper_id").get<std::string>()] = j.at("response").get<std::string>();
    } catch (const json::exception& e) {
      throw DataError(file_.string() + ":" + std::to_string(line_no) +
                      ": malformed cache record: " + e.what());
    }
  }
}

std::optional<std::string> ResponseCache::lookup(const std::string& paper_id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = entries_.find(paper_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(const std::string& paper_id, const std::string& response) {
  std::lock_guard<std::mutex> lock(mutex_);
  entries_[paper_id] = response;
  std::ofstream out(file_, std::ios::binary | std::ios::app);
  if (!out) throw DataError("cannot append to cache: " + file_.string());
  json j{{"paper_id", paper_id}, {"response", response}};
  out << j.dump() << "\n";
  out.flush();
}

namespace {

std::pair<std::string, std::string> split_base(const std::string& url) {
  size_t scheme = url.find("://");
  size_t path_start = scheme == std::string::npos ? url.find('/') : url.find('/', scheme + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string base = url.substr(path_start);
  if (base == "/") base.clear();
  return {url.substr(0, path_start), base};
}

std::string chat_complete(const ChatEndpoint& endpoint, const ExtractionRequest& request,
                          const ExtractionLimits& limits, std::mt19937& rng) {
  auto [host, base] = split_base(endpoint.base_url);
  json payload{{"model", endpoint.model},
               {"temperature", endpoint.temperature},
               {"messages",
                json::array({json{{"role", "system"}, {"content", request.system_text}},
                             json{{"role", "user"}, {"content", request.user_text}}})}};
  std::string body = payload.dump();
  std::string path = base + "/v1/chat/completions";

  std::string last_error;
  for (int attempt = 1; attempt <= limits.max_attempts; ++attempt) {
    httplib::Client client(host);
    client.set_connection_timeout(limits.timeout_s);
    client.set_read_timeout(limits.timeout_s);
    httplib::Headers headers{{"Authorization", "Bearer " + endpoint.api_key}};
    auto res = client.Post(path, headers, body, "application/json");
    if (res && res->status == 200) {
      try {
        json reply = json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const json::exception& e) {
        last_error = std::string("malformed completion: ") + e.what();
        break;  // a broken payload will not fix itself
      }
    }
    if (res && res->status >= 400 && res->status < 500 && res->status != 429) {
      last_error = "HTTP " + std::to_string(res->status);
      break;
    }
    last_error = res ? "HTTP " + std::to_string(res->status)
                     : httplib::to_string(res.error());
    if (attempt < limits.max_attempts) {
      std::uniform_int_distribution<int> jitter(0, limits.backoff_ms);
      std::this_thread::sleep_for(
          std::chrono::milliseconds(limits.backoff_ms * attempt + jitter(rng)));
    }
  }
  throw ServiceError("extraction request for " + request.paper_id + ": " + last_error);
}

}  // namespace

std::vector<CandidateName> aggregate_candidates(
    const std::map<std::string, std::vector<std::string>>& names_by_paper) {
  std::map<std::string, CandidateName> agg;
  for (const auto& [paper_id, names] : names_by_paper) {  // paper_id order
    std::set<std::string> unique(names.begin(), names.end());
    for (const auto& name : unique) {
      CandidateName& c = agg[name];
      c.surface = name;
      c.frequency += 1;
      if (c.example_paper_ids.size() < 5) c.example_paper_ids.push_back(paper_id);
    }
  }
  std::vector<CandidateName> ranked;
  ranked.reserve(agg.size());
  for (auto& [name, c] : agg) ranked.push_back(std::move(c));
  std::sort(ranked.begin(), ranked.end(), [](const CandidateName& a, const CandidateName& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.surface < b.surface;
  });
  return ranked;
}

ExtractionRun run_extraction(const Corpus& corpus, const ChatEndpoint& endpoint,
                             ResponseCache& cache, const ExtractionLimits& limits) {
  if (endpoint.api_key.empty()) {
    throw ServiceError("extraction: API credential missing from environment");
  }

  struct Job {
    const Paper* paper;
  };
  std::vector<Job> jobs;
  for (const Paper& p : corpus.papers()) {
    if (trim(p.meta.abstract_text).empty()) continue;
    if (!cache.lookup(p.meta.paper_id)) jobs.push_back({&p});
  }

  std::atomic<size_t> next{0};
  std::atomic<long long> calls{0};
  std::mutex failures_mutex;
  std::vector<std::string> failures;

  int workers = std::max(1, std::min<int>(limits.concurrency, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      std::mt19937 rng(0x5eedu + static_cast<unsigned>(w));
      while (true) {
        size_t i = next.fetch_add(1);
        if (i >= jobs.size()) break;
        const Paper& paper = *jobs[i].paper;
        try {
          ExtractionRequest request =
              build_prompt(paper.meta.title, paper.meta.abstract_text);
          request.paper_id = paper.meta.paper_id;
          calls.fetch_add(1);
          std::string response = chat_complete(endpoint, request, limits, rng);
          cache.put(paper.meta.paper_id, response);
        } catch (const std::exception&) {
          std::lock_guard<std::mutex> lock(failures_mutex);
          failures.push_back(paper.meta.paper_id);
        }
      }
    });
  }
  for (auto& t : pool) t.join();

  std::map<std::string, std::vector<std::string>> names_by_paper;
  for (const Paper& p : corpus.papers()) {
    if (auto cached = cache.lookup(p.meta.paper_id)) {
      names_by_paper[p.meta.paper_id] = parse_response(*cached);
    }
  }

  ExtractionRun run;
  run.candidates = aggregate_candidates(names_by_paper);
  std::sort(failures.begin(), failures.end());
  run.failed_paper_ids = std::move(failures);
  run.network_calls = calls.load();
  return run;
}

std::string suggestion_name(Suggestion::Kind kind) {
  switch (kind) {
    case Suggestion::Kind::already_alias: return "already_alias";
    case Suggestion::Kind::variation_of: return "variation_of";
    case Suggestion::Kind::possible_alias_of: return "possible_alias_of";
    case Suggestion::Kind::new_or_discard: return "new_or_discard";
  }
  return "new_or_discard";
}

Suggestion suggest_classification(const std::string& candidate, const Lexicon& lexicon) {
  if (const std::string* owner = lexicon.alias_owner(candidate)) {
    return {Suggestion::Kind::already_alias, *owner};
  }
  // Longest alias contained in the candidate wins; ties by alias string.
  const std::string* best_alias = nullptr;
  const std::string* best_owner = nullptr;
  for (const auto& [id, entry] : lexicon.entries()) {
    for (const auto& alias : entry.aliases) {
      if (candidate.find(alias) == std::string::npos) continue;
      if (!best_alias || alias.size() > best_alias->size() ||
          (alias.size() == best_alias->size() && alias < *best_alias)) {
        best_alias = &alias;
        best_owner = &id;
      }
    }
  }
  if (best_owner) return {Suggestion::Kind::variation_of, *best_owner};

  for (const auto& [id, entry] : lexicon.entries()) {
    for (const auto& alias : entry.aliases) {
      if (iequals_ascii(candidate, alias)) {
        return {Suggestion::Kind::possible_alias_of, id};
      }
    }
  }
  return {Suggestion::Kind::new_or_discard, ""};
}

void write_candidates(const std::vector<CandidateName>& candidates,
                      const std::filesystem::path& path) {
  std::ostringstream out;
  json header{{"schema", "termdrift.candidates"}, {"version", 1}};
  out << header.dump() << "\n";
  for (const auto& c : candidates) {
    json j{{"surface", c.surface},
           {"frequency", c.frequency},
           {"example_paper_ids", c.example_paper_ids}};
    out << j.dump() << "\n";
  }
  write_file_atomic(path, out.str());
}

std::vector<CandidateName> load_candidates(const std::filesystem::path& path) {
  std::string content = read_file(path);
  std::vector<std::string> lines = split_lines(content);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw DataError(path.string() + ":1: missing candidates header");
  std::vector<CandidateName> out;
  for (size_t i = 0; i < lines.size(); ++i) {
    try {
      json j = json::parse(lines[i]);
      if (i == 0) {
        if (j.at("schema") != "termdrift.candidates") {
          throw DataError("not a candidates file");
        }
        continue;
      }
      CandidateName c;
      c.surface = j.at("surface").get<std::string>();
      c.frequency = j.at("frequency").get<long long>();
      for (const auto& id : j.at("example_paper_ids")) {
        c.example_paper_ids.push_back(id.get<std::string>());
      }
      out.push_back(std::move(c));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(i + 1) +
                      ": malformed candidate record: " + e.what());
    }
  }
  return out;
}

}  // namespace termdrift
