#include <chrono>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "termdrift/corpus.hpp"
#include "termdrift/errors.hpp"

namespace termdrift {

using nlohmann::json;

namespace {

// Splits "http://host:port/base" into (scheme://host:port, /base).
std::pair<std::string, std::string> split_url(const std::string& url) {
  size_t scheme = url.find("://");
  size_t path_start = scheme == std::string::npos ? url.find('/') : url.find('/', scheme + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string base = url.substr(path_start);
  if (base == "/") base.clear();
  return {url.substr(0, path_start), base};
}

std::string http_get(const std::string& url, const FetchOptions& options,
                     const std::string& context, bool* not_found) {
  auto [host, base] = split_url(url);
  std::string last_error;
  for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
    httplib::Client client(host);
    client.set_connection_timeout(options.timeout_s);
    client.set_read_timeout(options.timeout_s);
    auto res = client.Get(base.empty() ? "/" : base);
    if (res) {
      if (res->status == 200) return res->body;
      if (res->status == 404) {
        if (not_found) *not_found = true;
        throw NotFoundError(context + ": not found at " + url);
      }
      last_error = "HTTP " + std::to_string(res->status);
      if (res->status < 500) break;  // 4xx other than 404: retrying won't help
    } else {
      last_error = httplib::to_string(res.error());
    }
    if (attempt < options.max_attempts) {
      std::this_thread::sleep_for(std::chrono::milliseconds(options.backoff_ms * attempt));
    }
  }
  throw ServiceError(context + ": " + last_error + " (" + url + ")");
}

}  // namespace

std::vector<PaperMeta> fetch_metadata(const std::string& venue, int year,
                                      const std::string& endpoint,
                                      const FetchOptions& options) {
  std::string context = "fetching volume " + venue + " " + std::to_string(year);
  std::string url = endpoint;
  if (!url.empty() && url.back() == '/') url.pop_back();
  url += "/volumes/" + venue + "/" + std::to_string(year);

  std::string body = http_get(url, options, context, nullptr);

  std::vector<PaperMeta> metas;
  try {
    json volume = json::parse(body);
    for (const auto& rec : volume.at("papers")) {
      PaperMeta m;
      m.paper_id = rec.at("paper_id").get<std::string>();
      m.venue = venue;
      m.year = year;
      m.title = rec.value("title", "");
      m.abstract_text = rec.value("abstract", "");
      if (rec.contains("source_url")) m.source_url = rec.at("source_url").get<std::string>();
      metas.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw DataError(context + ": malformed volume listing: " + std::string(e.what()));
  }
  std::sort(metas.begin(), metas.end(),
            [](const PaperMeta& a, const PaperMeta& b) { return a.paper_id < b.paper_id; });
  return metas;
}

std::string fetch_text(const std::string& url, const FetchOptions& options) {
  return http_get(url, options, "fetching " + url, nullptr);
}

}  // namespace termdrift
