#pragma once

// Data layer for the sponsorship study: SponsorBlock dump ingestion, video
// metadata retrieval (fixtures, HTTP, retries) behind one persistent cache,
// caption-window transcript assembly, and the brand-token heuristic used to
// audit censored transcripts.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "vigil/errors.hpp"
#include "vigil/gateway/gateway.hpp"  // RetryPolicy
#include "vigil/util/csv.hpp"
#include "vigil/util/io.hpp"
#include "vigil/util/rng.hpp"
#include "vigil/util/text.hpp"

namespace vigil {

// Sentinel a censor backend returns when a transcript carries no sponsorship.
inline constexpr const char* kNoSponsor = "NO_SPONSOR";

struct SponsorSegment {
  std::string video_id;
  double start = 0.0;  // seconds
  double end = 0.0;
  std::string video_title;
  std::string channel_name;
  std::string channel_description;
  std::string raw_transcript;
  std::string censored_transcript;  // empty until censored; may be kNoSponsor
  std::int64_t length_chars = 0;    // of the censored transcript
  std::string fetch_timestamp;
  bool unavailable = false;   // metadata or transcript could not be obtained
  bool leak_suspect = false;  // a raw brand token survived censoring
  std::vector<std::string> leaked_tokens;
  std::string note;

  bool censored() const { return !censored_transcript.empty(); }
  bool no_sponsor() const { return censored_transcript == kNoSponsor; }
  // Only censored, sponsor-bearing, available segments are ever scored.
  bool scoreable() const { return !unavailable && censored() && !no_sponsor(); }

  void validate() const {
    if (video_id.empty()) throw InputError("[sponsor] segment missing video id");
    if (!(start >= 0.0) || !(end >= start))
      throw DomainError("[sponsor] segment window [" + std::to_string(start) + ", " +
                        std::to_string(end) + ") is not ordered");
  }
};

inline nlohmann::json segment_to_json(const SponsorSegment& s) {
  return {{"video_id", s.video_id},
          {"start", s.start},
          {"end", s.end},
          {"video_title", s.video_title},
          {"channel_name", s.channel_name},
          {"channel_description", s.channel_description},
          {"raw_transcript", s.raw_transcript},
          {"censored_transcript", s.censored_transcript},
          {"length_chars", s.length_chars},
          {"fetch_timestamp", s.fetch_timestamp},
          {"unavailable", s.unavailable},
          {"leak_suspect", s.leak_suspect},
          {"leaked_tokens", s.leaked_tokens},
          {"note", s.note}};
}

inline SponsorSegment segment_from_json(const nlohmann::json& j) {
  SponsorSegment s;
  s.video_id = j.at("video_id").get<std::string>();
  s.start = j.at("start").get<double>();
  s.end = j.at("end").get<double>();
  s.video_title = j.value("video_title", "");
  s.channel_name = j.value("channel_name", "");
  s.channel_description = j.value("channel_description", "");
  s.raw_transcript = j.value("raw_transcript", "");
  s.censored_transcript = j.value("censored_transcript", "");
  s.length_chars = j.value("length_chars", static_cast<std::int64_t>(0));
  s.fetch_timestamp = j.value("fetch_timestamp", "");
  s.unavailable = j.value("unavailable", false);
  s.leak_suspect = j.value("leak_suspect", false);
  if (j.contains("leaked_tokens"))
    s.leaked_tokens = j.at("leaked_tokens").get<std::vector<std::string>>();
  s.note = j.value("note", "");
  s.validate();
  return s;
}

inline std::string segments_to_jsonl(const std::vector<SponsorSegment>& segments) {
  std::string out;
  for (const auto& s : segments) out += segment_to_json(s).dump() + "\n";
  return out;
}

inline std::vector<SponsorSegment> segments_from_jsonl(const std::string& text) {
  std::vector<SponsorSegment> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw InputError("[sponsor] segment store line " + std::to_string(line_no) +
                       " is not valid JSON");
    out.push_back(segment_from_json(j));
  }
  return out;
}

// --- SponsorBlock dump ingestion ----------------------------------------------

struct IngestStats {
  std::size_t rows = 0;        // data rows seen
  std::size_t malformed = 0;   // skipped: wrong shape or unparsable numbers
  std::size_t non_sponsor = 0; // skipped: category filter
  std::size_t duplicates = 0;  // skipped: video id already kept
};

struct IngestResult {
  std::vector<SponsorSegment> segments;  // sampled, in selection order
  IngestStats stats;
};

// Filters the public segment table to `category == sponsor`, keeps the first
// row per video id, then draws n_sample ids uniformly with the given seed.
inline IngestResult ingest_sponsorblock(const std::string& csv_text,
                                        std::size_t n_sample, std::uint64_t seed) {
  if (n_sample < 1) throw InputError("[sponsor] ingest sample size must be >= 1");
  const auto rows = csv_parse(csv_text);
  if (rows.empty())
    throw IngestError("[sponsor] dump has no header row");

  const auto& header = rows.front();
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw IngestError("[sponsor] dump header lacks column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t id_col = column("videoID");
  const std::size_t start_col = column("startTime");
  const std::size_t end_col = column("endTime");
  const std::size_t category_col = column("category");
  column("votes");  // required by the dump contract, value unused

  auto to_seconds = [](const std::string& s, double& out) {
    std::size_t used = 0;
    try {
      out = std::stod(s, &used);
    } catch (const std::exception&) {
      return false;
    }
    return used == s.size() && std::isfinite(out);
  };

  IngestResult result;
  std::unordered_set<std::string> seen;
  std::vector<SponsorSegment> population;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    ++result.stats.rows;
    if (row.size() != header.size()) {
      ++result.stats.malformed;
      continue;
    }
    SponsorSegment seg;
    seg.video_id = row[id_col];
    double start = 0.0, end = 0.0;
    if (seg.video_id.empty() || !to_seconds(row[start_col], start) ||
        !to_seconds(row[end_col], end) || start < 0.0 || end < start) {
      ++result.stats.malformed;
      continue;
    }
    if (row[category_col] != "sponsor") {
      ++result.stats.non_sponsor;
      continue;
    }
    if (!seen.insert(seg.video_id).second) {
      ++result.stats.duplicates;
      continue;
    }
    seg.start = start;
    seg.end = end;
    population.push_back(std::move(seg));
  }

  if (population.empty())
    throw IngestError("[sponsor] dump yielded no usable sponsor segments");

  Rng rng(seed);
  const auto picks =
      rng.sample_indices(population.size(), std::min(n_sample, population.size()));
  for (std::size_t idx : picks) result.segments.push_back(population[idx]);
  return result;
}

inline IngestResult ingest_sponsorblock_file(const std::filesystem::path& path,
                                             std::size_t n_sample, std::uint64_t seed) {
  return ingest_sponsorblock(read_file(path), n_sample, seed);
}

// --- Video metadata -------------------------------------------------------------

struct CaptionLine {
  double start = 0.0;
  double end = 0.0;
  std::string text;
};

struct VideoRecord {
  std::string video_id;
  std::string video_title;
  std::string channel_name;
  std::string channel_description;
  std::string fetch_timestamp;
  std::vector<CaptionLine> captions;
};

inline nlohmann::json video_record_to_json(const VideoRecord& r) {
  nlohmann::json captions = nlohmann::json::array();
  for (const auto& c : r.captions)
    captions.push_back({{"start", c.start}, {"end", c.end}, {"text", c.text}});
  return {{"video_id", r.video_id},
          {"video_title", r.video_title},
          {"channel_name", r.channel_name},
          {"channel_description", r.channel_description},
          {"fetch_timestamp", r.fetch_timestamp},
          {"captions", captions}};
}

inline VideoRecord video_record_from_json(const nlohmann::json& j) {
  VideoRecord r;
  r.video_id = j.at("video_id").get<std::string>();
  r.video_title = j.value("video_title", "");
  r.channel_name = j.value("channel_name", "");
  r.channel_description = j.value("channel_description", "");
  r.fetch_timestamp = j.value("fetch_timestamp", "");
  if (j.contains("captions"))
    for (const auto& c : j.at("captions"))
      r.captions.push_back({c.at("start").get<double>(), c.at("end").get<double>(),
                            c.at("text").get<std::string>()});
  return r;
}

// Caption lines are joined when they overlap the segment window at all; the
// upstream timing is coarse, so partial overlap counts as inclusion.
inline std::string transcript_for_window(const VideoRecord& record, double start,
                                         double end) {
  std::string out;
  for (const auto& line : record.captions) {
    if (!(line.start < end && line.end > start)) continue;
    if (!out.empty()) out += " ";
    out += line.text;
  }
  return out;
}

class MetadataSource {
 public:
  virtual ~MetadataSource() = default;
  virtual std::string id() const = 0;
  // nullopt: the video (or its transcript) is permanently unavailable.
  // TransportError: transient failure, the retrying wrapper may try again.
  virtual std::optional<VideoRecord> fetch(const std::string& video_id) = 0;
};

// Reads <video_id>.json records from a local directory; the offline fuel for
// tests and air-gapped runs.
class FixtureMetadataSource : public MetadataSource {
 public:
  explicit FixtureMetadataSource(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::string id() const override { return "fixtures:" + dir_.string(); }

  std::optional<VideoRecord> fetch(const std::string& video_id) override {
    const auto path = dir_ / (video_id + ".json");
    if (!std::filesystem::exists(path)) return std::nullopt;
    const nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded())
      throw InputError("[sponsor] fixture " + path.string() + " is not valid JSON");
    return video_record_from_json(j);
  }

 private:
  std::filesystem::path dir_;
};

// A metadata endpoint that serves canonical VideoRecord JSON over HTTP. The
// credential travels as a query parameter read from the environment, matching
// hosted video-data APIs.
struct MetadataApiConfig {
  std::string base_url;                           // scheme://host[:port]
  std::string path_template = "/videos/{id}.json";
  std::string api_key_env;                        // empty = unauthenticated
  std::string api_key_param = "key";
  double timeout_s = 30.0;

  void validate() const {
    if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0)
      throw ConfigError("[sponsor] metadata base_url must start with http(s)://");
    if (path_template.find("{id}") == std::string::npos)
      throw ConfigError("[sponsor] metadata path template must contain {id}");
    if (!(timeout_s > 0.0))
      throw ConfigError("[sponsor] metadata timeout must be positive");
  }
};

class HttpMetadataSource : public MetadataSource {
 public:
  explicit HttpMetadataSource(MetadataApiConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
  }

  std::string id() const override { return "http:" + cfg_.base_url; }

  std::optional<VideoRecord> fetch(const std::string& video_id) override {
    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_s));

    std::string path = replace_all(cfg_.path_template, "{id}", video_id);
    if (!cfg_.api_key_env.empty()) {
      const char* key = std::getenv(cfg_.api_key_env.c_str());
      if (!key || !*key)
        throw ConfigError("[sponsor] credential variable " + cfg_.api_key_env +
                          " is not set");
      path += (path.find('?') == std::string::npos ? "?" : "&") + cfg_.api_key_param +
              "=" + std::string(key);
    }

    const auto res = client.Get(path);
    if (!res)
      throw TransportError("[sponsor] connection to " + cfg_.base_url +
                           " failed: " + httplib::to_string(res.error()));
    if (res->status == 404) return std::nullopt;
    if (res->status == 401 || res->status == 403)
      throw ConfigError("[sponsor] metadata endpoint rejected credentials (HTTP " +
                        std::to_string(res->status) + ")");
    if (res->status == 429 || res->status >= 500)
      throw TransportError("[sponsor] metadata endpoint returned HTTP " +
                           std::to_string(res->status));
    if (res->status != 200)
      throw InputError("[sponsor] metadata endpoint returned HTTP " +
                       std::to_string(res->status) + ": " + res->body);
    const nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded())
      throw TransportError("[sponsor] metadata endpoint returned malformed JSON");
    return video_record_from_json(j);
  }

 private:
  MetadataApiConfig cfg_;
};

// Retries transient (quota/transport) failures with exponential backoff and
// deterministic jitter; anything else propagates immediately.
class RetryingMetadataSource : public MetadataSource {
 public:
  RetryingMetadataSource(std::shared_ptr<MetadataSource> inner, RetryPolicy policy,
                         std::uint64_t seed = 0)
      : inner_(std::move(inner)), policy_(policy), rng_(seed) {
    if (!inner_) throw ConfigError("[sponsor] retrying source needs an inner source");
    if (policy_.max_attempts < 1)
      throw ConfigError("[sponsor] retry policy needs at least one attempt");
  }

  std::string id() const override { return inner_->id(); }

  std::optional<VideoRecord> fetch(const std::string& video_id) override {
    double backoff = policy_.backoff_ms;
    std::string last_error;
    for (int attempt = 0; attempt < policy_.max_attempts; ++attempt) {
      if (attempt > 0 && backoff > 0.0) {
        const double jittered = backoff * (0.5 + rng_.real());
        std::this_thread::sleep_for(
            std::chrono::duration<double, std::milli>(jittered));
        backoff *= 2.0;
      }
      try {
        return inner_->fetch(video_id);
      } catch (const TransportError& e) {
        last_error = e.what();
      }
    }
    throw TransportError("[sponsor] metadata fetch for '" + video_id + "' failed after " +
                         std::to_string(policy_.max_attempts) +
                         " attempts; last error: " + last_error);
  }

 private:
  std::shared_ptr<MetadataSource> inner_;
  RetryPolicy policy_;
  Rng rng_;
};

// Persistent fetch-through cache. Every record (including "this video is
// gone" tombstones) lands on disk before it is returned, so a warm cache
// replays the pipeline with zero outbound calls.
class MetadataStore {
 public:
  MetadataStore(std::filesystem::path cache_dir, std::shared_ptr<MetadataSource> source)
      : cache_dir_(std::move(cache_dir)), source_(std::move(source)) {
    std::error_code ec;
    std::filesystem::create_directories(cache_dir_, ec);
    if (ec)
      throw IoError("[sponsor] cannot create metadata cache '" + cache_dir_.string() +
                    "': " + ec.message());
  }

  // nullopt: known-unavailable video. Throws UnavailableError when offline
  // (no source) with a cold cache.
  std::optional<VideoRecord> fetch(const std::string& video_id) {
    const auto path = cache_path(video_id);
    if (std::filesystem::exists(path)) {
      const nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
      if (j.is_discarded())
        throw CacheIntegrityError("[sponsor] corrupt metadata cache entry " +
                                  path.string());
      if (j.value("unavailable", false)) return std::nullopt;
      return video_record_from_json(j);
    }
    if (!source_)
      throw UnavailableError("[sponsor] offline run missing cached metadata for '" +
                             video_id + "'");
    ++network_fetches_;
    const auto record = source_->fetch(video_id);
    if (!record) {
      write_file_atomic(path, nlohmann::json{{"video_id", video_id},
                                             {"unavailable", true}}
                                  .dump(2) +
                                  "\n");
      return std::nullopt;
    }
    write_file_atomic(path, video_record_to_json(*record).dump(2) + "\n");
    return record;
  }

  bool cached(const std::string& video_id) const {
    return std::filesystem::exists(cache_path(video_id));
  }

  std::size_t network_fetches() const { return network_fetches_; }

 private:
  std::filesystem::path cache_path(const std::string& video_id) const {
    std::string stem;
    for (char c : video_id)
      stem.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_'
                         ? c
                         : '_');
    return cache_dir_ / (stem + ".json");
  }

  std::filesystem::path cache_dir_;
  std::shared_ptr<MetadataSource> source_;
  std::size_t network_fetches_ = 0;
};

// Fills title/channel/transcript for each segment from the store; segments
// whose video or windowed transcript cannot be obtained are marked
// unavailable (and thereby excluded from censoring and scoring).
inline void fetch_segment_metadata(std::vector<SponsorSegment>& segments,
                                   MetadataStore& store) {
  for (auto& seg : segments) {
    seg.validate();
    std::optional<VideoRecord> record;
    try {
      record = store.fetch(seg.video_id);
    } catch (const UnavailableError& e) {
      seg.unavailable = true;
      seg.note = e.what();
      continue;
    }
    if (!record) {
      seg.unavailable = true;
      seg.note = "video unavailable";
      continue;
    }
    seg.video_title = record->video_title;
    seg.channel_name = record->channel_name;
    seg.channel_description = record->channel_description;
    seg.fetch_timestamp = record->fetch_timestamp;
    seg.raw_transcript = transcript_for_window(*record, seg.start, seg.end);
    if (seg.raw_transcript.empty()) {
      seg.unavailable = true;
      seg.note = "no captions overlap the segment window";
    }
  }
}

// --- Brand-token heuristic -------------------------------------------------------

namespace detail {

inline const std::unordered_set<std::string>& common_capitalized_words() {
  static const std::unordered_set<std::string> words = {
      "a",       "about",  "after",   "all",    "also",    "an",      "and",
      "any",     "are",    "as",      "at",     "be",      "because", "been",
      "before",  "best",   "big",     "but",    "buy",     "by",      "can",
      "check",   "click",  "code",    "com",    "could",   "day",     "deal",
      "did",     "do",     "down",    "enjoy",  "episode", "every",   "first",
      "follow",  "for",    "free",    "from",   "get",     "give",    "go",
      "good",    "great",  "has",     "have",   "he",      "her",     "here",
      "hey",     "his",    "how",     "i",      "if",      "in",      "into",
      "is",      "it",     "its",     "join",   "just",    "like",    "link",
      "make",    "me",     "month",   "more",   "most",    "my",      "new",
      "no",      "not",    "now",     "of",     "off",     "offer",   "on",
      "one",     "online", "only",    "or",     "order",   "our",     "out",
      "over",    "please", "product", "promo",  "sale",    "save",    "see",
      "she",     "show",   "sign",    "so",     "some",    "sponsor", "start",
      "take",    "than",   "thank",   "thanks", "that",    "the",     "their",
      "them",    "then",   "there",   "they",   "this",    "to",      "today",
      "try",     "up",     "us",      "use",    "using",   "video",   "visit",
      "was",     "we",     "week",    "well",   "were",    "what",    "when",
      "where",   "which",  "while",   "who",    "will",    "with",    "would",
      "you",     "your"};
  return words;
}

}  // namespace detail

// Capitalized multi-letter tokens that look like names: not on the common
// list, and either mid-sentence or carrying interior capitals/digits (so
// ordinary sentence openers do not fire). Advisory only; the censor's output
// is never rewritten by this check.
inline std::vector<std::string> detect_brand_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::unordered_set<std::string> seen;
  bool sentence_start = true;
  std::size_t i = 0;
  while (i < text.size()) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isalnum(c) || c == '\'') {
      std::size_t j = i;
      while (j < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '\''))
        ++j;
      const std::string word = text.substr(i, j - i);
      bool interior_marked = false;
      for (std::size_t k = 1; k < word.size(); ++k)
        if (std::isupper(static_cast<unsigned char>(word[k])) ||
            std::isdigit(static_cast<unsigned char>(word[k])))
          interior_marked = true;
      const bool capitalized =
          std::isupper(static_cast<unsigned char>(word[0])) && word.size() >= 2;
      if (capitalized && !detail::common_capitalized_words().count(lowercase(word)) &&
          (!sentence_start || interior_marked) && seen.insert(word).second)
        tokens.push_back(word);
      sentence_start = false;
      i = j;
    } else {
      if (c == '.' || c == '!' || c == '?' || c == '\n') sentence_start = true;
      ++i;
    }
  }
  return tokens;
}

}  // namespace vigil
