#pragma once

// Provider-agnostic gateway: a backend registry, a persistent
// content-addressed record/replay cache, bounded retries, and per-backend
// request budgets. The cache is the source of determinism: with a warm cache
// an experiment re-runs byte-identically with zero outbound calls.

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vigil/errors.hpp"
#include "vigil/gateway/chat.hpp"
#include "vigil/util/io.hpp"

namespace vigil {

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  // Returns the raw completion text; may fill provider metadata.
  virtual std::string complete(const ChatRequest& request, nlohmann::json& meta) = 0;
  // Remote backends get probe tags stripped and participate in retry logic.
  virtual bool is_remote() const { return false; }
};

struct BackendLimits {
  int max_concurrent = 4;
  int requests_per_minute = 0;  // 0 = unlimited
};

struct RetryPolicy {
  int max_attempts = 3;
  double backoff_ms = 250.0;  // doubled per attempt; tests set 0
};

class Gateway {
 public:
  explicit Gateway(std::filesystem::path cache_dir, bool offline = false)
      : cache_dir_(std::move(cache_dir)), offline_(offline) {
    std::error_code ec;
    std::filesystem::create_directories(cache_dir_, ec);
    if (ec)
      throw IoError("[llm-gateway] cannot create cache directory '" + cache_dir_.string() +
                    "': " + ec.message());
  }

  void register_backend(std::shared_ptr<Backend> backend, BackendLimits limits = {}) {
    std::lock_guard<std::mutex> lock(mu_);
    const std::string id = backend->id();
    if (backends_.count(id))
      throw ConfigError("[llm-gateway] backend '" + id + "' registered twice");
    backends_[id] = {std::move(backend), limits, 0, {}};
  }

  bool has_backend(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mu_);
    return backends_.count(id) > 0;
  }

  RetryPolicy retry;
  // Budget window; only tests shrink it.
  std::chrono::milliseconds budget_window{60000};

  ChatRecord complete(const ChatRequest& request) {
    request.validate();
    const std::string hash = request_hash(request);
    if (auto cached = load_record(request, hash)) return *cached;
    if (offline_)
      throw UnavailableError("[llm-gateway] offline run missing cached record " + hash +
                             " for backend '" + request.backend_id + "'");

    Entry* entry = nullptr;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = backends_.find(request.backend_id);
      if (it == backends_.end())
        throw LookupError("[llm-gateway] no backend registered as '" + request.backend_id +
                          "'");
      entry = &it->second;
    }

    acquire_slot(*entry);
    ChatRecord record;
    try {
      record = call_with_retries(*entry, request, hash);
    } catch (...) {
      release_slot(*entry);
      throw;
    }
    release_slot(*entry);
    store_record(request, record);
    return record;
  }

  std::filesystem::path cache_path(const std::string& hash) const {
    return cache_dir_ / (hash + ".json");
  }

  // Cache maintenance used by the CLI: returns (record count, total bytes).
  std::pair<std::size_t, std::uintmax_t> cache_stats() const {
    std::size_t n = 0;
    std::uintmax_t bytes = 0;
    for (const auto& e : std::filesystem::directory_iterator(cache_dir_)) {
      if (e.path().extension() != ".json") continue;
      ++n;
      bytes += e.file_size();
    }
    return {n, bytes};
  }

  std::size_t clear_cache() {
    std::lock_guard<std::mutex> lock(cache_mu_);
    std::size_t n = 0;
    for (const auto& e : std::filesystem::directory_iterator(cache_dir_)) {
      if (e.path().extension() != ".json") continue;
      std::filesystem::remove(e.path());
      ++n;
    }
    return n;
  }

  // Re-hashes every record and verifies it against its filename and stored
  // request; returns the number of records checked.
  std::size_t verify_cache() const {
    std::size_t n = 0;
    for (const auto& e : std::filesystem::directory_iterator(cache_dir_)) {
      if (e.path().extension() != ".json") continue;
      const nlohmann::json j = parse_record_file(e.path());
      const ChatRequest req = request_from_canonical_json(j.at("request"));
      const std::string recomputed = request_hash(req);
      if (recomputed != j.at("hash").get<std::string>() ||
          e.path().stem().string() != recomputed)
        throw CacheIntegrityError("[llm-gateway] cache record " + e.path().string() +
                                  " does not match its content hash");
      ++n;
    }
    return n;
  }

 private:
  struct Entry {
    std::shared_ptr<Backend> backend;
    BackendLimits limits;
    int in_flight = 0;
    std::deque<std::chrono::steady_clock::time_point> recent;
  };

  static nlohmann::json parse_record_file(const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("hash") || !j.contains("request") ||
        !j.contains("completion"))
      throw CacheIntegrityError("[llm-gateway] cache record " + path.string() +
                                " is corrupt");
    return j;
  }

  std::optional<ChatRecord> load_record(const ChatRequest& request,
                                        const std::string& hash) const {
    const auto path = cache_path(hash);
    {
      std::lock_guard<std::mutex> lock(cache_mu_);
      if (!std::filesystem::exists(path)) return std::nullopt;
    }
    const nlohmann::json j = parse_record_file(path);
    // Stored-request verification: a hash collision or edited record must
    // surface as an integrity error, never as silently wrong data.
    if (j.at("hash").get<std::string>() != hash ||
        j.at("request") != request_to_canonical_json(request))
      throw CacheIntegrityError("[llm-gateway] cache record " + path.string() +
                                " does not match the request that hashed to it");
    ChatRecord rec;
    rec.request_hash = hash;
    rec.completion = j.at("completion").get<std::string>();
    rec.latency_ms = j.value("latency_ms", 0.0);
    rec.provider_meta = j.value("meta", nlohmann::json::object());
    rec.cache_hit = true;
    return rec;
  }

  void store_record(const ChatRequest& request, const ChatRecord& record) {
    nlohmann::json j = {{"hash", record.request_hash},
                        {"request", request_to_canonical_json(request)},
                        {"completion", record.completion},
                        {"latency_ms", record.latency_ms},
                        {"meta", record.provider_meta}};
    std::lock_guard<std::mutex> lock(cache_mu_);
    write_file_atomic(cache_path(record.request_hash), j.dump(2) + "\n");
  }

  void acquire_slot(Entry& entry) {
    std::unique_lock<std::mutex> lock(mu_);
    slot_cv_.wait(lock, [&] {
      return entry.in_flight < entry.limits.max_concurrent;
    });
    ++entry.in_flight;
    if (entry.limits.requests_per_minute > 0) {
      for (;;) {
        const auto now = std::chrono::steady_clock::now();
        while (!entry.recent.empty() && now - entry.recent.front() > budget_window)
          entry.recent.pop_front();
        if (static_cast<int>(entry.recent.size()) < entry.limits.requests_per_minute) {
          entry.recent.push_back(now);
          break;
        }
        const auto wake = entry.recent.front() + budget_window;
        lock.unlock();
        std::this_thread::sleep_until(wake);
        lock.lock();
      }
    }
  }

  void release_slot(Entry& entry) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      --entry.in_flight;
    }
    slot_cv_.notify_all();
  }

  ChatRecord call_with_retries(Entry& entry, const ChatRequest& request,
                               const std::string& hash) {
    const ChatRequest outbound =
        entry.backend->is_remote() ? strip_probe_tags(request) : request;
    std::string last_error;
    double backoff = retry.backoff_ms;
    const int attempts = entry.backend->is_remote() ? retry.max_attempts : 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
      if (attempt > 0 && backoff > 0) {
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(backoff));
        backoff *= 2;
      }
      try {
        ChatRecord rec;
        rec.request_hash = hash;
        const auto t0 = std::chrono::steady_clock::now();
        rec.completion = entry.backend->complete(outbound, rec.provider_meta);
        rec.latency_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
        rec.cache_hit = false;
        return rec;
      } catch (const TransportError& e) {
        last_error = e.what();
      }
    }
    throw TransportError("[llm-gateway] backend '" + request.backend_id + "' failed after " +
                         std::to_string(attempts) + " attempts; last error: " + last_error);
  }

  std::filesystem::path cache_dir_;
  bool offline_ = false;
  mutable std::mutex mu_;
  mutable std::mutex cache_mu_;
  std::condition_variable slot_cv_;
  std::map<std::string, Entry> backends_;
};

// Always replies with the same text. Doubles as the constant(k) agent and as
// a scripted stand-in in tests.
class ConstantBackend : public Backend {
 public:
  ConstantBackend(std::string id, std::string reply)
      : id_(std::move(id)), reply_(std::move(reply)) {}
  std::string id() const override { return id_; }
  std::string complete(const ChatRequest&, nlohmann::json&) override { return reply_; }

 private:
  std::string id_;
  std::string reply_;
};

}  // namespace vigil
