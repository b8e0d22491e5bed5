#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace fecsynth::gw {

struct CompletionRequest {
    std::string model_id;
    std::optional<std::string> system_text;
    std::string user_text;
    double temperature = 0.0;
    int max_output_tokens = 1024;
};

struct CompletionResponse {
    std::string text;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    bool from_cache = false;
    std::chrono::milliseconds latency{0};
};

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_backoff{1000};
    double backoff_multiplier = 2.0;
    std::set<int> retryable_statuses{429, 500, 502, 503};
};

class Clock {
public:
    virtual ~Clock() = default;
    virtual std::chrono::steady_clock::time_point now() = 0;
    virtual void sleep_for(std::chrono::milliseconds d) = 0;
};

class SystemClock : public Clock {
public:
    std::chrono::steady_clock::time_point now() override;
    void sleep_for(std::chrono::milliseconds d) override;
};

/// Deterministic clock for tests: time advances only through sleep_for, and
/// every sleep is recorded.
class VirtualClock : public Clock {
public:
    std::chrono::steady_clock::time_point now() override;
    void sleep_for(std::chrono::milliseconds d) override;
    std::vector<std::chrono::milliseconds> sleeps() const;

private:
    mutable std::mutex mu_;
    std::chrono::steady_clock::time_point now_{};
    std::vector<std::chrono::milliseconds> sleeps_;
};

/// A retryable wire-level failure (HTTP status or, with status 0, a
/// transport-level failure before any response arrived). Internal to the
/// gateway/backends; complete() surfaces TransportError/AuthError instead.
struct WireStatusError {
    int status = 0;
    std::string detail;
};

struct BackendReply {
    std::string text;
    long prompt_tokens = -1; // -1: backend did not report usage
    long completion_tokens = -1;
};

class Backend {
public:
    virtual ~Backend() = default;
    /// Returns a reply or throws WireStatusError / a GatewayError subtype.
    virtual BackendReply complete(const CompletionRequest& req) = 0;
    virtual std::string name() const = 0;
};

/// Scripted backend reading fixtures from a directory. A request's fixture
/// file is named by its cache key: `<key>.txt` holds raw reply text and
/// `<key>.json` holds either one entry or an array of entries consumed in
/// sequence (the last entry repeats once exhausted). An entry is
/// {"text": ..., "prompt_tokens": ..., "completion_tokens": ...} or
/// {"status": <code>} for a scripted wire failure. Missing fixture files are
/// hard FixtureMiss errors.
class MockBackend : public Backend {
public:
    explicit MockBackend(std::filesystem::path fixtures_dir);
    BackendReply complete(const CompletionRequest& req) override;
    std::string name() const override { return "mock"; }

    /// Number of complete() invocations that reached this backend.
    long calls() const;

private:
    std::filesystem::path dir_;
    mutable std::mutex mu_;
    std::map<std::string, size_t> positions_;
    long calls_ = 0;
};

/// OpenAI-compatible chat-completions client.
class HttpBackend : public Backend {
public:
    HttpBackend(std::string base_url, std::string api_key, std::string model_hint = "");
    BackendReply complete(const CompletionRequest& req) override;
    std::string name() const override { return "http"; }

private:
    std::string base_url_;
    std::string api_key_;
};

/// One JSON file per key under the cache directory; writes go through a temp
/// file plus rename so concurrent readers never observe partial records.
class DiskCache {
public:
    explicit DiskCache(std::filesystem::path dir);
    std::optional<CompletionResponse> get(const std::string& key) const;
    void put(const std::string& key, const CompletionResponse& resp) const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

/// Token bucket admitting a configurable number of requests per minute;
/// 0 disables limiting. Capacity is one second's worth of tokens (at least
/// one), so sustained callers are paced at the configured rate.
class RateLimiter {
public:
    RateLimiter(double requests_per_minute, Clock& clock);
    void acquire();

private:
    double rate_per_ms_;
    double capacity_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    Clock& clock_;
    std::mutex mu_;
};

struct ModelUsage {
    long requests = 0;
    long cache_hits = 0;
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

using UsageReport = std::map<std::string, ModelUsage>;

struct GatewayConfig {
    RetryPolicy retry;
    double requests_per_minute = 0.0;
    std::optional<std::filesystem::path> cache_dir;
};

struct CallOptions {
    /// Skip cache reads for this call (the response is still written through),
    /// so deliberate re-prompts reach the backend.
    bool bypass_cache = false;
};

class Gateway {
public:
    Gateway(std::shared_ptr<Backend> backend, GatewayConfig cfg,
            std::shared_ptr<Clock> clock = std::make_shared<SystemClock>());

    CompletionResponse complete(const CompletionRequest& req, const CallOptions& opts = {});
    UsageReport usage_report() const;

    /// SHA-256 hex digest over a length-prefixed canonical serialization of
    /// every request field; equal requests yield equal keys.
    static std::string cache_key(const CompletionRequest& req);

private:
    std::shared_ptr<Backend> backend_;
    GatewayConfig cfg_;
    std::shared_ptr<Clock> clock_;
    std::optional<DiskCache> disk_;
    RateLimiter limiter_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, CompletionResponse> mem_cache_;
    UsageReport usage_;
};

/// Deterministic fallback when a backend reports no usage numbers.
long approx_token_count(std::string_view s);

} // namespace fecsynth::gw
