#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "fecsynth/gateway.hpp"

#include "fecsynth/errors.hpp"
#include "fecsynth/text.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <thread>

namespace fecsynth::gw {

namespace {

std::string length_prefixed(std::string_view s) {
    return std::to_string(s.size()) + ":" + std::string(s);
}

nlohmann::json response_to_json(const CompletionResponse& resp) {
    return nlohmann::json{{"text", resp.text},
                          {"prompt_tokens", resp.prompt_tokens},
                          {"completion_tokens", resp.completion_tokens}};
}

std::optional<CompletionResponse> response_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) return std::nullopt;
    CompletionResponse resp;
    resp.text = j["text"].get<std::string>();
    resp.prompt_tokens = j.value("prompt_tokens", 0L);
    resp.completion_tokens = j.value("completion_tokens", 0L);
    resp.from_cache = true;
    return resp;
}

} // namespace

long approx_token_count(std::string_view s) {
    return static_cast<long>(text::whitespace_tokens(s).size());
}

std::chrono::steady_clock::time_point SystemClock::now() {
    return std::chrono::steady_clock::now();
}

void SystemClock::sleep_for(std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
}

std::chrono::steady_clock::time_point VirtualClock::now() {
    std::lock_guard<std::mutex> lock(mu_);
    return now_;
}

void VirtualClock::sleep_for(std::chrono::milliseconds d) {
    std::lock_guard<std::mutex> lock(mu_);
    now_ += d;
    sleeps_.push_back(d);
}

std::vector<std::chrono::milliseconds> VirtualClock::sleeps() const {
    std::lock_guard<std::mutex> lock(mu_);
    return sleeps_;
}

MockBackend::MockBackend(std::filesystem::path fixtures_dir) : dir_(std::move(fixtures_dir)) {}

long MockBackend::calls() const {
    std::lock_guard<std::mutex> lock(mu_);
    return calls_;
}

BackendReply MockBackend::complete(const CompletionRequest& req) {
    std::string key = Gateway::cache_key(req);
    std::filesystem::path json_path = dir_ / (key + ".json");
    std::filesystem::path txt_path = dir_ / (key + ".txt");

    size_t position = 0;
    {
        std::lock_guard<std::mutex> lock(mu_);
        ++calls_;
        position = positions_[key]++;
    }

    nlohmann::json entry;
    if (std::filesystem::exists(json_path)) {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(text::read_file(json_path));
        } catch (const nlohmann::json::exception& e) {
            throw FixtureMiss("unparseable fixture " + json_path.string() + ": " + e.what());
        }
        if (doc.is_array()) {
            if (doc.empty()) throw FixtureMiss("empty fixture array: " + json_path.string());
            entry = doc[std::min(position, doc.size() - 1)];
        } else {
            entry = doc;
        }
    } else if (std::filesystem::exists(txt_path)) {
        entry = nlohmann::json{{"text", text::read_file(txt_path)}};
    } else {
        std::string head = std::string(std::string_view(req.user_text).substr(0, 80));
        throw FixtureMiss("no fixture for request key " + key + " (model " + req.model_id +
                          ", prompt head: " + head + ")");
    }

    if (entry.contains("status")) {
        throw WireStatusError{entry["status"].get<int>(),
                              "scripted status from fixture " + key};
    }
    if (!entry.contains("text") || !entry["text"].is_string()) {
        throw FixtureMiss("fixture entry for key " + key + " has no text field");
    }
    BackendReply reply;
    reply.text = entry["text"].get<std::string>();
    reply.prompt_tokens = entry.value("prompt_tokens", -1L);
    reply.completion_tokens = entry.value("completion_tokens", -1L);
    return reply;
}

HttpBackend::HttpBackend(std::string base_url, std::string api_key, std::string)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)) {}

BackendReply HttpBackend::complete(const CompletionRequest& req) {
    std::string origin = base_url_;
    std::string path = "/v1/chat/completions";
    size_t scheme_end = origin.find("://");
    size_t path_start = origin.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start != std::string::npos) {
        std::string prefix = origin.substr(path_start);
        origin = origin.substr(0, path_start);
        if (prefix != "/") path = prefix;
    }

    nlohmann::json body;
    body["model"] = req.model_id;
    nlohmann::json messages = nlohmann::json::array();
    if (req.system_text) {
        messages.push_back({{"role", "system"}, {"content", *req.system_text}});
    }
    messages.push_back({{"role", "user"}, {"content", req.user_text}});
    body["messages"] = std::move(messages);
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_output_tokens;

    httplib::Client client(origin);
    client.set_connection_timeout(30);
    client.set_read_timeout(300);
    httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};

    httplib::Result res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        throw WireStatusError{0, "transport failure: " + httplib::to_string(res.error())};
    }
    if (res->status == 401 || res->status == 403) {
        throw AuthError("backend rejected credentials (status " + std::to_string(res->status) +
                        ")");
    }
    if (res->status != 200) {
        throw WireStatusError{res->status,
                              std::string(std::string_view(res->body).substr(0, 200))};
    }

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("malformed backend response: ") + e.what());
    }
    if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty() ||
        !doc["choices"][0].contains("message") ||
        !doc["choices"][0]["message"].contains("content")) {
        throw TransportError("backend response missing choices[0].message.content");
    }
    BackendReply reply;
    const nlohmann::json& content = doc["choices"][0]["message"]["content"];
    reply.text = content.is_null() ? "" : content.get<std::string>();
    if (doc.contains("usage") && doc["usage"].is_object()) {
        reply.prompt_tokens = doc["usage"].value("prompt_tokens", -1L);
        reply.completion_tokens = doc["usage"].value("completion_tokens", -1L);
    }
    return reply;
}

DiskCache::DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::optional<CompletionResponse> DiskCache::get(const std::string& key) const {
    std::filesystem::path path = dir_ / (key + ".json");
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
        return response_from_json(nlohmann::json::parse(text::read_file(path)));
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void DiskCache::put(const std::string& key, const CompletionResponse& resp) const {
    text::write_file_atomic(dir_ / (key + ".json"), response_to_json(resp).dump());
}

RateLimiter::RateLimiter(double requests_per_minute, Clock& clock)
    : rate_per_ms_(requests_per_minute / 60000.0),
      capacity_(std::max(1.0, requests_per_minute / 60.0)),
      tokens_(capacity_),
      last_(clock.now()),
      clock_(clock) {
    if (requests_per_minute <= 0.0) rate_per_ms_ = 0.0;
}

void RateLimiter::acquire() {
    if (rate_per_ms_ <= 0.0) return;
    std::lock_guard<std::mutex> lock(mu_);
    for (;;) {
        auto now = clock_.now();
        double elapsed_ms =
            static_cast<double>(std::chrono::duration_cast<std::chrono::milliseconds>(now - last_)
                                    .count());
        last_ = now;
        tokens_ = std::min(capacity_, tokens_ + elapsed_ms * rate_per_ms_);
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        double wait_ms = std::ceil((1.0 - tokens_) / rate_per_ms_);
        clock_.sleep_for(std::chrono::milliseconds(static_cast<long>(wait_ms)));
    }
}

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayConfig cfg, std::shared_ptr<Clock> clock)
    : backend_(std::move(backend)),
      cfg_(std::move(cfg)),
      clock_(std::move(clock)),
      limiter_(cfg_.requests_per_minute, *clock_) {
    if (cfg_.cache_dir) disk_.emplace(*cfg_.cache_dir);
}

std::string Gateway::cache_key(const CompletionRequest& req) {
    char temp_buf[64];
    std::snprintf(temp_buf, sizeof(temp_buf), "%.17g", req.temperature);
    std::string canonical = "v1";
    canonical += "|model=" + length_prefixed(req.model_id);
    canonical += "|system=";
    canonical += req.system_text ? "1" + length_prefixed(*req.system_text) : std::string("0");
    canonical += "|user=" + length_prefixed(req.user_text);
    canonical += "|temperature=" + length_prefixed(temp_buf);
    canonical += "|max_output_tokens=" + length_prefixed(std::to_string(req.max_output_tokens));
    return text::sha256_hex(canonical);
}

CompletionResponse Gateway::complete(const CompletionRequest& req, const CallOptions& opts) {
    if (req.user_text.empty()) throw ValidationError("completion request has empty user_text");
    if (req.temperature < 0.0 || req.temperature > 2.0) {
        throw ValidationError("temperature must lie in [0, 2]");
    }
    if (req.max_output_tokens <= 0) throw ValidationError("max_output_tokens must be positive");

    std::string key = cache_key(req);
    {
        std::lock_guard<std::mutex> lock(mu_);
        ++usage_[req.model_id].requests;
        if (!opts.bypass_cache) {
            auto it = mem_cache_.find(key);
            if (it != mem_cache_.end()) {
                ++usage_[req.model_id].cache_hits;
                CompletionResponse resp = it->second;
                resp.from_cache = true;
                resp.latency = std::chrono::milliseconds(0);
                return resp;
            }
        }
    }
    if (!opts.bypass_cache && disk_) {
        if (std::optional<CompletionResponse> hit = disk_->get(key)) {
            std::lock_guard<std::mutex> lock(mu_);
            ++usage_[req.model_id].cache_hits;
            mem_cache_[key] = *hit;
            hit->from_cache = true;
            hit->latency = std::chrono::milliseconds(0);
            return *hit;
        }
    }

    auto start = clock_->now();
    int attempt = 1;
    for (;;) {
        limiter_.acquire();
        try {
            BackendReply reply = backend_->complete(req);
            if (reply.text.empty()) {
                throw BackendRefusal("backend returned empty output for model " + req.model_id);
            }
            CompletionResponse resp;
            resp.text = std::move(reply.text);
            resp.prompt_tokens =
                reply.prompt_tokens >= 0
                    ? reply.prompt_tokens
                    : approx_token_count(req.user_text) +
                          (req.system_text ? approx_token_count(*req.system_text) : 0);
            resp.completion_tokens =
                reply.completion_tokens >= 0 ? reply.completion_tokens
                                             : approx_token_count(resp.text);
            resp.from_cache = false;
            resp.latency =
                std::chrono::duration_cast<std::chrono::milliseconds>(clock_->now() - start);
            {
                std::lock_guard<std::mutex> lock(mu_);
                ModelUsage& usage = usage_[req.model_id];
                usage.prompt_tokens += resp.prompt_tokens;
                usage.completion_tokens += resp.completion_tokens;
                mem_cache_[key] = resp;
            }
            if (disk_) disk_->put(key, resp);
            return resp;
        } catch (const WireStatusError& wire) {
            if (wire.status == 401 || wire.status == 403) {
                throw AuthError("backend rejected credentials (status " +
                                std::to_string(wire.status) + ")");
            }
            bool retryable =
                wire.status == 0 || cfg_.retry.retryable_statuses.count(wire.status) > 0;
            if (!retryable) {
                throw TransportError("non-retryable backend status " +
                                     std::to_string(wire.status) + ": " + wire.detail);
            }
            if (attempt >= cfg_.retry.max_attempts) {
                throw TransportError("retries exhausted after " + std::to_string(attempt) +
                                     " attempts (last status " + std::to_string(wire.status) +
                                     ")");
            }
            double factor = std::pow(cfg_.retry.backoff_multiplier, attempt - 1);
            auto backoff = std::chrono::milliseconds(
                std::llround(static_cast<double>(cfg_.retry.base_backoff.count()) * factor));
            clock_->sleep_for(backoff);
            ++attempt;
        }
    }
}

UsageReport Gateway::usage_report() const {
    std::lock_guard<std::mutex> lock(mu_);
    return usage_;
}

} // namespace fecsynth::gw
