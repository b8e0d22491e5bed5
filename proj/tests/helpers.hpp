#pragma once

#include "fecsynth/dataset.hpp"
#include "fecsynth/decomposer.hpp"
#include "fecsynth/filter_chain.hpp"
#include "fecsynth/gateway.hpp"
#include "fecsynth/injector.hpp"
#include "fecsynth/judge.hpp"
#include "fecsynth/program_dsl.hpp"
#include "fecsynth/prompts.hpp"
#include "fecsynth/text.hpp"

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace testutil {

namespace fs = std::filesystem;
using namespace fecsynth;

inline fs::path unique_temp_dir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    auto dir = fs::temp_directory_path() /
               ("fecsynth-" + tag + "-" + std::to_string(counter.fetch_add(1)) + "-" +
                std::to_string(std::random_device{}()));
    fs::create_directories(dir);
    return dir;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) : path(unique_temp_dir(tag)) {}
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline const prompts::PromptSet& prompt_set() {
    static prompts::PromptSet set = prompts::PromptSet::load(prompts::default_prompt_dir());
    return set;
}

// Request builders mirroring what each stage sends, so fixtures can be keyed.

inline gw::CompletionRequest decompose_request(const std::string& claim,
                                               const decomposer::DecomposerConfig& cfg = {}) {
    gw::CompletionRequest req;
    req.model_id = cfg.model_id;
    req.user_text = decomposer::build_decomposition_prompt(prompt_set(), claim);
    req.temperature = cfg.temperature;
    req.max_output_tokens = cfg.max_output_tokens;
    return req;
}

inline gw::CompletionRequest inject_request(const std::string& claim,
                                            const dsl::ReasoningProgram& program,
                                            const injector::InjectorConfig& cfg = {}) {
    gw::CompletionRequest req;
    req.model_id = cfg.model_id;
    req.user_text = injector::build_injection_prompt(prompt_set(), claim, program);
    req.temperature = cfg.temperature;
    req.max_output_tokens = cfg.max_output_tokens;
    return req;
}

inline gw::CompletionRequest filter_request(std::string user_text,
                                            const filter::FilterConfig& cfg) {
    gw::CompletionRequest req;
    req.model_id = cfg.model_id;
    req.user_text = std::move(user_text);
    req.temperature = cfg.temperature;
    req.max_output_tokens = cfg.max_output_tokens;
    return req;
}

inline gw::CompletionRequest hop_request(std::string_view candidate,
                                         const filter::FilterConfig& cfg = {}) {
    return filter_request(prompts::substitute(prompt_set().hop_estimator, "[[claim]]", candidate),
                          cfg);
}

inline gw::CompletionRequest quality_request(std::string_view candidate,
                                             const filter::FilterConfig& cfg = {}) {
    return filter_request(
        prompts::substitute(prompt_set().quality_validator, "[[claim]]", candidate), cfg);
}

inline gw::CompletionRequest entailment_request(std::string_view candidate,
                                                const std::vector<std::string>& evidence,
                                                const filter::FilterConfig& cfg = {}) {
    return filter_request(
        prompts::substitute_all(prompt_set().entailment,
                                {{"[[claim]]", candidate},
                                 {"[[evidence]]", dataset::join_evidence(evidence)}}),
        cfg);
}

inline gw::CompletionRequest judge_request(std::string_view mutated, std::string_view evidence,
                                           std::string_view corrected,
                                           const judge::JudgeConfig& cfg = {}) {
    gw::CompletionRequest req;
    req.model_id = cfg.model_id;
    req.user_text = prompts::substitute_all(prompt_set().judge, {{"[[mutated]]", mutated},
                                                                 {"[[evidence]]", evidence},
                                                                 {"[[output_text]]", corrected}});
    req.temperature = cfg.temperature;
    req.max_output_tokens = cfg.max_output_tokens;
    return req;
}

inline gw::CompletionRequest fluency_request(std::string_view corrected,
                                             const judge::JudgeConfig& cfg = {}) {
    gw::CompletionRequest req;
    req.model_id = cfg.model_id;
    req.user_text = prompts::substitute(prompt_set().quality_validator, "[[claim]]", corrected);
    req.temperature = cfg.temperature;
    req.max_output_tokens = cfg.max_output_tokens;
    return req;
}

inline void fixture_text(const fs::path& dir, const gw::CompletionRequest& req,
                         std::string_view reply) {
    text::write_file_atomic(dir / (gw::Gateway::cache_key(req) + ".txt"), std::string(reply));
}

inline void fixture_json(const fs::path& dir, const gw::CompletionRequest& req,
                         const nlohmann::json& entries) {
    text::write_file_atomic(dir / (gw::Gateway::cache_key(req) + ".json"), entries.dump());
}

struct MockRig {
    std::shared_ptr<gw::MockBackend> backend;
    std::unique_ptr<gw::Gateway> gateway;
};

inline MockRig mock_gateway(const fs::path& fixtures, gw::GatewayConfig cfg = {}) {
    MockRig rig;
    rig.backend = std::make_shared<gw::MockBackend>(fixtures);
    rig.gateway = std::make_unique<gw::Gateway>(rig.backend, std::move(cfg));
    return rig;
}

} // namespace testutil
