#pragma once

// Uniform completion interface: remote HTTP providers configured
// declaratively, plus a deterministic local mock for tests and offline
// runs. Shared rate limiting and a content-addressed response cache.

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "repairkit/detail/sha256.hpp"
#include "repairkit/errors.hpp"
#include "repairkit/prompt.hpp"

namespace repairkit {

struct GenerationConfig {
    double temperature = 0.0;
    double top_p = 1.0;
    int num_samples = 1;
    int max_tokens = 256;
    std::vector<std::string> stop_words;
    std::uint64_t seed = 0;  // mock engines only

    void validate() const {
        if (temperature < 0.0 || temperature > 1.0 || top_p < 0.0 ||
            top_p > 1.0 || num_samples < 1 || max_tokens < 1)
            throw Error("generation config out of bounds");
    }
};

struct Suggestion {
    std::string text;
    std::optional<double> mean_token_logprob;
    double confidence = 0.0;
    std::string engine_id;
    GenerationConfig config;
};

struct RateLimit {
    int tokens_per_interval = 150000;
    std::chrono::milliseconds interval{60000};
};

// Stable content hash over everything that influences a completion.
inline std::string cache_key(const RenderedPrompt& prompt,
                             const GenerationConfig& config,
                             const std::string& engine_id) {
    nlohmann::ordered_json j;
    j["engine_id"] = engine_id;
    j["prompt"] = prompt.text;
    j["temperature"] = config.temperature;
    j["top_p"] = config.top_p;
    j["num_samples"] = config.num_samples;
    j["max_tokens"] = config.max_tokens;
    j["stop_words"] = config.stop_words;
    j["seed"] = config.seed;
    return detail::sha256_hex(j.dump());
}

// Injectable clock so the limiter is testable without real sleeping.
struct Clock {
    virtual ~Clock() = default;
    virtual std::chrono::steady_clock::time_point now() = 0;
    virtual void sleep_for(std::chrono::milliseconds d) = 0;
};

struct SteadyClock final : Clock {
    std::chrono::steady_clock::time_point now() override {
        return std::chrono::steady_clock::now();
    }
    void sleep_for(std::chrono::milliseconds d) override {
        std::this_thread::sleep_for(d);
    }
};

// Sliding-window token accounting: admits a request only once the tokens
// already spent inside the trailing interval leave room for it.
class RateLimiter {
  public:
    RateLimiter(RateLimit limit, std::shared_ptr<Clock> clock)
        : limit_(limit), clock_(std::move(clock)) {}

    void acquire(int tokens) {
        if (tokens > limit_.tokens_per_interval)
            throw BudgetExceeded("request alone exceeds the rate limit");
        for (;;) {
            std::chrono::milliseconds wait{0};
            {
                std::lock_guard lock(mu_);
                auto now = clock_->now();
                evict(now);
                if (spent_ + tokens <= limit_.tokens_per_interval) {
                    spent_ += tokens;
                    window_.push_back({now, tokens});
                    return;
                }
                auto oldest = window_.front().when;
                wait = std::chrono::duration_cast<std::chrono::milliseconds>(
                           oldest + limit_.interval - now) +
                       std::chrono::milliseconds(1);
            }
            clock_->sleep_for(std::max(wait, std::chrono::milliseconds(1)));
        }
    }

    int tokens_in_window() {
        std::lock_guard lock(mu_);
        evict(clock_->now());
        return spent_;
    }

  private:
    struct Entry {
        std::chrono::steady_clock::time_point when;
        int tokens;
    };

    void evict(std::chrono::steady_clock::time_point now) {
        while (!window_.empty() &&
               window_.front().when + limit_.interval <= now) {
            spent_ -= window_.front().tokens;
            window_.pop_front();
        }
    }

    RateLimit limit_;
    std::shared_ptr<Clock> clock_;
    std::mutex mu_;
    std::deque<Entry> window_;
    int spent_ = 0;
};

// One file per cache key: a self-describing JSON header line, then the
// JSON payload. Writers publish atomically via rename.
class ResponseCache {
  public:
    explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    std::optional<std::vector<Suggestion>> lookup(const std::string& key) const {
        auto p = dir_ / (key + ".rec");
        std::ifstream in(p, std::ios::binary);
        if (!in) return std::nullopt;
        std::string header;
        std::getline(in, header);
        std::ostringstream body;
        body << in.rdbuf();
        try {
            auto hdr = nlohmann::json::parse(header);
            auto payload = nlohmann::json::parse(body.str());
            std::vector<Suggestion> out;
            for (const auto& sj : payload) {
                Suggestion s;
                s.text = sj.at("text").get<std::string>();
                s.confidence = sj.at("confidence").get<double>();
                if (sj.contains("mean_token_logprob") &&
                    !sj["mean_token_logprob"].is_null())
                    s.mean_token_logprob =
                        sj["mean_token_logprob"].get<double>();
                s.engine_id = hdr.value("engine_id", std::string());
                out.push_back(std::move(s));
            }
            return out;
        } catch (const nlohmann::json::exception&) {
            return std::nullopt;  // partial or corrupt entry: treat as miss
        }
    }

    void store(const std::string& key, const std::string& engine_id,
               const std::vector<Suggestion>& suggestions) {
        std::lock_guard lock(write_mu_);
        nlohmann::ordered_json hdr;
        hdr["format"] = "repairkit-cache-v1";
        hdr["engine_id"] = engine_id;
        hdr["key"] = key;
        auto payload = nlohmann::ordered_json::array();
        for (const auto& s : suggestions) {
            nlohmann::ordered_json sj;
            sj["text"] = s.text;
            sj["confidence"] = s.confidence;
            if (s.mean_token_logprob)
                sj["mean_token_logprob"] = *s.mean_token_logprob;
            else
                sj["mean_token_logprob"] = nullptr;
            payload.push_back(sj);
        }
        auto tmp = dir_ / (key + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary);
            out << hdr.dump() << "\n" << payload.dump();
        }
        std::filesystem::rename(tmp, dir_ / (key + ".rec"));
    }

  private:
    std::filesystem::path dir_;
    std::mutex write_mu_;
};

class CompletionEngine {
  public:
    virtual ~CompletionEngine() = default;
    virtual std::vector<Suggestion> complete(const RenderedPrompt& prompt,
                                             const GenerationConfig& config) = 0;
    virtual const std::string& id() const = 0;
    virtual int max_tokens() const = 0;
};

// Deterministic mock with three modes:
//   scripted      - prompt hash (or "*") -> fixed completion list
//   echo_uncomment - returns the uncommented copy of the prompt's
//                    commented-out block (i.e. reintroduces the bug)
//   corpus        - replays canned completions round-robin, seed-rotated
class MockEngine final : public CompletionEngine {
  public:
    enum class Mode { scripted, echo_uncomment, corpus };

    MockEngine(std::string id, Mode mode, int max_tokens = 2048)
        : id_(std::move(id)), mode_(mode), max_tokens_(max_tokens) {}

    void script(const std::string& prompt_key,
                std::vector<std::string> completions) {
        scripts_[prompt_key] = std::move(completions);
    }

    void set_corpus(std::vector<std::string> corpus) {
        corpus_ = std::move(corpus);
    }

    void set_comment_style(CommentStyle style) { style_ = style; }

    const std::string& id() const override { return id_; }
    int max_tokens() const override { return max_tokens_; }

    std::vector<Suggestion> complete(const RenderedPrompt& prompt,
                                     const GenerationConfig& config) override {
        config.validate();
        std::vector<std::string> texts;
        switch (mode_) {
            case Mode::scripted: {
                auto key = detail::sha256_hex(prompt.text);
                auto it = scripts_.find(key);
                if (it == scripts_.end()) it = scripts_.find("*");
                if (it != scripts_.end()) texts = it->second;
                break;
            }
            case Mode::echo_uncomment:
                texts.push_back(echo_uncomment(prompt.text));
                break;
            case Mode::corpus: {
                if (corpus_.empty()) break;
                std::mt19937_64 rng(config.seed);
                std::size_t start = rng() % corpus_.size();
                for (int i = 0; i < config.num_samples; ++i)
                    texts.push_back(corpus_[(start + std::size_t(i)) %
                                            corpus_.size()]);
                break;
            }
        }
        if (static_cast<int>(texts.size()) > config.num_samples)
            texts.resize(std::size_t(config.num_samples));
        std::vector<Suggestion> out;
        int rank = 0;
        for (auto& t : texts) {
            Suggestion s;
            s.text = truncate_at_stop(std::move(t), config.stop_words);
            s.confidence = -static_cast<double>(rank++);
            s.engine_id = id_;
            s.config = config;
            out.push_back(std::move(s));
        }
        return out;
    }

    static std::string truncate_at_stop(
        std::string t, const std::vector<std::string>& stop_words) {
        std::size_t cut = std::string::npos;
        for (const auto& sw : stop_words) {
            if (sw.empty()) continue;
            auto pos = t.find(sw);
            if (pos != std::string::npos) cut = std::min(cut, pos);
        }
        if (cut != std::string::npos) t.resize(cut);
        return t;
    }

  private:
    // BUG:/MESSAGE:/FIXED: lines are template scaffolding, not code; they
    // must not survive into the echoed suggestion.
    static std::string drop_scaffold_lines(const std::string& code) {
        std::vector<std::string> kept;
        for (const auto& l : text::split_lines(code)) {
            auto t = text::ltrim(l);
            if (text::starts_with(t, "BUG:") ||
                text::starts_with(t, "MESSAGE:") ||
                text::starts_with(t, "FIXED:") ||
                text::starts_with(t, "FIXED VERSION:"))
                continue;
            kept.push_back(std::string(l));
        }
        return text::join_lines(kept);
    }

    std::string echo_uncomment(const std::string& prompt_text) const {
        // find the last commented block in the prompt and uncomment it
        auto lines = text::split_lines(prompt_text);
        const std::string marker =
            style_ == CommentStyle::line_hash ? "#" : "//";
        std::vector<std::string> block;
        if (style_ == CommentStyle::block_c) {
            std::size_t open = prompt_text.rfind("/*");
            if (open == std::string::npos) return "\n";
            std::size_t close = prompt_text.find("*/", open);
            std::string chunk = prompt_text.substr(
                open, close == std::string::npos ? std::string::npos
                                                 : close + 2 - open);
            // strip common indentation before uncommenting
            std::string stripped;
            for (auto& l : text::split_lines(chunk))
                stripped += std::string(text::ltrim(l).empty()
                                            ? std::string_view(l)
                                            : std::string_view(l).substr(
                                                  text::indent_of(l).size())) +
                            "\n";
            return drop_scaffold_lines(
                uncomment(stripped, CommentStyle::block_c));
        }
        for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
            auto t = text::ltrim(*it);
            if (text::starts_with(t, marker)) {
                block.insert(block.begin(), std::string(t));
            } else if (!block.empty()) {
                break;
            }
        }
        std::string joined = text::join_lines(block);
        return drop_scaffold_lines(uncomment(joined, style_));
    }

    std::string id_;
    Mode mode_;
    int max_tokens_;
    CommentStyle style_ = CommentStyle::line_slash;
    std::map<std::string, std::vector<std::string>> scripts_;
    std::vector<std::string> corpus_;
};

// Declarative remote provider description. No provider name appears in the
// dispatch logic; field names map our request onto the provider's schema.
struct ProviderConfig {
    std::string id;
    std::string endpoint_host;   // e.g. https://api.example.com
    std::string endpoint_path;   // e.g. /v1/completions
    std::string auth_env_var;    // environment variable holding the key
    int max_tokens = 2048;
    std::string model_field = "model";
    std::string model_name;
    std::string prompt_field = "prompt";
    std::string temperature_field = "temperature";
    std::string top_p_field = "top_p";
    std::string n_field = "n";
    std::string max_tokens_field = "max_tokens";
    std::string stop_field = "stop";
    // response: choices[].{text, logprobs.token_logprobs[]}
    std::string choices_field = "choices";
    std::string text_field = "text";
    RateLimit rate_limit;
};

struct GatewayOptions {
    std::optional<std::filesystem::path> cache_dir;
    std::shared_ptr<Clock> clock = std::make_shared<SteadyClock>();
};

// Front door: cache lookup, rate limiting, then the engine itself.
class ModelGateway {
  public:
    explicit ModelGateway(GatewayOptions opts = {}) : opts_(std::move(opts)) {
        if (opts_.cache_dir)
            cache_ = std::make_unique<ResponseCache>(*opts_.cache_dir);
    }

    void register_engine(std::shared_ptr<CompletionEngine> engine,
                         std::optional<RateLimit> limit = std::nullopt) {
        const auto& id = engine->id();
        if (limit)
            limiters_[id] =
                std::make_unique<RateLimiter>(*limit, opts_.clock);
        engines_[id] = std::move(engine);
    }

    CompletionEngine& engine(const std::string& engine_id) {
        auto it = engines_.find(engine_id);
        if (it == engines_.end())
            throw ProviderUnavailable("no engine registered: " + engine_id);
        return *it->second;
    }

    std::vector<std::string> engine_ids() const {
        std::vector<std::string> out;
        for (const auto& [id, _] : engines_) out.push_back(id);
        return out;
    }

    std::vector<Suggestion> complete(const RenderedPrompt& prompt,
                                     const GenerationConfig& config,
                                     const std::string& engine_id) {
        config.validate();
        auto& eng = engine(engine_id);
        if (prompt.token_count + config.max_tokens > eng.max_tokens())
            throw BudgetExceeded(
                "prompt + completion exceeds engine max tokens");

        std::string key;
        if (cache_) {
            key = cache_key(prompt, config, engine_id);
            if (auto hit = cache_->lookup(key)) return *hit;
        }
        if (auto it = limiters_.find(engine_id); it != limiters_.end())
            it->second->acquire(prompt.token_count + config.max_tokens);

        auto suggestions = eng.complete(prompt, config);
        if (cache_) cache_->store(key, engine_id, suggestions);
        return suggestions;
    }

  private:
    GatewayOptions opts_;
    std::map<std::string, std::shared_ptr<CompletionEngine>> engines_;
    std::map<std::string, std::unique_ptr<RateLimiter>> limiters_;
    std::unique_ptr<ResponseCache> cache_;
};

}  // namespace repairkit
