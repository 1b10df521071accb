#pragma once

// Completion engine backed by an HTTP provider. The request/response field
// names come from ProviderConfig so new providers are config, not code.

#include <cstdlib>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "repairkit/errors.hpp"
#include "repairkit/gateway.hpp"

namespace repairkit {

class HttpEngine final : public CompletionEngine {
  public:
    explicit HttpEngine(ProviderConfig config) : config_(std::move(config)) {}

    const std::string& id() const override { return config_.id; }
    int max_tokens() const override { return config_.max_tokens; }

    std::vector<Suggestion> complete(const RenderedPrompt& prompt,
                                     const GenerationConfig& config) override {
        nlohmann::json body;
        if (!config_.model_name.empty())
            body[config_.model_field] = config_.model_name;
        body[config_.prompt_field] = prompt.text;
        body[config_.temperature_field] = config.temperature;
        body[config_.top_p_field] = config.top_p;
        body[config_.n_field] = config.num_samples;
        body[config_.max_tokens_field] = config.max_tokens;
        if (!config.stop_words.empty())
            body[config_.stop_field] = config.stop_words;

        httplib::Client client(config_.endpoint_host);
        client.set_read_timeout(120, 0);
        httplib::Headers headers;
        if (!config_.auth_env_var.empty()) {
            const char* key = std::getenv(config_.auth_env_var.c_str());
            if (!key)
                throw ProviderUnavailable("credential env var not set: " +
                                          config_.auth_env_var);
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
        auto res = client.Post(config_.endpoint_path, headers, body.dump(),
                               "application/json");
        if (!res)
            throw ProviderUnavailable("no response from " +
                                      config_.endpoint_host);
        if (res->status == 429)
            throw RateLimited("provider throttled the request");
        if (res->status < 200 || res->status >= 300)
            throw ProviderUnavailable("provider returned HTTP " +
                                      std::to_string(res->status));

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw ProviderUnavailable("unparseable provider response: " +
                                      std::string(e.what()));
        }
        std::vector<Suggestion> out;
        int rank = 0;
        for (const auto& choice :
             j.value(config_.choices_field, nlohmann::json::array())) {
            Suggestion s;
            s.text = choice.value(config_.text_field, std::string());
            s.text = MockEngine::truncate_at_stop(std::move(s.text),
                                                  config.stop_words);
            if (choice.contains("logprobs") &&
                choice["logprobs"].contains("token_logprobs")) {
                const auto& lps = choice["logprobs"]["token_logprobs"];
                double sum = 0.0;
                int n = 0;
                for (const auto& lp : lps) {
                    if (lp.is_number()) {
                        sum += lp.get<double>();
                        ++n;
                    }
                }
                if (n > 0) s.mean_token_logprob = sum / n;
            }
            s.confidence = s.mean_token_logprob
                               ? *s.mean_token_logprob
                               : -static_cast<double>(rank);
            s.engine_id = config_.id;
            s.config = config;
            out.push_back(std::move(s));
            ++rank;
        }
        return out;
    }

  private:
    ProviderConfig config_;
};

}  // namespace repairkit
