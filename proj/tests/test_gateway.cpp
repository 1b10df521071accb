#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>
#include <set>

#include "repairkit/gateway.hpp"

using namespace repairkit;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    auto p = fs::temp_directory_path() /
             ("repairkit-gw-" + tag + "-" +
              std::to_string(std::random_device{}()));
    fs::create_directories(p);
    return p;
}

RenderedPrompt make_prompt(const std::string& text) {
    RenderedPrompt p;
    p.text = text;
    p.token_count = int(text.size() / 4) + 1;
    return p;
}

// A fake clock the tests advance by hand; sleep_for advances time instead
// of blocking, and records how long the limiter wanted to wait.
struct FakeClock final : Clock {
    std::chrono::steady_clock::time_point t{std::chrono::steady_clock::time_point{}};
    std::chrono::milliseconds slept{0};
    std::chrono::steady_clock::time_point now() override { return t; }
    void sleep_for(std::chrono::milliseconds d) override {
        slept += d;
        t += d;
    }
};

// Engine wrapper that counts real invocations, for cache-transparency tests.
struct CountingEngine final : CompletionEngine {
    std::shared_ptr<MockEngine> inner;
    int calls = 0;
    explicit CountingEngine(std::shared_ptr<MockEngine> e)
        : inner(std::move(e)) {}
    std::vector<Suggestion> complete(const RenderedPrompt& p,
                                     const GenerationConfig& c) override {
        ++calls;
        return inner->complete(p, c);
    }
    const std::string& id() const override { return inner->id(); }
    int max_tokens() const override { return inner->max_tokens(); }
};

}  // namespace

TEST_CASE("generation config validation") {
    GenerationConfig c;
    CHECK_NOTHROW(c.validate());
    c.temperature = 1.5;
    CHECK_THROWS_AS(c.validate(), Error);
    c.temperature = 0.5;
    c.top_p = -0.1;
    CHECK_THROWS_AS(c.validate(), Error);
    c.top_p = 1.0;
    c.num_samples = 0;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("scripted mock returns its script and honors stop words") {
    auto eng = std::make_shared<MockEngine>("m", MockEngine::Mode::scripted);
    auto prompt = make_prompt("int f() {\n");
    eng->script(repairkit::detail::sha256_hex(prompt.text),
                {"  return 0;\n}\nint g() { }", "  return 1;\n}\n"});
    GenerationConfig cfg;
    cfg.num_samples = 2;
    cfg.stop_words = {"int g"};
    auto out = eng->complete(prompt, cfg);
    REQUIRE(out.size() == 2);
    CHECK(out[0].text == "  return 0;\n}\n");  // cut at the stop word
    CHECK(out[1].text == "  return 1;\n}\n");
    CHECK(out[0].confidence == 0.0);
    CHECK(out[1].confidence == -1.0);  // rank order encoded as confidence

    // unknown prompt falls back to the "*" wildcard script
    eng->script("*", {"fallback\n"});
    auto other = eng->complete(make_prompt("something else\n"), cfg);
    REQUIRE(other.size() == 1);
    CHECK(other[0].text == "fallback\n");
}

TEST_CASE("mock is deterministic across calls") {
    auto eng = std::make_shared<MockEngine>("m", MockEngine::Mode::corpus);
    eng->set_corpus({"a\n", "b\n", "c\n", "d\n", "e\n"});
    GenerationConfig cfg;
    cfg.num_samples = 3;
    cfg.seed = 42;
    auto a = eng->complete(make_prompt("p\n"), cfg);
    auto b = eng->complete(make_prompt("p\n"), cfg);
    REQUIRE(a.size() == 3);
    REQUIRE(b.size() == 3);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].text == b[i].text);
    // a different seed rotates to a different starting point eventually
    bool any_differs = false;
    for (std::uint64_t s = 0; s < 16 && !any_differs; ++s) {
        cfg.seed = s;
        auto c = eng->complete(make_prompt("p\n"), cfg);
        if (c[0].text != a[0].text) any_differs = true;
    }
    CHECK(any_differs);
}

TEST_CASE("echo_uncomment mock reintroduces the commented code") {
    auto eng = std::make_shared<MockEngine>("m",
                                            MockEngine::Mode::echo_uncomment);
    auto prompt = make_prompt(
        "int f(int x) {\n"
        "    // BUG: overflow\n"
        "    //     int y = x * 100;\n"
        "    // FIXED:\n"
        "    int");
    auto out = eng->complete(prompt, GenerationConfig{});
    REQUIRE(out.size() == 1);
    CHECK(out[0].text.find("int y = x * 100;") != std::string::npos);
}

TEST_CASE("cache keys separate every generation parameter") {
    auto prompt = make_prompt("prompt\n");
    GenerationConfig base;
    auto k0 = cache_key(prompt, base, "e1");
    CHECK(k0 == cache_key(prompt, base, "e1"));  // stable
    GenerationConfig t = base;
    t.temperature = 0.25;
    CHECK(cache_key(prompt, t, "e1") != k0);
    GenerationConfig p = base;
    p.top_p = 0.5;
    CHECK(cache_key(prompt, p, "e1") != k0);
    CHECK(cache_key(prompt, base, "e2") != k0);
    CHECK(cache_key(make_prompt("other\n"), base, "e1") != k0);
}

TEST_CASE("no collisions over a large config grid") {
    std::set<std::string> keys;
    int n = 0;
    for (int t = 0; t <= 4; ++t)
        for (int tp = 0; tp <= 4; ++tp)
            for (int mt : {128, 256, 512, 1024})
                for (std::uint64_t seed : {0ull, 1ull, 2ull, 3ull, 4ull})
                    for (const char* eng : {"e1", "e2"}) {
                        GenerationConfig c;
                        c.temperature = t * 0.25;
                        c.top_p = tp * 0.25;
                        c.max_tokens = mt;
                        c.seed = seed;
                        keys.insert(cache_key(make_prompt("p\n"), c, eng));
                        ++n;
                    }
    CHECK(int(keys.size()) == n);  // 1000 distinct keys
}

TEST_CASE("cache round trip and corruption tolerance") {
    auto dir = temp_dir("cache");
    ResponseCache cache(dir);
    CHECK_FALSE(cache.lookup("absent").has_value());

    std::vector<Suggestion> suggs(2);
    suggs[0].text = "first\n";
    suggs[0].confidence = 0.0;
    suggs[0].mean_token_logprob = -0.25;
    suggs[1].text = "second\n";
    suggs[1].confidence = -1.0;
    cache.store("k1", "eng", suggs);
    auto got = cache.lookup("k1");
    REQUIRE(got.has_value());
    REQUIRE(got->size() == 2);
    CHECK((*got)[0].text == "first\n");
    CHECK((*got)[0].mean_token_logprob == -0.25);
    CHECK_FALSE((*got)[1].mean_token_logprob.has_value());
    CHECK((*got)[0].engine_id == "eng");

    // a corrupt record is treated as a miss, not an error
    std::ofstream(dir / "bad.rec") << "{garbage\nnot json";
    CHECK_FALSE(cache.lookup("bad").has_value());
    fs::remove_all(dir);
}

TEST_CASE("gateway serves cached responses without engine calls") {
    auto dir = temp_dir("gwcache");
    GatewayOptions opts;
    opts.cache_dir = dir;
    ModelGateway gw(opts);
    auto mock = std::make_shared<MockEngine>("m", MockEngine::Mode::scripted);
    mock->script("*", {"answer\n"});
    auto counting = std::make_shared<CountingEngine>(mock);
    gw.register_engine(counting);

    auto prompt = make_prompt("the prompt\n");
    GenerationConfig cfg;
    auto first = gw.complete(prompt, cfg, "m");
    auto second = gw.complete(prompt, cfg, "m");
    CHECK(counting->calls == 1);  // second hit came from the cache
    REQUIRE(first.size() == 1);
    REQUIRE(second.size() == 1);
    CHECK(first[0].text == second[0].text);

    // replay transcript oracle: a fresh gateway over the same directory
    // must answer identically with zero engine calls
    ModelGateway gw2(opts);
    auto counting2 = std::make_shared<CountingEngine>(
        std::make_shared<MockEngine>("m", MockEngine::Mode::scripted));
    gw2.register_engine(counting2);
    auto replay = gw2.complete(prompt, cfg, "m");
    CHECK(counting2->calls == 0);
    REQUIRE(replay.size() == 1);
    CHECK(replay[0].text == first[0].text);
    fs::remove_all(dir);
}

TEST_CASE("gateway enforces the engine token budget") {
    ModelGateway gw;
    gw.register_engine(
        std::make_shared<MockEngine>("m", MockEngine::Mode::scripted, 512));
    RenderedPrompt big = make_prompt("x");
    big.token_count = 500;
    GenerationConfig cfg;
    cfg.max_tokens = 100;
    CHECK_THROWS_AS(gw.complete(big, cfg, "m"), BudgetExceeded);
    CHECK_THROWS_AS(gw.complete(big, cfg, "missing"), ProviderUnavailable);
}

TEST_CASE("rate limiter sliding window with a simulated clock") {
    auto clock = std::make_shared<FakeClock>();
    RateLimiter rl(RateLimit{1000, std::chrono::milliseconds(60000)}, clock);

    rl.acquire(400);
    rl.acquire(400);
    CHECK(clock->slept.count() == 0);
    CHECK(rl.tokens_in_window() == 800);

    // third acquire exceeds the window; the limiter must wait until the
    // first grant leaves the trailing 60s
    rl.acquire(400);
    CHECK(clock->slept.count() >= 60000);
    CHECK(rl.tokens_in_window() <= 1000);

    // advancing past the interval empties the window
    clock->t += std::chrono::milliseconds(61000);
    CHECK(rl.tokens_in_window() == 0);

    CHECK_THROWS_AS(rl.acquire(1001), BudgetExceeded);
}

TEST_CASE("gateway applies per-engine rate limits") {
    auto clock = std::make_shared<FakeClock>();
    GatewayOptions opts;
    opts.clock = clock;
    ModelGateway gw(opts);
    auto mock = std::make_shared<MockEngine>("m", MockEngine::Mode::scripted);
    mock->script("*", {"ok\n"});
    gw.register_engine(mock, RateLimit{600, std::chrono::milliseconds(60000)});

    RenderedPrompt p = make_prompt("p\n");
    p.token_count = 200;
    GenerationConfig cfg;
    cfg.max_tokens = 100;  // each request costs 300 tokens
    gw.complete(p, cfg, "m");
    gw.complete(p, cfg, "m");
    CHECK(clock->slept.count() == 0);
    gw.complete(p, cfg, "m");  // third must wait for the window to slide
    CHECK(clock->slept.count() >= 60000);
}
