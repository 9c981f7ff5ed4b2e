#include "doctest.h"

#include "ckr/matcher.hpp"

#include "walkthrough.hpp"
#include "test_util.hpp"

using namespace ckr;

static const char* kWalkthroughDir = CKR_FIXTURE_DIR "/walkthrough";

TEST_CASE("walkthrough: retrieve reproduces the four-step example") {
    auto f = test_util::load_walkthrough(kWalkthroughDir);
    auto trace = retrieve(tokenize("how much does liposuction cost in new york"),
                          f.kb, f.model, f.repo, f.trie, f.clusters, f.config);

    CHECK(trace.query_pattern.key() ==
          "how much does [aesthetic_surgery] cost in [location]");
    REQUIRE(trace.retrieved_patterns.size() == 2);
    CHECK(join(trace.retrieved_patterns[0].target) ==
          "the price of [aesthetic_surgery] in [location]");
    CHECK(join(trace.retrieved_patterns[1].target) ==
          "what is the price of [aesthetic_surgery] in [location]");

    REQUIRE(trace.instantiations.size() == 3);
    CHECK(join(trace.instantiations[0].first) ==
          "the price of liposuction in new york");
    CHECK(join(trace.instantiations[1].first) ==
          "the price of lipo in new york");
    CHECK(join(trace.instantiations[2].first) ==
          "what is the price of liposuction in new york");

    // join removes the third sentence; cluster expansion adds one keyword
    REQUIRE(trace.post_join.size() == 2);
    REQUIRE(trace.final_candidates.size() == 3);
    CHECK(join(trace.final_candidates[0].keyword) ==
          "the price of liposuction in new york");
    CHECK(trace.final_candidates[0].stage == "join");
    CHECK(join(trace.final_candidates[1].keyword) ==
          "the price of lipo in new york");
    CHECK(trace.final_candidates[1].stage == "join");
    CHECK(join(trace.final_candidates[2].keyword) ==
          "liposuction cost new york");
    CHECK(trace.final_candidates[2].stage == "cluster");
    CHECK(trace.skipped_patterns.empty());
    CHECK(!trace.cache_hit);
}

TEST_CASE("retrieve is deterministic") {
    auto f = test_util::load_walkthrough(kWalkthroughDir);
    TokenSeq q = tokenize("how much does lipo cost in denver");
    auto t1 = retrieve(q, f.kb, f.model, f.repo, f.trie, f.clusters, f.config);
    auto t2 = retrieve(q, f.kb, f.model, f.repo, f.trie, f.clusters, f.config);
    CHECK(trace_to_json(t1, false) == trace_to_json(t2, false));
}

TEST_CASE("cache path equals compute path") {
    auto f = test_util::load_walkthrough(kWalkthroughDir);
    std::vector<TokenSeq> queries = {
        tokenize("how much does liposuction cost in new york"),
        tokenize("how much does lipo cost in denver"),
        tokenize("how much does botox cost in new york"),
    };
    auto cache = build_cache(queries, f.kb, f.model, f.trie, f.config.beam,
                             f.config.stack_size);
    for (const auto& q : queries) {
        auto offline =
            retrieve(q, f.kb, f.model, f.repo, f.trie, f.clusters, f.config);
        auto online = retrieve_online(q, f.kb, f.model, f.repo, f.trie,
                                      f.clusters, cache, f.config);
        CHECK(online.cache_hit);
        REQUIRE(online.final_candidates.size() ==
                offline.final_candidates.size());
        for (size_t i = 0; i < online.final_candidates.size(); ++i)
            CHECK(online.final_candidates[i].keyword ==
                  offline.final_candidates[i].keyword);
    }
}

TEST_CASE("targets whose slots have no query counterpart are skipped") {
    auto f = test_util::load_walkthrough(kWalkthroughDir);
    // query without a location entity: the location slot cannot be bound
    auto trace = retrieve(tokenize("how much does liposuction cost in paris"),
                          f.kb, f.model, f.repo, f.trie, f.clusters, f.config);
    CHECK(trace.instantiations.empty());
    CHECK(trace.retrieved_patterns.empty());  // constrained decode cannot end
    CHECK(trace.final_candidates.empty());
}

TEST_CASE("alias binding targets the matching concept occurrence") {
    auto kb = test_util::toy_kb();
    Pattern target = pattern_from_tokens(
        tokenize("[aesthetic_surgery] vs [aesthetic_surgery]"));
    Pattern query = conceptualize(tokenize("liposuction against botox"), kb);
    auto bindings = detail::bind_slots(target, query, kb);
    REQUIRE(bindings.has_value());
    REQUIRE(bindings->size() == 2);
    CHECK((*bindings)[0] ==
          std::vector<TokenSeq>{{"liposuction"}, {"lipo"}});
    CHECK((*bindings)[1] == std::vector<TokenSeq>{{"botox"}});

    SUBCASE("missing occurrence yields nullopt") {
        Pattern three = pattern_from_tokens(tokenize(
            "[aesthetic_surgery] [aesthetic_surgery] [aesthetic_surgery]"));
        CHECK(!detail::bind_slots(three, query, kb).has_value());
    }
}

TEST_CASE("candidate cap truncates the final list") {
    auto f = test_util::load_walkthrough(kWalkthroughDir);
    f.config.candidate_cap = 1;
    auto trace = retrieve(tokenize("how much does liposuction cost in new york"),
                          f.kb, f.model, f.repo, f.trie, f.clusters, f.config);
    CHECK(trace.final_candidates.size() == 1);
}

TEST_CASE("trace json carries the pipeline stages") {
    auto f = test_util::load_walkthrough(kWalkthroughDir);
    auto trace = retrieve(tokenize("how much does liposuction cost in new york"),
                          f.kb, f.model, f.repo, f.trie, f.clusters, f.config);
    auto j = trace_to_json(trace);
    CHECK(j["query"] == "how much does liposuction cost in new york");
    CHECK(j["slot_values"].size() == 2);
    CHECK(j["retrieved_patterns"].size() == 2);
    CHECK(j["instantiations"].size() == 3);
    CHECK(j["final_candidates"].size() == 3);
    CHECK(j.contains("timing_ms"));
    CHECK(!trace_to_json(trace, false).contains("timing_ms"));
}
