#include "doctest.h"

#include <random>

#include "ckr/repository.hpp"

#include "test_util.hpp"

using namespace ckr;

TEST_CASE("repository patterns and trie stay in lockstep") {
    auto kb = test_util::toy_kb();
    std::vector<TokenSeq> kws = {
        tokenize("the price of liposuction in new york"),
        tokenize("the price of lipo in new york"),
        tokenize("the price of botox in denver"),
        tokenize("liposuction cost new york"),
        tokenize("the price of liposuction in new york"),  // duplicate
    };
    auto [repo, trie] = build_repository(kws, kb);
    CHECK(repo.keywords.size() == 4);
    // lipo/liposuction/botox keywords share one pattern
    CHECK(repo.pattern_index.size() == 2);
    CHECK(trie.size() == repo.pattern_index.size());
    for (const auto& [key, pat] : repo.patterns)
        CHECK(trie.contains(pat.tokens()));
    std::set<std::string> enumerated;
    for (const auto& toks : trie.enumerate()) enumerated.insert(join(toks));
    std::set<std::string> keys;
    for (const auto& [key, _] : repo.pattern_index) keys.insert(key);
    CHECK(enumerated == keys);
    CHECK(repo.pattern_index
              .at("the price of [aesthetic_surgery] in [location]")
              .size() == 3);
}

TEST_CASE("building twice is idempotent") {
    auto kb = test_util::toy_kb();
    std::vector<TokenSeq> kws = {tokenize("price of botox"),
                                 tokenize("lipo deals")};
    auto [r1, t1] = build_repository(kws, kb);
    auto [r2, t2] = build_repository(kws, kb);
    CHECK(r1.keywords == r2.keywords);
    CHECK(r1.pattern_index == r2.pattern_index);
    CHECK(t1.enumerate() == t2.enumerate());
}

TEST_CASE("synonym clusters match a connected-components oracle") {
    std::mt19937_64 rng(33);
    for (int iter = 0; iter < 50; ++iter) {
        size_t n = 2 + rng() % 10;
        std::vector<std::string> names;
        for (size_t i = 0; i < n; ++i) names.push_back("kw" + std::to_string(i));
        std::vector<std::pair<size_t, size_t>> edges;
        size_t m = rng() % (2 * n);
        SynonymClusters clusters;
        for (size_t i = 0; i < m; ++i) {
            size_t a = rng() % n, b = rng() % n;
            edges.push_back({a, b});
            clusters.add_pair(names[a], names[b]);
        }
        // oracle: BFS connected components over the same edges
        std::vector<std::vector<size_t>> adj(n);
        for (auto [a, b] : edges) {
            adj[a].push_back(b);
            adj[b].push_back(a);
        }
        for (size_t s = 0; s < n; ++s) {
            std::vector<bool> seen(n, false);
            std::vector<size_t> stack{s};
            seen[s] = true;
            while (!stack.empty()) {
                size_t u = stack.back();
                stack.pop_back();
                for (size_t v : adj[u])
                    if (!seen[v]) {
                        seen[v] = true;
                        stack.push_back(v);
                    }
            }
            for (size_t t = 0; t < n; ++t) {
                bool touched_s = !adj[s].empty() || seen[t];
                (void)touched_s;
                bool want = seen[t];
                bool got = clusters.same_cluster(names[s], names[t]);
                // nodes never mentioned in a pair are unknown to the
                // union-find; they are singleton equal only to themselves
                bool known_s = false, known_t = false;
                for (auto [a, b] : edges) {
                    known_s |= (a == s || b == s);
                    known_t |= (a == t || b == t);
                }
                if (known_s && known_t)
                    CHECK(got == want);
                else
                    CHECK(got == (s == t));
            }
        }
    }
}

TEST_CASE("cluster_of is sorted and includes the member itself") {
    SynonymClusters c;
    c.add_pair("b", "c");
    c.add_pair("c", "a");
    CHECK(c.cluster_of("b") == std::vector<std::string>{"a", "b", "c"});
    CHECK(c.cluster_of("unknown") == std::vector<std::string>{"unknown"});
    CHECK(c.cluster_count() == 1);
}

TEST_CASE("build_clusters drops pairs with unknown keywords") {
    auto kb = test_util::toy_kb();
    auto [repo, trie] = build_repository(
        {tokenize("price of botox"), tokenize("botox cost")}, kb);
    test_util::TempDir tmp("clu");
    test_util::write_file(tmp.file("k2k.tsv"),
                          "price of botox\tbotox cost\n"
                          "price of botox\tnot a keyword\n");
    ClusterDiagnostics diag;
    auto clusters = build_clusters(tmp.file("k2k.tsv"), repo, &diag);
    CHECK(diag.pairs == 2);
    CHECK(diag.dropped_unknown_keyword == 1);
    CHECK(clusters.same_cluster("price of botox", "botox cost"));
    CHECK(!clusters.same_cluster("price of botox", "not a keyword"));
}

TEST_CASE("join_filter keeps order and subset") {
    auto kb = test_util::toy_kb();
    auto [repo, trie] =
        build_repository({tokenize("a b"), tokenize("c d")}, kb);
    std::vector<TokenSeq> cand = {tokenize("c d"), tokenize("x"),
                                  tokenize("a b"), tokenize("c d")};
    auto out = join_filter(cand, repo);
    REQUIRE(out.size() == 2);
    CHECK(out[0] == tokenize("c d"));
    CHECK(out[1] == tokenize("a b"));
    for (const auto& k : out) CHECK(repo.has_keyword(k));
}

TEST_CASE("expand_clusters appends sorted members after the input") {
    SynonymClusters c;
    c.add_pair("a b", "z z");
    c.add_pair("a b", "m m");
    auto out = expand_clusters({tokenize("a b")}, c);
    REQUIRE(out.size() == 3);
    CHECK(out[0] == tokenize("a b"));
    CHECK(out[1] == tokenize("m m"));
    CHECK(out[2] == tokenize("z z"));
}

TEST_CASE("cache ranks patterns by frequency and round trips") {
    auto kb = test_util::toy_kb();
    std::vector<PatternPair> corpus;
    {
        ParaphrasePair p1{tokenize("price of liposuction"),
                          tokenize("liposuction cost")};
        ParaphrasePair p2{tokenize("price of botox"), tokenize("botox cost")};
        corpus = build_parallel_patterns({p1, p2}, kb);
    }
    auto model = train_model(corpus);
    auto [repo, trie] = build_repository(
        {tokenize("liposuction cost"), tokenize("botox cost")}, kb);

    std::vector<TokenSeq> log = {
        tokenize("price of liposuction"), tokenize("price of botox"),
        tokenize("price of liposuction"),  // same pattern as botox query
        tokenize("unrelated words here")};
    auto cache = build_cache(log, kb, model, trie, 50, 100, 1);
    // top-1 pattern: "price of [aesthetic_surgery]" occurs three times
    CHECK(cache.entries.size() == 1);
    CHECK(cache.entries.count("price of [aesthetic_surgery]") == 1);

    auto full = build_cache(log, kb, model, trie);
    test_util::TempDir tmp("cache");
    save_cache(full, tmp.file("cache.tsv"));
    auto loaded = load_cache(tmp.file("cache.tsv"));
    CHECK(loaded.generation == full.generation);
    REQUIRE(loaded.entries.size() == full.entries.size());
    for (const auto& [pat, result] : full.entries) {
        REQUIRE(loaded.entries.count(pat) == 1);
        const auto& other = loaded.entries.at(pat);
        REQUIRE(other.size() == result.size());
        for (size_t i = 0; i < result.size(); ++i) {
            CHECK(other[i].target == result[i].target);
            CHECK(other[i].score ==
                  doctest::Approx(result[i].score).epsilon(1e-9));
        }
    }
}
