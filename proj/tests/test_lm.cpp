#include "doctest.h"

#include <cmath>

#include "ckr/lm.hpp"

#include "test_util.hpp"

using namespace ckr;
using doctest::Approx;

TEST_CASE("bigram model matches hand-computed probabilities") {
    NgramLm lm(2);
    lm.train({{"a", "b"}, {"a", "c"}});
    // counts: <s> a: 2, a b: 1, a c: 1, b </s>: 1, c </s>: 1
    CHECK(lm.score_word({kBos}, "a") == Approx(std::log(1.0)));
    CHECK(lm.score_word({"a"}, "b") == Approx(std::log(0.5)));
    CHECK(lm.score_word({"a"}, "c") == Approx(std::log(0.5)));
    CHECK(lm.score_word({"b"}, kEos) == Approx(std::log(1.0)));

    SUBCASE("backoff to unigram multiplies by 0.4") {
        // "b a" unseen; unigram p(a) = 2 / 6 total tokens (incl </s>)
        CHECK(lm.score_word({"b"}, "a") ==
              Approx(std::log(0.4) + std::log(2.0 / 6.0)));
    }
    SUBCASE("unknown word hits the floor, stays finite") {
        double s = lm.score_word({"a"}, "zzz");
        CHECK(std::isfinite(s));
        CHECK(s == Approx(std::log(0.4) + -10.0));
    }
    SUBCASE("sequence logprob sums per-token scores") {
        CHECK(lm.logprob({"a", "b"}) == Approx(std::log(0.5)));
    }
}

TEST_CASE("trigram context is truncated to order - 1") {
    NgramLm lm(3);
    lm.train({{"x", "y", "z"}});
    double with_long_ctx = lm.score_word({"q", "x", "y"}, "z");
    double with_exact_ctx = lm.score_word({"x", "y"}, "z");
    CHECK(with_long_ctx == Approx(with_exact_ctx));
    CHECK(with_exact_ctx == Approx(std::log(1.0)));
}

TEST_CASE("lm save/load round trip preserves scores") {
    NgramLm lm(3, 0.4, -10.0);
    lm.train({{"a", "b", "c"}, {"a", "b", "d"}, {"b", "c"}});
    test_util::TempDir tmp("lm");
    lm.save(tmp.file("lm.tsv"));
    auto lm2 = NgramLm::load(tmp.file("lm.tsv"));
    CHECK(lm2.order() == lm.order());
    for (const TokenSeq& s : std::vector<TokenSeq>{
             {"a", "b", "c"}, {"b", "c"}, {"a", "d"}, {"zzz"}}) {
        CHECK(lm2.logprob(s) == Approx(lm.logprob(s)).epsilon(1e-12));
    }
}
