#pragma once

#include <filesystem>

#include "ckr/corpus.hpp"
#include "ckr/lm.hpp"
#include "ckr/trie.hpp"

namespace ckr {

struct PhraseOption {
    TokenSeq target;
    double log_p_fwd = 0.0;  // log p(target|source)
    double log_p_rev = 0.0;  // log p(source|target)
};

struct DecoderWeights {
    double tm_fwd = 1.0;
    double tm_rev = 1.0;
    double lm = 1.0;
    double word_penalty = -0.3;
};

struct TranslationConfig {
    size_t ngram = 3;
    size_t max_phrase_len = 4;
    size_t em_iterations = 5;
    DecoderWeights weights;
};

class TranslationModel {
  public:
    std::map<std::string, std::vector<PhraseOption>> phrase_table;
    NgramLm lm;
    DecoderWeights weights;
    size_t max_phrase_len = 4;

    const std::vector<PhraseOption>* options(const TokenSeq& src, size_t begin,
                                             size_t end) const {
        std::string key;
        for (size_t i = begin; i < end; ++i) {
            if (i > begin) key += ' ';
            key += src[i];
        }
        auto it = phrase_table.find(key);
        return it == phrase_table.end() ? nullptr : &it->second;
    }

    bool has_unigram(const Token& tok) const {
        return phrase_table.count(tok) > 0;
    }
};

// One step of a phrase derivation. Pass-through steps carry no TM score.
struct PhraseStep {
    size_t source_len = 0;
    TokenSeq target;
    double log_p_fwd = 0.0;
    double log_p_rev = 0.0;
    bool pass_through = false;
};

struct DecodeEntry {
    TokenSeq target;
    double score = 0.0;
    std::vector<PhraseStep> derivation;
};

using DecodeResult = std::vector<DecodeEntry>;

// ---------------------------------------------------------------------------
// Word alignment: IBM model 1 expectation-maximization in both directions,
// Viterbi alignments symmetrized by intersection then grow-diag plus a
// final pass over remaining union points touching unaligned words.

namespace align {

struct Ibm1 {
    // t[src][tgt] = p(tgt | src); missing entries mean uniform init weight.
    std::unordered_map<std::string, std::unordered_map<std::string, double>> t;
    bool trained = false;

    double prob(const Token& src, const Token& tgt) const {
        if (!trained) return 1.0;
        auto it = t.find(src);
        if (it == t.end()) return 1e-12;
        auto jt = it->second.find(tgt);
        return jt == it->second.end() ? 1e-12 : jt->second;
    }
};

inline Ibm1 train_ibm1(const std::vector<std::pair<TokenSeq, TokenSeq>>& pairs,
                       size_t iterations) {
    Ibm1 model;
    if (iterations == 0) return model;  // uniform
    for (size_t iter = 0; iter < iterations; ++iter) {
        std::unordered_map<std::string, std::unordered_map<std::string, double>>
            count;
        std::unordered_map<std::string, double> total;
        for (const auto& [src, tgt] : pairs) {
            for (const auto& f : tgt) {
                double z = 0.0;
                for (const auto& e : src) z += model.prob(e, f);
                if (z <= 0.0) continue;
                for (const auto& e : src) {
                    double c = model.prob(e, f) / z;
                    count[e][f] += c;
                    total[e] += c;
                }
            }
        }
        Ibm1 next;
        next.trained = true;
        for (auto& [e, row] : count) {
            double z = total[e];
            for (auto& [f, c] : row) next.t[e][f] = c / z;
        }
        model = std::move(next);
    }
    return model;
}

// For each target position, the best source position (ties -> smallest).
inline std::vector<size_t> viterbi(const Ibm1& model, const TokenSeq& src,
                                   const TokenSeq& tgt) {
    std::vector<size_t> a(tgt.size(), 0);
    for (size_t j = 0; j < tgt.size(); ++j) {
        double best = -1.0;
        for (size_t i = 0; i < src.size(); ++i) {
            double p = model.prob(src[i], tgt[j]);
            if (p > best) {
                best = p;
                a[j] = i;
            }
        }
    }
    return a;
}

using PointSet = std::set<std::pair<size_t, size_t>>;  // (src_i, tgt_j)

inline PointSet symmetrize(const std::vector<size_t>& fwd,   // tgt_j -> src_i
                           const std::vector<size_t>& rev,   // src_i -> tgt_j
                           size_t src_len, size_t tgt_len) {
    PointSet p1, p2;
    for (size_t j = 0; j < fwd.size(); ++j) p1.insert({fwd[j], j});
    for (size_t i = 0; i < rev.size(); ++i) p2.insert({i, rev[i]});
    PointSet aligned, uni;
    for (const auto& p : p1) {
        uni.insert(p);
        if (p2.count(p)) aligned.insert(p);
    }
    for (const auto& p : p2) uni.insert(p);

    std::vector<bool> src_cov(src_len, false), tgt_cov(tgt_len, false);
    for (const auto& [i, j] : aligned) {
        src_cov[i] = true;
        tgt_cov[j] = true;
    }
    // grow-diag: add union neighbors of current points where one side uncovered
    bool added = true;
    const int dx[] = {-1, -1, -1, 0, 0, 1, 1, 1};
    const int dy[] = {-1, 0, 1, -1, 1, -1, 0, 1};
    while (added) {
        added = false;
        for (const auto& [i, j] : PointSet(aligned)) {
            for (int d = 0; d < 8; ++d) {
                long ni = static_cast<long>(i) + dx[d];
                long nj = static_cast<long>(j) + dy[d];
                if (ni < 0 || nj < 0 || ni >= static_cast<long>(src_len) ||
                    nj >= static_cast<long>(tgt_len))
                    continue;
                auto cand = std::make_pair(static_cast<size_t>(ni),
                                           static_cast<size_t>(nj));
                if (!uni.count(cand) || aligned.count(cand)) continue;
                if (src_cov[cand.first] && tgt_cov[cand.second]) continue;
                aligned.insert(cand);
                src_cov[cand.first] = true;
                tgt_cov[cand.second] = true;
                added = true;
            }
        }
    }
    // final: remaining union points touching an unaligned word
    for (const auto& [i, j] : uni) {
        if (!src_cov[i] || !tgt_cov[j]) {
            aligned.insert({i, j});
            src_cov[i] = true;
            tgt_cov[j] = true;
        }
    }
    return aligned;
}

// Consistent phrase pairs up to max_len on both sides, with at least one
// alignment point inside.
inline std::vector<std::pair<std::pair<size_t, size_t>,
                             std::pair<size_t, size_t>>>
extract_phrase_spans(const PointSet& points, size_t src_len, size_t tgt_len,
                     size_t max_len) {
    std::vector<std::pair<std::pair<size_t, size_t>, std::pair<size_t, size_t>>>
        out;
    for (size_t i1 = 0; i1 < src_len; ++i1) {
        for (size_t i2 = i1 + 1; i2 <= std::min(src_len, i1 + max_len); ++i2) {
            for (size_t j1 = 0; j1 < tgt_len; ++j1) {
                for (size_t j2 = j1 + 1;
                     j2 <= std::min(tgt_len, j1 + max_len); ++j2) {
                    bool has_point = false, consistent = true;
                    for (const auto& [i, j] : points) {
                        bool in_src = i >= i1 && i < i2;
                        bool in_tgt = j >= j1 && j < j2;
                        if (in_src != in_tgt) {
                            consistent = false;
                            break;
                        }
                        if (in_src && in_tgt) has_point = true;
                    }
                    if (consistent && has_point)
                        out.push_back({{i1, i2}, {j1, j2}});
                }
            }
        }
    }
    return out;
}

}  // namespace align

// ---------------------------------------------------------------------------

inline TranslationModel train_model(const std::vector<PatternPair>& corpus,
                                    const TranslationConfig& config = {}) {
    if (corpus.empty()) throw DataError("empty training corpus");
    std::vector<std::pair<TokenSeq, TokenSeq>> pairs;
    pairs.reserve(corpus.size());
    for (const auto& pp : corpus)
        pairs.push_back({pp.source_pattern.tokens(), pp.target_pattern.tokens()});

    align::Ibm1 fwd = align::train_ibm1(pairs, config.em_iterations);
    std::vector<std::pair<TokenSeq, TokenSeq>> flipped;
    flipped.reserve(pairs.size());
    for (const auto& [s, t] : pairs) flipped.push_back({t, s});
    align::Ibm1 rev = align::train_ibm1(flipped, config.em_iterations);

    std::map<std::string, std::map<std::string, double>> joint;
    std::map<std::string, double> src_total, tgt_total;
    for (const auto& [src, tgt] : pairs) {
        auto a_fwd = align::viterbi(fwd, src, tgt);   // tgt_j -> src_i
        auto a_rev = align::viterbi(rev, tgt, src);   // src_i -> tgt_j
        auto points = align::symmetrize(a_fwd, a_rev, src.size(), tgt.size());
        for (const auto& [sspan, tspan] : align::extract_phrase_spans(
                 points, src.size(), tgt.size(), config.max_phrase_len)) {
            std::string s = join(TokenSeq(src.begin() + sspan.first,
                                          src.begin() + sspan.second));
            std::string t = join(TokenSeq(tgt.begin() + tspan.first,
                                          tgt.begin() + tspan.second));
            joint[s][t] += 1.0;
            src_total[s] += 1.0;
            tgt_total[t] += 1.0;
        }
    }

    TranslationModel model;
    model.max_phrase_len = config.max_phrase_len;
    model.weights = config.weights;
    for (const auto& [s, row] : joint) {
        auto& opts = model.phrase_table[s];
        for (const auto& [t, c] : row) {
            PhraseOption opt;
            opt.target = tokenize(t);
            opt.log_p_fwd = std::log(c / src_total[s]);
            opt.log_p_rev = std::log(c / tgt_total[t]);
            opts.push_back(std::move(opt));
        }
    }

    std::vector<TokenSeq> target_side;
    target_side.reserve(pairs.size());
    for (const auto& [s, t] : pairs) target_side.push_back(t);
    model.lm = NgramLm(config.ngram);
    model.lm.train(target_side);
    return model;
}

// Feature re-scoring of a full derivation; the decoder's incremental score
// must agree with this.
inline double score_derivation(const TranslationModel& model,
                               const std::vector<PhraseStep>& steps) {
    const auto& w = model.weights;
    double tm = 0.0;
    TokenSeq target;
    for (const auto& st : steps) {
        if (!st.pass_through)
            tm += w.tm_fwd * st.log_p_fwd + w.tm_rev * st.log_p_rev;
        target.insert(target.end(), st.target.begin(), st.target.end());
    }
    return tm + w.lm * model.lm.logprob(target) +
           w.word_penalty * static_cast<double>(target.size());
}

namespace detail {

struct Hypothesis {
    size_t covered = 0;
    TokenSeq target;
    double score = 0.0;
    int trie_node = PatternTrie::kRoot;
    std::vector<PhraseStep> derivation;
};

inline bool better(const Hypothesis& a, const Hypothesis& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.target < b.target;  // deterministic tie-break
}

inline DecodeResult decode_impl(const TranslationModel& model,
                                const TokenSeq& source, size_t beam,
                                size_t stack_size, const PatternTrie* trie) {
    if (beam < 1) throw DataError("beam must be >= 1");
    const auto& w = model.weights;
    const size_t len = source.size();
    std::vector<std::vector<Hypothesis>> stacks(len + 1);
    stacks[0].push_back({});
    std::vector<Hypothesis> completed;

    auto lm_context = [&](const TokenSeq& target) {
        TokenSeq ctx(model.lm.order() - 1, kBos);
        ctx.insert(ctx.end(), target.begin(), target.end());
        return ctx;
    };

    for (size_t cov = 0; cov <= len; ++cov) {
        auto& stack = stacks[cov];
        std::sort(stack.begin(), stack.end(), better);
        if (stack.size() > stack_size) stack.resize(stack_size);
        for (const auto& hyp : stack) {
            if (cov == len) {
                if (trie && !trie->terminal(hyp.trie_node)) continue;
                Hypothesis done = hyp;
                done.score += w.lm * model.lm.score_word(lm_context(hyp.target),
                                                        kEos);
                completed.push_back(std::move(done));
                continue;
            }
            for (size_t plen = 1;
                 plen <= std::min(model.max_phrase_len, len - cov); ++plen) {
                const auto* opts = model.options(source, cov, cov + plen);
                std::vector<PhraseOption> passthrough;
                if (!opts && plen == 1 && !model.has_unigram(source[cov])) {
                    passthrough.push_back({{source[cov]}, 0.0, 0.0});
                    opts = &passthrough;
                }
                if (!opts) continue;
                bool is_pass = !passthrough.empty();
                for (const auto& opt : *opts) {
                    Hypothesis next = hyp;
                    next.covered = cov + plen;
                    if (!is_pass)
                        next.score += w.tm_fwd * opt.log_p_fwd +
                                      w.tm_rev * opt.log_p_rev;
                    bool ok = true;
                    for (const auto& tok : opt.target) {
                        if (trie) {
                            next.trie_node = trie->step(next.trie_node, tok);
                            if (next.trie_node == PatternTrie::kNoNode) {
                                ok = false;
                                break;
                            }
                        }
                        next.score +=
                            w.lm * model.lm.score_word(lm_context(next.target),
                                                       tok) +
                            w.word_penalty;
                        next.target.push_back(tok);
                    }
                    if (!ok) continue;
                    next.derivation.push_back(
                        {plen, opt.target, opt.log_p_fwd, opt.log_p_rev,
                         is_pass});
                    stacks[next.covered].push_back(std::move(next));
                }
            }
        }
    }

    // Dedupe by target sequence, keeping the best-scoring derivation.
    std::sort(completed.begin(), completed.end(), better);
    DecodeResult result;
    std::set<std::string> seen;
    for (auto& hyp : completed) {
        std::string key = join(hyp.target);
        if (!seen.insert(key).second) continue;
        result.push_back({std::move(hyp.target), hyp.score,
                          std::move(hyp.derivation)});
        if (result.size() >= beam) break;
    }
    return result;
}

}  // namespace detail

inline DecodeResult decode(const TranslationModel& model,
                           const TokenSeq& source, size_t beam = 50,
                           size_t stack_size = 100) {
    return detail::decode_impl(model, source, beam, stack_size, nullptr);
}

inline DecodeResult decode_constrained(const TranslationModel& model,
                                       const TokenSeq& source,
                                       const PatternTrie& trie,
                                       size_t beam = 50,
                                       size_t stack_size = 100) {
    return detail::decode_impl(model, source, beam, stack_size, &trie);
}

// ---------------------------------------------------------------------------
// Model directory io: phrase-table.tsv, lm.tsv, weights.tsv

inline void save_model(const TranslationModel& model, const std::string& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir + "/phrase-table.tsv");
        out.precision(17);
        for (const auto& [src, opts] : model.phrase_table) {
            for (const auto& opt : opts) {
                out << src << '\t' << join(opt.target) << '\t'
                    << std::exp(opt.log_p_fwd) << '\t'
                    << std::exp(opt.log_p_rev) << "\n";
            }
        }
    }
    model.lm.save(dir + "/lm.tsv");
    {
        std::ofstream out(dir + "/weights.tsv");
        out.precision(17);
        out << "tm_fwd\t" << model.weights.tm_fwd << "\n";
        out << "tm_rev\t" << model.weights.tm_rev << "\n";
        out << "lm\t" << model.weights.lm << "\n";
        out << "word_penalty\t" << model.weights.word_penalty << "\n";
        out << "max_phrase_len\t" << model.max_phrase_len << "\n";
    }
}

inline TranslationModel load_model(const std::string& dir) {
    TranslationModel model;
    for_each_data_line(dir + "/phrase-table.tsv",
                       [&](size_t lineno, const std::string& line) {
                           auto f = split_tsv(line);
                           if (f.size() != 4)
                               throw ParseError(dir + "/phrase-table.tsv:" +
                                                std::to_string(lineno) +
                                                ": expected 4 fields");
                           PhraseOption opt;
                           opt.target = tokenize(f[1]);
                           opt.log_p_fwd = std::log(std::stod(f[2]));
                           opt.log_p_rev = std::log(std::stod(f[3]));
                           model.phrase_table[f[0]].push_back(std::move(opt));
                       });
    model.lm = NgramLm::load(dir + "/lm.tsv");
    for_each_data_line(dir + "/weights.tsv",
                       [&](size_t, const std::string& line) {
                           auto f = split_tsv(line);
                           if (f.size() != 2) return;
                           double v = std::stod(f[1]);
                           if (f[0] == "tm_fwd") model.weights.tm_fwd = v;
                           else if (f[0] == "tm_rev") model.weights.tm_rev = v;
                           else if (f[0] == "lm") model.weights.lm = v;
                           else if (f[0] == "word_penalty")
                               model.weights.word_penalty = v;
                           else if (f[0] == "max_phrase_len")
                               model.max_phrase_len = static_cast<size_t>(v);
                       });
    return model;
}

}  // namespace ckr
