#pragma once

#include <cmath>
#include <unordered_map>

#include "ckr/core.hpp"

namespace ckr {

inline constexpr const char* kBos = "<s>";
inline constexpr const char* kEos = "</s>";

// N-gram language model with stupid backoff. Slot placeholder tokens are
// ordinary vocabulary items. Scores are log-scores, not normalized
// probabilities at backed-off orders.
class NgramLm {
  public:
    NgramLm() = default;
    NgramLm(size_t n, double backoff_factor = 0.4, double unknown_floor = -10.0)
        : n_(n), log_backoff_(std::log(backoff_factor)),
          unknown_floor_(unknown_floor) {}

    size_t order() const { return n_; }
    double backoff_factor() const { return std::exp(log_backoff_); }
    double unknown_floor() const { return unknown_floor_; }

    void train(const std::vector<TokenSeq>& sentences) {
        // ngram count + context count per order, then conditional logprobs
        std::unordered_map<std::string, size_t> count, context;
        size_t total_tokens = 0;
        for (const auto& sent : sentences) {
            TokenSeq padded(n_ - 1, kBos);
            padded.insert(padded.end(), sent.begin(), sent.end());
            padded.push_back(kEos);
            for (size_t i = n_ - 1; i < padded.size(); ++i) {
                ++total_tokens;
                for (size_t k = 1; k <= n_; ++k) {
                    if (i + 1 < k) break;
                    std::string gram = range_key(padded, i + 1 - k, i + 1);
                    ++count[gram];
                    if (k > 1) ++context[range_key(padded, i + 1 - k, i)];
                }
            }
        }
        logprob_.clear();
        for (const auto& [gram, c] : count) {
            size_t space = gram.rfind(' ');
            double denom;
            if (space == std::string::npos) {
                denom = static_cast<double>(total_tokens);
            } else {
                denom = static_cast<double>(context.at(gram.substr(0, space)));
            }
            logprob_[gram] = std::log(static_cast<double>(c) / denom);
        }
    }

    // log-score of `word` given up to n-1 preceding tokens in `context`.
    double score_word(const TokenSeq& context, const Token& word) const {
        size_t max_ctx = std::min(context.size(), n_ - 1);
        double backoff = 0.0;
        for (size_t ctx_len = max_ctx;; --ctx_len) {
            std::string key;
            for (size_t i = context.size() - ctx_len; i < context.size(); ++i) {
                key += context[i];
                key += ' ';
            }
            key += word;
            auto it = logprob_.find(key);
            if (it != logprob_.end()) return backoff + it->second;
            if (ctx_len == 0) break;
            backoff += log_backoff_;
        }
        return backoff + unknown_floor_;
    }

    // Sum of per-token log-scores over the sequence with boundary markers.
    double logprob(const TokenSeq& tokens) const {
        TokenSeq context(n_ - 1, kBos);
        double total = 0.0;
        for (const auto& tok : tokens) {
            total += score_word(context, tok);
            context.push_back(tok);
        }
        total += score_word(context, kEos);
        return total;
    }

    // lm.tsv: header line "#n <n> backoff <f> floor <f>", then ngram\tlogprob.
    void save(const std::string& path) const {
        std::ofstream out(path);
        out << "#n " << n_ << " backoff " << backoff_factor() << " floor "
            << unknown_floor_ << "\n";
        std::vector<std::pair<std::string, double>> rows(logprob_.begin(),
                                                         logprob_.end());
        std::sort(rows.begin(), rows.end());
        out.precision(17);
        for (const auto& [gram, lp] : rows) out << gram << '\t' << lp << "\n";
    }

    static NgramLm load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open lm file: " + path);
        std::string header;
        std::getline(in, header);
        std::istringstream hs(header);
        std::string tag;
        size_t n;
        double backoff, floor;
        hs >> tag >> n >> tag >> backoff >> tag >> floor;
        if (n == 0) throw ParseError("bad lm header: " + header);
        NgramLm lm(n, backoff, floor);
        std::string line;
        size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            auto f = split_tsv(line);
            if (f.size() != 2)
                throw ParseError(path + ":" + std::to_string(lineno) +
                                 ": expected ngram<TAB>logprob");
            lm.logprob_[f[0]] = std::stod(f[1]);
        }
        return lm;
    }

  private:
    static std::string range_key(const TokenSeq& toks, size_t b, size_t e) {
        std::string key;
        for (size_t i = b; i < e; ++i) {
            if (i > b) key += ' ';
            key += toks[i];
        }
        return key;
    }

    size_t n_ = 3;
    double log_backoff_ = std::log(0.4);
    double unknown_floor_ = -10.0;
    std::unordered_map<std::string, double> logprob_;
};

}  // namespace ckr
