#pragma once

#include "ckr/pattern.hpp"

namespace ckr {

struct ParaphrasePair {
    TokenSeq source_tokens;
    TokenSeq target_tokens;
};

struct PatternPair {
    Pattern source_pattern;
    Pattern target_pattern;
};

enum class RejectReason { SlotCountMismatch, EntityMismatch };

inline const char* to_string(RejectReason r) {
    switch (r) {
        case RejectReason::SlotCountMismatch: return "slot-count-mismatch";
        case RejectReason::EntityMismatch: return "entity-mismatch";
    }
    return "?";
}

// Strict alignment: keep iff the multiset of (concept, entity) slot values
// is identical on both sides. Order does not matter; entity identity is
// entity_id equality, so aliases of one entity pass.
inline std::optional<RejectReason> strict_alignment_filter(
    const PatternPair& p) {
    if (p.source_pattern.slot_count() != p.target_pattern.slot_count())
        return RejectReason::SlotCountMismatch;
    auto key = [](const Pattern& pat) {
        std::vector<std::pair<ConceptId, EntityId>> k;
        for (const auto& sv : pat.slot_values) k.push_back({sv.concept_id, sv.entity});
        std::sort(k.begin(), k.end());
        return k;
    };
    if (key(p.source_pattern) != key(p.target_pattern))
        return RejectReason::EntityMismatch;
    return std::nullopt;
}

struct CorpusDiagnostics {
    size_t input = 0;
    size_t kept = 0;
    std::map<std::string, size_t> rejected_by_reason;

    size_t rejected() const {
        size_t n = 0;
        for (const auto& [_, c] : rejected_by_reason) n += c;
        return n;
    }
};

inline std::vector<PatternPair> build_parallel_patterns(
    const std::vector<ParaphrasePair>& pairs, const KnowledgeBase& kb,
    CorpusDiagnostics* diag = nullptr) {
    std::vector<PatternPair> out;
    CorpusDiagnostics local;
    CorpusDiagnostics& d = diag ? *diag : local;
    for (const auto& pp : pairs) {
        ++d.input;
        PatternPair cand{conceptualize(pp.source_tokens, kb),
                         conceptualize(pp.target_tokens, kb)};
        if (auto reject = strict_alignment_filter(cand)) {
            ++d.rejected_by_reason[to_string(*reject)];
            continue;
        }
        ++d.kept;
        out.push_back(std::move(cand));
    }
    return out;
}

// paraphrases.tsv: source_sentence <TAB> target_sentence
inline std::vector<ParaphrasePair> load_paraphrases(const std::string& path) {
    std::vector<ParaphrasePair> out;
    for_each_data_line(path, [&](size_t lineno, const std::string& line) {
        auto f = split_tsv(line);
        if (f.size() != 2)
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": expected 2 tab-separated fields");
        ParaphrasePair p{tokenize(f[0]), tokenize(f[1])};
        if (p.source_tokens.empty() || p.target_tokens.empty())
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": empty side in paraphrase pair");
        out.push_back(std::move(p));
    });
    return out;
}

inline std::string format_slot_values(const Pattern& p) {
    std::string out;
    for (size_t i = 0; i < p.slot_values.size(); ++i) {
        if (i) out += ';';
        out += p.slot_values[i].concept_id + ":" + p.slot_values[i].entity + ":" +
               join(p.slot_values[i].surface);
    }
    return out;
}

// pattern-pairs.tsv: source_pattern <TAB> target_pattern <TAB> slot_values
inline void save_pattern_pairs(const std::vector<PatternPair>& pairs,
                               const std::string& path) {
    std::ofstream out(path);
    for (const auto& p : pairs) {
        out << p.source_pattern.key() << '\t' << p.target_pattern.key() << '\t'
            << format_slot_values(p.source_pattern) << "\n";
    }
}

// Loads pattern pairs for model training; slot values are not needed there,
// only the token renderings.
inline std::vector<PatternPair> load_pattern_pairs(const std::string& path) {
    std::vector<PatternPair> out;
    for_each_data_line(path, [&](size_t lineno, const std::string& line) {
        auto f = split_tsv(line);
        if (f.size() < 2)
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": expected at least 2 tab-separated fields");
        out.push_back({pattern_from_tokens(tokenize(f[0])),
                       pattern_from_tokens(tokenize(f[1]))});
    });
    return out;
}

}  // namespace ckr
