#pragma once

#include <optional>
#include <variant>

#include "ckr/knowledge_base.hpp"

namespace ckr {

struct Mention {
    size_t begin = 0, end = 0;  // token interval [begin, end)
    EntityId entity;
    ConceptId refined_concept;
    std::optional<ConceptId> core_concept;
};

struct SlotValue {
    ConceptId concept_id;
    EntityId entity;
    TokenSeq surface;

    bool operator==(const SlotValue&) const = default;
    bool operator<(const SlotValue& o) const {
        return std::tie(concept_id, entity, surface) <
               std::tie(o.concept_id, o.entity, o.surface);
    }
};

struct Literal {
    Token token;
    bool operator==(const Literal&) const = default;
};
struct Slot {
    ConceptId concept_id;
    size_t occurrence = 1;  // 1-based, k-th slot of this concept
    bool operator==(const Slot&) const = default;
};
using Segment = std::variant<Literal, Slot>;

// A sentence with core-concept mentions abstracted into slots; slot_values
// keep the (concept, entity, surface) each slot was abstracted from,
// aligned 1:1 with slots left to right.
struct Pattern {
    std::vector<Segment> segments;
    std::vector<SlotValue> slot_values;

    size_t slot_count() const {
        size_t n = 0;
        for (const auto& s : segments)
            if (std::holds_alternative<Slot>(s)) ++n;
        return n;
    }

    // Slot placeholders rendered as "[concept_id]".
    TokenSeq tokens() const {
        TokenSeq out;
        for (const auto& s : segments) {
            if (const auto* lit = std::get_if<Literal>(&s))
                out.push_back(lit->token);
            else
                out.push_back("[" + std::get<Slot>(s).concept_id + "]");
        }
        return out;
    }

    std::string key() const { return join(tokens()); }

    bool operator==(const Pattern& o) const {
        return segments == o.segments && slot_values == o.slot_values;
    }
};

inline bool is_slot_token(const Token& t) {
    return t.size() >= 3 && t.front() == '[' && t.back() == ']';
}

inline ConceptId slot_token_concept(const Token& t) {
    return t.substr(1, t.size() - 2);
}

// Rebuilds a Pattern (without slot values) from its token rendering.
inline Pattern pattern_from_tokens(const TokenSeq& toks) {
    Pattern p;
    std::map<ConceptId, size_t> occ;
    for (const auto& t : toks) {
        if (is_slot_token(t)) {
            ConceptId c = slot_token_concept(t);
            p.segments.push_back(Slot{c, ++occ[c]});
        } else {
            p.segments.push_back(Literal{t});
        }
    }
    return p;
}

// Gazetteer tagging: leftmost-longest non-overlapping mentions; among
// equal-length matches at the same start, smallest entity_id wins.
inline std::vector<Mention> tag_sentence(const TokenSeq& tokens,
                                         const KnowledgeBase& kb) {
    std::vector<Mention> out;
    size_t i = 0;
    while (i < tokens.size()) {
        size_t max_len = std::min(kb.index.max_surface_len, tokens.size() - i);
        bool matched = false;
        for (size_t len = max_len; len >= 1 && !matched; --len) {
            const auto* ids = kb.index.lookup(tokens, i, i + len);
            if (!ids) continue;
            EntityId best = *std::min_element(ids->begin(), ids->end());
            const Entity* e = kb.lexicon.find(best);
            Mention m;
            m.begin = i;
            m.end = i + len;
            m.entity = best;
            m.refined_concept = e->refined_concept;
            m.core_concept = coarse_concept_of(e->refined_concept, kb.taxonomy);
            out.push_back(std::move(m));
            i += len;
            matched = true;
        }
        if (!matched) ++i;
    }
    return out;
}

// Mentions that roll up to a core concept become slots; everything else
// (including mentions with no core ancestor) stays literal.
inline Pattern conceptualize(const TokenSeq& tokens, const KnowledgeBase& kb) {
    Pattern p;
    auto mentions = tag_sentence(tokens, kb);
    std::map<ConceptId, size_t> occ;
    size_t i = 0, m = 0;
    while (i < tokens.size()) {
        if (m < mentions.size() && mentions[m].begin == i &&
            mentions[m].core_concept) {
            const auto& men = mentions[m];
            ConceptId core = *men.core_concept;
            p.segments.push_back(Slot{core, ++occ[core]});
            p.slot_values.push_back(
                {core, men.entity,
                 TokenSeq(tokens.begin() + men.begin, tokens.begin() + men.end)});
            i = men.end;
            ++m;
        } else {
            if (m < mentions.size() && mentions[m].begin == i) ++m;  // non-core
            p.segments.push_back(Literal{tokens[i]});
            ++i;
        }
    }
    return p;
}

// Cartesian product of per-slot candidate surfaces, leftmost slot varying
// slowest, truncated at max_results.
inline std::vector<TokenSeq> instantiate(
    const Pattern& pattern, const std::vector<std::vector<TokenSeq>>& bindings,
    size_t max_results = 64) {
    size_t n_slots = pattern.slot_count();
    if (bindings.size() != n_slots)
        throw DataError("binding count does not match slot count");
    for (size_t i = 0; i < bindings.size(); ++i)
        if (bindings[i].empty())
            throw DataError("missing binding for slot " + std::to_string(i));

    std::vector<TokenSeq> out;
    std::vector<size_t> idx(n_slots, 0);
    while (out.size() < max_results) {
        TokenSeq sent;
        size_t slot = 0;
        for (const auto& seg : pattern.segments) {
            if (const auto* lit = std::get_if<Literal>(&seg)) {
                sent.push_back(lit->token);
            } else {
                const TokenSeq& surf = bindings[slot][idx[slot]];
                sent.insert(sent.end(), surf.begin(), surf.end());
                ++slot;
            }
        }
        out.push_back(std::move(sent));
        // advance odometer, rightmost fastest
        size_t k = n_slots;
        while (k > 0) {
            --k;
            if (++idx[k] < bindings[k].size()) break;
            idx[k] = 0;
            if (k == 0) return out;
        }
        if (n_slots == 0) break;
    }
    return out;
}

}  // namespace ckr
