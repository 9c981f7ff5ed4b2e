#pragma once

#include <chrono>

#include "json.hpp"

#include "ckr/repository.hpp"

namespace ckr {

struct MatchConfig {
    size_t beam = 50;
    size_t stack_size = 100;
    bool use_cache = false;
    size_t max_instantiations_per_pattern = 64;
    size_t max_total_instantiations = 256;
    size_t candidate_cap = 200;
};

struct Candidate {
    TokenSeq keyword;
    double score = 0.0;
    std::string stage;  // "join" or "cluster"
};

struct MatchTrace {
    TokenSeq query;
    Pattern query_pattern;
    bool cache_hit = false;
    DecodeResult retrieved_patterns;
    std::vector<std::string> skipped_patterns;  // unbindable targets
    std::vector<std::pair<TokenSeq, double>> instantiations;
    std::vector<Candidate> post_join;
    std::vector<Candidate> final_candidates;
    std::map<std::string, double> timing_ms;
};

namespace detail {

class StageTimer {
  public:
    explicit StageTimer(std::map<std::string, double>& out) : out_(out) {}
    void mark(const std::string& stage) {
        auto now = std::chrono::steady_clock::now();
        out_[stage] =
            std::chrono::duration<double, std::milli>(now - last_).count();
        last_ = now;
    }

  private:
    std::map<std::string, double>& out_;
    std::chrono::steady_clock::time_point last_ =
        std::chrono::steady_clock::now();
};

// Binds each target slot (concept c, occurrence k) to the alias list of the
// entity in the query's k-th slot of concept c. nullopt when the query lacks
// a required slot.
inline std::optional<std::vector<std::vector<TokenSeq>>> bind_slots(
    const Pattern& target, const Pattern& query_pattern,
    const KnowledgeBase& kb) {
    std::vector<std::vector<TokenSeq>> bindings;
    for (const auto& seg : target.segments) {
        const auto* slot = std::get_if<Slot>(&seg);
        if (!slot) continue;
        size_t seen = 0;
        const SlotValue* match = nullptr;
        for (const auto& sv : query_pattern.slot_values) {
            if (sv.concept_id != slot->concept_id) continue;
            if (++seen == slot->occurrence) {
                match = &sv;
                break;
            }
        }
        if (!match) return std::nullopt;
        bindings.push_back(aliases_of(match->entity, kb.lexicon));
    }
    return bindings;
}

}  // namespace detail

// The four-step pipeline: conceptualize, constrained pattern decoding (or
// cache lookup), alias instantiation, repository join, cluster expansion.
inline MatchTrace retrieve(const TokenSeq& query, const KnowledgeBase& kb,
                           const TranslationModel& model,
                           const KeywordRepository& repo,
                           const PatternTrie& trie,
                           const SynonymClusters& clusters,
                           const MatchConfig& config = {},
                           const LookupCache* cache = nullptr) {
    MatchTrace trace;
    trace.query = query;
    detail::StageTimer timer(trace.timing_ms);

    // step 1: query conceptualization
    trace.query_pattern = conceptualize(query, kb);
    timer.mark("conceptualize");

    // step 2: pattern matching (lookup table for frequent patterns,
    // constrained decoding otherwise)
    if (config.use_cache && cache) {
        if (const auto* hit = cache->lookup(trace.query_pattern.key())) {
            trace.cache_hit = true;
            trace.retrieved_patterns = *hit;
        }
    }
    if (!trace.cache_hit) {
        trace.retrieved_patterns =
            decode_constrained(model, trace.query_pattern.tokens(), trie,
                               config.beam, config.stack_size);
    }
    timer.mark("pattern_match");

    // step 3: instantiation with the query's entities and their aliases
    for (const auto& entry : trace.retrieved_patterns) {
        if (trace.instantiations.size() >= config.max_total_instantiations)
            break;
        Pattern target = pattern_from_tokens(entry.target);
        auto bindings = detail::bind_slots(target, trace.query_pattern, kb);
        if (!bindings) {
            trace.skipped_patterns.push_back(join(entry.target));
            continue;
        }
        size_t room = config.max_total_instantiations -
                      trace.instantiations.size();
        auto sentences = instantiate(
            target, *bindings,
            std::min(config.max_instantiations_per_pattern, room));
        for (auto& s : sentences)
            trace.instantiations.push_back({std::move(s), entry.score});
    }
    timer.mark("instantiate");

    // step 4a: join with the real keyword repository
    {
        std::set<std::string> seen;
        for (const auto& [sent, score] : trace.instantiations) {
            if (!repo.keywords.count(join(sent))) continue;
            if (!seen.insert(join(sent)).second) continue;
            trace.post_join.push_back({sent, score, "join"});
        }
    }
    timer.mark("join");

    // step 4b: synonym cluster expansion; join survivors rank first
    {
        std::set<std::string> seen;
        for (const auto& c : trace.post_join) {
            if (seen.insert(join(c.keyword)).second)
                trace.final_candidates.push_back(c);
        }
        for (const auto& c : trace.post_join) {
            for (const auto& member : clusters.cluster_of(join(c.keyword))) {
                if (!seen.insert(member).second) continue;
                trace.final_candidates.push_back(
                    {tokenize(member), c.score, "cluster"});
            }
        }
        if (trace.final_candidates.size() > config.candidate_cap)
            trace.final_candidates.resize(config.candidate_cap);
    }
    timer.mark("expand");
    return trace;
}

// Online path: cache lookup with constrained-decoding fallback.
inline MatchTrace retrieve_online(const TokenSeq& query,
                                  const KnowledgeBase& kb,
                                  const TranslationModel& model,
                                  const KeywordRepository& repo,
                                  const PatternTrie& trie,
                                  const SynonymClusters& clusters,
                                  const LookupCache& cache,
                                  MatchConfig config = {}) {
    config.use_cache = true;
    return retrieve(query, kb, model, repo, trie, clusters, config, &cache);
}

inline nlohmann::json trace_to_json(const MatchTrace& trace,
                                    bool include_timing = true) {
    nlohmann::json j;
    j["query"] = join(trace.query);
    j["query_pattern"] = trace.query_pattern.key();
    nlohmann::json slots = nlohmann::json::array();
    for (const auto& sv : trace.query_pattern.slot_values)
        slots.push_back({{"concept", sv.concept_id},
                         {"entity", sv.entity},
                         {"surface", join(sv.surface)}});
    j["slot_values"] = slots;
    j["cache_hit"] = trace.cache_hit;
    nlohmann::json pats = nlohmann::json::array();
    for (const auto& e : trace.retrieved_patterns)
        pats.push_back({{"pattern", join(e.target)}, {"score", e.score}});
    j["retrieved_patterns"] = pats;
    j["skipped_patterns"] = trace.skipped_patterns;
    nlohmann::json insts = nlohmann::json::array();
    for (const auto& [sent, score] : trace.instantiations)
        insts.push_back({{"sentence", join(sent)}, {"score", score}});
    j["instantiations"] = insts;
    auto cand_json = [](const std::vector<Candidate>& cs) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& c : cs)
            arr.push_back({{"keyword", join(c.keyword)},
                           {"score", c.score},
                           {"stage", c.stage}});
        return arr;
    };
    j["post_join"] = cand_json(trace.post_join);
    j["final_candidates"] = cand_json(trace.final_candidates);
    if (include_timing) j["timing_ms"] = trace.timing_ms;
    return j;
}

}  // namespace ckr
