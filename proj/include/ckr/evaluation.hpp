#pragma once

#include "ckr/matcher.hpp"
#include "ckr/world.hpp"

namespace ckr {

// ---------------------------------------------------------------------------
// Frequency-bucketed test sets. Buckets by entity frequency f in the
// training corpus: [1,10], (10,100], (100,1000], (1000,inf). f = 1 lands in
// the first bucket.

struct BucketedQuery {
    TokenSeq tokens;
    EntityId entity;
    size_t frequency = 0;
    size_t group = 0;  // carried through when known (synthetic worlds)
};

struct FrequencyBuckets {
    std::array<std::vector<BucketedQuery>, 4> buckets;
    size_t dropped_multi_entity = 0;
    size_t dropped_no_entity = 0;

    static size_t bucket_of(size_t f) {
        if (f <= 10) return 0;
        if (f <= 100) return 1;
        if (f <= 1000) return 2;
        return 3;
    }

    size_t total() const {
        size_t n = 0;
        for (const auto& b : buckets) n += b.size();
        return n;
    }
};

// Only queries with exactly one tagged entity are kept; frequency counts
// all surfaces (aliases included) toward the canonical entity.
inline FrequencyBuckets bucket_test_set(
    const std::vector<TestQuery>& queries,
    const std::vector<TokenSeq>& train_corpus, const KnowledgeBase& kb) {
    FrequencyBuckets out;
    auto freq = entity_frequencies(train_corpus, kb);
    for (const auto& q : queries) {
        auto mentions = tag_sentence(q.tokens, kb);
        if (mentions.empty()) {
            ++out.dropped_no_entity;
            continue;
        }
        if (mentions.size() != 1) {
            ++out.dropped_multi_entity;
            continue;
        }
        auto it = freq.find(mentions[0].entity);
        size_t f = it == freq.end() ? 0 : it->second;
        if (f == 0) {
            ++out.dropped_no_entity;
            continue;
        }
        out.buckets[FrequencyBuckets::bucket_of(f)].push_back(
            {q.tokens, mentions[0].entity, f, q.group});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ranking metrics

// Probability that a random positive outranks a random negative, ties half.
// Rank-based computation; brute-force pairwise agrees exactly.
inline double auc(const std::vector<double>& scores,
                  const std::vector<int>& labels) {
    size_t pos = 0, neg = 0;
    for (int l : labels) (l ? pos : neg) += 1;
    if (pos == 0 || neg == 0)
        throw DataError("auc needs both labels present");
    std::vector<size_t> idx(scores.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        return scores[a] < scores[b];
    });
    // average ranks over tie groups
    double pos_rank_sum = 0.0;
    size_t i = 0;
    while (i < idx.size()) {
        size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        double avg_rank = (static_cast<double>(i + 1) + j) / 2.0;  // 1-based
        for (size_t k = i; k < j; ++k)
            if (labels[idx[k]]) pos_rank_sum += avg_rank;
        i = j;
    }
    double p = static_cast<double>(pos);
    return (pos_rank_sum - p * (p + 1) / 2.0) /
           (p * static_cast<double>(neg));
}

struct RecallAtPrecision {
    double recall = 0.0;
    bool attainable = false;
    double threshold = 0.0;
};

inline RecallAtPrecision recall_at_precision(const std::vector<double>& scores,
                                             const std::vector<int>& labels,
                                             double precision_target) {
    RecallAtPrecision out;
    auto threshold = calibrate_threshold(scores, labels, precision_target);
    if (!threshold) return out;  // recall 0, flagged unattainable
    out.attainable = true;
    out.threshold = *threshold;
    size_t tp = 0, pos = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (labels[i]) {
            ++pos;
            if (scores[i] >= *threshold) ++tp;
        }
    }
    out.recall = pos == 0 ? 0.0 : static_cast<double>(tp) / pos;
    return out;
}

// ---------------------------------------------------------------------------
// Experiment harness (offline evaluation protocol on the synthetic world)

struct ExperimentConfig {
    WorldConfig world;
    size_t beam = 50;
    size_t stack_size = 100;
    size_t max_queries_per_bucket = 120;
    TranslationConfig translation;
    TrainHyper classifier;
    AugmentationConfig augmentation;
    std::vector<double> sweep_proportions = {0.08, 0.10, 0.12, 0.16};
};

struct EvalReport {
    nlohmann::json config_echo;
    std::array<double, 4> raw_accuracy{};         // M_gen per bucket
    std::array<double, 4> conceptual_accuracy{};  // conceptual model per bucket
    std::array<size_t, 4> bucket_sizes{};
    double auc_global_base = 0, auc_global_aug = 0;
    double auc_longtail_base = 0, auc_longtail_aug = 0;
    double recall_global_base = 0, recall_global_aug = 0;    // @95% precision
    double recall_longtail_base = 0, recall_longtail_aug = 0;  // @70% precision
    std::vector<std::array<double, 3>> sweep;  // proportion, recall_g, recall_l

    nlohmann::json to_json() const;
    std::string to_markdown() const;
};

namespace detail {

// Slot placeholders in a decoded pattern replaced with the query's matched
// surfaces (occurrence-aligned per concept); nullopt when a slot has no
// counterpart in the query.
inline std::optional<TokenSeq> reinstantiate_top(const Pattern& query_pattern,
                                                 const TokenSeq& decoded) {
    TokenSeq out;
    std::map<ConceptId, size_t> used;
    for (const auto& tok : decoded) {
        if (!is_slot_token(tok)) {
            out.push_back(tok);
            continue;
        }
        ConceptId c = slot_token_concept(tok);
        size_t want = ++used[c];
        size_t seen = 0;
        const SlotValue* match = nullptr;
        for (const auto& sv : query_pattern.slot_values) {
            if (sv.concept_id == c && ++seen == want) {
                match = &sv;
                break;
            }
        }
        if (!match) return std::nullopt;
        out.insert(out.end(), match->surface.begin(), match->surface.end());
    }
    return out;
}

struct ScoredSet {
    std::vector<double> scores;
    std::vector<int> labels;
};

inline ScoredSet score_pairs(const ClassifierModel& model,
                             const std::vector<LabeledPair>& pairs,
                             const KnowledgeBase& kb) {
    ScoredSet out;
    for (const auto& p : pairs) {
        out.scores.push_back(predict_score(model, p.query, p.keyword, kb));
        out.labels.push_back(p.label);
    }
    return out;
}

}  // namespace detail

// Per-bucket top-1 accuracy of the raw-sentence and conceptual translation
// models against the world's ground-truth synonymy.
inline void evaluate_translation(const World& w, const ExperimentConfig& cfg,
                                 EvalReport& report) {
    // raw model: paraphrase sentences as all-literal patterns
    std::vector<PatternPair> raw_corpus;
    raw_corpus.reserve(w.paraphrases.size());
    for (const auto& p : w.paraphrases) {
        PatternPair pp;
        for (const auto& t : p.source_tokens)
            pp.source_pattern.segments.push_back(Literal{t});
        for (const auto& t : p.target_tokens)
            pp.target_pattern.segments.push_back(Literal{t});
        raw_corpus.push_back(std::move(pp));
    }
    TranslationModel raw_model = train_model(raw_corpus, cfg.translation);

    auto conceptual_corpus = build_parallel_patterns(w.paraphrases, w.kb);
    TranslationModel conc_model =
        train_model(conceptual_corpus, cfg.translation);

    std::vector<TokenSeq> train_sources;
    for (const auto& p : w.paraphrases) train_sources.push_back(p.source_tokens);
    auto buckets = bucket_test_set(w.test_queries, train_sources, w.kb);

    for (size_t b = 0; b < 4; ++b) {
        auto queries = buckets.buckets[b];
        if (queries.size() > cfg.max_queries_per_bucket)
            queries.resize(cfg.max_queries_per_bucket);
        report.bucket_sizes[b] = queries.size();
        size_t raw_ok = 0, conc_ok = 0;
        for (const auto& q : queries) {
            auto acceptable = w.acceptable_keywords(q.group, q.entity);
            auto raw_result =
                decode(raw_model, q.tokens, cfg.beam, cfg.stack_size);
            if (!raw_result.empty() &&
                acceptable.count(join(raw_result.front().target)))
                ++raw_ok;

            Pattern qp = conceptualize(q.tokens, w.kb);
            auto conc_result =
                decode(conc_model, qp.tokens(), cfg.beam, cfg.stack_size);
            if (!conc_result.empty()) {
                auto sent =
                    detail::reinstantiate_top(qp, conc_result.front().target);
                if (sent && acceptable.count(join(*sent))) ++conc_ok;
            }
        }
        double n = queries.empty() ? 1.0 : static_cast<double>(queries.size());
        report.raw_accuracy[b] = raw_ok / n;
        report.conceptual_accuracy[b] = conc_ok / n;
    }
}

// AUC and recall@precision for the baseline and concept-augmented
// discriminators, plus the augmentation-proportion sweep.
inline void evaluate_discrimination(const World& w, const ExperimentConfig& cfg,
                                    EvalReport& report) {
    auto train_augmented = [&](double proportion) {
        AugmentationConfig aug_cfg = cfg.augmentation;
        aug_cfg.proportion = proportion;
        auto extra =
            augment_dataset(w.labeled_train, w.kb, aug_cfg, w.config.seed);
        std::vector<LabeledPair> merged = w.labeled_train;
        merged.insert(merged.end(), extra.begin(), extra.end());
        return train_classifier(merged, w.kb, cfg.classifier);
    };

    ClassifierModel base = train_classifier(w.labeled_train, w.kb,
                                            cfg.classifier);
    ClassifierModel aug = train_augmented(cfg.augmentation.proportion);

    auto global_base = detail::score_pairs(base, w.labeled_test, w.kb);
    auto global_aug = detail::score_pairs(aug, w.labeled_test, w.kb);
    auto long_base = detail::score_pairs(base, w.labeled_longtail, w.kb);
    auto long_aug = detail::score_pairs(aug, w.labeled_longtail, w.kb);

    report.auc_global_base = auc(global_base.scores, global_base.labels);
    report.auc_global_aug = auc(global_aug.scores, global_aug.labels);
    report.auc_longtail_base = auc(long_base.scores, long_base.labels);
    report.auc_longtail_aug = auc(long_aug.scores, long_aug.labels);
    report.recall_global_base =
        recall_at_precision(global_base.scores, global_base.labels, 0.95).recall;
    report.recall_global_aug =
        recall_at_precision(global_aug.scores, global_aug.labels, 0.95).recall;
    report.recall_longtail_base =
        recall_at_precision(long_base.scores, long_base.labels, 0.70).recall;
    report.recall_longtail_aug =
        recall_at_precision(long_aug.scores, long_aug.labels, 0.70).recall;

    for (double p : cfg.sweep_proportions) {
        ClassifierModel m = train_augmented(p);
        auto g = detail::score_pairs(m, w.labeled_test, w.kb);
        auto l = detail::score_pairs(m, w.labeled_longtail, w.kb);
        report.sweep.push_back(
            {p, recall_at_precision(g.scores, g.labels, 0.95).recall,
             recall_at_precision(l.scores, l.labels, 0.70).recall});
    }
}

inline EvalReport run_experiments(const ExperimentConfig& cfg) {
    World w = gen_world(cfg.world);
    EvalReport report;
    report.config_echo = {
        {"seed", cfg.world.seed},
        {"n_pairs", cfg.world.n_pairs},
        {"n_entities", cfg.world.n_entities},
        {"n_templates", cfg.world.n_templates},
        {"zipf_exponent", cfg.world.zipf_exponent},
        {"beam", cfg.beam},
        {"stack_size", cfg.stack_size},
        {"augment_proportion", cfg.augmentation.proportion},
    };
    evaluate_translation(w, cfg, report);
    evaluate_discrimination(w, cfg, report);
    return report;
}

inline nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["config"] = config_echo;
    static const char* bucket_names[] = {"1-10", "10-100", "100-1000", ">1000"};
    nlohmann::json table = nlohmann::json::array();
    for (size_t b = 0; b < 4; ++b)
        table.push_back({{"bucket", bucket_names[b]},
                         {"size", bucket_sizes[b]},
                         {"raw_accuracy", raw_accuracy[b]},
                         {"conceptual_accuracy", conceptual_accuracy[b]}});
    j["translation"] = table;
    j["discrimination"] = {
        {"auc_global", {{"base", auc_global_base}, {"augmented", auc_global_aug}}},
        {"auc_longtail",
         {{"base", auc_longtail_base}, {"augmented", auc_longtail_aug}}},
        {"recall_global_at_p95",
         {{"base", recall_global_base}, {"augmented", recall_global_aug}}},
        {"recall_longtail_at_p70",
         {{"base", recall_longtail_base}, {"augmented", recall_longtail_aug}}},
    };
    nlohmann::json sw = nlohmann::json::array();
    for (const auto& row : sweep)
        sw.push_back({{"proportion", row[0]},
                      {"recall_global", row[1]},
                      {"recall_longtail", row[2]}});
    j["sweep"] = sw;
    return j;
}

inline std::string EvalReport::to_markdown() const {
    std::ostringstream out;
    out.precision(4);
    static const char* bucket_names[] = {"1-10", "10-100", "100-1000", ">1000"};
    out << "# Evaluation report\n\n## Translation accuracy by entity "
           "frequency\n\n";
    out << "| Frequency | n | raw model | conceptual model |\n";
    out << "|---|---|---|---|\n";
    for (size_t b = 0; b < 4; ++b)
        out << "| " << bucket_names[b] << " | " << bucket_sizes[b] << " | "
            << raw_accuracy[b] << " | " << conceptual_accuracy[b] << " |\n";
    out << "\n## Discrimination\n\n";
    out << "| Metric | base | augmented |\n|---|---|---|\n";
    out << "| AUC (global) | " << auc_global_base << " | " << auc_global_aug
        << " |\n";
    out << "| AUC (long-tail) | " << auc_longtail_base << " | "
        << auc_longtail_aug << " |\n";
    out << "| Recall@P95 (global) | " << recall_global_base << " | "
        << recall_global_aug << " |\n";
    out << "| Recall@P70 (long-tail) | " << recall_longtail_base << " | "
        << recall_longtail_aug << " |\n";
    out << "\n## Augmentation proportion sweep\n\n";
    out << "| Proportion | Recall@P95 (global) | Recall@P70 (long-tail) "
           "|\n|---|---|---|\n";
    for (const auto& row : sweep)
        out << "| " << row[0] << " | " << row[1] << " | " << row[2] << " |\n";
    return out.str();
}

}  // namespace ckr
