#pragma once

#include <random>

#include "json.hpp"

#include "ckr/pattern.hpp"

namespace ckr {

enum class MatchType { Exact, Phrase, Broad };
enum class PairOrigin { Original, Augmented };

inline const char* to_string(MatchType m) {
    switch (m) {
        case MatchType::Exact: return "exact";
        case MatchType::Phrase: return "phrase";
        case MatchType::Broad: return "broad";
    }
    return "?";
}

inline MatchType match_type_from(const std::string& s) {
    if (s == "exact") return MatchType::Exact;
    if (s == "phrase") return MatchType::Phrase;
    if (s == "broad") return MatchType::Broad;
    throw ParseError("unknown match type: " + s);
}

struct LabeledPair {
    TokenSeq query;
    TokenSeq keyword;
    int label = 0;  // 1 = synonymous
    MatchType match_type = MatchType::Exact;
    PairOrigin origin = PairOrigin::Original;
};

// ---------------------------------------------------------------------------
// Features

struct FeatureVector {
    std::vector<double> values;
};

inline const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = {
        "token_jaccard",    "char_edit_similarity", "pattern_equal",
        "slot_agreement",   "slot_disagreement",    "length_difference",
        "bow_cosine",
    };
    return names;
}

namespace detail {

inline size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= b.size(); ++j) {
            size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

// Character multiset overlap ratio: |intersection| / max(|a|, |b|).
inline double char_overlap(const std::string& a, const std::string& b) {
    std::map<char, size_t> ca, cb;
    for (char c : a) ++ca[c];
    for (char c : b) ++cb[c];
    size_t inter = 0;
    for (const auto& [c, n] : ca) {
        auto it = cb.find(c);
        if (it != cb.end()) inter += std::min(n, it->second);
    }
    size_t denom = std::max(a.size(), b.size());
    return denom == 0 ? 1.0 : static_cast<double>(inter) / denom;
}

// Pairs up the k-th slot of each concept on both sides.
struct SlotAlignment {
    size_t aligned = 0;
    size_t agreeing = 0;
};

inline SlotAlignment align_slots(const Pattern& q, const Pattern& k) {
    SlotAlignment out;
    std::map<ConceptId, std::vector<EntityId>> qs, ks;
    for (const auto& sv : q.slot_values) qs[sv.concept_id].push_back(sv.entity);
    for (const auto& sv : k.slot_values) ks[sv.concept_id].push_back(sv.entity);
    for (const auto& [c, qv] : qs) {
        auto it = ks.find(c);
        if (it == ks.end()) continue;
        size_t n = std::min(qv.size(), it->second.size());
        for (size_t i = 0; i < n; ++i) {
            ++out.aligned;
            if (qv[i] == it->second[i]) ++out.agreeing;
        }
    }
    return out;
}

}  // namespace detail

inline FeatureVector extract_features(const TokenSeq& query,
                                      const TokenSeq& keyword,
                                      const KnowledgeBase& kb) {
    FeatureVector fv;
    std::set<Token> qset(query.begin(), query.end());
    std::set<Token> kset(keyword.begin(), keyword.end());
    std::vector<Token> inter;
    std::set_intersection(qset.begin(), qset.end(), kset.begin(), kset.end(),
                          std::back_inserter(inter));
    std::set<Token> uni = qset;
    uni.insert(kset.begin(), kset.end());
    double jaccard = uni.empty()
                         ? 1.0
                         : static_cast<double>(inter.size()) / uni.size();

    std::string qs = join(query), ks = join(keyword);
    size_t max_len = std::max(qs.size(), ks.size());
    double edit_sim =
        max_len == 0 ? 1.0
                     : 1.0 - static_cast<double>(detail::edit_distance(qs, ks)) /
                                 max_len;

    Pattern qp = conceptualize(query, kb), kp = conceptualize(keyword, kb);
    double pattern_equal = qp.tokens() == kp.tokens() ? 1.0 : 0.0;

    auto sa = detail::align_slots(qp, kp);
    double agreement;
    if (sa.aligned == 0) {
        agreement = qp.slot_count() == 0 && kp.slot_count() == 0 ? 1.0 : 0.0;
    } else {
        agreement = static_cast<double>(sa.agreeing) / sa.aligned;
    }
    double disagreement = sa.aligned > sa.agreeing ? 1.0 : 0.0;

    double len_diff =
        std::max(query.size(), keyword.size()) == 0
            ? 0.0
            : static_cast<double>(
                  std::max(query.size(), keyword.size()) -
                  std::min(query.size(), keyword.size())) /
                  std::max(query.size(), keyword.size());

    std::map<Token, size_t> qc, kc;
    for (const auto& t : query) ++qc[t];
    for (const auto& t : keyword) ++kc[t];
    double dot = 0, nq = 0, nk = 0;
    for (const auto& [t, c] : qc) {
        nq += static_cast<double>(c) * c;
        auto it = kc.find(t);
        if (it != kc.end()) dot += static_cast<double>(c) * it->second;
    }
    for (const auto& [t, c] : kc) nk += static_cast<double>(c) * c;
    double cosine = (nq == 0 || nk == 0) ? 0.0 : dot / std::sqrt(nq * nk);

    fv.values = {jaccard, edit_sim, pattern_equal, agreement,
                 disagreement, len_diff, cosine};
    return fv;
}

// ---------------------------------------------------------------------------
// Linear discriminator

struct ClassifierModel {
    std::vector<double> weights;  // per feature, fixed order
    double bias = 0.0;
    std::map<double, double> thresholds;  // precision target -> threshold

    double score(const FeatureVector& fv) const {
        double z = bias;
        for (size_t i = 0; i < weights.size(); ++i)
            z += weights[i] * fv.values[i];
        return 1.0 / (1.0 + std::exp(-z));
    }
};

struct TrainHyper {
    double learning_rate = 0.5;
    size_t epochs = 200;
    size_t batch = 64;
    uint64_t seed = 7;
    double l2 = 1e-4;
};

// Mean logistic loss and its gradient (d/dweights, d/dbias) on a batch.
inline double logistic_loss_and_gradient(
    const std::vector<double>& weights, double bias,
    const std::vector<FeatureVector>& features, const std::vector<int>& labels,
    double l2, std::vector<double>* grad_w, double* grad_b) {
    size_t n = features.size();
    size_t d = weights.size();
    grad_w->assign(d, 0.0);
    *grad_b = 0.0;
    double loss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double z = bias;
        for (size_t k = 0; k < d; ++k) z += weights[k] * features[i].values[k];
        double p = 1.0 / (1.0 + std::exp(-z));
        double y = labels[i];
        // clamp for numerical safety in the log
        double pc = std::min(std::max(p, 1e-12), 1.0 - 1e-12);
        loss += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
        double err = p - y;
        for (size_t k = 0; k < d; ++k) (*grad_w)[k] += err * features[i].values[k];
        *grad_b += err;
    }
    loss /= n;
    for (size_t k = 0; k < d; ++k) {
        (*grad_w)[k] = (*grad_w)[k] / n + l2 * weights[k];
        loss += 0.5 * l2 * weights[k] * weights[k];
    }
    *grad_b /= n;
    return loss;
}

inline ClassifierModel train_classifier(const std::vector<LabeledPair>& pairs,
                                        const KnowledgeBase& kb,
                                        const TrainHyper& hyper = {},
                                        std::vector<double>* loss_history =
                                            nullptr) {
    bool has_pos = false, has_neg = false;
    for (const auto& p : pairs) (p.label ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
        throw DataError("training data must contain both labels");

    std::vector<FeatureVector> features;
    std::vector<int> labels;
    features.reserve(pairs.size());
    for (const auto& p : pairs) {
        features.push_back(extract_features(p.query, p.keyword, kb));
        labels.push_back(p.label);
    }

    ClassifierModel model;
    model.weights.assign(feature_names().size(), 0.0);
    std::mt19937_64 rng(hyper.seed);
    std::vector<size_t> order(pairs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<double> gw;
    double gb;
    for (size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (size_t start = 0; start < order.size(); start += hyper.batch) {
            size_t end = std::min(order.size(), start + hyper.batch);
            std::vector<FeatureVector> bf;
            std::vector<int> bl;
            for (size_t i = start; i < end; ++i) {
                bf.push_back(features[order[i]]);
                bl.push_back(labels[order[i]]);
            }
            logistic_loss_and_gradient(model.weights, model.bias, bf, bl,
                                       hyper.l2, &gw, &gb);
            for (size_t k = 0; k < model.weights.size(); ++k)
                model.weights[k] -= hyper.learning_rate * gw[k];
            model.bias -= hyper.learning_rate * gb;
        }
        if (loss_history) {
            loss_history->push_back(logistic_loss_and_gradient(
                model.weights, model.bias, features, labels, hyper.l2, &gw,
                &gb));
        }
    }
    return model;
}

inline double predict_score(const ClassifierModel& model, const TokenSeq& query,
                            const TokenSeq& keyword, const KnowledgeBase& kb) {
    return model.score(extract_features(query, keyword, kb));
}

// Smallest threshold (classify positive iff score >= t) reaching the
// precision target; recall is maximal there since recall is non-increasing
// in the threshold.
inline std::optional<double> calibrate_threshold(
    const std::vector<double>& scores, const std::vector<int>& labels,
    double precision_target) {
    std::vector<double> cands(scores.begin(), scores.end());
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    for (double t : cands) {
        size_t tp = 0, fp = 0;
        for (size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] < t) continue;
            if (labels[i]) ++tp;
            else ++fp;
        }
        if (tp + fp == 0) continue;
        double precision = static_cast<double>(tp) / (tp + fp);
        if (precision >= precision_target) return t;
    }
    return std::nullopt;
}

inline std::optional<double> calibrate_threshold(
    const ClassifierModel& model, const std::vector<LabeledPair>& dev,
    const KnowledgeBase& kb, double precision_target) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& p : dev) {
        scores.push_back(predict_score(model, p.query, p.keyword, kb));
        labels.push_back(p.label);
    }
    return calibrate_threshold(scores, labels, precision_target);
}

// ---------------------------------------------------------------------------
// Concept augmentation: replace aligned slot entities with rare same-concept
// entities; literally confusable entities are used for negative variants.

struct AugmentationConfig {
    size_t rare_frequency_threshold = 2;
    double proportion = 0.12;  // fraction of |train|
    size_t confusable_max_edit = 2;
    double confusable_min_overlap = 0.5;
};

struct AugmentDiagnostics {
    size_t skipped_no_rare_entity = 0;
    size_t eligible_pairs = 0;
};

namespace detail {

struct AlignedSlot {
    ConceptId concept_id;
    EntityId entity;
    TokenSeq query_surface;
    TokenSeq keyword_surface;
};

// Aligned slots carrying the same entity on both sides.
inline std::vector<AlignedSlot> shared_entity_slots(const Pattern& qp,
                                                    const Pattern& kp) {
    std::vector<AlignedSlot> out;
    std::map<ConceptId, std::vector<const SlotValue*>> qs, ks;
    for (const auto& sv : qp.slot_values) qs[sv.concept_id].push_back(&sv);
    for (const auto& sv : kp.slot_values) ks[sv.concept_id].push_back(&sv);
    for (const auto& [c, qv] : qs) {
        auto it = ks.find(c);
        if (it == ks.end()) continue;
        size_t n = std::min(qv.size(), it->second.size());
        for (size_t i = 0; i < n; ++i) {
            if (qv[i]->entity == it->second[i]->entity)
                out.push_back({c, qv[i]->entity, qv[i]->surface,
                               it->second[i]->surface});
        }
    }
    return out;
}

inline TokenSeq replace_surface(const TokenSeq& tokens, const TokenSeq& from,
                                const TokenSeq& to) {
    for (size_t i = 0; i + from.size() <= tokens.size(); ++i) {
        if (std::equal(from.begin(), from.end(), tokens.begin() + i)) {
            TokenSeq out(tokens.begin(), tokens.begin() + i);
            out.insert(out.end(), to.begin(), to.end());
            out.insert(out.end(), tokens.begin() + i + from.size(),
                       tokens.end());
            return out;
        }
    }
    return tokens;
}

}  // namespace detail

// Entity frequency over a corpus of token sequences; alias occurrences count
// toward the canonical entity.
inline std::map<EntityId, size_t> entity_frequencies(
    const std::vector<TokenSeq>& corpus, const KnowledgeBase& kb) {
    std::map<EntityId, size_t> freq;
    for (const auto& sent : corpus)
        for (const auto& m : tag_sentence(sent, kb)) ++freq[m.entity];
    return freq;
}

inline std::vector<LabeledPair> augment_dataset(
    const std::vector<LabeledPair>& train, const KnowledgeBase& kb,
    const AugmentationConfig& cfg, uint64_t seed,
    AugmentDiagnostics* diag = nullptr) {
    AugmentDiagnostics local;
    AugmentDiagnostics& d = diag ? *diag : local;
    size_t target =
        static_cast<size_t>(std::llround(cfg.proportion * train.size()));
    std::vector<LabeledPair> out;
    if (target == 0) return out;

    // rare entities per core concept
    std::vector<TokenSeq> corpus;
    for (const auto& p : train) {
        corpus.push_back(p.query);
        corpus.push_back(p.keyword);
    }
    auto freq = entity_frequencies(corpus, kb);
    std::map<ConceptId, std::vector<const Entity*>> rare_by_concept;
    for (const auto& e : kb.lexicon.entities) {
        auto core = coarse_concept_of(e.refined_concept, kb.taxonomy);
        if (!core) continue;
        auto it = freq.find(e.id);
        size_t f = it == freq.end() ? 0 : it->second;
        if (f <= cfg.rare_frequency_threshold)
            rare_by_concept[*core].push_back(&e);
    }

    // eligible pairs: >=1 aligned slot with the same entity on both sides
    struct Eligible {
        const LabeledPair* pair;
        std::vector<detail::AlignedSlot> slots;
    };
    std::vector<Eligible> eligible;
    for (const auto& p : train) {
        auto slots = detail::shared_entity_slots(conceptualize(p.query, kb),
                                                 conceptualize(p.keyword, kb));
        if (!slots.empty()) eligible.push_back({&p, std::move(slots)});
    }
    d.eligible_pairs = eligible.size();
    if (eligible.empty()) return out;

    std::mt19937_64 rng(seed);
    auto pick = [&rng](size_t n) {
        return std::uniform_int_distribution<size_t>(0, n - 1)(rng);
    };
    auto pick_surface = [&](const Entity* e) -> const TokenSeq& {
        size_t n = 1 + e->aliases.size();
        size_t i = pick(n);
        return i == 0 ? e->canonical_surface : e->aliases[i - 1];
    };
    auto confusable_of = [&](const Entity* orig, const ConceptId& concept_id,
                             const EntityId& exclude) -> const Entity* {
        const auto& cands = rare_by_concept[concept_id];
        std::vector<const Entity*> confusable, fallback;
        std::string orig_surface = join(orig->canonical_surface);
        for (const Entity* e : cands) {
            if (e->id == exclude) continue;
            fallback.push_back(e);
            std::string s = join(e->canonical_surface);
            if (detail::edit_distance(orig_surface, s) <=
                    cfg.confusable_max_edit ||
                detail::char_overlap(orig_surface, s) >=
                    cfg.confusable_min_overlap)
                confusable.push_back(e);
        }
        if (!confusable.empty()) return confusable[pick(confusable.size())];
        if (!fallback.empty()) return fallback[pick(fallback.size())];
        return nullptr;
    };

    size_t attempts = 0;
    const size_t max_attempts = 100 * target + 100;
    while (out.size() < target && attempts++ < max_attempts) {
        const Eligible& el = eligible[pick(eligible.size())];
        const auto& slot = el.slots[pick(el.slots.size())];
        const auto& rare = rare_by_concept[slot.concept_id];
        if (rare.empty()) {
            ++d.skipped_no_rare_entity;
            continue;
        }
        const Entity* e_same = rare[pick(rare.size())];
        const LabeledPair& src = *el.pair;

        auto make = [&](const TokenSeq& q_surf, const TokenSeq& k_surf,
                        int label) {
            LabeledPair aug;
            aug.query = detail::replace_surface(src.query, slot.query_surface,
                                                q_surf);
            aug.keyword = detail::replace_surface(src.keyword,
                                                  slot.keyword_surface, k_surf);
            aug.label = label;
            aug.match_type = src.match_type;
            aug.origin = PairOrigin::Augmented;
            return aug;
        };

        if (src.label == 1) {
            // positive variant: same rare entity on both sides
            out.push_back(make(e_same->canonical_surface, pick_surface(e_same),
                               1));
            if (out.size() >= target) break;
            // negative variant: different, literally confusable entities
            const Entity* e_other = confusable_of(e_same, slot.concept_id,
                                                  e_same->id);
            if (e_other)
                out.push_back(make(e_same->canonical_surface,
                                   e_other->canonical_surface, 0));
        } else {
            bool same = std::uniform_real_distribution<double>(0.0, 1.0)(rng) <
                        0.5;
            if (same) {
                out.push_back(make(e_same->canonical_surface,
                                   pick_surface(e_same), 0));
            } else {
                const Entity* e_other = confusable_of(e_same, slot.concept_id,
                                                      e_same->id);
                if (!e_other) {
                    ++d.skipped_no_rare_entity;
                    continue;
                }
                out.push_back(make(e_same->canonical_surface,
                                   e_other->canonical_surface, 0));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// io

// labeled-pairs.tsv: query <TAB> keyword <TAB> label <TAB> match_type
inline std::vector<LabeledPair> load_labeled_pairs(const std::string& path) {
    std::vector<LabeledPair> out;
    for_each_data_line(path, [&](size_t lineno, const std::string& line) {
        auto f = split_tsv(line);
        if (f.size() != 4)
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": expected 4 tab-separated fields");
        LabeledPair p;
        p.query = tokenize(f[0]);
        p.keyword = tokenize(f[1]);
        p.label = std::stoi(f[2]);
        p.match_type = match_type_from(strip(f[3]));
        out.push_back(std::move(p));
    });
    return out;
}

inline void save_labeled_pairs(const std::vector<LabeledPair>& pairs,
                               const std::string& path) {
    std::ofstream out(path);
    for (const auto& p : pairs)
        out << join(p.query) << '\t' << join(p.keyword) << '\t' << p.label
            << '\t' << to_string(p.match_type) << "\n";
}

inline void save_classifier(const ClassifierModel& model,
                            const std::string& path) {
    nlohmann::json j;
    j["features"] = feature_names();
    j["weights"] = model.weights;
    j["bias"] = model.bias;
    nlohmann::json th = nlohmann::json::object();
    for (const auto& [p, t] : model.thresholds) {
        std::ostringstream key;
        key << p;
        th[key.str()] = t;
    }
    j["thresholds"] = th;
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

inline ClassifierModel load_classifier(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file: " + path);
    nlohmann::json j;
    in >> j;
    ClassifierModel model;
    model.weights = j.at("weights").get<std::vector<double>>();
    model.bias = j.at("bias").get<double>();
    if (j.contains("thresholds")) {
        for (const auto& [k, v] : j.at("thresholds").items())
            model.thresholds[std::stod(k)] = v.get<double>();
    }
    return model;
}

}  // namespace ckr
