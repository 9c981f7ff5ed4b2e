#pragma once

#include <random>

#include "ckr/corpus.hpp"
#include "ckr/discriminator.hpp"

namespace ckr {

// Synthetic world: a small taxonomy, Zipf-distributed entities with aliases,
// groups of synonymous sentence templates, and everything derived from them
// (paraphrase pairs, keyword inventory, synonym pairs, labeled pairs, test
// queries with a decidable synonymy relation).
struct WorldConfig {
    size_t n_concepts = 6;
    size_t n_entities = 150;
    size_t n_templates = 12;  // template groups
    size_t q_variants = 3;    // query-side templates per group
    size_t k_variants = 2;    // keyword-side templates per group
    double alias_rate = 0.6;
    double zipf_exponent = 1.2;
    uint64_t seed = 7;
    size_t n_pairs = 8000;       // paraphrase training pairs
    size_t n_labeled = 3000;     // discriminator pairs (original distribution)
    size_t n_longtail = 400;     // long-tail discriminator test pairs
    size_t rare_frequency_max = 10;
};

struct TemplateGroup {
    size_t concept_index = 0;
    // query templates: prefix + group word + [c] + tail (tail per variant)
    // keyword templates: prefix + group word + [c]
    std::vector<TokenSeq> query_templates;    // with "[c]" placeholder token
    std::vector<TokenSeq> keyword_templates;  // with "[c]" placeholder token
};

struct TestQuery {
    TokenSeq tokens;
    EntityId entity;
    size_t group = 0;
};

struct World {
    WorldConfig config;
    KnowledgeBase kb;
    std::vector<TemplateGroup> groups;
    std::vector<std::vector<size_t>> groups_of_concept;
    std::vector<ParaphrasePair> paraphrases;
    std::vector<TokenSeq> keywords;
    std::vector<std::pair<std::string, std::string>> synonym_pairs;
    std::vector<LabeledPair> labeled_train, labeled_dev, labeled_test;
    std::vector<LabeledPair> labeled_longtail;
    std::vector<TestQuery> test_queries;
    std::map<EntityId, size_t> train_entity_freq;  // source-side mentions

    // All sentences counted as synonymous with (group, entity): the group's
    // keyword templates instantiated with any surface of the entity.
    std::set<std::string> acceptable_keywords(size_t group,
                                              const EntityId& entity) const {
        std::set<std::string> out;
        const Entity* e = kb.lexicon.find(entity);
        std::vector<TokenSeq> surfaces{e->canonical_surface};
        surfaces.insert(surfaces.end(), e->aliases.begin(), e->aliases.end());
        for (const auto& tpl : groups[group].keyword_templates) {
            for (const auto& surf : surfaces) {
                TokenSeq sent;
                for (const auto& tok : tpl) {
                    if (tok == "[c]")
                        sent.insert(sent.end(), surf.begin(), surf.end());
                    else
                        sent.push_back(tok);
                }
                out.insert(join(sent));
            }
        }
        return out;
    }
};

namespace worldgen {

inline TokenSeq instantiate_template(const TokenSeq& tpl,
                                     const TokenSeq& surface) {
    TokenSeq out;
    for (const auto& tok : tpl) {
        if (tok == "[c]")
            out.insert(out.end(), surface.begin(), surface.end());
        else
            out.push_back(tok);
    }
    return out;
}

}  // namespace worldgen

inline World gen_world(const WorldConfig& cfg) {
    if (cfg.n_concepts < 1 || cfg.n_entities < 1 || cfg.n_templates < 1 ||
        cfg.q_variants < 1 || cfg.k_variants < 1 || cfg.n_pairs < 1)
        throw DataError("world config sizes must be >= 1");
    World w;
    w.config = cfg;
    std::mt19937_64 rng(cfg.seed);
    auto coin = [&](double p) {
        return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
    };

    // taxonomy: core concept cat<i> with refined child ref<i>
    for (size_t c = 0; c < cfg.n_concepts; ++c) {
        std::string core = "cat" + std::to_string(c);
        std::string refined = "ref" + std::to_string(c);
        w.kb.taxonomy.concepts.insert(core);
        w.kb.taxonomy.concepts.insert(refined);
        w.kb.taxonomy.core_concepts.insert(core);
        w.kb.taxonomy.hypernym_edges.insert({refined, core});
    }

    // entities: round-robin over concepts; siblings inside a family differ by
    // a single trailing letter, which makes them literally confusable
    for (size_t i = 0; i < cfg.n_entities; ++i) {
        size_t c = i % cfg.n_concepts;
        size_t within = i / cfg.n_concepts;
        size_t family = within / 3;
        char variant = static_cast<char>('a' + within % 3);
        Entity e;
        e.id = "e" + std::to_string(i);
        e.canonical_surface = {"en" + std::to_string(c) + "f" +
                               std::to_string(family) + variant};
        e.refined_concept = "ref" + std::to_string(c);
        if (coin(cfg.alias_rate)) {
            e.aliases.push_back({"qal" + std::string(1, variant) +
                                 std::to_string(family) + "x" +
                                 std::to_string(c)});
        }
        w.kb.lexicon.by_id[e.id] = w.kb.lexicon.entities.size();
        w.kb.lexicon.entities.push_back(std::move(e));
    }
    w.kb.index = build_mention_index(w.kb.lexicon);

    // template groups; tails sit directly after the slot at sentence end so
    // dropping them needs entity-adjacent phrases in a raw-sentence model
    const std::vector<TokenSeq> q_prefixes = {
        {"how", "much"}, {"what", "price"}, {"tell", "me"}};
    const std::vector<TokenSeq> k_prefixes = {
        {"cost", "of"}, {"rate", "for"}, {"fee", "per"}};
    w.groups_of_concept.resize(cfg.n_concepts);
    for (size_t g = 0; g < cfg.n_templates; ++g) {
        TemplateGroup tg;
        tg.concept_index = g % cfg.n_concepts;
        std::string grp_word = "grp" + std::to_string(g);
        for (size_t j = 0; j < cfg.q_variants; ++j) {
            TokenSeq tpl = q_prefixes[j % q_prefixes.size()];
            tpl.push_back(grp_word);
            tpl.push_back("[c]");
            tpl.push_back("tl" + std::to_string(g) + std::string(1, 'a' + j));
            tg.query_templates.push_back(std::move(tpl));
        }
        for (size_t j = 0; j < cfg.k_variants; ++j) {
            TokenSeq tpl = k_prefixes[j % k_prefixes.size()];
            tpl.push_back(grp_word);
            tpl.push_back("[c]");
            tg.keyword_templates.push_back(std::move(tpl));
        }
        w.groups_of_concept[tg.concept_index].push_back(g);
        w.groups.push_back(std::move(tg));
    }
    // Zipf weights over entities (rank = entity index + 1)
    std::vector<double> weights(cfg.n_entities);
    for (size_t i = 0; i < cfg.n_entities; ++i)
        weights[i] = 1.0 / std::pow(static_cast<double>(i + 1),
                                    cfg.zipf_exponent);
    std::discrete_distribution<size_t> zipf(weights.begin(), weights.end());
    auto pick = [&rng](size_t n) {
        return std::uniform_int_distribution<size_t>(0, n - 1)(rng);
    };

    auto sample_entity_with_group = [&]() -> std::pair<size_t, size_t> {
        while (true) {
            size_t ei = zipf(rng);
            const auto& gs = w.groups_of_concept[ei % cfg.n_concepts];
            if (gs.empty()) continue;
            return {ei, gs[pick(gs.size())]};
        }
    };
    auto surface_of = [&](size_t ei, bool allow_alias) -> const TokenSeq& {
        const Entity& e = w.kb.lexicon.entities[ei];
        if (allow_alias && !e.aliases.empty() && coin(0.2))
            return e.aliases[pick(e.aliases.size())];
        return e.canonical_surface;
    };

    // paraphrase pairs: query template -> keyword template, same entity
    for (size_t i = 0; i < cfg.n_pairs; ++i) {
        auto [ei, g] = sample_entity_with_group();
        const auto& tg = w.groups[g];
        const Entity& e = w.kb.lexicon.entities[ei];
        TokenSeq src = worldgen::instantiate_template(
            tg.query_templates[pick(tg.query_templates.size())],
            e.canonical_surface);
        TokenSeq tgt = worldgen::instantiate_template(
            tg.keyword_templates[pick(tg.keyword_templates.size())],
            surface_of(ei, true));
        ++w.train_entity_freq[e.id];
        w.paraphrases.push_back({std::move(src), std::move(tgt)});
    }

    // keyword repository: every keyword template x entity surface
    for (size_t ei = 0; ei < cfg.n_entities; ++ei) {
        const Entity& e = w.kb.lexicon.entities[ei];
        const auto& gs = w.groups_of_concept[ei % cfg.n_concepts];
        for (size_t g : gs) {
            for (size_t j = 0; j < w.groups[g].keyword_templates.size(); ++j) {
                const auto& tpl = w.groups[g].keyword_templates[j];
                std::vector<TokenSeq> surfaces{e.canonical_surface};
                surfaces.insert(surfaces.end(), e.aliases.begin(),
                                e.aliases.end());
                std::vector<std::string> variants;
                for (const auto& s : surfaces) {
                    TokenSeq kw = worldgen::instantiate_template(tpl, s);
                    variants.push_back(join(kw));
                    w.keywords.push_back(std::move(kw));
                }
                for (size_t v = 1; v < variants.size(); ++v)
                    w.synonym_pairs.push_back({variants[0], variants[v]});
            }
        }
    }

    // test queries: one per (entity seen in training, query template), so all
    // frequency buckets are populated
    for (size_t ei = 0; ei < cfg.n_entities; ++ei) {
        const Entity& e = w.kb.lexicon.entities[ei];
        if (!w.train_entity_freq.count(e.id)) continue;
        const auto& gs = w.groups_of_concept[ei % cfg.n_concepts];
        if (gs.empty()) continue;
        size_t g = gs[pick(gs.size())];
        const auto& tg = w.groups[g];
        size_t j = pick(tg.query_templates.size());
        w.test_queries.push_back(
            {worldgen::instantiate_template(tg.query_templates[j],
                                            e.canonical_surface),
             e.id, g});
    }

    // labeled discriminator pairs, original distribution (canonical surfaces,
    // Zipf-biased entities); match types at 2:1:1
    auto sample_match_type = [&]() {
        size_t r = pick(4);
        return r < 2 ? MatchType::Exact
                     : (r == 2 ? MatchType::Phrase : MatchType::Broad);
    };
    std::vector<LabeledPair> labeled;
    for (size_t i = 0; i < cfg.n_labeled; ++i) {
        auto [ei, g] = sample_entity_with_group();
        const auto& tg = w.groups[g];
        const Entity& e = w.kb.lexicon.entities[ei];
        LabeledPair p;
        p.match_type = sample_match_type();
        p.query = worldgen::instantiate_template(
            tg.query_templates[pick(tg.query_templates.size())],
            e.canonical_surface);
        if (coin(0.5)) {
            p.label = 1;
            p.keyword = worldgen::instantiate_template(
                tg.keyword_templates[pick(tg.keyword_templates.size())],
                e.canonical_surface);
        } else {
            p.label = 0;
            const auto& gs = w.groups_of_concept[ei % cfg.n_concepts];
            if (gs.size() > 1) {
                // same entity, different intent group: surface features are
                // enough to reject these, so the original distribution never
                // forces the model onto the knowledge-driven slot features
                size_t g2 = g;
                while (g2 == g) g2 = gs[pick(gs.size())];
                const auto& tg2 = w.groups[g2];
                p.keyword = worldgen::instantiate_template(
                    tg2.keyword_templates[pick(tg2.keyword_templates.size())],
                    e.canonical_surface);
            } else {
                // degenerate single-group concept: different entity
                size_t ej = ei;
                while (ej == ei || ej % cfg.n_concepts != ei % cfg.n_concepts)
                    ej = zipf(rng);
                p.keyword = worldgen::instantiate_template(
                    tg.keyword_templates[pick(tg.keyword_templates.size())],
                    w.kb.lexicon.entities[ej].canonical_surface);
            }
        }
        labeled.push_back(std::move(p));
    }
    size_t n_train = labeled.size() * 70 / 100;
    size_t n_dev = labeled.size() * 15 / 100;
    w.labeled_train.assign(labeled.begin(), labeled.begin() + n_train);
    w.labeled_dev.assign(labeled.begin() + n_train,
                         labeled.begin() + n_train + n_dev);
    w.labeled_test.assign(labeled.begin() + n_train + n_dev, labeled.end());

    // long-tail discriminator test: rare entities; positives pair the alias
    // surface against the canonical one, negatives use a confusable sibling
    std::vector<size_t> rare;
    for (size_t ei = 0; ei < cfg.n_entities; ++ei) {
        const Entity& e = w.kb.lexicon.entities[ei];
        auto it = w.train_entity_freq.find(e.id);
        size_t f = it == w.train_entity_freq.end() ? 0 : it->second;
        if (f >= 1 && f <= cfg.rare_frequency_max &&
            !w.groups_of_concept[ei % cfg.n_concepts].empty())
            rare.push_back(ei);
    }
    auto sibling_of = [&](size_t ei) -> std::optional<size_t> {
        // same concept, same family, different variant letter
        size_t within = ei / cfg.n_concepts;
        size_t family = within / 3;
        for (size_t v = 0; v < 3; ++v) {
            size_t cand = (family * 3 + v) * cfg.n_concepts +
                          ei % cfg.n_concepts;
            if (cand != ei && cand < cfg.n_entities) return cand;
        }
        return std::nullopt;
    };
    for (size_t i = 0; i < cfg.n_longtail && !rare.empty(); ++i) {
        size_t ei = rare[pick(rare.size())];
        const Entity& e = w.kb.lexicon.entities[ei];
        const auto& gs = w.groups_of_concept[ei % cfg.n_concepts];
        size_t g = gs[pick(gs.size())];
        const auto& tg = w.groups[g];
        LabeledPair p;
        p.match_type = sample_match_type();
        p.query = worldgen::instantiate_template(
            tg.query_templates[pick(tg.query_templates.size())],
            e.canonical_surface);
        if (coin(0.5)) {
            p.label = 1;
            const TokenSeq& surf =
                e.aliases.empty() ? e.canonical_surface : e.aliases[0];
            p.keyword = worldgen::instantiate_template(
                tg.keyword_templates[pick(tg.keyword_templates.size())], surf);
        } else {
            p.label = 0;
            auto sib = sibling_of(ei);
            size_t ej;
            if (sib) {
                ej = *sib;
            } else {
                ej = ei;
                while (ej == ei || ej % cfg.n_concepts != ei % cfg.n_concepts)
                    ej = pick(cfg.n_entities);
            }
            p.keyword = worldgen::instantiate_template(
                tg.keyword_templates[pick(tg.keyword_templates.size())],
                w.kb.lexicon.entities[ej].canonical_surface);
        }
        w.labeled_longtail.push_back(std::move(p));
    }

    return w;
}

// Writes the fixture files that the CLI subcommands consume.
inline void write_world(const World& w, const std::string& dir) {
    std::filesystem::create_directories(dir);
    save_knowledge_base(w.kb, dir + "/taxonomy.tsv", dir + "/entities.tsv");
    {
        std::ofstream out(dir + "/paraphrases.tsv");
        for (const auto& p : w.paraphrases)
            out << join(p.source_tokens) << '\t' << join(p.target_tokens)
                << "\n";
    }
    {
        std::ofstream out(dir + "/keywords.txt");
        std::set<std::string> seen;
        for (const auto& kw : w.keywords) {
            std::string key = join(kw);
            if (seen.insert(key).second) out << key << "\n";
        }
    }
    {
        std::ofstream out(dir + "/k2k-pairs.tsv");
        for (const auto& [a, b] : w.synonym_pairs) out << a << '\t' << b << "\n";
    }
    save_labeled_pairs(w.labeled_train, dir + "/labeled-train.tsv");
    save_labeled_pairs(w.labeled_dev, dir + "/labeled-dev.tsv");
    save_labeled_pairs(w.labeled_test, dir + "/labeled-test.tsv");
    save_labeled_pairs(w.labeled_longtail, dir + "/labeled-longtail.tsv");
    {
        std::ofstream out(dir + "/queries.tsv");
        for (const auto& q : w.test_queries)
            out << join(q.tokens) << '\t' << q.entity << '\t' << q.group
                << "\n";
    }
    {
        // ground-truth synonymy: query <TAB> acceptable keyword, one per row
        std::ofstream out(dir + "/oracle.tsv");
        for (const auto& q : w.test_queries)
            for (const auto& acc : w.acceptable_keywords(q.group, q.entity))
                out << join(q.tokens) << '\t' << acc << "\n";
    }
}

}  // namespace ckr
