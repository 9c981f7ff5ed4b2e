#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "ckr/core.hpp"

namespace ckr {

using ConceptId = std::string;
using EntityId = std::string;

// Concept DAG with hypernym edges and a whitelist of commercially core
// concepts eligible to become pattern slots.
struct ConceptTaxonomy {
    std::set<ConceptId> concepts;
    std::multimap<ConceptId, ConceptId> hypernym_edges;  // child -> parent
    std::set<ConceptId> core_concepts;

    bool contains(const ConceptId& c) const { return concepts.count(c) > 0; }
    bool is_core(const ConceptId& c) const { return core_concepts.count(c) > 0; }
};

struct Entity {
    EntityId id;
    TokenSeq canonical_surface;
    ConceptId refined_concept;
    std::vector<TokenSeq> aliases;
};

struct EntityLexicon {
    std::vector<Entity> entities;
    std::unordered_map<EntityId, size_t> by_id;

    const Entity* find(const EntityId& id) const {
        auto it = by_id.find(id);
        return it == by_id.end() ? nullptr : &entities[it->second];
    }
};

// Surface -> entity ids, over canonical surfaces and aliases. Supports
// longest-match scanning via the recorded maximum surface length.
struct MentionIndex {
    std::map<std::string, std::vector<EntityId>> by_surface;  // joined tokens
    size_t max_surface_len = 0;

    const std::vector<EntityId>* lookup(const TokenSeq& toks, size_t begin,
                                        size_t end) const {
        std::string key;
        for (size_t i = begin; i < end; ++i) {
            if (i > begin) key += ' ';
            key += toks[i];
        }
        auto it = by_surface.find(key);
        return it == by_surface.end() ? nullptr : &it->second;
    }
};

struct KnowledgeBase {
    ConceptTaxonomy taxonomy;
    EntityLexicon lexicon;
    MentionIndex index;
};

// Nearest core ancestor (the concept itself counts), minimum edge count,
// ties broken by lexicographically smallest concept id.
inline std::optional<ConceptId> coarse_concept_of(const ConceptId& concept_id,
                                                  const ConceptTaxonomy& tax) {
    if (!tax.contains(concept_id))
        throw DataError("unknown concept: " + concept_id);
    std::vector<ConceptId> frontier{concept_id};
    std::set<ConceptId> seen{concept_id};
    while (!frontier.empty()) {
        std::optional<ConceptId> best;
        for (const auto& c : frontier) {
            if (tax.is_core(c) && (!best || c < *best)) best = c;
        }
        if (best) return best;
        std::set<ConceptId> next;
        for (const auto& c : frontier) {
            auto [lo, hi] = tax.hypernym_edges.equal_range(c);
            for (auto it = lo; it != hi; ++it)
                if (!seen.count(it->second)) next.insert(it->second);
        }
        seen.insert(next.begin(), next.end());
        frontier.assign(next.begin(), next.end());
    }
    return std::nullopt;
}

// Canonical surface first, then aliases in lexicon order.
inline std::vector<TokenSeq> aliases_of(const EntityId& id,
                                        const EntityLexicon& lex) {
    const Entity* e = lex.find(id);
    if (!e) throw DataError("unknown entity: " + id);
    std::vector<TokenSeq> out{e->canonical_surface};
    out.insert(out.end(), e->aliases.begin(), e->aliases.end());
    return out;
}

namespace detail {

inline void check_acyclic(const ConceptTaxonomy& tax) {
    // Colors: 0 unvisited, 1 on stack, 2 done.
    std::map<ConceptId, int> color;
    for (const auto& c : tax.concepts) color[c] = 0;
    std::vector<std::pair<ConceptId, bool>> stack;
    for (const auto& root : tax.concepts) {
        if (color[root] != 0) continue;
        stack.push_back({root, false});
        while (!stack.empty()) {
            auto [c, expanded] = stack.back();
            stack.pop_back();
            if (expanded) {
                color[c] = 2;
                continue;
            }
            if (color[c] == 2) continue;
            if (color[c] == 1) continue;
            color[c] = 1;
            stack.push_back({c, true});
            auto [lo, hi] = tax.hypernym_edges.equal_range(c);
            for (auto it = lo; it != hi; ++it) {
                if (color[it->second] == 1)
                    throw DataError("cycle in taxonomy involving concept: " +
                                    it->second);
                if (color[it->second] == 0) stack.push_back({it->second, false});
            }
        }
    }
}

inline void index_surface(MentionIndex& idx, const TokenSeq& surface,
                          const EntityId& id) {
    idx.by_surface[join(surface)].push_back(id);
    idx.max_surface_len = std::max(idx.max_surface_len, surface.size());
}

}  // namespace detail

inline MentionIndex build_mention_index(const EntityLexicon& lex) {
    MentionIndex idx;
    for (const auto& e : lex.entities) {
        detail::index_surface(idx, e.canonical_surface, e.id);
        for (const auto& a : e.aliases) detail::index_surface(idx, a, e.id);
    }
    return idx;
}

// taxonomy.tsv: concept_id <TAB> parent_or_dash <TAB> core_flag{0,1}
inline ConceptTaxonomy load_taxonomy(const std::string& path) {
    ConceptTaxonomy tax;
    std::vector<std::pair<ConceptId, ConceptId>> edges;
    for_each_data_line(path, [&](size_t lineno, const std::string& line) {
        auto f = split_tsv(line);
        if (f.size() != 3)
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": expected 3 tab-separated fields");
        ConceptId id = strip(f[0]);
        ConceptId parent = strip(f[1]);
        std::string flag = strip(f[2]);
        if (id.empty())
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": empty concept id");
        if (flag != "0" && flag != "1")
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": core flag must be 0 or 1");
        tax.concepts.insert(id);
        if (flag == "1") tax.core_concepts.insert(id);
        if (parent != "-") edges.push_back({id, parent});
    });
    for (const auto& [child, parent] : edges) {
        if (!tax.contains(parent))
            throw DataError("dangling parent concept: " + parent);
        tax.hypernym_edges.insert({child, parent});
    }
    detail::check_acyclic(tax);
    return tax;
}

// entities.tsv: entity_id <TAB> canonical <TAB> refined_concept <TAB> a1|a2
inline EntityLexicon load_entities(const std::string& path,
                                   const ConceptTaxonomy& tax) {
    EntityLexicon lex;
    for_each_data_line(path, [&](size_t lineno, const std::string& line) {
        auto f = split_tsv(line);
        if (f.size() != 4)
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": expected 4 tab-separated fields");
        Entity e;
        e.id = strip(f[0]);
        e.canonical_surface = tokenize(f[1]);
        e.refined_concept = strip(f[2]);
        if (e.id.empty() || lex.by_id.count(e.id))
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": missing or duplicate entity id: " + e.id);
        if (e.canonical_surface.empty())
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": empty canonical surface for " + e.id);
        if (!tax.contains(e.refined_concept))
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": dangling concept reference: " + e.refined_concept);
        std::string alias_field = strip(f[3]);
        if (!alias_field.empty()) {
            for (const auto& a : split(alias_field, '|')) {
                TokenSeq toks = tokenize(a);
                if (toks.empty()) continue;
                if (toks == e.canonical_surface) continue;  // aliases exclude canonical
                e.aliases.push_back(std::move(toks));
            }
        }
        lex.by_id[e.id] = lex.entities.size();
        lex.entities.push_back(std::move(e));
    });
    return lex;
}

inline KnowledgeBase load_knowledge_base(const std::string& taxonomy_file,
                                         const std::string& entities_file) {
    KnowledgeBase kb;
    kb.taxonomy = load_taxonomy(taxonomy_file);
    kb.lexicon = load_entities(entities_file, kb.taxonomy);
    kb.index = build_mention_index(kb.lexicon);
    return kb;
}

inline void save_knowledge_base(const KnowledgeBase& kb,
                                const std::string& taxonomy_file,
                                const std::string& entities_file) {
    std::ofstream t(taxonomy_file);
    for (const auto& c : kb.taxonomy.concepts) {
        auto [lo, hi] = kb.taxonomy.hypernym_edges.equal_range(c);
        if (lo == hi) {
            t << c << "\t-\t" << (kb.taxonomy.is_core(c) ? 1 : 0) << "\n";
        } else {
            for (auto it = lo; it != hi; ++it)
                t << c << '\t' << it->second << '\t'
                  << (kb.taxonomy.is_core(c) ? 1 : 0) << "\n";
        }
    }
    std::ofstream e(entities_file);
    for (const auto& ent : kb.lexicon.entities) {
        e << ent.id << '\t' << join(ent.canonical_surface) << '\t'
          << ent.refined_concept << '\t';
        for (size_t i = 0; i < ent.aliases.size(); ++i) {
            if (i) e << '|';
            e << join(ent.aliases[i]);
        }
        e << "\n";
    }
}

}  // namespace ckr
