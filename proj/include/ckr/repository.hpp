#pragma once

#include "ckr/translation.hpp"

namespace ckr {

struct KeywordRepository {
    std::set<std::string> keywords;  // joined token sequences
    // pattern key -> originating keywords, plus the parsed pattern itself
    std::map<std::string, std::set<std::string>> pattern_index;
    std::map<std::string, Pattern> patterns;

    bool has_keyword(const TokenSeq& toks) const {
        return keywords.count(join(toks)) > 0;
    }
};

inline std::pair<KeywordRepository, PatternTrie> build_repository(
    const std::vector<TokenSeq>& keyword_list, const KnowledgeBase& kb) {
    KeywordRepository repo;
    PatternTrie trie;
    for (const auto& kw : keyword_list) {
        if (kw.empty()) continue;
        std::string kw_key = join(kw);
        if (!repo.keywords.insert(kw_key).second) continue;  // dedupe
        Pattern p = conceptualize(kw, kb);
        std::string pat_key = p.key();
        repo.pattern_index[pat_key].insert(kw_key);
        if (!repo.patterns.count(pat_key)) {
            repo.patterns[pat_key] = p;
            trie.insert(p.tokens());
        }
    }
    return {std::move(repo), std::move(trie)};
}

// keywords.txt: one keyword per line
inline std::pair<KeywordRepository, PatternTrie> build_repository_from_file(
    const std::string& path, const KnowledgeBase& kb) {
    std::vector<TokenSeq> kws;
    for_each_data_line(path, [&](size_t, const std::string& line) {
        TokenSeq toks = tokenize(line);
        if (!toks.empty()) kws.push_back(std::move(toks));
    });
    return build_repository(kws, kb);
}

// ---------------------------------------------------------------------------
// Synonym clusters: union-find transitive closure over keyword-keyword pairs.

class SynonymClusters {
  public:
    void add_pair(const std::string& a, const std::string& b) {
        unite(node(a), node(b));
    }

    // Cluster members of the keyword's cluster, sorted; singleton if unknown.
    std::vector<std::string> cluster_of(const std::string& kw) const {
        auto it = id_.find(kw);
        if (it == id_.end()) return {kw};
        size_t root = find(it->second);
        std::vector<std::string> out;
        for (size_t i = 0; i < names_.size(); ++i)
            if (find(i) == root) out.push_back(names_[i]);
        std::sort(out.begin(), out.end());
        return out;
    }

    size_t cluster_count() const {
        std::set<size_t> roots;
        for (size_t i = 0; i < names_.size(); ++i) roots.insert(find(i));
        return roots.size();
    }

    bool same_cluster(const std::string& a, const std::string& b) const {
        auto ia = id_.find(a), ib = id_.find(b);
        if (ia == id_.end() || ib == id_.end()) return a == b;
        return find(ia->second) == find(ib->second);
    }

  private:
    size_t node(const std::string& name) {
        auto it = id_.find(name);
        if (it != id_.end()) return it->second;
        size_t i = names_.size();
        id_[name] = i;
        names_.push_back(name);
        parent_.push_back(i);
        return i;
    }

    size_t find(size_t i) const {
        while (parent_[i] != i) i = parent_[i];
        return i;
    }

    void unite(size_t a, size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

    std::unordered_map<std::string, size_t> id_;
    std::vector<std::string> names_;
    std::vector<size_t> parent_;
};

struct ClusterDiagnostics {
    size_t pairs = 0;
    size_t dropped_unknown_keyword = 0;
};

// k2k-pairs.tsv: kw1 <TAB> kw2; pairs mentioning unknown keywords dropped.
inline SynonymClusters build_clusters(const std::string& path,
                                      const KeywordRepository& repo,
                                      ClusterDiagnostics* diag = nullptr) {
    SynonymClusters clusters;
    ClusterDiagnostics local;
    ClusterDiagnostics& d = diag ? *diag : local;
    for_each_data_line(path, [&](size_t lineno, const std::string& line) {
        auto f = split_tsv(line);
        if (f.size() != 2)
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": expected 2 tab-separated fields");
        std::string a = join(tokenize(f[0])), b = join(tokenize(f[1]));
        ++d.pairs;
        if (!repo.keywords.count(a) || !repo.keywords.count(b)) {
            ++d.dropped_unknown_keyword;
            return;
        }
        clusters.add_pair(a, b);
    });
    return clusters;
}

// ---------------------------------------------------------------------------

// Keeps exactly the candidates present in the keyword set, input order,
// deduplicated.
inline std::vector<TokenSeq> join_filter(const std::vector<TokenSeq>& candidates,
                                         const KeywordRepository& repo) {
    std::vector<TokenSeq> out;
    std::set<std::string> seen;
    for (const auto& c : candidates) {
        std::string key = join(c);
        if (!repo.keywords.count(key)) continue;
        if (!seen.insert(key).second) continue;
        out.push_back(c);
    }
    return out;
}

// Input order first, then cluster members in sorted order, deduplicated.
inline std::vector<TokenSeq> expand_clusters(const std::vector<TokenSeq>& kws,
                                             const SynonymClusters& clusters) {
    std::vector<TokenSeq> out;
    std::set<std::string> seen;
    for (const auto& k : kws) {
        if (seen.insert(join(k)).second) out.push_back(k);
    }
    for (const auto& k : kws) {
        for (const auto& member : clusters.cluster_of(join(k))) {
            if (seen.insert(member).second) out.push_back(tokenize(member));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lookup cache for frequent query patterns. Built offline as a whole and
// swapped in atomically; readers only ever see a complete generation.

struct LookupCache {
    std::map<std::string, DecodeResult> entries;  // query pattern key -> result
    uint64_t generation = 0;

    const DecodeResult* lookup(const std::string& pattern_key) const {
        auto it = entries.find(pattern_key);
        return it == entries.end() ? nullptr : &it->second;
    }
};

// Precomputes decode_constrained for the top-k most frequent query patterns
// of a query log.
inline LookupCache build_cache(const std::vector<TokenSeq>& query_log,
                               const KnowledgeBase& kb,
                               const TranslationModel& model,
                               const PatternTrie& trie, size_t beam = 50,
                               size_t stack_size = 100, size_t top_k = 10000,
                               uint64_t generation = 1) {
    std::map<std::string, size_t> freq;
    for (const auto& q : query_log) ++freq[conceptualize(q, kb).key()];
    std::vector<std::pair<std::string, size_t>> ranked(freq.begin(), freq.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) {
                         if (a.second != b.second) return a.second > b.second;
                         return a.first < b.first;
                     });
    if (ranked.size() > top_k) ranked.resize(top_k);
    LookupCache cache;
    cache.generation = generation;
    for (const auto& [pat, _] : ranked) {
        cache.entries[pat] = decode_constrained(model, tokenize(pat), trie,
                                                beam, stack_size);
    }
    return cache;
}

// cache.tsv: query_pattern <TAB> tgt_pattern1|score1;tgt_pattern2|score2;...
inline void save_cache(const LookupCache& cache, const std::string& path) {
    std::ofstream out(path);
    out.precision(17);
    out << "#generation " << cache.generation << "\n";
    for (const auto& [pat, result] : cache.entries) {
        out << pat << '\t';
        for (size_t i = 0; i < result.size(); ++i) {
            if (i) out << ';';
            out << join(result[i].target) << '|' << result[i].score;
        }
        out << "\n";
    }
}

inline LookupCache load_cache(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open cache file: " + path);
    LookupCache cache;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first && line.rfind("#generation", 0) == 0) {
            cache.generation = std::stoull(line.substr(12));
            first = false;
            continue;
        }
        first = false;
        auto f = split_tsv(line);
        if (f.size() != 2) throw ParseError("bad cache line: " + line);
        DecodeResult result;
        if (!f[1].empty()) {
            for (const auto& item : split(f[1], ';')) {
                auto bar = item.rfind('|');
                if (bar == std::string::npos)
                    throw ParseError("bad cache entry: " + item);
                result.push_back(
                    {tokenize(item.substr(0, bar)), std::stod(item.substr(bar + 1)),
                     {}});
            }
        }
        cache.entries[f[0]] = std::move(result);
    }
    return cache;
}

}  // namespace ckr
