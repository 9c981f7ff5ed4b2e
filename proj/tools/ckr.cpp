// Command line front end: knowledge-base validation, corpus building, model
// training, matching, discrimination, evaluation, synthetic world generation.

#include <iostream>

#include "CLI11.hpp"

#include "ckr/evaluation.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

ckr::KnowledgeBase load_kb(const std::string& kb_dir) {
    return ckr::load_knowledge_base(kb_dir + "/taxonomy.tsv",
                                    kb_dir + "/entities.tsv");
}

std::vector<ckr::TokenSeq> read_sentences(const std::string& path) {
    std::vector<ckr::TokenSeq> out;
    ckr::for_each_data_line(path, [&](size_t, const std::string& line) {
        auto toks = ckr::tokenize(line);
        if (!toks.empty()) out.push_back(std::move(toks));
    });
    return out;
}

// Flat key=value config file for the evaluate subcommand.
std::map<std::string, std::string> read_flat_config(const std::string& path) {
    std::map<std::string, std::string> out;
    ckr::for_each_data_line(path, [&](size_t lineno, const std::string& line) {
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ckr::ParseError(path + ":" + std::to_string(lineno) +
                                  ": expected key=value");
        out[ckr::strip(line.substr(0, eq))] = ckr::strip(line.substr(eq + 1));
    });
    return out;
}

struct GlobalOpts {
    std::string kb_dir;
    uint64_t seed = 7;
    bool verbose = false;

    void echo(const std::string& subcommand,
              const std::map<std::string, std::string>& opts) const {
        std::cerr << "config: subcommand=" << subcommand << " seed=" << seed;
        if (!kb_dir.empty()) std::cerr << " kb-dir=" << kb_dir;
        for (const auto& [k, v] : opts) std::cerr << ' ' << k << '=' << v;
        std::cerr << "\n";
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"concept-driven synonymous keyword retrieval"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--kb-dir", g.kb_dir,
                   "directory with taxonomy.tsv and entities.tsv");
    app.add_option("--seed", g.seed, "random seed");
    app.add_flag("--verbose", g.verbose, "verbose diagnostics");

    // validate-kb
    auto* validate = app.add_subcommand("validate-kb",
                                        "load and validate a knowledge base");

    // conceptualize
    std::string input_path, output_path;
    auto* conc = app.add_subcommand("conceptualize",
                                    "abstract sentences into patterns");
    conc->add_option("--input", input_path, "sentences, one per line")
        ->required();
    conc->add_option("--output", output_path, "patterns.tsv output")
        ->required();

    // build-corpus
    std::string pairs_path;
    auto* corpus = app.add_subcommand(
        "build-corpus", "conceptualize paraphrase pairs and apply the "
                        "strict-alignment filter");
    corpus->add_option("--pairs", pairs_path, "paraphrases.tsv")->required();
    corpus->add_option("--output", output_path, "pattern-pairs.tsv")
        ->required();

    // train-translator
    std::string model_dir;
    size_t ngram = 3, max_phrase_len = 4, em_iters = 5;
    auto* train_tr = app.add_subcommand("train-translator",
                                        "train the pattern translation model");
    train_tr->add_option("--pairs", pairs_path, "pattern-pairs.tsv")
        ->required();
    train_tr->add_option("--out", model_dir, "output model directory")
        ->required();
    train_tr->add_option("--ngram", ngram, "language model order");
    train_tr->add_option("--max-phrase-len", max_phrase_len,
                         "maximum phrase length");
    train_tr->add_option("--em-iters", em_iters,
                         "alignment EM iterations");

    // build-repo
    std::string keywords_path, repo_out;
    auto* build_repo = app.add_subcommand(
        "build-repo", "conceptualize the keyword inventory");
    build_repo->add_option("--keywords", keywords_path, "keywords.txt")
        ->required();
    build_repo->add_option("--out", repo_out,
                           "output pattern repository tsv");

    // build-cache
    std::string queries_path, cache_path, repo_path, clusters_path;
    size_t beam = 50, stack_size = 100, top_k = 10000;
    auto* build_cache_cmd = app.add_subcommand(
        "build-cache", "precompute decode results for frequent query patterns");
    build_cache_cmd->add_option("--queries", queries_path, "query log")
        ->required();
    build_cache_cmd->add_option("--model-dir", model_dir)->required();
    build_cache_cmd->add_option("--keywords", keywords_path)->required();
    build_cache_cmd->add_option("--out", cache_path, "cache.tsv")->required();
    build_cache_cmd->add_option("--beam", beam);
    build_cache_cmd->add_option("--stack-size", stack_size);
    build_cache_cmd->add_option("--top-k", top_k);

    // match
    std::string query_text, trace_path;
    bool batch = false;
    size_t max_instantiations = 256;
    auto* match = app.add_subcommand("match",
                                     "retrieve synonymous keyword candidates");
    match->add_option("--model-dir", model_dir)->required();
    match->add_option("--keywords", keywords_path, "keywords.txt")->required();
    match->add_option("--clusters", clusters_path, "k2k-pairs.tsv");
    match->add_option("--cache", cache_path, "cache.tsv (online path)");
    match->add_option("--query", query_text, "single query");
    match->add_option("--input", input_path, "queries.txt (batch mode)");
    match->add_option("--output", output_path, "candidates.tsv (batch mode)");
    match->add_option("--trace", trace_path, "write trace JSON here");
    match->add_option("--beam", beam);
    match->add_option("--stack-size", stack_size);
    match->add_option("--max-instantiations", max_instantiations,
                      "total instantiation budget per query");

    // train-discriminator
    std::string disc_out;
    double augment_proportion = 0.12;
    size_t rare_threshold = 2;
    auto* train_disc = app.add_subcommand(
        "train-discriminator", "train the synonymy discriminator with "
                               "concept augmentation");
    train_disc->add_option("--pairs", pairs_path, "labeled-pairs.tsv")
        ->required();
    train_disc->add_option("--augment-proportion", augment_proportion,
                           "augmented fraction of the training set");
    train_disc->add_option("--rare-threshold", rare_threshold,
                           "max corpus frequency of a rare entity");
    train_disc->add_option("--out", disc_out, "model.json")->required();

    // score
    std::string model_json, keyword_text;
    auto* score = app.add_subcommand("score",
                                     "score a query-keyword pair");
    score->add_option("--model", model_json, "model.json")->required();
    score->add_option("--query", query_text)->required();
    score->add_option("--keyword", keyword_text)->required();

    // evaluate
    std::string eval_config, report_dir;
    auto* evaluate = app.add_subcommand("evaluate",
                                        "run the offline evaluation protocol");
    evaluate->add_option("--config", eval_config,
                         "flat key=value config file");
    evaluate->add_option("--out", report_dir, "report output directory")
        ->required();

    // gen-world
    std::string world_dir;
    ckr::WorldConfig wcfg;
    auto* gen = app.add_subcommand("gen-world",
                                   "generate a synthetic fixture world");
    gen->add_option("--out", world_dir, "fixture directory")->required();
    gen->add_option("--n-concepts", wcfg.n_concepts);
    gen->add_option("--n-entities", wcfg.n_entities);
    gen->add_option("--n-templates", wcfg.n_templates);
    gen->add_option("--q-variants", wcfg.q_variants);
    gen->add_option("--k-variants", wcfg.k_variants);
    gen->add_option("--alias-rate", wcfg.alias_rate);
    gen->add_option("--zipf-exponent", wcfg.zipf_exponent);
    gen->add_option("--n-pairs", wcfg.n_pairs);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (validate->parsed()) {
            if (g.verbose) g.echo("validate-kb", {});
            auto kb = load_kb(g.kb_dir);
            std::cout << "ok: " << kb.taxonomy.concepts.size() << " concepts ("
                      << kb.taxonomy.core_concepts.size() << " core), "
                      << kb.lexicon.entities.size() << " entities, "
                      << kb.index.by_surface.size() << " surfaces\n";
        } else if (conc->parsed()) {
            if (g.verbose)
                g.echo("conceptualize",
                       {{"input", input_path}, {"output", output_path}});
            auto kb = load_kb(g.kb_dir);
            std::ofstream out(output_path);
            for (const auto& sent : read_sentences(input_path)) {
                ckr::Pattern p = ckr::conceptualize(sent, kb);
                out << p.key() << '\t' << ckr::format_slot_values(p) << "\n";
            }
        } else if (corpus->parsed()) {
            if (g.verbose)
                g.echo("build-corpus",
                       {{"pairs", pairs_path}, {"output", output_path}});
            auto kb = load_kb(g.kb_dir);
            auto pairs = ckr::load_paraphrases(pairs_path);
            ckr::CorpusDiagnostics diag;
            auto patterns = ckr::build_parallel_patterns(pairs, kb, &diag);
            ckr::save_pattern_pairs(patterns, output_path);
            std::cerr << "kept " << diag.kept << "/" << diag.input << " pairs";
            for (const auto& [reason, n] : diag.rejected_by_reason)
                std::cerr << ", " << reason << "=" << n;
            std::cerr << "\n";
        } else if (train_tr->parsed()) {
            if (g.verbose)
                g.echo("train-translator",
                       {{"pairs", pairs_path}, {"out", model_dir}});
            auto pairs = ckr::load_pattern_pairs(pairs_path);
            ckr::TranslationConfig cfg;
            cfg.ngram = ngram;
            cfg.max_phrase_len = max_phrase_len;
            cfg.em_iterations = em_iters;
            auto model = ckr::train_model(pairs, cfg);
            ckr::save_model(model, model_dir);
            std::cerr << "phrase table: " << model.phrase_table.size()
                      << " source phrases\n";
        } else if (build_repo->parsed()) {
            if (g.verbose) g.echo("build-repo", {{"keywords", keywords_path}});
            auto kb = load_kb(g.kb_dir);
            auto [repo, trie] = ckr::build_repository_from_file(keywords_path,
                                                               kb);
            std::cout << repo.keywords.size() << " keywords, "
                      << repo.pattern_index.size() << " patterns\n";
            if (!repo_out.empty()) {
                std::ofstream out(repo_out);
                for (const auto& [pat, kws] : repo.pattern_index) {
                    out << pat << '\t';
                    bool first = true;
                    for (const auto& kw : kws) {
                        if (!first) out << ';';
                        out << kw;
                        first = false;
                    }
                    out << "\n";
                }
            }
        } else if (build_cache_cmd->parsed()) {
            if (g.verbose)
                g.echo("build-cache",
                       {{"queries", queries_path}, {"out", cache_path}});
            auto kb = load_kb(g.kb_dir);
            auto model = ckr::load_model(model_dir);
            auto [repo, trie] = ckr::build_repository_from_file(keywords_path,
                                                               kb);
            auto cache = ckr::build_cache(read_sentences(queries_path), kb,
                                          model, trie, beam, stack_size, top_k);
            ckr::save_cache(cache, cache_path);
            std::cerr << "cached " << cache.entries.size() << " patterns\n";
        } else if (match->parsed()) {
            auto kb = load_kb(g.kb_dir);
            auto model = ckr::load_model(model_dir);
            auto [repo, trie] = ckr::build_repository_from_file(keywords_path,
                                                               kb);
            ckr::SynonymClusters clusters;
            if (!clusters_path.empty())
                clusters = ckr::build_clusters(clusters_path, repo);
            std::optional<ckr::LookupCache> cache;
            if (!cache_path.empty()) cache = ckr::load_cache(cache_path);
            ckr::MatchConfig cfg;
            cfg.beam = beam;
            cfg.stack_size = stack_size;
            cfg.max_total_instantiations = max_instantiations;
            cfg.use_cache = cache.has_value();

            auto run_one = [&](const ckr::TokenSeq& query) {
                return ckr::retrieve(query, kb, model, repo, trie, clusters,
                                     cfg, cache ? &*cache : nullptr);
            };
            if (!query_text.empty()) {
                auto trace = run_one(ckr::tokenize(query_text));
                for (const auto& c : trace.final_candidates)
                    std::cout << ckr::join(c.keyword) << '\t' << c.score
                              << '\t' << c.stage << "\n";
                if (!trace_path.empty()) {
                    std::ofstream out(trace_path);
                    out << ckr::trace_to_json(trace, false).dump(2) << "\n";
                }
            } else if (!input_path.empty()) {
                if (output_path.empty())
                    throw ckr::DataError("batch mode needs --output");
                std::ofstream out(output_path);
                for (const auto& q : read_sentences(input_path)) {
                    auto trace = run_one(q);
                    for (const auto& c : trace.final_candidates)
                        out << ckr::join(q) << '\t' << ckr::join(c.keyword)
                            << '\t' << c.score << '\t' << c.stage << "\n";
                }
            } else {
                std::cerr << "match: need --query or --input\n";
                return kExitUsage;
            }
        } else if (train_disc->parsed()) {
            if (g.verbose)
                g.echo("train-discriminator",
                       {{"pairs", pairs_path}, {"out", disc_out}});
            auto kb = load_kb(g.kb_dir);
            auto pairs = ckr::load_labeled_pairs(pairs_path);
            ckr::AugmentationConfig aug_cfg;
            aug_cfg.proportion = augment_proportion;
            aug_cfg.rare_frequency_threshold = rare_threshold;
            std::vector<ckr::LabeledPair> merged = pairs;
            if (augment_proportion > 0.0) {
                auto extra = ckr::augment_dataset(pairs, kb, aug_cfg, g.seed);
                std::cerr << "augmented " << extra.size() << " pairs\n";
                merged.insert(merged.end(), extra.begin(), extra.end());
            }
            ckr::TrainHyper hyper;
            hyper.seed = g.seed;
            auto model = ckr::train_classifier(merged, kb, hyper);
            for (double target : {0.95, 0.70}) {
                if (auto t = ckr::calibrate_threshold(model, pairs, kb, target))
                    model.thresholds[target] = *t;
            }
            ckr::save_classifier(model, disc_out);
        } else if (score->parsed()) {
            auto kb = load_kb(g.kb_dir);
            auto model = ckr::load_classifier(model_json);
            std::cout << ckr::predict_score(model, ckr::tokenize(query_text),
                                            ckr::tokenize(keyword_text), kb)
                      << "\n";
        } else if (evaluate->parsed()) {
            ckr::ExperimentConfig cfg;
            cfg.world.seed = g.seed;
            if (!eval_config.empty()) {
                auto kv = read_flat_config(eval_config);
                auto get = [&](const char* key, auto& slot) {
                    auto it = kv.find(key);
                    if (it == kv.end()) return;
                    using T = std::decay_t<decltype(slot)>;
                    if constexpr (std::is_floating_point_v<T>)
                        slot = std::stod(it->second);
                    else
                        slot = static_cast<T>(std::stoull(it->second));
                };
                get("seed", cfg.world.seed);
                get("n_pairs", cfg.world.n_pairs);
                get("n_entities", cfg.world.n_entities);
                get("n_templates", cfg.world.n_templates);
                get("zipf_exponent", cfg.world.zipf_exponent);
                get("beam", cfg.beam);
                get("stack_size", cfg.stack_size);
                get("augment_proportion", cfg.augmentation.proportion);
            }
            if (g.verbose) g.echo("evaluate", {{"out", report_dir}});
            auto report = ckr::run_experiments(cfg);
            std::filesystem::create_directories(report_dir);
            {
                std::ofstream out(report_dir + "/report.json");
                out << report.to_json().dump(2) << "\n";
            }
            {
                std::ofstream out(report_dir + "/report.md");
                out << report.to_markdown();
            }
            std::cout << report.to_markdown();
        } else if (gen->parsed()) {
            wcfg.seed = g.seed;
            if (g.verbose) g.echo("gen-world", {{"out", world_dir}});
            auto world = ckr::gen_world(wcfg);
            ckr::write_world(world, world_dir);
            std::cout << "world: " << world.paraphrases.size() << " pairs, "
                      << world.keywords.size() << " keywords, "
                      << world.test_queries.size() << " test queries\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}
