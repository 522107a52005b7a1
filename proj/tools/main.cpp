#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <thread>

#include "keytopics/corpus.hpp"
#include "keytopics/evaluation.hpp"
#include "keytopics/gibbs.hpp"
#include "keytopics/io.hpp"
#include "keytopics/model.hpp"
#include "keytopics/prediction.hpp"
#include "keytopics/random.hpp"
#include "keytopics/similarity.hpp"

namespace fs = std::filesystem;
using namespace keytopics;

static constexpr const char* kToolVersion = "0.1.0";

// Every output directory (or output file, as <out>.manifest.json) gets a
// manifest: command, resolved parameters, seed, input hashes. Re-running with
// an identical manifest reproduces the outputs bit for bit.
static void write_manifest(const std::string& out_path, bool out_is_dir, const std::string& command,
                           const nlohmann::json& config, std::uint64_t seed,
                           const std::vector<std::string>& inputs) {
  nlohmann::json manifest;
  manifest["command"] = command;
  manifest["config"] = config;
  manifest["seed"] = seed;
  manifest["tool_version"] = kToolVersion;
  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& path : inputs) hashes[path] = file_hash_hex(path);
  manifest["input_hashes"] = hashes;
  const std::string path = out_is_dir ? out_path + "/manifest.json" : out_path + ".manifest.json";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << manifest.dump(2) << "\n";
}

// Dense cluster ids from a surface -> label map. Labels map to ids in sorted
// order; keyphrases absent from the file either error out (frozen training
// needs full coverage) or fall into fresh singleton clusters (baselines).
static std::vector<int> clustering_for_corpus(const std::map<std::string, std::string>& labels,
                                              const Corpus& corpus, bool require_full) {
  std::set<std::string> distinct;
  for (const auto& [surface, label] : labels) distinct.insert(label);
  std::map<std::string, int> label_id;
  for (const auto& label : distinct) label_id.emplace(label, static_cast<int>(label_id.size()));
  std::vector<int> clustering(corpus.num_keyphrases());
  int next_singleton = static_cast<int>(label_id.size());
  for (std::size_t l = 0; l < corpus.num_keyphrases(); ++l) {
    auto it = labels.find(corpus.keyphrases[l].surface);
    if (it != labels.end()) {
      clustering[l] = label_id[it->second];
    } else if (require_full) {
      throw std::runtime_error("clustering file does not cover keyphrase: " + corpus.keyphrases[l].surface);
    } else {
      clustering[l] = next_singleton++;
    }
  }
  return clustering;
}

// Property -> model cluster, through the property's most common keyphrase.
static std::map<std::string, int> property_cluster_map(const std::map<std::string, std::string>& gold_clustering,
                                                       const Corpus& corpus, const TrainedModel& model) {
  std::map<std::string, int> mapping;
  for (const auto& [property, rep] : property_representatives(gold_clustering, corpus))
    mapping[property] = model.clustering.at(rep);
  return mapping;
}

static void print_prf_table(std::ostream& os, const EvalReport& report) {
  os << std::left << std::setw(24) << "property" << std::right << std::setw(8) << "docs" << std::setw(10)
     << "recall" << std::setw(10) << "prec" << std::setw(10) << "f-score" << "\n";
  os << std::fixed << std::setprecision(3);
  for (const auto& res : report.per_property)
    os << std::left << std::setw(24) << res.property << std::right << std::setw(8) << res.docs_evaluated
       << std::setw(10) << res.scores.recall << std::setw(10) << res.scores.precision << std::setw(10)
       << res.scores.f_score << "\n";
  os << std::left << std::setw(24) << "overall (micro)" << std::right << std::setw(8) << report.per_item.size()
     << std::setw(10) << report.micro.recall << std::setw(10) << report.micro.precision << std::setw(10)
     << report.micro.f_score << "\n";
}

// Where a system's per-document keyphrase predictions come from.
struct SystemSpec {
  std::string predictions_path;   // model predictions (JSONL)
  std::string model_path;         // model behind those predictions
  std::string baseline;           // or a baseline name
  std::string clustering_path;    // clustering for cluster-in-text
  std::string clustering_source;  // "file" or "model"
};

static std::map<std::string, std::set<int>> predicted_keyphrase_sets(const SystemSpec& spec, const Corpus& corpus,
                                                                     std::uint64_t seed) {
  std::map<std::string, std::set<int>> predicted;
  if (!spec.predictions_path.empty()) {
    const SavedModel saved = load_model(spec.model_path);
    // Translate the model's keyphrase ids onto this corpus through surfaces.
    std::vector<int> to_corpus(saved.keyphrases.size(), -1);
    for (std::size_t l = 0; l < saved.keyphrases.size(); ++l)
      to_corpus[l] = corpus.keyphrase_id(saved.keyphrases[l]);
    for (const auto& rec : read_predictions(spec.predictions_path)) {
      std::set<int> clusters(rec.clusters.begin(), rec.clusters.end());
      auto& out = predicted[rec.doc_id];
      for (std::size_t l = 0; l < saved.model.clustering.size(); ++l)
        if (clusters.count(saved.model.clustering[l]) && to_corpus[l] >= 0) out.insert(to_corpus[l]);
    }
    return predicted;
  }

  std::vector<int> clustering;
  const std::vector<int>* clustering_ptr = nullptr;
  if (spec.baseline == "cluster-in-text") {
    if (spec.clustering_source == "model") {
      const SavedModel saved = load_model(spec.model_path);
      clustering.assign(corpus.num_keyphrases(), -1);
      std::map<std::string, int> surface_cluster;
      for (std::size_t l = 0; l < saved.keyphrases.size(); ++l)
        surface_cluster[saved.keyphrases[l]] = saved.model.clustering[l];
      int next = saved.model.hyper.num_topics;
      for (std::size_t l = 0; l < corpus.num_keyphrases(); ++l) {
        auto it = surface_cluster.find(corpus.keyphrases[l].surface);
        clustering[l] = it != surface_cluster.end() ? it->second : next++;
      }
    } else {
      clustering = clustering_for_corpus(load_gold_clustering(spec.clustering_path), corpus, false);
    }
    clustering_ptr = &clustering;
  }

  RandomSource rng(seed);
  for (const auto& doc : corpus.documents) {
    std::vector<int> kps;
    if (spec.baseline == "random")
      kps = baseline_predict(BaselineMethod::random, doc, corpus, nullptr, &rng);
    else if (spec.baseline == "keyphrase-in-text")
      kps = baseline_predict(BaselineMethod::keyphrase_in_text, doc, corpus);
    else if (spec.baseline == "cluster-in-text")
      kps = baseline_predict(BaselineMethod::cluster_in_text, doc, corpus, clustering_ptr);
    else
      throw std::runtime_error("unknown baseline: " + spec.baseline);
    predicted[doc.id] = std::set<int>(kps.begin(), kps.end());
  }
  return predicted;
}

int run(int argc, char** argv) {
  CLI::App app{"Joint keyphrase clustering and topic modeling for annotated review corpora"};
  app.require_subcommand(1);

  // ---- stats ----
  auto* stats_cmd = app.add_subcommand("stats", "Report corpus statistics");
  std::string stats_corpus;
  bool stats_json = false;
  stats_cmd->add_option("--corpus", stats_corpus, "Corpus JSONL")->required();
  stats_cmd->add_flag("--json", stats_json, "Emit JSON instead of text");

  // ---- similarity ----
  auto* sim_cmd = app.add_subcommand("similarity", "Build and dump the keyphrase similarity matrix");
  std::string sim_corpus, sim_out;
  double w_lex = 0.5, w_cooc = 0.5;
  sim_cmd->add_option("--corpus", sim_corpus, "Corpus JSONL")->required();
  sim_cmd->add_option("--out", sim_out, "Output CSV path")->required();
  sim_cmd->add_option("--w-lex", w_lex, "Lexical feature weight");
  sim_cmd->add_option("--w-cooc", w_cooc, "Co-occurrence feature weight");

  // ---- shared hyperparameter options ----
  struct HyperOpts {
    int k = -1;
    double psi0 = -1, phi0 = -1, theta0 = -1, lambda0_a = -1, lambda0_b = -1, epsilon = -1;
    void apply(HyperParams& h) const {
      if (k > 0) h.num_topics = k;
      if (psi0 > 0) h.psi0 = psi0;
      if (phi0 > 0) h.phi0 = phi0;
      if (theta0 > 0) h.theta0 = theta0;
      if (lambda0_a > 0) h.lambda0.a = lambda0_a;
      if (lambda0_b > 0) h.lambda0.b = lambda0_b;
      if (epsilon > 0) h.epsilon = epsilon;
    }
  };
  auto add_hyper_options = [](CLI::App* cmd, HyperOpts& opts) {
    cmd->add_option("--k", opts.k, "Cluster/topic count K");
    cmd->add_option("--psi0", opts.psi0, "Cluster distribution concentration");
    cmd->add_option("--phi0", opts.phi0, "Background topic concentration");
    cmd->add_option("--theta0", opts.theta0, "Language model concentration");
    cmd->add_option("--lambda0-a", opts.lambda0_a, "Source coin Beta prior, first parameter");
    cmd->add_option("--lambda0-b", opts.lambda0_b, "Source coin Beta prior, second parameter");
    cmd->add_option("--epsilon", opts.epsilon, "Eta mass on unannotated topics");
  };

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "Train the model by Gibbs sampling");
  std::string train_corpus, train_out, train_similarity, train_mode = "joint", train_clustering, train_domain,
              train_resume;
  HyperOpts train_hyper;
  int stage1 = 500, stage2 = 500, joint = 5000, retain = 1000, checkpoint_every = 0, trace_every = 10, chains = 1;
  bool paper_scale = false;
  std::uint64_t train_seed = 0;
  train_cmd->add_option("--corpus", train_corpus, "Corpus JSONL")->required();
  train_cmd->add_option("--out", train_out, "Output directory")->required();
  train_cmd->add_option("--similarity", train_similarity, "Similarity CSV (default: built from the corpus)");
  train_cmd->add_option("--mode", train_mode, "joint | frozen | independent")
      ->check(CLI::IsMember({"joint", "frozen", "independent"}));
  train_cmd->add_option("--clustering", train_clustering, "Clustering JSON for frozen mode");
  train_cmd->add_option("--domain", train_domain, "Preset: restaurants | cellphones | cameras")
      ->check(CLI::IsMember({"restaurants", "cellphones", "cameras"}));
  add_hyper_options(train_cmd, train_hyper);
  train_cmd->add_option("--stage1", stage1, "Clustering-only sweeps");
  train_cmd->add_option("--stage2", stage2, "Frozen-clustering text sweeps");
  train_cmd->add_option("--joint", joint, "Final-stage sweeps");
  train_cmd->add_option("--retain", retain, "Language-model snapshots to keep");
  train_cmd->add_flag("--paper-scale", paper_scale, "Use the 5000/5000/100000 schedule");
  train_cmd->add_option("--seed", train_seed, "Random seed");
  train_cmd->add_option("--checkpoint-every", checkpoint_every, "Write a checkpoint every N sweeps");
  train_cmd->add_option("--resume", train_resume, "Resume from a checkpoint file");
  train_cmd->add_option("--trace-every", trace_every, "Log-density trace interval");
  train_cmd->add_option("--chains", chains, "Independent seeded chains (seed, seed+1, ...)");

  // ---- infer ----
  auto* infer_cmd = app.add_subcommand("infer", "Infer topic posteriors for unannotated documents");
  std::string infer_model, infer_corpus, infer_out;
  int infer_iters = 2000;
  std::uint64_t infer_seed = 0;
  infer_cmd->add_option("--model", infer_model, "Trained model JSON")->required();
  infer_cmd->add_option("--corpus", infer_corpus, "Corpus JSONL (annotations ignored)")->required();
  infer_cmd->add_option("--out", infer_out, "Output posterior JSONL")->required();
  infer_cmd->add_option("--iters", infer_iters, "Gibbs iterations per document");
  infer_cmd->add_option("--seed", infer_seed, "Random seed");

  // ---- tune ----
  auto* tune_cmd = app.add_subcommand("tune", "Tune per-property thresholds on a development set");
  std::string tune_model, tune_posteriors, tune_gold, tune_clustering_file, tune_corpus, tune_out;
  tune_cmd->add_option("--model", tune_model, "Trained model JSON")->required();
  tune_cmd->add_option("--posteriors", tune_posteriors, "Development posteriors JSONL")->required();
  tune_cmd->add_option("--gold-properties", tune_gold, "Gold property JSONL")->required();
  tune_cmd->add_option("--gold-clustering", tune_clustering_file, "Gold clustering JSON")->required();
  tune_cmd->add_option("--corpus", tune_corpus, "Training corpus JSONL")->required();
  tune_cmd->add_option("--out", tune_out, "Output model JSON with thresholds")->required();

  // ---- predict ----
  auto* predict_cmd = app.add_subcommand("predict", "Apply thresholds to posteriors");
  std::string pred_model, pred_posteriors, pred_out;
  double pred_threshold = -1.0;
  predict_cmd->add_option("--model", pred_model, "Trained model JSON")->required();
  predict_cmd->add_option("--posteriors", pred_posteriors, "Posterior JSONL")->required();
  predict_cmd->add_option("--out", pred_out, "Output predictions JSONL")->required();
  predict_cmd->add_option("--threshold", pred_threshold, "Override every per-topic threshold");

  // ---- aggregate ----
  auto* agg_cmd = app.add_subcommand("aggregate", "Aggregate per-review predictions into product summaries");
  std::string agg_corpus, agg_out, agg_predictions, agg_model, agg_baseline, agg_clustering;
  int min_support = 2;
  agg_cmd->add_option("--corpus", agg_corpus, "Corpus JSONL with product ids")->required();
  agg_cmd->add_option("--out", agg_out, "Output summary JSONL")->required();
  agg_cmd->add_option("--min-support", min_support, "Reviews required to keep a property");
  agg_cmd->add_option("--predictions", agg_predictions, "Model predictions JSONL");
  agg_cmd->add_option("--model", agg_model, "Model JSON (for representatives)");
  agg_cmd->add_option("--baseline", agg_baseline, "verbatim | clustered")
      ->check(CLI::IsMember({"verbatim", "clustered"}));
  agg_cmd->add_option("--clustering", agg_clustering, "Clustering JSON for the clustered baseline");

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "Metrics, baselines, and significance tests");
  std::string eval_metric, eval_corpus, eval_gold, eval_gold_clustering, eval_out;
  std::string eval_predictions, eval_model, eval_baseline, eval_clustering_file;
  std::string eval_clustering_a, eval_clustering_b;
  std::string eval_predictions_a, eval_model_a, eval_predictions_b, eval_model_b, eval_baseline_b;
  bool restrict_antonym = false, random_sampled = false;
  int sig_trials = 10000;
  std::uint64_t eval_seed = 0;
  eval_cmd->add_option("--metric", eval_metric, "prf | rand | sigtest")
      ->required()
      ->check(CLI::IsMember({"prf", "rand", "sigtest"}));
  eval_cmd->add_option("--corpus", eval_corpus, "Corpus JSONL");
  eval_cmd->add_option("--gold-properties", eval_gold, "Gold property JSONL");
  eval_cmd->add_option("--gold-clustering", eval_gold_clustering, "Gold clustering JSON");
  eval_cmd->add_option("--predictions", eval_predictions, "Model predictions JSONL");
  eval_cmd->add_option("--model", eval_model, "Model JSON behind --predictions");
  eval_cmd->add_option("--baseline", eval_baseline,
                       "random | random-analytic | keyphrase-in-text | cluster-in-text");
  eval_cmd->add_option("--clustering", eval_clustering_file, "Clustering JSON for cluster-in-text");
  eval_cmd->add_flag("--restrict-antonym", restrict_antonym,
                     "Free-text protocol: score each property only on documents annotated with it or its antonym");
  eval_cmd->add_flag("--sampled", random_sampled, "Sample the random baseline instead of the analytic expectation");
  eval_cmd->add_option("--clustering-a", eval_clustering_a, "First clustering JSON (rand)");
  eval_cmd->add_option("--clustering-b", eval_clustering_b, "Second clustering JSON (rand)");
  eval_cmd->add_option("--predictions-a", eval_predictions_a, "System A predictions (sigtest)");
  eval_cmd->add_option("--model-a", eval_model_a, "System A model (sigtest)");
  eval_cmd->add_option("--predictions-b", eval_predictions_b, "System B predictions (sigtest)");
  eval_cmd->add_option("--model-b", eval_model_b, "System B model (sigtest)");
  eval_cmd->add_option("--baseline-b", eval_baseline_b, "System B baseline (sigtest)");
  eval_cmd->add_option("--trials", sig_trials, "Randomization trials");
  eval_cmd->add_option("--seed", eval_seed, "Random seed");
  eval_cmd->add_option("--out", eval_out, "Optional CSV report path");

  // ---- analyze-annotations ----
  auto* ana_cmd = app.add_subcommand("analyze-annotations", "Incompleteness and inconsistency reports");
  std::string ana_corpus, ana_gold, ana_clustering, ana_out;
  int min_occurrences = 5;
  ana_cmd->add_option("--corpus", ana_corpus, "Corpus JSONL")->required();
  ana_cmd->add_option("--gold-properties", ana_gold, "Gold property JSONL")->required();
  ana_cmd->add_option("--gold-clustering", ana_clustering, "Gold clustering JSON")->required();
  ana_cmd->add_option("--out", ana_out, "Output directory")->required();
  ana_cmd->add_option("--min-occurrences", min_occurrences, "Occurrence floor for the keyphrase counts");

  // ---- synth ----
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus with known latent truth");
  std::string synth_out;
  HyperOpts synth_hyper_opts;
  int synth_docs = 200, synth_keyphrases = 40, synth_tokens = 60, synth_vocab = 50, synth_annotations = 3;
  std::uint64_t synth_seed = 0;
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  add_hyper_options(synth_cmd, synth_hyper_opts);
  synth_cmd->add_option("--docs", synth_docs, "Documents to generate");
  synth_cmd->add_option("--keyphrases", synth_keyphrases, "Keyphrase universe size");
  synth_cmd->add_option("--tokens", synth_tokens, "Tokens per document");
  synth_cmd->add_option("--vocab", synth_vocab, "Vocabulary size");
  synth_cmd->add_option("--annotations", synth_annotations, "Annotations per document");
  synth_cmd->add_option("--seed", synth_seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    std::cerr << "Run `keytopics --help` or `keytopics <subcommand> --help` for usage.\n";
    return 2;
  }

  if (stats_cmd->parsed()) {
    const Corpus corpus = parse_corpus(stats_corpus);
    const CorpusStats stats = corpus_stats(corpus);
    if (stats_json) {
      nlohmann::json j{{"doc_count", stats.doc_count},
                       {"avg_review_length", stats.avg_review_length},
                       {"avg_keyphrases_per_review", stats.avg_keyphrases_per_review},
                       {"unique_keyphrase_count", stats.unique_keyphrase_count},
                       {"total_keyphrase_occurrences", stats.total_keyphrase_occurrences}};
      std::cout << j.dump(2) << "\n";
    } else {
      std::cout << "documents:                 " << stats.doc_count << "\n"
                << "avg review length:         " << stats.avg_review_length << "\n"
                << "avg keyphrases per review: " << stats.avg_keyphrases_per_review << "\n"
                << "unique keyphrases:         " << stats.unique_keyphrase_count << "\n"
                << "keyphrase occurrences:     " << stats.total_keyphrase_occurrences << "\n";
    }
    return 0;
  }

  if (sim_cmd->parsed()) {
    const Corpus corpus = parse_corpus(sim_corpus);
    const SimilarityMatrix sim = build_similarity_matrix(corpus, w_lex, w_cooc);
    std::ofstream out(sim_out);
    if (!out) throw std::runtime_error("cannot write similarity CSV: " + sim_out);
    write_similarity_csv(sim, corpus, out);
    write_manifest(sim_out, false, "similarity",
                   {{"corpus", sim_corpus}, {"w_lex", w_lex}, {"w_cooc", w_cooc}, {"out", sim_out}}, 0,
                   {sim_corpus});
    return 0;
  }

  if (train_cmd->parsed()) {
    const Corpus corpus = parse_corpus(train_corpus);
    std::vector<std::string> inputs = {train_corpus};

    HyperParams hyper;
    if (train_domain == "cellphones") {
      hyper.num_topics = 30;
      hyper.psi0 = 0.0001;
      hyper.phi0 = 0.0001;
      hyper.theta0 = 0.0001;
    } else if (train_domain == "cameras") {
      hyper.num_topics = 40;
      hyper.psi0 = 0.1;
      hyper.phi0 = 0.001;
      hyper.theta0 = 0.0001;
    }  // default: the restaurant column
    train_hyper.apply(hyper);

    TrainConfig cfg;
    cfg.hyper = hyper;
    cfg.stage1_iters = paper_scale ? 5000 : stage1;
    cfg.stage2_iters = paper_scale ? 5000 : stage2;
    cfg.joint_iters = paper_scale ? 100000 : joint;
    cfg.retain_last = retain;
    cfg.mode = clustering_mode_from_string(train_mode);
    cfg.seed = train_seed;
    cfg.checkpoint_every = checkpoint_every;
    if (cfg.mode == ClusteringMode::frozen) {
      if (train_clustering.empty()) throw std::runtime_error("frozen mode requires --clustering");
      cfg.fixed_clustering = clustering_for_corpus(load_gold_clustering(train_clustering), corpus, true);
      inputs.push_back(train_clustering);
    }

    SimilarityMatrix sim;
    if (train_similarity.empty()) {
      sim = build_similarity_matrix(corpus);
    } else {
      sim = read_similarity_csv(train_similarity, corpus);
      inputs.push_back(train_similarity);
    }

    fs::create_directories(train_out);
    auto run_chain = [&](int chain_idx) {
      const std::string dir = chains > 1 ? train_out + "/chain" + std::to_string(chain_idx) : train_out;
      fs::create_directories(dir);
      TrainConfig chain_cfg = cfg;
      chain_cfg.seed = cfg.seed + static_cast<std::uint64_t>(chain_idx);

      std::ofstream trace(dir + "/trace.csv");
      trace << "iteration,log_density\n" << std::setprecision(17);
      auto on_sweep = [&](const GibbsTrainer& t) {
        if (trace_every > 0 && t.iteration() % trace_every == 0)
          trace << t.iteration() << "," << t.log_density() << "\n";
        if (chain_cfg.checkpoint_every > 0 && t.iteration() % chain_cfg.checkpoint_every == 0)
          t.save_checkpoint(dir + "/checkpoint.json");
      };

      TrainedModel model;
      if (!train_resume.empty()) {
        GibbsTrainer trainer = GibbsTrainer::resume(corpus, sim, chain_cfg, train_resume);
        while (trainer.step()) on_sweep(trainer);
        model = trainer.finish();
      } else {
        GibbsTrainer trainer(corpus, sim, chain_cfg);
        model = trainer.train(on_sweep);
      }
      model.representatives = compute_representatives(model, corpus);

      SavedModel saved;
      saved.model = std::move(model);
      saved.vocabulary = corpus.vocabulary;
      for (const auto& kp : corpus.keyphrases) saved.keyphrases.push_back(kp.surface);
      save_model(saved, dir + "/model.json");
      write_clustering_json(saved.model, saved.keyphrases, dir + "/clustering.json");
      write_manifest(dir, true, "train",
                     {{"corpus", train_corpus},
                      {"similarity", train_similarity},
                      {"mode", train_mode},
                      {"domain", train_domain},
                      {"hyper", hyper_to_json(hyper)},
                      {"stage1", chain_cfg.stage1_iters},
                      {"stage2", chain_cfg.stage2_iters},
                      {"joint", chain_cfg.joint_iters},
                      {"retain", chain_cfg.retain_last},
                      {"checkpoint_every", chain_cfg.checkpoint_every},
                      {"resume", train_resume},
                      {"chain", chain_idx}},
                     chain_cfg.seed, inputs);
    };

    if (chains <= 1) {
      run_chain(0);
    } else {
      std::vector<std::thread> workers;
      for (int i = 0; i < chains; ++i) workers.emplace_back(run_chain, i);
      for (auto& w : workers) w.join();
    }
    return 0;
  }

  if (infer_cmd->parsed()) {
    const SavedModel saved = load_model(infer_model);
    const Corpus corpus = parse_corpus(infer_corpus);
    const auto vocab_index = vocab_index_of(saved.vocabulary);
    RandomSource rng(infer_seed);
    std::vector<PosteriorRecord> records;
    for (const auto& doc : corpus.documents) {
      const std::vector<int> tokens = map_tokens_to_model(doc, corpus, vocab_index);
      const TopicPosterior post = infer_topic_distribution(doc.id, tokens, saved.model, infer_iters, rng);
      records.push_back({post.doc_id, post.mean_background});
    }
    write_posteriors(records, infer_out);
    write_manifest(infer_out, false, "infer",
                   {{"model", infer_model}, {"corpus", infer_corpus}, {"iters", infer_iters}}, infer_seed,
                   {infer_model, infer_corpus});
    return 0;
  }

  if (tune_cmd->parsed()) {
    SavedModel saved = load_model(tune_model);
    const Corpus corpus = parse_corpus(tune_corpus);
    const auto gold_clustering = load_gold_clustering(tune_clustering_file);
    const auto gold_labels = load_gold_properties(tune_gold);
    std::vector<TopicPosterior> posteriors;
    for (const auto& r : read_posteriors(tune_posteriors)) posteriors.push_back({r.doc_id, r.posterior});

    const auto mapping = property_cluster_map(gold_clustering, corpus, saved.model);
    const auto tuned = tune_thresholds(posteriors, gold_labels, mapping);
    apply_thresholds(saved.model, tuned);
    save_model(saved, tune_out);

    std::cout << std::left << std::setw(24) << "property" << std::right << std::setw(9) << "cluster"
              << std::setw(11) << "threshold" << std::setw(9) << "dev-F" << "\n";
    std::cout << std::fixed << std::setprecision(3);
    for (const auto& t : tuned) {
      std::cout << std::left << std::setw(24) << t.property << std::right << std::setw(9) << t.cluster
                << std::setw(11) << t.threshold << std::setw(9) << t.f_score;
      if (!t.has_positives) std::cout << "  (no positive dev labels: never predicted)";
      std::cout << "\n";
    }
    write_manifest(tune_out, false, "tune",
                   {{"model", tune_model},
                    {"posteriors", tune_posteriors},
                    {"gold_properties", tune_gold},
                    {"gold_clustering", tune_clustering_file},
                    {"corpus", tune_corpus}},
                   0, {tune_model, tune_posteriors, tune_gold, tune_clustering_file, tune_corpus});
    return 0;
  }

  if (predict_cmd->parsed()) {
    SavedModel saved = load_model(pred_model);
    if (pred_threshold >= 0.0) saved.model.thresholds.assign(saved.model.hyper.num_topics, pred_threshold);
    if (!saved.model.thresholds_tuned())
      throw std::runtime_error("model thresholds are not tuned; run `tune` or pass --threshold");
    std::vector<PredictionRecord> records;
    for (const auto& post : read_posteriors(pred_posteriors)) {
      const PropertyPrediction pred =
          predict_properties({post.doc_id, post.posterior}, saved.model, saved.keyphrases);
      records.push_back({pred.doc_id, pred.supported_clusters, pred.representative_keyphrases, post.posterior});
    }
    write_predictions(records, pred_out);
    write_manifest(pred_out, false, "predict",
                   {{"model", pred_model}, {"posteriors", pred_posteriors}, {"threshold", pred_threshold}}, 0,
                   {pred_model, pred_posteriors});
    return 0;
  }

  if (agg_cmd->parsed()) {
    const Corpus corpus = parse_corpus(agg_corpus);
    std::map<std::string, std::vector<const Document*>> by_product;
    for (const auto& doc : corpus.documents)
      if (!doc.product_id.empty()) by_product[doc.product_id].push_back(&doc);

    std::vector<SummaryRecord> summaries;
    std::vector<std::string> inputs = {agg_corpus};
    if (!agg_predictions.empty()) {
      if (agg_model.empty()) throw std::runtime_error("aggregate with --predictions requires --model");
      const SavedModel saved = load_model(agg_model);
      inputs.push_back(agg_predictions);
      inputs.push_back(agg_model);
      std::map<int, std::string> representative;
      for (int k = 0; k < saved.model.hyper.num_topics; ++k)
        if (!saved.model.representatives.empty() && saved.model.representatives[k] >= 0)
          representative[k] = saved.keyphrases[saved.model.representatives[k]];
      std::map<std::string, PropertyPrediction> by_doc;
      for (const auto& rec : read_predictions(agg_predictions))
        by_doc[rec.doc_id] = {rec.doc_id, rec.clusters, rec.keyphrases};
      for (const auto& [product, docs] : by_product) {
        std::vector<PropertyPrediction> reviews;
        for (const Document* doc : docs) {
          auto it = by_doc.find(doc->id);
          if (it != by_doc.end()) reviews.push_back(it->second);
        }
        const AggregateSummary summary = aggregate(product, reviews, min_support, representative);
        summaries.push_back({summary.product_id, summary.pros_cons, summary.review_count, summary.min_support});
      }
    } else {
      if (agg_baseline.empty()) throw std::runtime_error("aggregate requires --predictions or --baseline");
      const bool clustered = agg_baseline == "clustered";
      std::vector<int> clustering;
      if (clustered) {
        if (agg_clustering.empty()) throw std::runtime_error("clustered aggregation requires --clustering");
        clustering = clustering_for_corpus(load_gold_clustering(agg_clustering), corpus, false);
        inputs.push_back(agg_clustering);
      }
      for (const auto& [product, docs] : by_product) {
        const auto supported =
            baseline_aggregate(clustered, docs, corpus, clustered ? &clustering : nullptr, min_support);
        SummaryRecord rec;
        rec.product_id = product;
        for (int kp : supported) rec.pros_cons.push_back(corpus.keyphrases[kp].surface);
        rec.review_count = static_cast<int>(docs.size());
        rec.min_support = min_support;
        summaries.push_back(std::move(rec));
      }
    }
    write_summaries(summaries, agg_out);
    write_manifest(agg_out, false, "aggregate",
                   {{"corpus", agg_corpus},
                    {"predictions", agg_predictions},
                    {"model", agg_model},
                    {"baseline", agg_baseline},
                    {"clustering", agg_clustering},
                    {"min_support", min_support}},
                   0, inputs);
    return 0;
  }

  if (eval_cmd->parsed()) {
    if (eval_metric == "rand") {
      if (eval_clustering_a.empty() || eval_clustering_b.empty())
        throw std::runtime_error("eval --metric rand requires --clustering-a and --clustering-b");
      const Clustering a = Clustering::from_map(load_gold_clustering(eval_clustering_a));
      const Clustering b = Clustering::from_map(load_gold_clustering(eval_clustering_b));
      std::cout << std::setprecision(6) << "rand_index " << rand_index(a, b) << "\n";
      return 0;
    }

    if (eval_corpus.empty() || eval_gold.empty() || eval_gold_clustering.empty())
      throw std::runtime_error("eval requires --corpus, --gold-properties, and --gold-clustering");
    const Corpus corpus = parse_corpus(eval_corpus);
    const auto gold_labels = load_gold_properties(eval_gold);
    const auto gold_clustering = load_gold_clustering(eval_gold_clustering);

    if (eval_metric == "prf") {
      if (eval_baseline == "random" && !random_sampled) eval_baseline = "random-analytic";
      if (eval_baseline == "random-analytic") {
        // Analytic expectation over the gold set, reported instead of a run.
        long long occurrences = 0;
        std::set<std::string> properties;
        for (const auto& [surface, label] : gold_clustering) properties.insert(label);
        for (const auto& [doc, props] : gold_labels) occurrences += static_cast<long long>(props.size());
        const PRF expected = random_baseline_expectation(occurrences, static_cast<long long>(gold_labels.size()),
                                                         static_cast<long long>(properties.size()));
        std::cout << std::fixed << std::setprecision(3) << "random baseline (analytic expectation)\n"
                  << "recall " << expected.recall << "  precision " << expected.precision << "  f-score "
                  << expected.f_score << "\n";
        return 0;
      }
      SystemSpec spec;
      spec.predictions_path = eval_predictions;
      spec.model_path = eval_model;
      spec.baseline = eval_baseline;
      spec.clustering_path = eval_clustering_file;
      spec.clustering_source = eval_clustering_file.empty() ? "model" : "file";
      if (!eval_predictions.empty() && eval_model.empty())
        throw std::runtime_error("eval --predictions requires --model");
      if (eval_predictions.empty() && eval_baseline.empty())
        throw std::runtime_error("eval --metric prf requires --predictions or --baseline");
      const auto predicted = predicted_keyphrase_sets(spec, corpus, eval_seed);
      const EvalReport report =
          evaluate_property_predictions(predicted, gold_labels, gold_clustering, corpus, restrict_antonym);
      print_prf_table(std::cout, report);
      if (!eval_out.empty()) {
        std::ofstream csv(eval_out);
        csv << "property,docs,recall,precision,f_score\n" << std::setprecision(17);
        for (const auto& res : report.per_property)
          csv << res.property << "," << res.docs_evaluated << "," << res.scores.recall << ","
              << res.scores.precision << "," << res.scores.f_score << "\n";
        csv << "overall," << report.per_item.size() << "," << report.micro.recall << "," << report.micro.precision
            << "," << report.micro.f_score << "\n";
      }
      return 0;
    }

    // sigtest: approximate randomization on the pooled F-score difference.
    if (eval_predictions_a.empty() || eval_model_a.empty())
      throw std::runtime_error("sigtest requires --predictions-a and --model-a");
    SystemSpec spec_a;
    spec_a.predictions_path = eval_predictions_a;
    spec_a.model_path = eval_model_a;
    SystemSpec spec_b;
    if (!eval_predictions_b.empty()) {
      spec_b.predictions_path = eval_predictions_b;
      spec_b.model_path = eval_model_b.empty() ? eval_model_a : eval_model_b;
    } else if (!eval_baseline_b.empty()) {
      spec_b.baseline = eval_baseline_b;
      spec_b.clustering_path = eval_clustering_file;
      spec_b.clustering_source = eval_clustering_file.empty() ? "model" : "file";
      spec_b.model_path = eval_model_a;
    } else {
      throw std::runtime_error("sigtest requires --predictions-b or --baseline-b");
    }
    const auto pred_a = predicted_keyphrase_sets(spec_a, corpus, eval_seed);
    const auto pred_b = predicted_keyphrase_sets(spec_b, corpus, eval_seed + 1);
    const EvalReport rep_a =
        evaluate_property_predictions(pred_a, gold_labels, gold_clustering, corpus, restrict_antonym);
    const EvalReport rep_b =
        evaluate_property_predictions(pred_b, gold_labels, gold_clustering, corpus, restrict_antonym);
    if (rep_a.items != rep_b.items) throw std::runtime_error("sigtest: item sets are not aligned");
    const double p =
        approximate_randomization(rep_a.per_item, rep_b.per_item, pooled_f_score, sig_trials, eval_seed);
    std::cout << std::fixed << std::setprecision(3) << "system A f-score " << rep_a.micro.f_score << "\n"
              << "system B f-score " << rep_b.micro.f_score << "\n"
              << std::setprecision(6) << "p-value " << p << "  (" << sig_trials << " trials)\n";
    return 0;
  }

  if (ana_cmd->parsed()) {
    const Corpus corpus = parse_corpus(ana_corpus);
    const auto gold_labels = load_gold_properties(ana_gold);
    const auto gold_clustering = load_gold_clustering(ana_clustering);
    const AnnotationReport report = annotation_analysis(corpus, gold_labels, gold_clustering, min_occurrences);

    fs::create_directories(ana_out);
    std::ofstream text(ana_out + "/report.txt");
    std::ofstream csv(ana_out + "/report.csv");
    std::ofstream curves(ana_out + "/coverage.csv");
    auto emit = [&](std::ostream& os) {
      os << std::left << std::setw(24) << "property" << std::right << std::setw(9) << "recall" << std::setw(10)
         << "prec" << std::setw(10) << "f-score" << std::setw(12) << "keyphrases" << std::setw(12) << "coverage%"
         << "\n";
      os << std::fixed;
      for (const auto& p : report.properties)
        os << std::left << std::setw(24) << p.property << std::right << std::setprecision(3) << std::setw(9)
           << p.incompleteness.recall << std::setw(10) << p.incompleteness.precision << std::setw(10)
           << p.incompleteness.f_score << std::setw(12) << p.keyphrase_count << std::setprecision(1)
           << std::setw(12) << p.top_coverage_pct << "\n";
      os << std::left << std::setw(24) << "weighted average" << std::right << std::setprecision(3) << std::setw(9)
         << report.weighted_average.recall << std::setw(10) << report.weighted_average.precision << std::setw(10)
         << report.weighted_average.f_score << std::setprecision(1) << std::setw(12) << report.avg_keyphrase_count
         << std::setw(12) << report.avg_top_coverage << "\n";
    };
    emit(text);
    emit(std::cout);
    csv << "property,recall,precision,f_score,keyphrase_count,top_coverage_pct,total_occurrences\n"
        << std::setprecision(17);
    for (const auto& p : report.properties)
      csv << p.property << "," << p.incompleteness.recall << "," << p.incompleteness.precision << ","
          << p.incompleteness.f_score << "," << p.keyphrase_count << "," << p.top_coverage_pct << ","
          << p.total_occurrences << "\n";
    curves << "property,rank,cumulative_pct\n" << std::setprecision(17);
    for (const auto& p : report.properties)
      for (std::size_t r = 0; r < p.coverage_curve.size(); ++r)
        curves << p.property << "," << (r + 1) << "," << p.coverage_curve[r] << "\n";
    write_manifest(ana_out, true, "analyze-annotations",
                   {{"corpus", ana_corpus},
                    {"gold_properties", ana_gold},
                    {"gold_clustering", ana_clustering},
                    {"min_occurrences", min_occurrences}},
                   0, {ana_corpus, ana_gold, ana_clustering});
    return 0;
  }

  if (synth_cmd->parsed()) {
    HyperParams hyper;
    hyper.num_topics = 4;
    hyper.psi0 = 10.0;
    hyper.phi0 = 1.0;
    hyper.theta0 = 0.01;
    synth_hyper_opts.apply(hyper);
    const SyntheticCorpus synth = forward_generate(hyper, synth_docs, synth_keyphrases, synth_tokens, synth_vocab,
                                                   synth_annotations, synth_seed);
    fs::create_directories(synth_out);
    serialize_corpus(synth.corpus, synth_out + "/corpus.jsonl");
    std::ofstream sim_out_file(synth_out + "/similarity.csv");
    write_similarity_csv(synth.similarity, synth.corpus, sim_out_file);
    write_truth_json(synth, synth_out + "/truth.json");
    nlohmann::json truth_clusters = nlohmann::json::object();
    for (std::size_t l = 0; l < synth.corpus.keyphrases.size(); ++l)
      truth_clusters[synth.corpus.keyphrases[l].surface] = "c" + std::to_string(synth.truth.cluster_of[l]);
    std::ofstream tc(synth_out + "/truth_clustering.json");
    tc << truth_clusters.dump(2) << "\n";
    write_manifest(synth_out, true, "synth",
                   {{"hyper", hyper_to_json(hyper)},
                    {"docs", synth_docs},
                    {"keyphrases", synth_keyphrases},
                    {"tokens", synth_tokens},
                    {"vocab", synth_vocab},
                    {"annotations", synth_annotations}},
                   synth_seed, {});
    return 0;
  }

  return 2;
}

int main(int argc, char** argv) {
  if (argc <= 1) {
    std::cerr << "Joint keyphrase clustering and topic modeling for annotated review corpora\n"
              << "Usage: keytopics <subcommand> [options]\n"
              << "Subcommands: stats similarity train infer tune predict aggregate eval analyze-annotations synth\n"
              << "Run `keytopics <subcommand> --help` for options.\n";
    return 2;
  }
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
