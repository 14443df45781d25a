// Command-line entry point. Every command prints line-delimited records
// (or JSON objects with --json) and exits non-zero on error.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "signmix/batch.hpp"
#include "signmix/clip.hpp"
#include "signmix/config.hpp"
#include "signmix/eval.hpp"
#include "signmix/experiment.hpp"
#include "signmix/features.hpp"
#include "signmix/grouping.hpp"
#include "signmix/kernels.hpp"
#include "signmix/manifest.hpp"
#include "signmix/model.hpp"
#include "signmix/review.hpp"
#include "signmix/review_http.hpp"
#include "signmix/schedule.hpp"
#include "signmix/split.hpp"
#include "signmix/synth.hpp"
#include "signmix/trainer.hpp"

namespace fs = std::filesystem;
using namespace signmix;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
  bool json = false;
};

Globals g;

void emit(const Record& r) { std::cout << (g.json ? r.to_json() : r.to_line()) << '\n'; }

void emit_all(const std::vector<Record>& rs) {
  for (const auto& r : rs) emit(r);
}

// Writes to --out when given, otherwise prints.
void deliver(const std::vector<Record>& rs) {
  if (g.out.empty()) {
    emit_all(rs);
  } else {
    write_records(g.out, rs);
  }
}

const std::string& need_out(const char* what) {
  if (g.out.empty()) throw std::invalid_argument(std::string(what) + " needs --out");
  return g.out;
}

Config load_config() { return g.config.empty() ? Config{} : Config::load(g.config); }

LabelMode label_mode(const std::string& s) {
  if (s == "gloss") return LabelMode::gloss;
  if (s == "group") return LabelMode::group;
  throw std::invalid_argument("labels must be 'gloss' or 'group'");
}

Record outcome_record(const PairOutcome& o) {
  Record r("outcome");
  r.add("a", o.pair.a).add("b", o.pair.b).add("votes", o.votes).add("true_votes", o.true_votes);
  r.add("status", to_string(o.status));
  return r;
}

ReviewHttpServer* active_server = nullptr;
void on_signal(int) {
  if (active_server) active_server->stop();
}

// ---- split -----------------------------------------------------------------

void add_split(CLI::App& app) {
  auto* cmd = app.add_subcommand("split", "Signer-disjoint balanced train/test split");
  static std::string manifest, report, rule = "first";
  static double p = 0.2, threshold = 0.05;
  static std::size_t restarts = 8, max_rounds = 0;
  static bool verify_only = false, serial = false;
  cmd->add_option("--manifest", manifest, "Input manifest")->required();
  cmd->add_option("--p", p, "Test ratio");
  cmd->add_option("--restarts", restarts, "Extra random initialisations");
  cmd->add_option("--max-rounds", max_rounds, "Swap budget per run (0: 10 x signers)");
  cmd->add_option("--rule", rule, "Swap acceptance: first or best");
  cmd->add_option("--report", report, "Write the split report here");
  cmd->add_option("--threshold", threshold, "Deviation threshold for the report");
  cmd->add_flag("--verify", verify_only, "Only verify the existing split");
  cmd->add_flag("--serial", serial, "Run restarts serially");
  cmd->callback([] {
    auto m = load_manifest(manifest);
    if (!verify_only) {
      SplitConfig cfg;
      cfg.p = p;
      cfg.seed = g.seed;
      cfg.restarts = restarts;
      cfg.max_rounds = max_rounds;
      cfg.parallel = !serial;
      if (rule == "best") {
        cfg.rule = SwapRule::best_improvement;
      } else if (rule != "first") {
        throw std::invalid_argument("--rule must be 'first' or 'best'");
      }
      auto result = optimize_split(m, cfg);
      m = result.manifest;
      save_manifest(m, need_out("split"));
      emit(Record("split")
               .add("restarts", result.runs.size())
               .add("best_restart", result.best.restart)
               .add("rounds", result.best.rounds)
               .add("converged", result.best.converged)
               .add_list("test_signers", result.test_signer_ids));
    }
    auto records = report_records(verify_split(m, p, threshold));
    if (!report.empty()) write_records(report, records);
    emit_all(records);
  });
}

// ---- group -----------------------------------------------------------------

void add_group(CLI::App& app) {
  auto* cmd = app.add_subcommand("group", "Visually-similar-sign grouping");
  cmd->require_subcommand(1);

  auto* cand = cmd->add_subcommand("candidates", "Top-k template-similarity pairs");
  static std::string scores;
  static std::size_t k = 10;
  cand->add_option("--scores", scores, "Template score table")->required();
  cand->add_option("--k", k, "Neighbours per template");
  cand->callback([] {
    std::vector<Record> rs;
    for (const auto& p : candidate_pairs_from_templates(load_score_table(scores), k)) rs.push_back(pair_record(p));
    deliver(rs);
  });

  auto* agg = cmd->add_subcommand("aggregate", "Adjudicate pairs from a vote log");
  static std::string votes;
  static std::size_t quorum = 5, majority = 3;
  agg->add_option("--votes", votes, "Vote log")->required();
  agg->add_option("--quorum", quorum, "Votes needed to close a pair");
  agg->add_option("--majority", majority, "True votes needed to match");
  agg->callback([] {
    std::vector<Record> rs;
    auto vs = load_votes(votes);
    for (const auto& o : aggregate_votes(vs, quorum, majority)) rs.push_back(outcome_record(o));
    deliver(rs);
  });

  auto* merge = cmd->add_subcommand("merge", "Merge matched pairs into manifest groups");
  static std::string manifest;
  merge->add_option("--manifest", manifest, "Manifest to group")->required();
  merge->add_option("--votes", votes, "Vote log")->required();
  merge->add_option("--quorum", quorum, "Votes needed to close a pair");
  merge->add_option("--majority", majority, "True votes needed to match");
  merge->callback([] {
    auto m = load_manifest(manifest);
    auto vs = load_votes(votes);
    std::vector<PairKey> matched;
    for (const auto& o : aggregate_votes(vs, quorum, majority)) {
      if (o.matched()) matched.push_back(o.pair);
    }
    auto gs = merge_matched(GroupingState(m), matched);
    auto grouped = with_groups(m, gs);
    save_manifest(grouped, need_out("group merge"));
    for (const auto& grp : grouped.canonical().groups) {
      if (grp.members.size() >= 2) emit(group_record(grp));
    }
  });

  auto* refine = cmd->add_subcommand("refine", "Candidate pairs from a confusion table");
  static std::size_t top = 10;
  refine->add_option("--manifest", manifest, "Grouped manifest")->required();
  refine->add_option("--scores", scores, "Confusion table")->required();
  refine->add_option("--top", top, "Pairs to propose");
  refine->callback([] {
    auto m = load_manifest(manifest);
    std::vector<Record> rs;
    for (const auto& p : refinement_candidates(load_score_table(scores), GroupingState(m), top)) {
      rs.push_back(pair_record(p));
    }
    deliver(rs);
  });
}

// ---- review-serve ----------------------------------------------------------

void add_review(CLI::App& app) {
  auto* cmd = app.add_subcommand("review-serve", "Serve pairwise review tasks over HTTP");
  static std::string experts, pairs, media, log, host = "127.0.0.1";
  static int port = 8080;
  static std::size_t quorum = 5;
  cmd->add_option("--experts", experts, "Expert list")->required();
  cmd->add_option("--pairs", pairs, "Candidate pairs")->required();
  cmd->add_option("--media", media, "Template media URIs");
  cmd->add_option("--votes-log", log, "Append-only vote log")->required();
  cmd->add_option("--host", host, "Bind address");
  cmd->add_option("--port", port, "Port (0: any)");
  cmd->add_option("--quorum", quorum, "Votes per pair");
  cmd->callback([] {
    ReviewConfig cfg;
    cfg.quorum = quorum;
    cfg.votes_log = log;
    ReviewService service(load_experts(experts), load_pairs(pairs),
                          media.empty() ? std::map<std::string, std::string>{} : load_media(media), cfg);
    ReviewHttpServer server(service);
    const int bound = server.bind(host, port);
    emit(Record("listening").add("host", host).add("port", bound));
    std::cout.flush();
    active_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.serve();
    active_server = nullptr;
    emit(progress_record(service.progress()));
  });
}

// ---- sample ----------------------------------------------------------------

void add_sample(CLI::App& app) {
  auto* cmd = app.add_subcommand("sample", "Sample training clips from a manifest");
  static std::string manifest;
  static int count = 1;
  static bool augment = false;
  cmd->add_option("--manifest", manifest, "Manifest")->required();
  cmd->add_option("--count", count, "Clips per sample");
  cmd->add_flag("--augment", augment, "Apply temporal augmentation");
  cmd->callback([] {
    auto m = load_manifest(manifest);
    Rng rng(g.seed);
    ClipSpec spec;
    AugmentConfig aug;
    std::vector<Record> rs;
    for (const auto& s : m.samples) {
      for (int i = 0; i < count; ++i) {
        auto clip = sample_clip(s, spec, rng);
        auto idx = augment ? apply_temporal_augment(clip.frame_indices, aug, rng) : clip.frame_indices;
        std::vector<std::string> items;
        for (int f : idx) items.push_back(std::to_string(f));
        Record r("clip");
        r.add("sample", s.sample_id).add("start", clip.clip_start).add("end", clip.clip_end);
        r.add_list("indices", items);
        r.add("boundary_start", clip.boundary_targets.start).add("boundary_end", clip.boundary_targets.end);
        rs.push_back(std::move(r));
      }
    }
    deliver(rs);
  });
}

// ---- train / evaluate / export-embeddings -----------------------------------

void add_train(CLI::App& app) {
  auto* cmd = app.add_subcommand("train", "Train or co-train a model");
  static std::vector<std::string> manifests;
  static std::string features, init, mode = "scratch", metrics, labels = "gloss";
  cmd->add_option("--manifests", manifests, "Split manifests, one per language")->required()->delimiter(',');
  cmd->add_option("--features", features, "Feature store base path")->required();
  cmd->add_option("--init", init, "Initial checkpoint (pretrained/frozen)");
  cmd->add_option("--mode", mode, "scratch, pretrained or frozen");
  cmd->add_option("--metrics", metrics, "Metrics log path");
  cmd->add_option("--labels", labels, "gloss or group");
  cmd->callback([] {
    const auto cfg_file = load_config();
    TrainerConfig cfg = trainer_config_from(cfg_file);
    cfg.seed = g.seed;
    cfg.mode = encoder_mode_from_string(mode);
    auto store = FeatureStore::load(features);
    std::vector<DatasetManifest> ms;
    for (const auto& p : manifests) ms.push_back(load_manifest(p));
    std::vector<LanguageData> data;
    for (const auto& m : ms) data.push_back(prepare_language(m, store, label_mode(labels)));
    std::optional<Model> start;
    if (!init.empty()) start = load_checkpoint(init);
    if (cfg.mode == EncoderMode::frozen) cfg.plan = frozen_plan(cfg.plan);

    std::ofstream log_file;
    if (!metrics.empty()) log_file.open(metrics);
    auto result = train(data, cfg, start ? &*start : nullptr, metrics.empty() ? nullptr : &log_file);
    save_checkpoint(result.model, need_out("train"), hex64(cfg_file.hash()));
    for (const auto& m : result.metrics) emit(metrics_record(m));
  });
}

struct Scored {
  Model model;
  DatasetManifest manifest;
  FeatureStore store;
  std::size_t head;
};

Scored open_scored(const std::string& ckpt, const std::string& manifest, const std::string& features) {
  Scored s{load_checkpoint(ckpt), load_manifest(manifest), FeatureStore::load(features), 0};
  s.head = s.model.head_index(s.manifest.language);
  return s;
}

void add_evaluate(CLI::App& app) {
  auto* cmd = app.add_subcommand("evaluate", "Score a checkpoint on a manifest's test set");
  static std::string ckpt, manifest, features, labels = "gloss";
  cmd->add_option("--checkpoint", ckpt, "Checkpoint")->required();
  cmd->add_option("--manifest", manifest, "Split manifest")->required();
  cmd->add_option("--features", features, "Feature store base path")->required();
  cmd->add_option("--labels", labels, "gloss or group");
  cmd->callback([] {
    auto s = open_scored(ckpt, manifest, features);
    const auto& head = s.model.heads()[s.head];
    LabelSpace space(head.labels);
    auto data = prepare_language(s.manifest, s.store, label_mode(labels));
    std::vector<std::size_t> truth;
    for (auto t : data.test_labels) truth.push_back(space.index(data.space.label(t)));
    auto pred = predict_samples(s.model, s.head, data.test, s.store, ClipSpec{});
    auto set = make_predictions(data.test, pred, truth, space);
    if (!g.out.empty()) save_predictions(set, g.out);
    emit(Record("accuracy").add("language", head.language.code).add("top1", top1_accuracy(set)).add("n", set.rows.size()));
  });
}

void add_export(CLI::App& app) {
  auto* cmd = app.add_subcommand("export-embeddings", "Encoder embeddings of center clips");
  static std::string ckpt, manifest, features, subset = "all";
  cmd->add_option("--checkpoint", ckpt, "Checkpoint")->required();
  cmd->add_option("--manifest", manifest, "Manifest")->required();
  cmd->add_option("--features", features, "Feature store base path")->required();
  cmd->add_option("--subset", subset, "all, train or test");
  cmd->callback([] {
    auto model = load_checkpoint(ckpt);
    auto m = load_manifest(manifest);
    auto store = FeatureStore::load(features);
    std::vector<SampleRecord> samples;
    for (const auto& s : m.samples) {
      if (subset == "all" || subset == to_string(s.subset)) samples.push_back(s);
    }
    std::vector<std::vector<double>> feats;
    for (const auto& s : samples) feats.push_back(clip_features(store, s, ClipSpec{}));
    auto emb = embed_all(model, feats);
    std::vector<Record> rs;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      rs.push_back(Record("embedding").add("sample", samples[i].sample_id).add("gloss", samples[i].gloss).add_doubles("values", emb[i]));
    }
    deliver(rs);
  });
}

// ---- eval ------------------------------------------------------------------

void add_eval(CLI::App& app) {
  auto* cmd = app.add_subcommand("eval", "Evaluation procedures on prediction files");
  cmd->require_subcommand(1);
  static std::string preds, manifest, map;
  static int k = 3;

  auto* top1 = cmd->add_subcommand("top1", "Top-1 accuracy");
  top1->add_option("--predictions", preds, "Prediction file")->required();
  top1->callback([] {
    auto p = load_predictions(preds);
    emit(Record("top1").add("accuracy", top1_accuracy(p)).add("n", p.rows.size()));
  });

  auto* bd = cmd->add_subcommand("breakdown", "Whole / non-VSSign / VSSign accuracy on grouped labels");
  bd->add_option("--predictions", preds, "Prediction file")->required();
  bd->add_option("--manifest", manifest, "Grouped manifest")->required();
  bd->callback([] { emit(breakdown_record(grouped_accuracy_breakdown(load_predictions(preds), load_manifest(manifest)))); });

  auto* mb = cmd->add_subcommand("map-build", "Source-to-target label map from source predictions");
  mb->add_option("--predictions", preds, "Source predictions on the target train set")->required();
  mb->callback([] { deliver(label_map_records(build_label_map(load_predictions(preds)))); });

  auto* ma = cmd->add_subcommand("map-apply", "Map source predictions to target labels");
  ma->add_option("--map", map, "Label map")->required();
  ma->add_option("--predictions", preds, "Source predictions on the target test set")->required();
  ma->add_option("--manifest", manifest, "Target manifest (vocabulary)");
  ma->callback([] {
    std::optional<LabelSpace> vocab;
    if (!manifest.empty()) vocab = gloss_space(load_manifest(manifest));
    auto p = load_predictions(preds, nullptr, vocab ? &*vocab : nullptr);
    auto mapped = apply_label_map(load_label_map(map), p);
    if (!g.out.empty()) save_predictions(mapped, g.out);
    emit(Record("top1").add("accuracy", top1_accuracy(mapped)).add("n", mapped.rows.size()));
  });

  auto* ks = cmd->add_subcommand("kshot", "Keep at most k train samples per class");
  ks->add_option("--manifest", manifest, "Split manifest")->required();
  ks->add_option("--k", k, "Samples per class");
  ks->callback([] {
    auto out = kshot_truncate(load_manifest(manifest), k, g.seed);
    save_manifest(out, need_out("eval kshot"));
    emit(Record("kshot").add("k", k).add("train", samples_in(out, Subset::train).size()).add("test", samples_in(out, Subset::test).size()));
  });
}

// ---- synth / experiment / schedule -------------------------------------------

void add_synth(CLI::App& app) {
  auto* cmd = app.add_subcommand("synth", "Generate a synthetic multilingual dataset");
  cmd->callback([] {
    auto c = load_config();
    c.set("seed", std::to_string(g.seed));
    auto spec = experiment_config(c).synth;
    auto data = gen_synthetic(spec);
    fs::path dir = need_out("synth");
    fs::create_directories(dir);
    for (const auto& m : data.manifests) {
      auto path = dir / (m.language.code + ".manifest");
      save_manifest(m, path);
      emit(Record("manifest").add("language", m.language.code).add("path", path.string()).add("samples", m.samples.size()));
    }
    data.features.save(dir / "features");
    emit(Record("features").add("path", (dir / "features").string()).add("samples", data.features.size()));
  });
}

void add_experiment(CLI::App& app) {
  auto* cmd = app.add_subcommand("experiment", "Run named scenarios from --config");
  static bool verbose = false;
  cmd->add_flag("--verbose", verbose, "Print training metrics to stderr");
  cmd->callback([] {
    if (g.config.empty()) throw std::invalid_argument("experiment needs --config");
    auto c = Config::load(g.config);
    if (!c.has("seed")) c.set("seed", std::to_string(g.seed));
    auto report = run_experiment(experiment_config(c), verbose ? &std::cerr : nullptr);
    std::vector<Record> rs;
    for (const auto& r : report.rows) rs.push_back(row_record(r));
    if (!g.out.empty()) write_records(g.out, rs);
    emit_all(rs);
    if (!g.json) {
      std::istringstream table(format_table(report));
      for (std::string line; std::getline(table, line);) std::cout << "# " << line << '\n';
    }
  });
}

void add_schedule(CLI::App& app) {
  auto* cmd = app.add_subcommand("schedule", "Learning-rate schedule tools");
  cmd->require_subcommand(1);
  auto* dump = cmd->add_subcommand("dump", "Write (step, lr) pairs as CSV");
  static std::string plan;
  static double rescale = 1.0;
  static bool frozen = false;
  dump->add_option("--plan", plan, "Plan file (default: the 50-epoch baseline)");
  dump->add_option("--rescale", rescale, "Dataset fraction for rescale_plan");
  dump->add_flag("--frozen", frozen, "Derive the frozen-encoder plan");
  dump->callback([] {
    TrainPlan p = plan.empty() ? TrainPlan{} : load_plan(plan);
    if (rescale != 1.0) p = rescale_plan(p, rescale);
    if (frozen) p = frozen_plan(p);
    dump_schedule_csv(p, need_out("schedule dump"));
    emit(Record("schedule")
             .add("total_steps", p.total_steps())
             .add("total_epochs", p.total_epochs)
             .add("warmup_end_step", p.warmup_end_step())
             .add("cosine_start_step", p.cosine_start_step())
             .add("cosine_end_step", p.cosine_end_step()));
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilingual sign dataset curation and co-training toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--config", g.config, "Config file (key = value)");
  app.add_option("--out", g.out, "Output path");
  app.add_flag("--json", g.json, "Emit JSON objects instead of records");

  add_split(app);
  add_group(app);
  add_review(app);
  add_sample(app);
  add_train(app);
  add_evaluate(app);
  add_export(app);
  add_eval(app);
  add_synth(app);
  add_experiment(app);
  add_schedule(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
