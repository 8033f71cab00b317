#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "textile/adaptive.hpp"
#include "textile/checkpoint.hpp"
#include "textile/config.hpp"
#include "textile/dataset.hpp"
#include "textile/evaluation.hpp"
#include "textile/training.hpp"
#include "textile/vsl.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace textile;

namespace {

struct GlobalFlags {
  std::string config_path;
  std::string out_dir = ".";
  std::string profile_name = "desk";
  uint64_t seed = 0;
};

Profile resolve_profile(const GlobalFlags& g) {
  Profile p = named_profile(g.profile_name);
  if (!g.config_path.empty()) apply_config_file(p, g.config_path);
  p.train.seed = g.seed;
  return p;
}

json settings_json(const Profile& p) {
  return json{{"image_size", p.image_size},
              {"grid", p.grid},
              {"products", p.products},
              {"vocab_max", p.vocab_max},
              {"eval_queries", p.eval_queries},
              {"eval_distractors", p.eval_distractors},
              {"eval_pairs", p.eval_pairs},
              {"layers", p.model.layers},
              {"hidden", p.model.hidden},
              {"heads", p.model.heads},
              {"ff", p.model.ff},
              {"max_text_len", p.model.max_text_len},
              {"patch_count", p.model.patch_count},
              {"batch_size", p.train.batch_size},
              {"learning_rate", p.train.learning_rate},
              {"beta1", p.train.beta1},
              {"beta2", p.train.beta2},
              {"epsilon", p.train.epsilon},
              {"weight_decay", p.train.weight_decay},
              {"warmup_steps", p.train.warmup_steps},
              {"total_steps", p.train.total_steps},
              {"negative_ratio", p.train.negative_ratio},
              {"text_mask_prob", p.train.text_mask_prob},
              {"patch_mask_prob", p.train.patch_mask_prob},
              {"adaptive_weights", p.train.adaptive_weights},
              {"eval_every", p.train.eval_every},
              {"patience", p.train.patience},
              {"train_eval_pairs", p.train.eval_pairs}};
}

void write_manifest(const GlobalFlags& g, const Profile& p, const std::string& command,
                    const json& inputs, const json& outputs) {
  json manifest{{"artifact_version", 1},
                {"command", command},
                {"profile", p.name},
                {"seed", g.seed},
                {"settings", settings_json(p)},
                {"inputs", inputs},
                {"outputs", outputs}};
  const fs::path path = fs::path(g.out_dir) / "manifest.json";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << manifest.dump(2) << "\n";
}

Vocabulary vocab_for(const std::string& path, Profile& profile) {
  Vocabulary vocab = Vocabulary::load(path);
  profile.model.vocab = vocab.size();
  return vocab;
}

int cmd_gen_data(const GlobalFlags& g) {
  Profile p = resolve_profile(g);
  fs::create_directories(g.out_dir);
  write_corpus(generate_products(p.products, g.seed), p.image_size, g.out_dir);
  write_manifest(g, p, "gen-data", json::object(),
                 json{{"corpus", g.out_dir}});
  std::printf("wrote %d products (image size %d) to %s\n", p.products, p.image_size,
              g.out_dir.c_str());
  return 0;
}

int cmd_build_vocab(const GlobalFlags& g, const std::string& data_dir) {
  Profile p = resolve_profile(g);
  Corpus corpus = load_corpus(data_dir);
  std::ostringstream text;
  for (int id : corpus.splits.train) text << corpus.records[id].description << "\n";
  std::istringstream in(text.str());
  Vocabulary vocab = build_vocab(in, p.vocab_max);
  fs::create_directories(g.out_dir);
  const fs::path path = fs::path(g.out_dir) / "vocab.tsv";
  vocab.save(path.string());
  write_manifest(g, p, "build-vocab", json{{"corpus", data_dir}},
                 json{{"vocab", path.string()}});
  std::printf("vocabulary of %d pieces written to %s\n", vocab.size(), path.string().c_str());
  return 0;
}

int cmd_pretrain(const GlobalFlags& g, const std::string& data_dir, const std::string& vocab_path,
                 const std::string& weighting) {
  Profile p = resolve_profile(g);
  p.train.adaptive_weights = weighting == "adaptive";
  Corpus corpus = load_corpus(data_dir);
  Vocabulary vocab = vocab_for(vocab_path, p);
  PreparedData data = prepare_data(corpus, vocab, p.model, p.grid);

  fs::create_directories(g.out_dir);
  const fs::path log_path = fs::path(g.out_dir) / "train_log.csv";
  const fs::path ckpt_path = fs::path(g.out_dir) / "checkpoint.bin";
  TrainResult result = run_training(data, p.model, p.train, log_path.string());
  save_checkpoint(result.params, ckpt_path.string());
  write_manifest(g, p, "pretrain", json{{"corpus", data_dir}, {"vocab", vocab_path}},
                 json{{"checkpoint", ckpt_path.string()}, {"log", log_path.string()}});
  std::printf("%zu steps (%s weights)%s; checkpoint at %s\n", result.history.size(),
              weighting.c_str(), result.stopped_early ? ", stopped early" : "",
              ckpt_path.string().c_str());
  if (!result.val_accuracy.empty())
    std::printf("final validation accuracy %.2f%%\n", result.val_accuracy.back());
  return 0;
}

int cmd_eval(const GlobalFlags& g, const std::string& data_dir, const std::string& vocab_path,
             const std::string& ckpt_path) {
  Profile p = resolve_profile(g);
  Corpus corpus = load_corpus(data_dir);
  Vocabulary vocab = vocab_for(vocab_path, p);
  ModelParams params = load_checkpoint(ckpt_path);
  if (params.config.vocab != vocab.size())
    throw std::runtime_error("checkpoint vocabulary size " + std::to_string(params.config.vocab) +
                             " does not match " + vocab_path);
  PreparedData data = prepare_data(corpus, vocab, params.config, p.grid);
  Scorer score = model_scorer(params, data);
  const std::vector<int>& pool = data.splits.test;

  Rng pair_rng(mix_seed(g.seed, 10));
  const Real accuracy =
      matching_accuracy(score, build_eval_pairs(pool, p.eval_pairs, pair_rng));

  std::vector<RetrievalReport> reports;
  for (Direction dir : {Direction::kTextToImage, Direction::kImageToText}) {
    Rng rank_rng(mix_seed(g.seed, dir == Direction::kTextToImage ? 11 : 12));
    auto sets = build_rank_sets(pool, p.eval_queries, p.eval_distractors, rank_rng);
    reports.push_back(make_report(dir, accuracy, gt_ranks(sets, score, dir)));
  }

  fs::create_directories(g.out_dir);
  const fs::path text_path = fs::path(g.out_dir) / "report.txt";
  const fs::path csv_path = fs::path(g.out_dir) / "report.csv";
  write_report_text(reports, text_path.string());
  write_report_csv(reports, csv_path.string());
  write_manifest(
      g, p, "eval",
      json{{"corpus", data_dir}, {"vocab", vocab_path}, {"checkpoint", ckpt_path}},
      json{{"report_text", text_path.string()}, {"report_csv", csv_path.string()}});
  for (const RetrievalReport& r : reports)
    std::printf("%s: accuracy %.2f%% rank@1 %.2f%% rank@5 %.2f%% rank@10 %.2f%% (%d queries)\n",
                direction_name(r.direction), r.accuracy, r.rank1, r.rank5, r.rank10,
                r.query_count);
  return 0;
}

int cmd_bench_vsl(const GlobalFlags& g, const std::string& data_dir,
                  const std::string& vocab_path, const std::string& ckpt_path, int batch_size,
                  int repetitions) {
  Profile p = resolve_profile(g);
  Corpus corpus = load_corpus(data_dir);
  Vocabulary vocab = vocab_for(vocab_path, p);
  ModelParams params = load_checkpoint(ckpt_path);
  PreparedData data = prepare_data(corpus, vocab, params.config, p.grid);

  const std::vector<int>& pool = data.splits.test.empty() ? data.splits.train : data.splits.test;
  std::vector<TokenSequence> texts;
  std::vector<PatchGrid> grids;
  for (int i = 0; i < batch_size; ++i) {
    const PreparedProduct& prod = data.products[pool[i % pool.size()]];
    texts.push_back(prod.tokens);
    grids.push_back(prod.grid);
  }

  fs::create_directories(g.out_dir);
  const fs::path csv_path = fs::path(g.out_dir) / "bench.csv";
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot write " + csv_path.string());
  out << kBenchCsvHeader << "\n";
  LatencyStats padded = bench_latency(params, texts, grids, PadMode::kPadded, repetitions);
  LatencyStats vsl = bench_latency(params, texts, grids, PadMode::kVsl, repetitions);
  out << bench_csv_row(PadMode::kPadded, batch_size, padded) << "\n";
  out << bench_csv_row(PadMode::kVsl, batch_size, vsl) << "\n";
  out.close();
  write_manifest(
      g, p, "bench-vsl",
      json{{"corpus", data_dir}, {"vocab", vocab_path}, {"checkpoint", ckpt_path}},
      json{{"bench_csv", csv_path.string()}});
  std::printf("%s\n%s\n%s\n", kBenchCsvHeader,
              bench_csv_row(PadMode::kPadded, batch_size, padded).c_str(),
              bench_csv_row(PadMode::kVsl, batch_size, vsl).c_str());
  if (vsl.mean_ms > 0)
    std::printf("padded/vsl mean ratio: %.2fx\n", padded.mean_ms / vsl.mean_ms);
  return 0;
}

int cmd_solve_weights(const std::vector<double>& signals, bool verify) {
  std::vector<Real> weights = solve_weights(signals);
  std::string line;
  char buf[64];
  for (size_t i = 0; i < weights.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.9g", i ? " " : "", weights[i]);
    line += buf;
  }
  std::printf("%s\n", line.c_str());
  if (verify) {
    std::vector<Real> oracle = qp_oracle(signals);
    Real worst = 0;
    for (size_t i = 0; i < weights.size(); ++i)
      worst = std::max(worst, std::abs(weights[i] - oracle[i]));
    std::printf("oracle max deviation %.3g\n", worst);
    if (worst > 1e-6) {
      std::fprintf(stderr, "textile: closed form and oracle disagree beyond 1e-6\n");
      return 1;
    }
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"patch-based multimodal pretraining workbench"};
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--config", g.config_path, "key = value settings file");
  app.add_option("--seed", g.seed, "seed for every random choice");
  app.add_option("--out", g.out_dir, "output directory");
  app.add_option("--profile", g.profile_name, "desk or paper scale")
      ->check(CLI::IsMember({"desk", "paper"}));

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic product corpus");
  gen->fallthrough();

  std::string data_dir, vocab_path, ckpt_path;
  auto* bv = app.add_subcommand("build-vocab", "build a vocabulary from a corpus");
  bv->fallthrough();
  bv->add_option("--data", data_dir, "corpus directory")->required();

  std::string weighting = "adaptive";
  auto* pre = app.add_subcommand("pretrain", "run the pretraining loop");
  pre->fallthrough();
  pre->add_option("--data", data_dir, "corpus directory")->required();
  pre->add_option("--vocab", vocab_path, "vocabulary file")->required();
  pre->add_option("--weighting", weighting, "loss weighting mode")
      ->check(CLI::IsMember({"adaptive", "fixed"}));

  auto* ev = app.add_subcommand("eval", "matching accuracy and retrieval ranks");
  ev->fallthrough();
  ev->add_option("--data", data_dir, "corpus directory")->required();
  ev->add_option("--vocab", vocab_path, "vocabulary file")->required();
  ev->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();

  int batch_size = 16, repetitions = 20;
  auto* bench = app.add_subcommand("bench-vsl", "latency of padded vs variable-width scoring");
  bench->fallthrough();
  bench->add_option("--data", data_dir, "corpus directory")->required();
  bench->add_option("--vocab", vocab_path, "vocabulary file")->required();
  bench->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
  bench->add_option("--batch", batch_size, "examples per scored batch");
  bench->add_option("--repetitions", repetitions, "timed repetitions");

  std::vector<double> signals;
  bool verify = false;
  auto* sw = app.add_subcommand("solve-weights", "closed-form loss weights for given signals");
  sw->fallthrough();
  sw->add_option("signals", signals, "loss signals in [0, 1)")->required();
  sw->add_flag("--verify", verify, "cross-check against the projected-gradient oracle");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(g);
    if (bv->parsed()) return cmd_build_vocab(g, data_dir);
    if (pre->parsed()) return cmd_pretrain(g, data_dir, vocab_path, weighting);
    if (ev->parsed()) return cmd_eval(g, data_dir, vocab_path, ckpt_path);
    if (bench->parsed())
      return cmd_bench_vsl(g, data_dir, vocab_path, ckpt_path, batch_size, repetitions);
    if (sw->parsed()) return cmd_solve_weights(signals, verify);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "textile: %s\n", e.what());
    return 1;
  }
  return 0;
}
