#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "textile/config.hpp"
#include "textile/dataset.hpp"
#include "textile/training.hpp"

using namespace textile;

namespace {

struct SmallWorld {
  Corpus corpus;
  Vocabulary vocab;
  ModelConfig model;
  PreparedData data;
};

// 60-product corpus with a small model, shared across cases
const SmallWorld& world() {
  static const SmallWorld w = [] {
    SmallWorld sw;
    const std::string dir = std::filesystem::temp_directory_path() / "textile_train_corpus";
    std::filesystem::remove_all(dir);
    write_corpus(generate_products(60, 7), 64, dir);
    sw.corpus = load_corpus(dir);
    std::ostringstream all;
    for (const auto& rec : sw.corpus.records) all << rec.description << "\n";
    std::istringstream in(all.str());
    sw.vocab = build_vocab(in, 200);
    sw.model.layers = 1;
    sw.model.hidden = 16;
    sw.model.heads = 2;
    sw.model.ff = 32;
    sw.model.vocab = sw.vocab.size();
    sw.model.max_text_len = 16;
    sw.model.patch_count = 16;
    sw.data = prepare_data(sw.corpus, sw.vocab, sw.model, 4);
    return sw;
  }();
  return w;
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.warmup_steps = 5;
  cfg.total_steps = 30;
  cfg.eval_every = 10;
  cfg.eval_pairs = 10;
  cfg.seed = 9;
  return cfg;
}

} // namespace

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.batch_size = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.warmup_steps = 3000; // > total
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.text_mask_prob = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.negative_ratio = -0.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("sample_batch composition") {
  std::vector<int> pool(40);
  for (int i = 0; i < 40; ++i) pool[i] = i;
  Rng rng(1);

  auto batch = sample_batch(pool, 64, 1.0, rng);
  REQUIRE(batch.size() == 64);
  int positives = 0;
  for (const auto& ex : batch) {
    if (ex.label == 1) {
      ++positives;
      CHECK(ex.text_product == ex.image_product);
    } else {
      CHECK(ex.text_product != ex.image_product);
    }
  }
  CHECK(positives == 32);

  auto skewed = sample_batch(pool, 16, 3.0, rng);
  int pos_skewed = 0;
  for (const auto& ex : skewed) pos_skewed += ex.label;
  CHECK(pos_skewed == 4);

  // always at least one positive
  auto extreme = sample_batch(pool, 4, 100.0, rng);
  int pos_extreme = 0;
  for (const auto& ex : extreme) pos_extreme += ex.label;
  CHECK(pos_extreme == 1);

  auto all_pos = sample_batch({5}, 4, 0.0, rng);
  for (const auto& ex : all_pos) {
    CHECK(ex.label == 1);
    CHECK(ex.text_product == 5);
  }

  CHECK_THROWS_AS(sample_batch({5}, 4, 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_batch({}, 4, 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_batch(pool, 1, 1.0, rng), std::invalid_argument);
}

TEST_CASE("sample_batch label marginal is balanced") {
  std::vector<int> pool(50);
  for (int i = 0; i < 50; ++i) pool[i] = i;
  Rng rng(2);
  long positives = 0, total = 0;
  for (int b = 0; b < 10000; ++b) {
    auto batch = sample_batch(pool, 16, 1.0, rng);
    for (const auto& ex : batch) positives += ex.label;
    total += static_cast<long>(batch.size());
  }
  const double marginal = static_cast<double>(positives) / total;
  CHECK(marginal > 0.48);
  CHECK(marginal < 0.52);
}

TEST_CASE("prepare_data validates the grid and keeps ids aligned") {
  const SmallWorld& w = world();
  CHECK_THROWS_AS(prepare_data(w.corpus, w.vocab, w.model, 3), std::invalid_argument);
  REQUIRE(w.data.products.size() == 60);
  for (int i = 0; i < 60; ++i) {
    CHECK(w.data.products[i].id == i);
    CHECK(w.data.products[i].tokens.length() > 0);
    CHECK(w.data.products[i].grid.patch_count() == 16);
  }
  CHECK(w.data.splits.train.size() == 48);
  CHECK(w.data.splits.val.size() == 6);
  CHECK(w.data.splits.test.size() == 6);
}

TEST_CASE("fixed mode uses exactly uniform weights") {
  const SmallWorld& w = world();
  TrainConfig cfg = quick_config();
  cfg.adaptive_weights = false;
  ModelParams params = ModelParams::init(w.model, cfg.seed);
  Adam opt({}, params.all);
  Rng sample_rng(3), mask_rng(4);
  for (int step = 1; step <= 3; ++step) {
    auto batch = sample_batch(w.data.splits.train, cfg.batch_size, 1.0, sample_rng);
    StepRecord rec = train_step(params, opt, batch, w.data, cfg, step, mask_rng);
    CHECK(rec.w_mlm == 1.0 / 3.0);
    CHECK(rec.w_mpm == 1.0 / 3.0);
    CHECK(rec.w_tia == 1.0 / 3.0);
  }
}

TEST_CASE("adaptive weights stay on the simplex and losses stay finite") {
  const SmallWorld& w = world();
  TrainConfig cfg = quick_config();
  ModelParams params = ModelParams::init(w.model, cfg.seed);
  Adam opt({}, params.all);
  Rng sample_rng(5), mask_rng(6);
  for (int step = 1; step <= 5; ++step) {
    auto batch = sample_batch(w.data.splits.train, cfg.batch_size, 1.0, sample_rng);
    StepRecord rec = train_step(params, opt, batch, w.data, cfg, step, mask_rng);
    CHECK(rec.w_mlm + rec.w_mpm + rec.w_tia == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rec.w_mlm > 0.0);
    CHECK(rec.w_mpm > 0.0);
    CHECK(rec.w_tia > 0.0);
    for (Real l : {rec.l_mlm, rec.l_mpm, rec.l_tia}) CHECK(std::isfinite(l));
    CHECK(rec.lr == lr_schedule(step, cfg.learning_rate, cfg.warmup_steps, cfg.total_steps));
  }
}

TEST_CASE("zero learning rate step leaves parameters unchanged") {
  const SmallWorld& w = world();
  TrainConfig cfg = quick_config();
  ModelParams params = ModelParams::init(w.model, 1);
  std::vector<std::vector<Real>> before;
  for (const Tensor& t : params.all) before.push_back(t.value());
  Adam opt({}, params.all);
  Rng sample_rng(7), mask_rng(8);
  auto batch = sample_batch(w.data.splits.train, cfg.batch_size, 1.0, sample_rng);
  // at step == total_steps the schedule is exactly zero
  StepRecord rec = train_step(params, opt, batch, w.data, cfg, cfg.total_steps, mask_rng);
  CHECK(rec.lr == 0.0);
  for (size_t i = 0; i < params.all.size(); ++i) CHECK(params.all[i].value() == before[i]);
}

TEST_CASE("training log format") {
  StepRecord r;
  r.step = 7;
  r.l_mlm = 1.5;
  r.l_mpm = 0.25;
  r.l_tia = 0.125;
  r.w_mlm = r.w_mpm = r.w_tia = 1.0 / 3.0;
  r.lr = 1e-3;
  CHECK(format_log_row(r) ==
        "7,1.5,0.25,0.125,0.33333333333333331,0.33333333333333331,0.33333333333333331,0.001");
}

TEST_CASE("run_training logs every step and is deterministic") {
  const SmallWorld& w = world();
  TrainConfig cfg = quick_config();
  const std::string log1 = std::filesystem::temp_directory_path() / "textile_log1.csv";
  const std::string log2 = std::filesystem::temp_directory_path() / "textile_log2.csv";

  TrainResult a = run_training(w.data, w.model, cfg, log1);
  TrainResult b = run_training(w.data, w.model, cfg, log2);

  CHECK(a.history.size() == 30);
  CHECK(a.val_accuracy.size() == 3);
  REQUIRE(a.history.size() == b.history.size());
  for (size_t i = 0; i < a.history.size(); ++i)
    CHECK(format_log_row(a.history[i]) == format_log_row(b.history[i]));
  REQUIRE(a.params.all.size() == b.params.all.size());
  for (size_t i = 0; i < a.params.all.size(); ++i)
    CHECK(a.params.all[i].value() == b.params.all[i].value());

  std::ifstream f1(log1), f2(log2);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  int lines = 0;
  for (char c : s1) lines += c == '\n';
  CHECK(lines == 31); // header + one row per executed step
  CHECK(s1.rfind(kTrainLogHeader, 0) == 0);
  std::remove(log1.c_str());
  std::remove(log2.c_str());

  TrainConfig other = cfg;
  other.seed = cfg.seed + 1;
  TrainResult c = run_training(w.data, w.model, other, "");
  bool any_diff = false;
  for (size_t i = 0; i < c.params.all.size(); ++i)
    any_diff |= c.params.all[i].value() != a.params.all[i].value();
  CHECK(any_diff);
}

TEST_CASE("training drives every task loss below its starting average") {
  const SmallWorld& w = world();
  TrainConfig cfg = quick_config();
  cfg.batch_size = 8;
  cfg.total_steps = 400;
  cfg.warmup_steps = 40;
  cfg.eval_every = 0; // no early stopping for the smoke run
  TrainResult res = run_training(w.data, w.model, cfg, "");
  REQUIRE(res.history.size() == 400);
  auto window_mean = [&](size_t begin, auto field) {
    Real total = 0;
    for (size_t i = begin; i < begin + 10; ++i) total += res.history[i].*field;
    return total / 10;
  };
  CHECK(window_mean(390, &StepRecord::l_mlm) < window_mean(0, &StepRecord::l_mlm));
  CHECK(window_mean(390, &StepRecord::l_mpm) < window_mean(0, &StepRecord::l_mpm));
  CHECK(window_mean(390, &StepRecord::l_tia) < window_mean(0, &StepRecord::l_tia));
}

TEST_CASE("early stopping halts a stagnant run") {
  const SmallWorld& w = world();
  TrainConfig cfg = quick_config();
  cfg.learning_rate = 1e-12; // effectively frozen, accuracy cannot improve
  cfg.total_steps = 200;
  cfg.eval_every = 5;
  cfg.patience = 3;
  TrainResult res = run_training(w.data, w.model, cfg, "");
  CHECK(res.stopped_early);
  // first eval sets the best; the next `patience` fail to improve
  CHECK(res.history.size() == 5 * (1 + 3));
  CHECK(res.val_accuracy.size() == 4);
}

TEST_CASE("profiles resolve and validate") {
  Profile desk = desk_profile();
  CHECK(desk.image_size == 64);
  CHECK(desk.grid * desk.grid == desk.model.patch_count);
  CHECK(desk.train.total_steps == 2000);
  CHECK_NOTHROW(desk.train.validate());

  Profile paper = paper_profile();
  CHECK(paper.image_size == 256);
  CHECK(paper.model.layers == 12);
  CHECK(paper.model.hidden == 768);
  CHECK(paper.model.max_text_len == 448);
  CHECK(paper.grid * paper.grid == paper.model.patch_count);
  CHECK(paper.train.learning_rate == 2e-5);
  CHECK(paper.train.beta1 == 0.95);
  CHECK(paper.train.warmup_steps == 5000);
  CHECK_NOTHROW(paper.train.validate());

  CHECK(named_profile("desk").name == "desk");
  CHECK_THROWS_AS(named_profile("pocket"), std::invalid_argument);
}

TEST_CASE("config files override profile settings") {
  namespace fs = std::filesystem;
  const std::string path = fs::temp_directory_path() / "textile_settings.cfg";
  {
    std::ofstream out(path);
    out << "# overrides\n";
    out << "batch_size = 8\n";
    out << "learning_rate = 5e-4  # tuned\n";
    out << "adaptive_weights = false\n";
    out << "\n";
    out << "grid=2\n";
  }
  Profile p = desk_profile();
  apply_config_file(p, path);
  CHECK(p.train.batch_size == 8);
  CHECK(p.train.learning_rate == 5e-4);
  CHECK(p.train.adaptive_weights == false);
  CHECK(p.grid == 2);

  {
    std::ofstream out(path);
    out << "不 = 1\n";
  }
  Profile q = desk_profile();
  CHECK_THROWS_WITH_AS(apply_config_file(q, path), doctest::Contains("unknown key"),
                       std::invalid_argument);
  {
    std::ofstream out(path);
    out << "batch_size eight\n";
  }
  CHECK_THROWS_AS(apply_config_file(q, path), std::invalid_argument);
  {
    std::ofstream out(path);
    out << "batch_size = eight\n";
  }
  CHECK_THROWS_WITH_AS(apply_config_file(q, path), doctest::Contains("batch_size"),
                       std::invalid_argument);
  std::remove(path.c_str());

  CHECK_THROWS_AS(apply_config_file(q, "no_such_file.cfg"), std::runtime_error);
}

TEST_CASE("settings round trip through the flat format") {
  Profile p = paper_profile();
  p.train.learning_rate = 3.25e-5;
  p.train.negative_ratio = 1.5;
  namespace fs = std::filesystem;
  const std::string path = fs::temp_directory_path() / "textile_roundtrip.cfg";
  {
    std::ofstream out(path);
    out << profile_settings(p);
  }
  Profile q = desk_profile();
  apply_config_file(q, path);
  std::remove(path.c_str());
  CHECK(q.image_size == p.image_size);
  CHECK(q.model.layers == p.model.layers);
  CHECK(q.model.max_text_len == p.model.max_text_len);
  CHECK(q.train.learning_rate == p.train.learning_rate);
  CHECK(q.train.negative_ratio == p.train.negative_ratio);
  CHECK(q.train.warmup_steps == p.train.warmup_steps);
  CHECK(q.train.beta1 == p.train.beta1);
}
