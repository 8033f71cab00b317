#include "textile/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "textile/adaptive.hpp"

namespace textile {

void TrainConfig::validate() const {
  if (batch_size < 2)
    throw std::invalid_argument("train config: batch size must be at least 2");
  if (learning_rate <= 0) throw std::invalid_argument("train config: learning rate must be > 0");
  if (warmup_steps < 0 || total_steps <= 0 || warmup_steps > total_steps)
    throw std::invalid_argument("train config: need 0 <= warmup <= total steps");
  if (negative_ratio < 0)
    throw std::invalid_argument("train config: negative ratio must be >= 0");
  for (Real p : {text_mask_prob, patch_mask_prob})
    if (!(p >= 0.0 && p < 1.0))
      throw std::invalid_argument("train config: mask probabilities must lie in [0, 1)");
  if (eval_every < 0 || patience <= 0 || eval_pairs <= 0)
    throw std::invalid_argument("train config: bad evaluation settings");
}

PreparedData prepare_data(const Corpus& corpus, const Vocabulary& vocab,
                          const ModelConfig& config, int grid) {
  config.validate();
  if (grid * grid != config.patch_count)
    throw std::invalid_argument("prepare_data: grid " + std::to_string(grid) +
                                " yields " + std::to_string(grid * grid) +
                                " patches, config expects " + std::to_string(config.patch_count));
  PreparedData data;
  data.splits = corpus.splits;
  data.products.reserve(corpus.records.size());
  for (const ProductRecord& rec : corpus.records) {
    PreparedProduct p;
    p.id = rec.id;
    p.tokens = tokenize(rec.description, vocab, config.max_text_len - 2);
    if (p.tokens.length() == 0)
      throw std::runtime_error("prepare_data: product " + std::to_string(rec.id) +
                               " has an empty description");
    p.grid = extract_grid(load_product_image(corpus, rec.id), grid);
    data.products.push_back(std::move(p));
  }
  return data;
}

std::vector<PairedExample> sample_batch(const std::vector<int>& pool, int batch_size,
                                        Real negative_ratio, Rng& rng) {
  if (batch_size < 2) throw std::invalid_argument("sample_batch: batch size must be at least 2");
  if (pool.empty()) throw std::invalid_argument("sample_batch: empty product pool");
  if (negative_ratio > 0 && pool.size() < 2)
    throw std::invalid_argument("sample_batch: negatives need at least 2 products");

  int positives = static_cast<int>(
      std::llround(batch_size / (1.0 + negative_ratio)));
  if (positives < 1) positives = 1;
  if (positives > batch_size) positives = batch_size;

  std::vector<PairedExample> batch;
  batch.reserve(batch_size);
  auto draw = [&] { return pool[rng.uniform_int(pool.size())]; };
  for (int i = 0; i < positives; ++i) {
    const int p = draw();
    batch.push_back({p, p, 1});
  }
  for (int i = positives; i < batch_size; ++i) {
    const int text = draw();
    int image = draw();
    while (image == text) image = draw();
    batch.push_back({text, image, 0});
  }
  return batch;
}

std::string format_log_row(const StepRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", r.step, r.l_mlm,
                r.l_mpm, r.l_tia, r.w_mlm, r.w_mpm, r.w_tia, r.lr);
  return buf;
}

namespace {

// count-weighted mean of per-example means, as one graph node chain
Tensor pooled_mean(const std::vector<Tensor>& means, const std::vector<int>& counts) {
  Real total = 0;
  for (int c : counts) total += c;
  Tensor acc = scale(means[0], counts[0] / total);
  for (size_t i = 1; i < means.size(); ++i)
    acc = add(acc, scale(means[i], counts[i] / total));
  return acc;
}

const PreparedProduct& product_at(const PreparedData& data, int id) {
  if (id < 0 || id >= static_cast<int>(data.products.size()))
    throw std::invalid_argument("train_step: unknown product id " + std::to_string(id));
  return data.products[id];
}

void require_finite(Real v, const char* task, int step) {
  if (!std::isfinite(v))
    throw std::runtime_error("train_step: non-finite " + std::string(task) + " at step " +
                             std::to_string(step) + "; stopping before the parameter update");
}

Real validation_accuracy(const ModelParams& params, const PreparedData& data,
                         const std::vector<PairedExample>& pairs) {
  int correct = 0;
  for (const PairedExample& pr : pairs) {
    const Real s = match_score(params, product_at(data, pr.text_product).tokens,
                               product_at(data, pr.image_product).grid);
    correct += (s >= 0.5) == (pr.label == 1);
  }
  return 100.0 * correct / static_cast<Real>(pairs.size());
}

} // namespace

StepRecord train_step(ModelParams& params, Adam& opt, const std::vector<PairedExample>& batch,
                      const PreparedData& data, const TrainConfig& config, int step,
                      Rng& mask_rng) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");

  std::vector<Tensor> tia_parts;
  std::vector<Tensor> mlm_means, mpm_means;
  std::vector<int> mlm_counts, mpm_counts;
  for (const PairedExample& ex : batch) {
    const PreparedProduct& text = product_at(data, ex.text_product);
    const PreparedProduct& image = product_at(data, ex.image_product);
    MaskedSequence mt = apply_wwm_mask(text.tokens, config.text_mask_prob, mask_rng);
    MaskedPatchGrid mp = apply_patch_mask(image.grid, config.patch_mask_prob, mask_rng);
    MultimodalInput in = assemble_input(mt, mp, ex.label, params.config, /*pad_text=*/false);
    Tensor hidden = encode(params, in);
    tia_parts.push_back(tia_loss(params, hidden, in).loss);
    if (ex.label == 1) {
      mlm_means.push_back(mlm_loss(params, hidden, in));
      mlm_counts.push_back(static_cast<int>(in.masked_text_positions.size()));
      mpm_means.push_back(mpm_loss(params, hidden, in));
      mpm_counts.push_back(static_cast<int>(in.masked_patch_positions.size()));
    }
  }
  if (mlm_means.empty())
    throw std::invalid_argument("train_step: batch has no matching pairs");

  Tensor l_mlm = pooled_mean(mlm_means, mlm_counts);
  Tensor l_mpm = pooled_mean(mpm_means, mpm_counts);
  Tensor acc = tia_parts[0];
  for (size_t i = 1; i < tia_parts.size(); ++i) acc = add(acc, tia_parts[i]);
  Tensor l_tia = scale(acc, 1.0 / static_cast<Real>(tia_parts.size()));

  StepRecord rec;
  rec.step = step;
  rec.l_mlm = l_mlm.scalar();
  rec.l_mpm = l_mpm.scalar();
  rec.l_tia = l_tia.scalar();
  require_finite(rec.l_mlm, "text loss", step);
  require_finite(rec.l_mpm, "patch loss", step);
  require_finite(rec.l_tia, "alignment loss", step);

  std::vector<Real> weights;
  if (config.adaptive_weights) {
    weights = solve_weights({normalize_signal(std::max(rec.l_mlm, 0.0)),
                             normalize_signal(std::max(rec.l_mpm, 0.0)),
                             normalize_signal(std::max(rec.l_tia, 0.0))});
  } else {
    weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  }
  rec.w_mlm = weights[0];
  rec.w_mpm = weights[1];
  rec.w_tia = weights[2];

  Tensor total = aggregate_loss({l_mlm, l_mpm, l_tia}, weights);
  require_finite(total.scalar(), "aggregate loss", step);
  total.backward();

  rec.lr = lr_schedule(step, config.learning_rate, config.warmup_steps, config.total_steps);
  opt.step(params.all, rec.lr);
  return rec;
}

TrainResult run_training(const PreparedData& data, const ModelConfig& model_config,
                         const TrainConfig& config, const std::string& log_path) {
  config.validate();
  model_config.validate();
  if (data.splits.train.empty()) throw std::invalid_argument("run_training: empty train split");

  Rng sample_rng(mix_seed(config.seed, 1));
  Rng mask_rng(mix_seed(config.seed, 2));
  Rng val_rng(mix_seed(config.seed, 3));

  TrainResult result;
  result.params = ModelParams::init(model_config, config.seed);
  AdamConfig adam;
  adam.beta1 = config.beta1;
  adam.beta2 = config.beta2;
  adam.eps = config.epsilon;
  adam.weight_decay = config.weight_decay;
  Adam opt(adam, result.params.all);

  // fixed validation pairs, alternating matched and mismatched
  std::vector<PairedExample> val_pairs;
  const std::vector<int>& val_pool =
      data.splits.val.size() >= 2 ? data.splits.val : data.splits.train;
  for (int i = 0; i < config.eval_pairs; ++i) {
    const int p = val_pool[val_rng.uniform_int(val_pool.size())];
    if (i % 2 == 0) {
      val_pairs.push_back({p, p, 1});
    } else {
      int q = val_pool[val_rng.uniform_int(val_pool.size())];
      while (q == p) q = val_pool[val_rng.uniform_int(val_pool.size())];
      val_pairs.push_back({p, q, 0});
    }
  }

  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path);
    if (!log) throw std::runtime_error("run_training: cannot open log file " + log_path);
    log << kTrainLogHeader << "\n";
  }

  Real best_accuracy = -1.0;
  int stale_rounds = 0;
  for (int step = 1; step <= config.total_steps; ++step) {
    std::vector<PairedExample> batch =
        sample_batch(data.splits.train, config.batch_size, config.negative_ratio, sample_rng);
    StepRecord rec = train_step(result.params, opt, batch, data, config, step, mask_rng);
    result.history.push_back(rec);
    if (log) log << format_log_row(rec) << "\n";

    if (config.eval_every > 0 && step % config.eval_every == 0) {
      const Real acc = validation_accuracy(result.params, data, val_pairs);
      result.val_accuracy.push_back(acc);
      if (acc > best_accuracy) {
        best_accuracy = acc;
        stale_rounds = 0;
      } else if (++stale_rounds >= config.patience) {
        result.stopped_early = true;
        break;
      }
    }
  }
  return result;
}

} // namespace textile
