#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "textile/dataset.hpp"
#include "textile/model.hpp"
#include "textile/optimizer.hpp"

namespace textile {

struct TrainConfig {
  int batch_size = 16;
  Real learning_rate = 1e-3;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real epsilon = 1e-8;
  Real weight_decay = 1e-4;
  int warmup_steps = 100;
  int total_steps = 2000;
  Real negative_ratio = 1.0; // negatives per positive
  Real text_mask_prob = 0.15;
  Real patch_mask_prob = 0.10;
  uint64_t seed = 0;
  bool adaptive_weights = true;
  int eval_every = 200; // validation cadence; 0 disables early stopping
  int patience = 5;     // evaluations without improvement before stopping
  int eval_pairs = 200; // validation pairs behind the early-stopping metric

  void validate() const;
};

struct PairedExample {
  int text_product = 0;
  int image_product = 0;
  int label = 1; // 1 iff both sides come from the same product
};

struct PreparedProduct {
  int id = 0;
  TokenSequence tokens;
  PatchGrid grid;
};

// Token and patch features extracted once up front; products indexed by id.
struct PreparedData {
  std::vector<PreparedProduct> products;
  SplitIds splits;
};

PreparedData prepare_data(const Corpus& corpus, const Vocabulary& vocab,
                          const ModelConfig& config, int grid);

// Positives uniform over the pool; each negative pairs a text with an image
// from a different uniformly-drawn product. At least one positive per batch.
std::vector<PairedExample> sample_batch(const std::vector<int>& pool, int batch_size,
                                        Real negative_ratio, Rng& rng);

struct StepRecord {
  int step = 0;
  Real l_mlm = 0, l_mpm = 0, l_tia = 0;
  Real w_mlm = 0, w_mpm = 0, w_tia = 0;
  Real lr = 0;
};

inline constexpr const char* kTrainLogHeader = "step,l_mlm,l_mpm,l_tia,w_mlm,w_mpm,w_tia,lr";

// Full-precision CSV row matching kTrainLogHeader.
std::string format_log_row(const StepRecord& r);

// One optimizer update on one batch. Every example is masked; the text and
// patch losses are pooled means over the masked positions of matching pairs,
// the alignment loss is the mean over the whole batch. Weights come from the
// closed-form solver in adaptive mode, or are exactly 1/3 each in fixed mode.
StepRecord train_step(ModelParams& params, Adam& opt, const std::vector<PairedExample>& batch,
                      const PreparedData& data, const TrainConfig& config, int step,
                      Rng& mask_rng);

struct TrainResult {
  ModelParams params;
  std::vector<StepRecord> history;
  std::vector<Real> val_accuracy; // one entry per evaluation round
  bool stopped_early = false;
};

// Sample, step, log; every eval_every steps the validation alignment accuracy
// is measured on a fixed pair set and training stops once it fails to improve
// for `patience` rounds. Empty log_path skips the log file.
TrainResult run_training(const PreparedData& data, const ModelConfig& model_config,
                         const TrainConfig& config, const std::string& log_path);

} // namespace textile
