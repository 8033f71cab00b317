#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "textile/patches.hpp"
#include "textile/tensor.hpp"
#include "textile/text.hpp"

namespace textile {

struct ModelConfig {
  int layers = 2;
  int hidden = 64;
  int heads = 4;
  int ff = 256;
  int vocab = 0;
  int max_text_len = 16; // includes [CLS] and [SEP]
  int patch_count = 16;
  int d_patch = kPatchFeatureDim;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Named parameter store. Iteration order over `all` is fixed by construction,
// which keeps optimizer updates and checkpoints deterministic.
struct ModelParams {
  ModelConfig config;
  std::vector<Tensor> all;

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  static ModelParams init(const ModelConfig& config, uint64_t seed);

private:
  std::unordered_map<std::string, int> index_;
  Tensor& add(const std::string& name, Tensor t);
};

// One example laid out as [CLS] text [SEP] (optional PAD run) patches.
struct MultimodalInput {
  std::vector<int> token_ids;     // the text span, padded or not
  int text_span = 0;              // real tokens incl. [CLS]/[SEP]
  std::vector<std::vector<Real>> patch_features;
  std::vector<int> text_positions;  // index within the text span
  std::vector<int> patch_positions; // row-major grid index
  std::vector<int> segments;        // 0 text, 1 patches; per sequence position
  std::vector<char> valid;          // 1 real, 0 padding
  int label = 1;

  std::vector<int> masked_text_positions; // sequence coordinates
  std::vector<int> masked_text_original;  // vocabulary ids
  std::vector<int> masked_patch_positions;
  std::vector<std::vector<Real>> masked_patch_targets;

  int seq_len() const { return static_cast<int>(segments.size()); }
};

// Training-time assembly from masked text and masked patches. With pad_text,
// the text span is padded to max_text_len so every sequence has equal length.
MultimodalInput assemble_input(const MaskedSequence& text, const MaskedPatchGrid& patches,
                               int label, const ModelConfig& config, bool pad_text = true);

// Inference-time assembly: no masking, MLM/MPM targets empty. text_width sets
// how far the text block is padded (-1 means the full text budget); it must
// cover the actual span.
MultimodalInput assemble_inference(const TokenSequence& text, const PatchGrid& patches,
                                   const ModelConfig& config, int text_width = -1);

// Multi-head self-attention sublayer (projections, scaled dot-product scores,
// optional additive score bias, context merge). Exposed so its arithmetic can
// be checked directly against hand-evaluated attention.
Tensor self_attention(const Tensor& x, const Tensor& wq, const Tensor& bq, const Tensor& wk,
                      const Tensor& bk, const Tensor& wv, const Tensor& bv, const Tensor& wo,
                      const Tensor& bo, int heads, const Tensor& col_bias);

// Post-norm transformer encoder over the assembled sequence. Padded positions
// receive a large negative attention bias, so they get exactly zero attention
// weight and never influence real positions.
Tensor encode(const ModelParams& params, const MultimodalInput& input);

// Mean cross-entropy of vocabulary predictions at the masked text positions.
Tensor mlm_loss(const ModelParams& params, const Tensor& hidden, const MultimodalInput& input);

// Mean KL between the masked patches' target feature distributions and the
// predicted distributions (both via softmax over the feature axis).
Tensor mpm_loss(const ModelParams& params, const Tensor& hidden, const MultimodalInput& input);

struct TiaResult {
  Tensor loss;
  Real probability = 0.0;
};

// Binary alignment head on the [CLS] state.
TiaResult tia_loss(const ModelParams& params, const Tensor& hidden, const MultimodalInput& input);

// Alignment probability without the loss, for scoring paths.
Real tia_probability(const ModelParams& params, const Tensor& hidden);

// Deterministic inference score: probability that text and image match.
Real match_score(const ModelParams& params, const TokenSequence& text, const PatchGrid& patches);

} // namespace textile
