#include "textile/model.hpp"

#include <cmath>
#include <stdexcept>

namespace textile {

namespace {

constexpr Real kMaskBias = -1e30;

std::vector<Real> flatten(const std::vector<std::vector<Real>>& rows) {
  std::vector<Real> flat;
  if (!rows.empty()) flat.reserve(rows.size() * rows[0].size());
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return flat;
}

MultimodalInput assemble_core(const std::vector<int>& word_ids,
                              const std::vector<std::vector<Real>>& patch_features,
                              const ModelConfig& cfg, int text_width, int label) {
  cfg.validate();
  if (word_ids.empty()) throw std::invalid_argument("assemble: empty text");
  const int span = static_cast<int>(word_ids.size()) + 2;
  if (span > cfg.max_text_len)
    throw std::invalid_argument("assemble: text span " + std::to_string(span) +
                                " exceeds the text budget " + std::to_string(cfg.max_text_len));
  if (text_width < span || text_width > cfg.max_text_len)
    throw std::invalid_argument("assemble: text width " + std::to_string(text_width) +
                                " outside [" + std::to_string(span) + ", " +
                                std::to_string(cfg.max_text_len) + "]");
  if (static_cast<int>(patch_features.size()) != cfg.patch_count)
    throw std::invalid_argument("assemble: got " + std::to_string(patch_features.size()) +
                                " patches, config expects " + std::to_string(cfg.patch_count));
  for (const auto& f : patch_features)
    if (static_cast<int>(f.size()) != cfg.d_patch)
      throw std::invalid_argument("assemble: patch feature length " + std::to_string(f.size()) +
                                  " != d_patch " + std::to_string(cfg.d_patch));

  MultimodalInput in;
  in.text_span = span;
  in.label = label;
  in.token_ids.reserve(text_width);
  in.token_ids.push_back(Vocabulary::kCls);
  in.token_ids.insert(in.token_ids.end(), word_ids.begin(), word_ids.end());
  in.token_ids.push_back(Vocabulary::kSep);
  in.token_ids.resize(text_width, Vocabulary::kPad);

  in.patch_features = patch_features;

  for (int i = 0; i < text_width; ++i) in.text_positions.push_back(i);
  for (int i = 0; i < cfg.patch_count; ++i) in.patch_positions.push_back(i);

  in.segments.assign(text_width, 0);
  in.segments.insert(in.segments.end(), cfg.patch_count, 1);

  in.valid.assign(span, 1);
  in.valid.insert(in.valid.end(), text_width - span, 0);
  in.valid.insert(in.valid.end(), cfg.patch_count, 1);
  return in;
}

} // namespace

void ModelConfig::validate() const {
  if (layers <= 0 || hidden <= 0 || heads <= 0 || ff <= 0 || vocab <= 0 || patch_count <= 0 ||
      d_patch <= 0)
    throw std::invalid_argument("model config: all sizes must be positive");
  if (hidden % heads != 0)
    throw std::invalid_argument("model config: hidden " + std::to_string(hidden) +
                                " not divisible by " + std::to_string(heads) + " heads");
  if (max_text_len < 3)
    throw std::invalid_argument("model config: text budget must fit [CLS], a token, and [SEP]");
}

Tensor& ModelParams::add(const std::string& name, Tensor t) {
  t.set_requires_grad(true).set_name(name);
  index_.emplace(name, static_cast<int>(all.size()));
  all.push_back(std::move(t));
  return all.back();
}

Tensor& ModelParams::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return all[it->second];
}

const Tensor& ModelParams::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return all[it->second];
}

ModelParams ModelParams::init(const ModelConfig& config, uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  Rng rng(mix_seed(seed, 0x7061726d));

  auto normal = [&](std::vector<int> shape) {
    std::vector<Real> v(shape_size(shape));
    for (auto& x : v) x = rng.normal() * 0.05;
    return Tensor::from_values(std::move(shape), std::move(v));
  };

  p.add("embed.word", normal({config.vocab, config.hidden}));
  p.add("embed.pos_text", normal({config.max_text_len, config.hidden}));
  p.add("embed.pos_patch", normal({config.patch_count, config.hidden}));
  p.add("embed.segment", normal({2, config.hidden}));
  p.add("embed.norm.gain", Tensor::full({config.hidden}, 1.0));
  p.add("embed.norm.bias", Tensor::zeros({config.hidden}));
  p.add("patch_proj.weight", normal({config.d_patch, config.hidden}));
  p.add("patch_proj.bias", Tensor::zeros({config.hidden}));

  for (int l = 0; l < config.layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"})
      p.add(pre + w, normal({config.hidden, config.hidden}));
    for (const char* b : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"})
      p.add(pre + b, Tensor::zeros({config.hidden}));
    p.add(pre + "attn_norm.gain", Tensor::full({config.hidden}, 1.0));
    p.add(pre + "attn_norm.bias", Tensor::zeros({config.hidden}));
    p.add(pre + "ff.w1", normal({config.hidden, config.ff}));
    p.add(pre + "ff.b1", Tensor::zeros({config.ff}));
    p.add(pre + "ff.w2", normal({config.ff, config.hidden}));
    p.add(pre + "ff.b2", Tensor::zeros({config.hidden}));
    p.add(pre + "ff_norm.gain", Tensor::full({config.hidden}, 1.0));
    p.add(pre + "ff_norm.bias", Tensor::zeros({config.hidden}));
  }

  p.add("head.mlm.weight", normal({config.hidden, config.vocab}));
  p.add("head.mlm.bias", Tensor::zeros({config.vocab}));
  p.add("head.mpm.weight", normal({config.hidden, config.d_patch}));
  p.add("head.mpm.bias", Tensor::zeros({config.d_patch}));
  p.add("head.tia.weight", normal({config.hidden, 1}));
  p.add("head.tia.bias", Tensor::zeros({1}));
  return p;
}

MultimodalInput assemble_input(const MaskedSequence& text, const MaskedPatchGrid& patches,
                               int label, const ModelConfig& config, bool pad_text) {
  if (label != 0 && label != 1) throw std::invalid_argument("assemble: label must be 0 or 1");
  const int span = static_cast<int>(text.ids.size()) + 2;
  MultimodalInput in = assemble_core(text.ids, patches.grid.features, config,
                                     pad_text ? config.max_text_len : span, label);
  for (size_t i = 0; i < text.masked_positions.size(); ++i) {
    in.masked_text_positions.push_back(text.masked_positions[i] + 1); // [CLS] shift
    in.masked_text_original.push_back(text.original_ids[i]);
  }
  const int text_width = static_cast<int>(in.token_ids.size());
  for (size_t i = 0; i < patches.masked_positions.size(); ++i) {
    in.masked_patch_positions.push_back(text_width + patches.masked_positions[i]);
    in.masked_patch_targets.push_back(patches.original_features[i]);
  }
  return in;
}

MultimodalInput assemble_inference(const TokenSequence& text, const PatchGrid& patches,
                                   const ModelConfig& config, int text_width) {
  if (text_width < 0) text_width = config.max_text_len;
  return assemble_core(text.ids, patches.features, config, text_width, 1);
}

Tensor self_attention(const Tensor& x, const Tensor& wq, const Tensor& bq, const Tensor& wk,
                      const Tensor& bk, const Tensor& wv, const Tensor& bv, const Tensor& wo,
                      const Tensor& bo, int heads, const Tensor& col_bias) {
  const int hidden = x.cols();
  if (hidden % heads != 0)
    throw std::invalid_argument("self_attention: width not divisible by head count");
  const int dh = hidden / heads;
  const Real scale_factor = 1.0 / std::sqrt(static_cast<Real>(dh));

  Tensor q = add_rowvec(matmul(x, wq), bq);
  Tensor k = add_rowvec(matmul(x, wk), bk);
  Tensor v = add_rowvec(matmul(x, wv), bv);

  std::vector<Tensor> context;
  context.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Tensor qh = slice_cols(q, h * dh, dh);
    Tensor kh = slice_cols(k, h * dh, dh);
    Tensor vh = slice_cols(v, h * dh, dh);
    Tensor scores = scale(matmul_nt(qh, kh), scale_factor);
    if (col_bias.defined()) scores = add(scores, col_bias);
    context.push_back(matmul(softmax(scores, 1), vh));
  }
  Tensor merged = heads == 1 ? context[0] : concat_cols(context);
  return add_rowvec(matmul(merged, wo), bo);
}

Tensor encode(const ModelParams& params, const MultimodalInput& input) {
  const ModelConfig& cfg = params.config;
  const int seq = input.seq_len();

  Tensor tokens = embedding_lookup(params.at("embed.word"), input.token_ids);
  Tensor feats = Tensor::from_values({cfg.patch_count, cfg.d_patch},
                                     flatten(input.patch_features));
  Tensor patches =
      add_rowvec(matmul(feats, params.at("patch_proj.weight")), params.at("patch_proj.bias"));
  Tensor x = concat_rows({tokens, patches});

  Tensor pos = concat_rows({select_rows(params.at("embed.pos_text"), input.text_positions),
                            select_rows(params.at("embed.pos_patch"), input.patch_positions)});
  x = add(x, pos);
  x = add(x, select_rows(params.at("embed.segment"), input.segments));
  x = layer_norm_rows(x, params.at("embed.norm.gain"), params.at("embed.norm.bias"));

  // Column bias: padded positions collect a huge negative score, which softmax
  // turns into an exactly zero attention weight.
  Tensor col_bias;
  bool any_pad = false;
  for (char f : input.valid) any_pad |= !f;
  if (any_pad) {
    std::vector<Real> bias(static_cast<size_t>(seq) * seq, 0.0);
    for (int i = 0; i < seq; ++i)
      for (int j = 0; j < seq; ++j)
        if (!input.valid[j]) bias[static_cast<size_t>(i) * seq + j] = kMaskBias;
    col_bias = Tensor::from_values({seq, seq}, std::move(bias));
  }

  for (int l = 0; l < cfg.layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    Tensor attn = self_attention(x, params.at(pre + "attn.wq"), params.at(pre + "attn.bq"),
                                 params.at(pre + "attn.wk"), params.at(pre + "attn.bk"),
                                 params.at(pre + "attn.wv"), params.at(pre + "attn.bv"),
                                 params.at(pre + "attn.wo"), params.at(pre + "attn.bo"),
                                 cfg.heads, col_bias);
    x = layer_norm_rows(add(x, attn), params.at(pre + "attn_norm.gain"),
                        params.at(pre + "attn_norm.bias"));
    Tensor inner = gelu(add_rowvec(matmul(x, params.at(pre + "ff.w1")), params.at(pre + "ff.b1")));
    Tensor ff_out = add_rowvec(matmul(inner, params.at(pre + "ff.w2")), params.at(pre + "ff.b2"));
    x = layer_norm_rows(add(x, ff_out), params.at(pre + "ff_norm.gain"),
                        params.at(pre + "ff_norm.bias"));
  }
  return x;
}

Tensor mlm_loss(const ModelParams& params, const Tensor& hidden, const MultimodalInput& input) {
  if (input.masked_text_positions.empty())
    throw std::invalid_argument("mlm_loss: no masked text positions");
  Tensor states = select_rows(hidden, input.masked_text_positions);
  Tensor logits =
      add_rowvec(matmul(states, params.at("head.mlm.weight")), params.at("head.mlm.bias"));
  return cross_entropy_rows(logits, input.masked_text_original);
}

Tensor mpm_loss(const ModelParams& params, const Tensor& hidden, const MultimodalInput& input) {
  if (input.masked_patch_positions.empty())
    throw std::invalid_argument("mpm_loss: no masked patch positions");
  const int k = static_cast<int>(input.masked_patch_positions.size());
  Tensor states = select_rows(hidden, input.masked_patch_positions);
  Tensor logits =
      add_rowvec(matmul(states, params.at("head.mpm.weight")), params.at("head.mpm.bias"));
  Tensor predicted = softmax(logits, 1);
  Tensor target = softmax(
      Tensor::from_values({k, params.config.d_patch}, flatten(input.masked_patch_targets)), 1);
  return kl_divergence(target, predicted);
}

TiaResult tia_loss(const ModelParams& params, const Tensor& hidden,
                   const MultimodalInput& input) {
  Tensor cls = select_rows(hidden, {0});
  Tensor logit =
      add_rowvec(matmul(cls, params.at("head.tia.weight")), params.at("head.tia.bias"));
  TiaResult res;
  res.loss = bce_with_logits(logit, static_cast<Real>(input.label));
  res.probability = sigmoid(logit.value()[0]);
  return res;
}

Real tia_probability(const ModelParams& params, const Tensor& hidden) {
  Tensor cls = select_rows(hidden, {0});
  Tensor logit =
      add_rowvec(matmul(cls, params.at("head.tia.weight")), params.at("head.tia.bias"));
  return sigmoid(logit.value()[0]);
}

Real match_score(const ModelParams& params, const TokenSequence& text, const PatchGrid& patches) {
  MultimodalInput input = assemble_inference(text, patches, params.config);
  return tia_probability(params, encode(params, input));
}

} // namespace textile
