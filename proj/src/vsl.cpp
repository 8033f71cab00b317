#include "textile/vsl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace textile {

VslBatch vsl_assemble(const std::vector<TokenSequence>& texts,
                      const std::vector<PatchGrid>& grids, const ModelConfig& config) {
  if (texts.empty()) throw std::invalid_argument("vsl_assemble: empty batch");
  if (texts.size() != grids.size())
    throw std::invalid_argument("vsl_assemble: " + std::to_string(texts.size()) + " texts vs " +
                                std::to_string(grids.size()) + " patch grids");
  int width = 0;
  for (const TokenSequence& t : texts) width = std::max(width, t.length() + 2);

  VslBatch batch;
  batch.width = width;
  batch.examples.reserve(texts.size());
  for (size_t i = 0; i < texts.size(); ++i)
    batch.examples.push_back(assemble_inference(texts[i], grids[i], config, width));
  return batch;
}

std::vector<Real> vsl_score(const ModelParams& params, const VslBatch& batch) {
  std::vector<Real> scores;
  scores.reserve(batch.examples.size());
  for (const MultimodalInput& in : batch.examples)
    scores.push_back(tia_probability(params, encode(params, in)));
  return scores;
}

std::vector<Real> padded_score(const ModelParams& params, const std::vector<TokenSequence>& texts,
                               const std::vector<PatchGrid>& grids) {
  if (texts.size() != grids.size())
    throw std::invalid_argument("padded_score: batch size mismatch");
  std::vector<Real> scores;
  scores.reserve(texts.size());
  for (size_t i = 0; i < texts.size(); ++i)
    scores.push_back(match_score(params, texts[i], grids[i]));
  return scores;
}

LatencyStats bench_latency(const ModelParams& params, const std::vector<TokenSequence>& texts,
                           const std::vector<PatchGrid>& grids, PadMode mode, int repetitions,
                           int warmup) {
  if (repetitions < 1) throw std::invalid_argument("bench_latency: repetitions must be >= 1");
  if (warmup < 0) throw std::invalid_argument("bench_latency: negative warmup");

  auto run_once = [&] {
    if (mode == PadMode::kVsl) {
      VslBatch batch = vsl_assemble(texts, grids, params.config);
      return vsl_score(params, batch);
    }
    return padded_score(params, texts, grids);
  };

  for (int i = 0; i < warmup; ++i) run_once();

  std::vector<Real> times_ms;
  times_ms.reserve(repetitions);
  for (int i = 0; i < repetitions; ++i) {
    const auto start = std::chrono::steady_clock::now();
    volatile Real sink = run_once().back();
    (void)sink;
    const auto end = std::chrono::steady_clock::now();
    times_ms.push_back(std::chrono::duration<Real, std::milli>(end - start).count());
  }

  std::vector<Real> sorted = times_ms;
  std::sort(sorted.begin(), sorted.end());
  auto percentile = [&](Real q) {
    const int n = static_cast<int>(sorted.size());
    int idx = static_cast<int>(std::ceil(q * n)) - 1;
    idx = std::clamp(idx, 0, n - 1);
    return sorted[idx];
  };

  LatencyStats stats;
  stats.repetitions = repetitions;
  Real total = 0;
  for (Real t : times_ms) total += t;
  stats.mean_ms = total / repetitions;
  stats.p50_ms = percentile(0.50);
  stats.p95_ms = percentile(0.95);
  return stats;
}

std::string bench_csv_row(PadMode mode, int batch_size, const LatencyStats& stats) {
  char buf[192];
  std::snprintf(buf, sizeof(buf), "%s,%d,%.3f,%.3f,%.3f",
                mode == PadMode::kVsl ? "vsl" : "padded", batch_size, stats.mean_ms, stats.p50_ms,
                stats.p95_ms);
  return buf;
}

} // namespace textile
