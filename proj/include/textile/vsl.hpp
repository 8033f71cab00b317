#pragma once

#include <string>
#include <vector>

#include "textile/model.hpp"

namespace textile {

// Batch padded only to the within-batch maximum text span instead of the
// global text budget, shrinking the quadratic attention cost on short text.
struct VslBatch {
  std::vector<MultimodalInput> examples;
  int width = 0; // shared text width: max over the batch of text length + 2
};

VslBatch vsl_assemble(const std::vector<TokenSequence>& texts,
                      const std::vector<PatchGrid>& grids, const ModelConfig& config);

// Match probability per example; parameters are never modified.
std::vector<Real> vsl_score(const ModelParams& params, const VslBatch& batch);

// Same examples through the fixed-budget padded path, for equivalence checks.
std::vector<Real> padded_score(const ModelParams& params, const std::vector<TokenSequence>& texts,
                               const std::vector<PatchGrid>& grids);

enum class PadMode { kPadded, kVsl };

struct LatencyStats {
  Real mean_ms = 0, p50_ms = 0, p95_ms = 0;
  int repetitions = 0;
};

// Wall-clock per-batch scoring time over `repetitions` runs, after `warmup`
// unrecorded runs.
LatencyStats bench_latency(const ModelParams& params, const std::vector<TokenSequence>& texts,
                           const std::vector<PatchGrid>& grids, PadMode mode, int repetitions,
                           int warmup = 3);

inline constexpr const char* kBenchCsvHeader = "mode,batch_size,mean_ms,p50_ms,p95_ms";

std::string bench_csv_row(PadMode mode, int batch_size, const LatencyStats& stats);

} // namespace textile
