#pragma once

#include <functional>
#include <string>
#include <vector>

#include "textile/training.hpp"

namespace textile {

// Scores a (text product, image product) pair with the match probability.
// Pluggable so the ranking machinery can be tested against oracle scorers.
using Scorer = std::function<Real(int text_product, int image_product)>;

// Both referents must outlive the returned scorer.
Scorer model_scorer(const ModelParams& params, const PreparedData& data);

// Alternating matched and mismatched pairs drawn from the pool.
std::vector<PairedExample> build_eval_pairs(const std::vector<int>& pool, int count, Rng& rng);

// Percentage of pairs where (score >= 0.5) agrees with the label.
Real matching_accuracy(const Scorer& score, const std::vector<PairedExample>& pairs);

enum class Direction { kTextToImage, kImageToText };
const char* direction_name(Direction dir);

struct RankSet {
  int query_product = 0;
  std::vector<int> candidates; // exactly one entry equals query_product
};

// Unique queries; per query, distractor_count candidates from distinct other
// products plus the ground truth at a random position.
std::vector<RankSet> build_rank_sets(const std::vector<int>& pool, int query_count,
                                     int distractor_count, Rng& rng);

// 1-based rank of the ground truth per set under a stable descending sort of
// candidate scores (ties keep insertion order).
std::vector<int> gt_ranks(const std::vector<RankSet>& sets, const Scorer& score, Direction dir);

// Percentage of ranks at or above the cutoff.
Real rank_at_k(const std::vector<int>& ranks, int k);

struct RetrievalReport {
  Direction direction = Direction::kTextToImage;
  Real accuracy = 0; // over the labeled pair set
  Real rank1 = 0, rank5 = 0, rank10 = 0;
  int query_count = 0;
};

RetrievalReport make_report(Direction dir, Real accuracy, const std::vector<int>& ranks);

inline constexpr const char* kReportCsvHeader =
    "direction,accuracy,rank1,rank5,rank10,query_count";

void write_report_text(const std::vector<RetrievalReport>& reports, const std::string& path);
void write_report_csv(const std::vector<RetrievalReport>& reports, const std::string& path);

} // namespace textile
