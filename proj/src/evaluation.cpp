#include "textile/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace textile {

Scorer model_scorer(const ModelParams& params, const PreparedData& data) {
  return [&params, &data](int text_product, int image_product) {
    const auto& products = data.products;
    if (text_product < 0 || text_product >= static_cast<int>(products.size()) ||
        image_product < 0 || image_product >= static_cast<int>(products.size()))
      throw std::invalid_argument("model_scorer: unknown product id");
    return match_score(params, products[text_product].tokens, products[image_product].grid);
  };
}

std::vector<PairedExample> build_eval_pairs(const std::vector<int>& pool, int count, Rng& rng) {
  if (count <= 0) throw std::invalid_argument("build_eval_pairs: count must be positive");
  if (pool.size() < 2)
    throw std::invalid_argument("build_eval_pairs: need at least 2 products");
  std::vector<PairedExample> pairs;
  pairs.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int p = pool[rng.uniform_int(pool.size())];
    if (i % 2 == 0) {
      pairs.push_back({p, p, 1});
    } else {
      int q = pool[rng.uniform_int(pool.size())];
      while (q == p) q = pool[rng.uniform_int(pool.size())];
      pairs.push_back({p, q, 0});
    }
  }
  return pairs;
}

Real matching_accuracy(const Scorer& score, const std::vector<PairedExample>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("matching_accuracy: empty pair set");
  int correct = 0;
  for (const PairedExample& p : pairs)
    correct += (score(p.text_product, p.image_product) >= 0.5) == (p.label == 1);
  return 100.0 * correct / static_cast<Real>(pairs.size());
}

const char* direction_name(Direction dir) {
  return dir == Direction::kTextToImage ? "text-to-image" : "image-to-text";
}

std::vector<RankSet> build_rank_sets(const std::vector<int>& pool, int query_count,
                                     int distractor_count, Rng& rng) {
  const int n = static_cast<int>(pool.size());
  if (query_count <= 0 || distractor_count <= 0)
    throw std::invalid_argument("build_rank_sets: counts must be positive");
  if (n <= distractor_count)
    throw std::invalid_argument("build_rank_sets: pool of " + std::to_string(n) +
                                " products cannot supply " + std::to_string(distractor_count) +
                                " distractors");
  if (query_count > n)
    throw std::invalid_argument("build_rank_sets: cannot draw " + std::to_string(query_count) +
                                " unique queries from " + std::to_string(n) + " products");

  // partial Fisher-Yates for the unique queries
  std::vector<int> queries = pool;
  for (int i = 0; i < query_count; ++i)
    std::swap(queries[i], queries[i + rng.uniform_int(static_cast<uint64_t>(n - i))]);
  queries.resize(query_count);

  std::vector<RankSet> sets;
  sets.reserve(query_count);
  std::vector<int> others;
  others.reserve(n - 1);
  for (int q : queries) {
    others.clear();
    for (int p : pool)
      if (p != q) others.push_back(p);
    for (int i = 0; i < distractor_count; ++i)
      std::swap(others[i],
                others[i + rng.uniform_int(static_cast<uint64_t>(others.size() - i))]);
    RankSet set;
    set.query_product = q;
    set.candidates.assign(others.begin(), others.begin() + distractor_count);
    const auto at = set.candidates.begin() +
                    static_cast<int>(rng.uniform_int(static_cast<uint64_t>(distractor_count + 1)));
    set.candidates.insert(at, q);
    sets.push_back(std::move(set));
  }
  return sets;
}

std::vector<int> gt_ranks(const std::vector<RankSet>& sets, const Scorer& score, Direction dir) {
  std::vector<int> ranks;
  ranks.reserve(sets.size());
  for (const RankSet& set : sets) {
    std::vector<Real> scores(set.candidates.size());
    for (size_t i = 0; i < set.candidates.size(); ++i) {
      const int c = set.candidates[i];
      scores[i] = dir == Direction::kTextToImage ? score(set.query_product, c)
                                                 : score(c, set.query_product);
    }
    std::vector<int> order(set.candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    int rank = -1;
    for (size_t pos = 0; pos < order.size(); ++pos)
      if (set.candidates[order[pos]] == set.query_product) {
        rank = static_cast<int>(pos) + 1;
        break;
      }
    if (rank < 0) throw std::logic_error("gt_ranks: rank set lacks its ground truth");
    ranks.push_back(rank);
  }
  return ranks;
}

Real rank_at_k(const std::vector<int>& ranks, int k) {
  if (k < 1) throw std::invalid_argument("rank_at_k: k must be at least 1");
  if (ranks.empty()) throw std::invalid_argument("rank_at_k: no ranks");
  int hits = 0;
  for (int r : ranks) hits += r <= k;
  return 100.0 * hits / static_cast<Real>(ranks.size());
}

RetrievalReport make_report(Direction dir, Real accuracy, const std::vector<int>& ranks) {
  RetrievalReport rep;
  rep.direction = dir;
  rep.accuracy = accuracy;
  rep.rank1 = rank_at_k(ranks, 1);
  rep.rank5 = rank_at_k(ranks, 5);
  rep.rank10 = rank_at_k(ranks, 10);
  rep.query_count = static_cast<int>(ranks.size());
  return rep;
}

void write_report_text(const std::vector<RetrievalReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_report_text: cannot open " + path);
  char buf[256];
  for (const RetrievalReport& r : reports) {
    std::snprintf(buf, sizeof(buf),
                  "%s accuracy %.2f rank@1 %.2f rank@5 %.2f rank@10 %.2f queries %d",
                  direction_name(r.direction), r.accuracy, r.rank1, r.rank5, r.rank10,
                  r.query_count);
    out << buf << "\n";
  }
}

void write_report_csv(const std::vector<RetrievalReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_report_csv: cannot open " + path);
  out << kReportCsvHeader << "\n";
  char buf[256];
  for (const RetrievalReport& r : reports) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%d", direction_name(r.direction),
                  r.accuracy, r.rank1, r.rank5, r.rank10, r.query_count);
    out << buf << "\n";
  }
}

} // namespace textile
