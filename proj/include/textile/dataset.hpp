#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "textile/image.hpp"
#include "textile/rng.hpp"

namespace textile {

inline constexpr int kColorCount = 10;
inline constexpr int kPatternCount = 3;
inline constexpr int kShapeCount = 3;
inline constexpr int kSleeveCount = 3;

extern const char* const kColorNames[kColorCount];
extern const char* const kPatternNames[kPatternCount];
extern const char* const kShapeNames[kShapeCount];
extern const char* const kSleeveNames[kSleeveCount];

struct Attributes {
  int base_color = 0;
  int accent_color = 0;
  int pattern = 0; // plain, striped, checked
  int shape = 0;   // top, pants, dress
  int sleeve = 0;  // long, short, none

  bool operator==(const Attributes&) const = default;
};

inline constexpr long kAttributeSpace =
    static_cast<long>(kColorCount) * kColorCount * kPatternCount * kShapeCount * kSleeveCount;

// Deterministic template: "long sleeve striped top in black with red trim";
// the sleeve phrase is dropped when sleeve == none.
std::string describe(const Attributes& attrs);

// Renders every attribute into a fixed region of the canvas: accent trim in
// the top garment rows, sleeves as side columns whose extent encodes length,
// body silhouette per shape, pattern as periodic darkening of the body.
// image_size must be divisible by 16.
Image render(const Attributes& attrs, int image_size);

struct ProductRecord {
  int id = 0;
  Attributes attrs;
  std::string description;
};

// Samples `count` distinct attribute tuples uniformly (count must not exceed
// the attribute space) and assigns sequential product ids.
std::vector<ProductRecord> generate_products(int count, uint64_t seed);

struct SplitIds {
  std::vector<int> train, val, test;
};

// 80/10/10 by product id, deterministic.
SplitIds split_products(int count);

// Writes products.txt, images/<id>.ppm, and train/val/test id lists.
void write_corpus(const std::vector<ProductRecord>& records, int image_size,
                  const std::string& dir);

struct Corpus {
  std::vector<ProductRecord> records;
  SplitIds splits;
  int image_size = 0;
  std::string dir;
};

Corpus load_corpus(const std::string& dir);
Image load_product_image(const Corpus& corpus, int product_id);

} // namespace textile
