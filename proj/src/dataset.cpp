#include "textile/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace textile {

const char* const kColorNames[kColorCount] = {"black",  "white",  "red",  "green", "blue",
                                              "yellow", "purple", "orange", "pink", "navy"};
const char* const kPatternNames[kPatternCount] = {"plain", "striped", "checked"};
const char* const kShapeNames[kShapeCount] = {"top", "pants", "dress"};
const char* const kSleeveNames[kSleeveCount] = {"long", "short", "none"};

namespace {

constexpr Real kPalette[kColorCount][3] = {
    {0.05, 0.05, 0.05}, // black
    {0.95, 0.95, 0.95}, // white
    {0.85, 0.10, 0.10}, // red
    {0.10, 0.60, 0.15}, // green
    {0.10, 0.20, 0.80}, // blue
    {0.90, 0.85, 0.10}, // yellow
    {0.55, 0.15, 0.65}, // purple
    {0.95, 0.55, 0.10}, // orange
    {0.95, 0.60, 0.75}, // pink
    {0.05, 0.10, 0.35}, // navy
};

constexpr Real kBackground[3] = {0.82, 0.82, 0.84};
constexpr Real kPatternShade = 0.55;

enum Pattern { kPlain = 0, kStriped = 1, kChecked = 2 };
enum Shape { kTop = 0, kPants = 1, kDress = 2 };
enum Sleeve { kLong = 0, kShort = 1, kNone = 2 };

void fill(Image& img, int y0, int y1, int x0, int x1, const Real* rgb) {
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = rgb[c];
}

int lookup_name(const char* const* names, int count, const std::string& s,
                const std::string& what) {
  for (int i = 0; i < count; ++i)
    if (s == names[i]) return i;
  throw std::runtime_error("load_corpus: unknown " + what + " '" + s + "'");
}

void validate(const Attributes& a) {
  if (a.base_color < 0 || a.base_color >= kColorCount || a.accent_color < 0 ||
      a.accent_color >= kColorCount || a.pattern < 0 || a.pattern >= kPatternCount ||
      a.shape < 0 || a.shape >= kShapeCount || a.sleeve < 0 || a.sleeve >= kSleeveCount)
    throw std::invalid_argument("attributes out of range");
}

} // namespace

std::string describe(const Attributes& attrs) {
  validate(attrs);
  std::string s;
  if (attrs.sleeve != kNone) {
    s += kSleeveNames[attrs.sleeve];
    s += " sleeve ";
  }
  s += kPatternNames[attrs.pattern];
  s += ' ';
  s += kShapeNames[attrs.shape];
  s += " in ";
  s += kColorNames[attrs.base_color];
  s += " with ";
  s += kColorNames[attrs.accent_color];
  s += " trim";
  return s;
}

Image render(const Attributes& attrs, int image_size) {
  validate(attrs);
  if (image_size <= 0 || image_size % 16 != 0)
    throw std::invalid_argument("render: image size " + std::to_string(image_size) +
                                " must be a positive multiple of 16");
  const int u = image_size / 16;
  Image img = Image::zeros(image_size, image_size);
  fill(img, 0, image_size, 0, image_size, kBackground);

  const Real* base = kPalette[attrs.base_color];
  const Real* accent = kPalette[attrs.accent_color];

  // Body silhouette: tops end at the waist, pants and dresses run long.
  const int body_y0 = 2 * u;
  const int body_y1 = attrs.shape == kTop ? 10 * u : 14 * u;
  const int body_x0 = 4 * u, body_x1 = 12 * u;
  for (int y = body_y0; y < body_y1; ++y)
    for (int x = body_x0; x < body_x1; ++x) {
      Real shade = 1.0;
      if (attrs.pattern == kStriped && (y / u) % 2 == 1) shade = kPatternShade;
      if (attrs.pattern == kChecked && ((y / u) + (x / u)) % 2 == 1) shade = kPatternShade;
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = base[c] * shade;
    }

  // Pants split into two legs below the waist.
  if (attrs.shape == kPants) fill(img, 6 * u, 14 * u, 7 * u, 9 * u, kBackground);

  // Sleeves occupy the side columns; length sets their vertical extent.
  if (attrs.sleeve != kNone) {
    const int sleeve_y1 = attrs.sleeve == kLong ? 12 * u : 6 * u;
    fill(img, 2 * u, sleeve_y1, 2 * u, 4 * u, base);
    fill(img, 2 * u, sleeve_y1, 12 * u, 14 * u, base);
  }

  // Accent trim along the top garment rows.
  fill(img, 2 * u, 3 * u, body_x0, body_x1, accent);
  return img;
}

std::vector<ProductRecord> generate_products(int count, uint64_t seed) {
  if (count < 2) throw std::invalid_argument("generate_products: need at least 2 products");
  if (count > kAttributeSpace)
    throw std::invalid_argument("generate_products: " + std::to_string(count) +
                                " exceeds the " + std::to_string(kAttributeSpace) +
                                " distinct attribute tuples");

  std::vector<int> tuple_ids(kAttributeSpace);
  std::iota(tuple_ids.begin(), tuple_ids.end(), 0);
  Rng rng(mix_seed(seed, 0));
  // Partial Fisher-Yates: the first `count` entries are a uniform draw
  // without replacement.
  for (int i = 0; i < count; ++i) {
    const int j = i + static_cast<int>(rng.uniform_int(tuple_ids.size() - i));
    std::swap(tuple_ids[i], tuple_ids[j]);
  }

  std::vector<ProductRecord> records;
  records.reserve(count);
  for (int i = 0; i < count; ++i) {
    int t = tuple_ids[i];
    Attributes a;
    a.sleeve = t % kSleeveCount;
    t /= kSleeveCount;
    a.shape = t % kShapeCount;
    t /= kShapeCount;
    a.pattern = t % kPatternCount;
    t /= kPatternCount;
    a.accent_color = t % kColorCount;
    t /= kColorCount;
    a.base_color = t;
    records.push_back({i, a, describe(a)});
  }
  return records;
}

SplitIds split_products(int count) {
  SplitIds s;
  const int n_val = count / 10;
  const int n_test = count / 10;
  const int n_train = count - n_val - n_test;
  for (int i = 0; i < count; ++i) {
    if (i < n_train)
      s.train.push_back(i);
    else if (i < n_train + n_val)
      s.val.push_back(i);
    else
      s.test.push_back(i);
  }
  return s;
}

void write_corpus(const std::vector<ProductRecord>& records, int image_size,
                  const std::string& dir) {
  fs::create_directories(fs::path(dir) / "images");

  std::ofstream products(fs::path(dir) / "products.txt", std::ios::binary);
  if (!products) throw std::runtime_error("write_corpus: cannot write products.txt in " + dir);
  for (const auto& r : records) {
    products << r.id << '\t' << kColorNames[r.attrs.base_color] << '\t'
             << kColorNames[r.attrs.accent_color] << '\t' << kPatternNames[r.attrs.pattern]
             << '\t' << kShapeNames[r.attrs.shape] << '\t' << kSleeveNames[r.attrs.sleeve] << '\t'
             << r.description << '\n';
    write_ppm(render(r.attrs, image_size),
              (fs::path(dir) / "images" / (std::to_string(r.id) + ".ppm")).string());
  }

  const SplitIds splits = split_products(static_cast<int>(records.size()));
  const std::pair<const char*, const std::vector<int>*> lists[] = {
      {"train.txt", &splits.train}, {"val.txt", &splits.val}, {"test.txt", &splits.test}};
  for (const auto& [name, ids] : lists) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    for (int id : *ids) out << id << '\n';
  }
}

Corpus load_corpus(const std::string& dir) {
  Corpus corpus;
  corpus.dir = dir;

  std::ifstream products(fs::path(dir) / "products.txt");
  if (!products) throw std::runtime_error("load_corpus: cannot read products.txt in " + dir);
  std::string line;
  while (std::getline(products, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id_s, base, accent, pattern, shape, sleeve, desc;
    if (!std::getline(ss, id_s, '\t') || !std::getline(ss, base, '\t') ||
        !std::getline(ss, accent, '\t') || !std::getline(ss, pattern, '\t') ||
        !std::getline(ss, shape, '\t') || !std::getline(ss, sleeve, '\t') ||
        !std::getline(ss, desc))
      throw std::runtime_error("load_corpus: malformed line in products.txt: " + line);
    ProductRecord r;
    r.id = std::stoi(id_s);
    r.attrs.base_color = lookup_name(kColorNames, kColorCount, base, "color");
    r.attrs.accent_color = lookup_name(kColorNames, kColorCount, accent, "color");
    r.attrs.pattern = lookup_name(kPatternNames, kPatternCount, pattern, "pattern");
    r.attrs.shape = lookup_name(kShapeNames, kShapeCount, shape, "shape");
    r.attrs.sleeve = lookup_name(kSleeveNames, kSleeveCount, sleeve, "sleeve");
    r.description = desc;
    if (r.id != static_cast<int>(corpus.records.size()))
      throw std::runtime_error("load_corpus: product ids not dense at " + id_s);
    corpus.records.push_back(std::move(r));
  }
  if (corpus.records.empty()) throw std::runtime_error("load_corpus: empty products.txt");

  const std::pair<const char*, std::vector<int>*> lists[] = {{"train.txt", &corpus.splits.train},
                                                             {"val.txt", &corpus.splits.val},
                                                             {"test.txt", &corpus.splits.test}};
  for (const auto& [name, ids] : lists) {
    std::ifstream in(fs::path(dir) / name);
    if (!in) throw std::runtime_error(std::string("load_corpus: missing ") + name);
    int id;
    while (in >> id) ids->push_back(id);
  }

  corpus.image_size = load_product_image(corpus, 0).height;
  return corpus;
}

Image load_product_image(const Corpus& corpus, int product_id) {
  return read_ppm(
      (fs::path(corpus.dir) / "images" / (std::to_string(product_id) + ".ppm")).string());
}

} // namespace textile
