#include "textile/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

namespace textile {

namespace {

const char* kReservedNames[Vocabulary::kReservedCount] = {"[PAD]", "[CLS]", "[SEP]", "[MSK]",
                                                          "[UNK]"};

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    const unsigned char u = static_cast<unsigned char>(ch);
    if (std::isalnum(u)) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

} // namespace

Vocabulary::Vocabulary() {
  for (const char* name : kReservedNames) add_piece(name);
}

int Vocabulary::add_piece(const std::string& piece) {
  auto it = ids_.find(piece);
  if (it != ids_.end()) return it->second;
  const int id = static_cast<int>(pieces_.size());
  pieces_.push_back(piece);
  ids_.emplace(piece, id);
  return id;
}

int Vocabulary::id_of(const std::string& piece) const {
  auto it = ids_.find(piece);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::piece_of(int id) const {
  if (id < 0 || id >= size())
    throw std::invalid_argument("Vocabulary: id " + std::to_string(id) + " out of range");
  return pieces_[id];
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("Vocabulary: cannot write " + path);
  for (int id = 0; id < size(); ++id) out << pieces_[id] << '\t' << id << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("Vocabulary: cannot read " + path);
  Vocabulary vocab;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected piece<TAB>id");
    const std::string piece = line.substr(0, tab);
    const int id = std::stoi(line.substr(tab + 1));
    if (id < kReservedCount) {
      if (piece != kReservedNames[id])
        throw std::runtime_error(path + ": reserved id " + std::to_string(id) +
                                 " bound to unexpected piece '" + piece + "'");
      continue;
    }
    const int got = vocab.add_piece(piece);
    if (got != id)
      throw std::runtime_error(path + ": ids not dense at '" + piece + "' (expected " +
                               std::to_string(got) + ", file says " + std::to_string(id) + ")");
  }
  return vocab;
}

Vocabulary build_vocab(std::istream& corpus, int max_size) {
  std::unordered_map<std::string, long> counts;
  std::string line;
  while (std::getline(corpus, line))
    for (auto& w : split_words(line)) ++counts[w];
  if (counts.empty()) throw std::invalid_argument("build_vocab: empty corpus");

  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(ranked.size()) > max_size) ranked.resize(max_size);

  Vocabulary vocab;
  for (const auto& [word, count] : ranked) {
    (void)count;
    vocab.add_piece(word);
  }
  return vocab;
}

TokenSequence tokenize(const std::string& text, const Vocabulary& vocab, int max_tokens) {
  TokenSequence seq;
  for (const auto& word : split_words(text)) {
    // One piece per word in this scheme; the group structure stays so that a
    // multi-piece tokenizer keeps the same masking semantics.
    if (seq.length() + 1 > max_tokens) break;
    const int begin = seq.length();
    seq.ids.push_back(vocab.id_of(word));
    seq.word_groups.push_back({begin, seq.length()});
  }
  return seq;
}

std::string detokenize(const TokenSequence& seq, const Vocabulary& vocab) {
  std::string out;
  for (size_t i = 0; i < seq.ids.size(); ++i) {
    if (i) out += ' ';
    out += vocab.piece_of(seq.ids[i]);
  }
  return out;
}

MaskedSequence apply_wwm_mask(const TokenSequence& seq, double prob, Rng& rng) {
  if (prob < 0.0 || prob >= 1.0)
    throw std::invalid_argument("apply_wwm_mask: probability " + std::to_string(prob) +
                                " outside [0, 1)");
  MaskedSequence masked;
  masked.ids = seq.ids;
  masked.word_groups = seq.word_groups;

  std::vector<int> selected;
  for (size_t gi = 0; gi < seq.word_groups.size(); ++gi)
    if (rng.bernoulli(prob)) selected.push_back(static_cast<int>(gi));
  if (selected.empty() && !seq.word_groups.empty())
    selected.push_back(static_cast<int>(rng.uniform_int(seq.word_groups.size())));

  for (int gi : selected) {
    const auto& g = seq.word_groups[gi];
    for (int t = g.begin; t < g.end; ++t) {
      masked.masked_positions.push_back(t);
      masked.original_ids.push_back(seq.ids[t]);
      masked.ids[t] = Vocabulary::kMsk;
    }
  }
  return masked;
}

} // namespace textile
