#pragma once

#include <istream>
#include <string>
#include <unordered_map>
#include <vector>

#include "textile/rng.hpp"

namespace textile {

// Word-level vocabulary with fixed low ids for the reserved tokens. Word
// groups may still span multiple pieces downstream, so a subword tokenizer
// can be swapped in without touching the masking code.
class Vocabulary {
public:
  static constexpr int kPad = 0;
  static constexpr int kCls = 1;
  static constexpr int kSep = 2;
  static constexpr int kMsk = 3;
  static constexpr int kUnk = 4;
  static constexpr int kReservedCount = 5;

  Vocabulary();

  int add_piece(const std::string& piece); // returns the new id
  int id_of(const std::string& piece) const; // kUnk when absent
  const std::string& piece_of(int id) const;
  int size() const { return static_cast<int>(pieces_.size()); }

  // Line-delimited "piece<TAB>id" file, ids dense and ascending.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> ids_;
};

// Frequency-ranked vocabulary over whitespace/punctuation-split lowercase
// words; at most max_size entries beyond the reserved tokens. Ties rank
// lexicographically so builds are reproducible.
Vocabulary build_vocab(std::istream& corpus, int max_size);

struct WordGroup {
  int begin = 0; // token index range [begin, end)
  int end = 0;
};

struct TokenSequence {
  std::vector<int> ids;
  std::vector<WordGroup> word_groups;
  int length() const { return static_cast<int>(ids.size()); }
};

// Lowercases, splits on non-alphanumeric characters, and maps each word to
// one token (unknowns to [UNK]). Truncates to at most max_tokens without
// splitting a word group.
TokenSequence tokenize(const std::string& text, const Vocabulary& vocab, int max_tokens);

std::string detokenize(const TokenSequence& seq, const Vocabulary& vocab);

struct MaskedSequence {
  std::vector<int> ids;              // with [MSK] substitutions
  std::vector<WordGroup> word_groups;
  std::vector<int> masked_positions; // ascending token indices
  std::vector<int> original_ids;     // parallel to masked_positions
};

// Whole-word masking: every word group is selected independently with
// probability `prob` and all of its tokens replaced by [MSK]. When nothing
// gets selected one group is forced, so the masked-token loss is always
// defined.
MaskedSequence apply_wwm_mask(const TokenSequence& seq, double prob, Rng& rng);

} // namespace textile
