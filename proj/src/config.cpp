#include "textile/config.hpp"

#include <climits>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>

namespace textile {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

int parse_int(const std::string& key, const std::string& value) {
  size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || v < INT_MIN || v > INT_MAX)
    throw std::invalid_argument("config: key '" + key + "' needs an integer, got '" + value + "'");
  return static_cast<int>(v);
}

Real parse_real(const std::string& key, const std::string& value) {
  size_t used = 0;
  Real v = 0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size())
    throw std::invalid_argument("config: key '" + key + "' needs a number, got '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config: key '" + key + "' needs true or false, got '" + value +
                              "'");
}

} // namespace

Profile desk_profile() {
  Profile p;
  p.name = "desk";
  return p;
}

Profile paper_profile() {
  Profile p;
  p.name = "paper";
  p.image_size = 256;
  p.grid = 8;
  p.products = 2700;
  p.vocab_max = 30000;
  p.eval_queries = 270;
  p.eval_distractors = 100;
  p.eval_pairs = 270;
  p.model.layers = 12;
  p.model.hidden = 768;
  p.model.heads = 12;
  p.model.ff = 3072;
  p.model.max_text_len = 448;
  p.model.patch_count = 64;
  p.train.batch_size = 64;
  p.train.learning_rate = 2e-5;
  p.train.beta1 = 0.95;
  p.train.warmup_steps = 5000;
  p.train.total_steps = 50000;
  p.train.eval_every = 1000;
  return p;
}

Profile named_profile(const std::string& name) {
  if (name == "desk") return desk_profile();
  if (name == "paper") return paper_profile();
  throw std::invalid_argument("config: unknown profile '" + name + "' (expected desk or paper)");
}

void apply_setting(Profile& p, const std::string& key, const std::string& value) {
  using Setter = std::function<void(Profile&, const std::string&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"image_size", [](Profile& pr, auto& k, auto& v) { pr.image_size = parse_int(k, v); }},
      {"grid", [](Profile& pr, auto& k, auto& v) { pr.grid = parse_int(k, v); }},
      {"products", [](Profile& pr, auto& k, auto& v) { pr.products = parse_int(k, v); }},
      {"vocab_max", [](Profile& pr, auto& k, auto& v) { pr.vocab_max = parse_int(k, v); }},
      {"eval_queries", [](Profile& pr, auto& k, auto& v) { pr.eval_queries = parse_int(k, v); }},
      {"eval_distractors",
       [](Profile& pr, auto& k, auto& v) { pr.eval_distractors = parse_int(k, v); }},
      {"eval_pairs", [](Profile& pr, auto& k, auto& v) { pr.eval_pairs = parse_int(k, v); }},
      {"layers", [](Profile& pr, auto& k, auto& v) { pr.model.layers = parse_int(k, v); }},
      {"hidden", [](Profile& pr, auto& k, auto& v) { pr.model.hidden = parse_int(k, v); }},
      {"heads", [](Profile& pr, auto& k, auto& v) { pr.model.heads = parse_int(k, v); }},
      {"ff", [](Profile& pr, auto& k, auto& v) { pr.model.ff = parse_int(k, v); }},
      {"max_text_len",
       [](Profile& pr, auto& k, auto& v) { pr.model.max_text_len = parse_int(k, v); }},
      {"patch_count",
       [](Profile& pr, auto& k, auto& v) { pr.model.patch_count = parse_int(k, v); }},
      {"batch_size", [](Profile& pr, auto& k, auto& v) { pr.train.batch_size = parse_int(k, v); }},
      {"learning_rate",
       [](Profile& pr, auto& k, auto& v) { pr.train.learning_rate = parse_real(k, v); }},
      {"beta1", [](Profile& pr, auto& k, auto& v) { pr.train.beta1 = parse_real(k, v); }},
      {"beta2", [](Profile& pr, auto& k, auto& v) { pr.train.beta2 = parse_real(k, v); }},
      {"epsilon", [](Profile& pr, auto& k, auto& v) { pr.train.epsilon = parse_real(k, v); }},
      {"weight_decay",
       [](Profile& pr, auto& k, auto& v) { pr.train.weight_decay = parse_real(k, v); }},
      {"warmup_steps",
       [](Profile& pr, auto& k, auto& v) { pr.train.warmup_steps = parse_int(k, v); }},
      {"total_steps",
       [](Profile& pr, auto& k, auto& v) { pr.train.total_steps = parse_int(k, v); }},
      {"negative_ratio",
       [](Profile& pr, auto& k, auto& v) { pr.train.negative_ratio = parse_real(k, v); }},
      {"text_mask_prob",
       [](Profile& pr, auto& k, auto& v) { pr.train.text_mask_prob = parse_real(k, v); }},
      {"patch_mask_prob",
       [](Profile& pr, auto& k, auto& v) { pr.train.patch_mask_prob = parse_real(k, v); }},
      {"adaptive_weights",
       [](Profile& pr, auto& k, auto& v) { pr.train.adaptive_weights = parse_bool(k, v); }},
      {"eval_every", [](Profile& pr, auto& k, auto& v) { pr.train.eval_every = parse_int(k, v); }},
      {"patience", [](Profile& pr, auto& k, auto& v) { pr.train.patience = parse_int(k, v); }},
      {"train_eval_pairs",
       [](Profile& pr, auto& k, auto& v) { pr.train.eval_pairs = parse_int(k, v); }},
  };
  auto it = setters.find(key);
  if (it == setters.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
  it->second(p, key, value);
}

void apply_config_file(Profile& profile, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: " + path + ":" + std::to_string(lineno) +
                                  " is not 'key = value'");
    apply_setting(profile, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::string profile_settings(const Profile& p) {
  char buf[1536];
  std::snprintf(
      buf, sizeof(buf),
      "image_size = %d\ngrid = %d\nproducts = %d\nvocab_max = %d\neval_queries = %d\n"
      "eval_distractors = %d\neval_pairs = %d\nlayers = %d\nhidden = %d\nheads = %d\nff = %d\n"
      "max_text_len = %d\npatch_count = %d\nbatch_size = %d\nlearning_rate = %.17g\n"
      "beta1 = %.17g\nbeta2 = %.17g\nepsilon = %.17g\nweight_decay = %.17g\nwarmup_steps = %d\n"
      "total_steps = %d\nnegative_ratio = %.17g\ntext_mask_prob = %.17g\n"
      "patch_mask_prob = %.17g\nadaptive_weights = %s\neval_every = %d\npatience = %d\n"
      "train_eval_pairs = %d\n",
      p.image_size, p.grid, p.products, p.vocab_max, p.eval_queries, p.eval_distractors,
      p.eval_pairs, p.model.layers, p.model.hidden, p.model.heads, p.model.ff,
      p.model.max_text_len, p.model.patch_count, p.train.batch_size, p.train.learning_rate,
      p.train.beta1, p.train.beta2, p.train.epsilon, p.train.weight_decay, p.train.warmup_steps,
      p.train.total_steps, p.train.negative_ratio, p.train.text_mask_prob, p.train.patch_mask_prob,
      p.train.adaptive_weights ? "true" : "false", p.train.eval_every, p.train.patience,
      p.train.eval_pairs);
  return buf;
}

} // namespace textile
