#pragma once

#include <string>

#include "textile/model.hpp"
#include "textile/training.hpp"

namespace textile {

// Everything a workflow run needs, resolvable from a profile name plus
// key = value overrides. model.vocab stays 0 until a vocabulary is loaded.
struct Profile {
  std::string name = "desk";
  int image_size = 64;
  int grid = 4;
  int products = 2000;
  int vocab_max = 200;
  int eval_queries = 200;
  int eval_distractors = 100;
  int eval_pairs = 200;
  ModelConfig model;
  TrainConfig train;
};

Profile desk_profile();
Profile paper_profile();
// "desk" or "paper"; anything else is an error naming the value.
Profile named_profile(const std::string& name);

// One `key = value` per line; '#' starts a comment. Unknown keys are errors
// naming the key.
void apply_config_file(Profile& profile, const std::string& path);
void apply_setting(Profile& profile, const std::string& key, const std::string& value);

// The resolved settings in apply_config_file syntax, defaults materialized.
std::string profile_settings(const Profile& profile);

} // namespace textile
