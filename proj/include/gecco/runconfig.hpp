#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gecco/model.hpp"

namespace gecco {

// Key/value run configuration: UTF-8 text, '#' comments, one `key = value`
// per line. Unknown keys are rejected; absent keys fall back to defaults
// and the fallback is recorded in `notices`.
struct RunConfig {
  // dataset (IDX pair or PGM directory per split)
  std::string train_images, train_labels, train_dir;
  std::string eval_images, eval_labels, eval_dir;

  ModelConfig model;

  int epochs = 15;
  real lr = real(1e-3);
  std::uint64_t seed = 0;

  std::vector<std::string> notices;  // defaulted-key messages, for printing

  bool has_train_source() const { return !train_dir.empty() || !train_images.empty(); }
  bool has_eval_source() const { return !eval_dir.empty() || !eval_images.empty(); }
};

RunConfig parse_run_config(const std::string& path);
RunConfig parse_run_config_text(const std::string& text, const std::string& origin);

}  // namespace gecco
