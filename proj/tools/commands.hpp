#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"

namespace anchorrank::cli {

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"synth", "index", "warmup", "train", "eval", "curves", "agreement"};
  return names;
}

/// Runs one sub-command; output files go under cfg.str("out"). Every file is
/// read back before returning. Throws on any failure.
void run_command(const std::string& name, const Config& cfg, std::ostream& log);

}  // namespace anchorrank::cli
