#include "fixtures.hpp"

#include <fstream>
#include <random>
#include <sstream>

namespace fixtures {

TempDir::TempDir(const std::string& tag) {
  std::random_device rd;
  path = std::filesystem::temp_directory_path() / ("anchorrank-" + tag + "-" + std::to_string(rd()));
  std::filesystem::create_directories(path);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path, ec);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fixtures
