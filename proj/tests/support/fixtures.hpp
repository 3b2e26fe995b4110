#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "medner/formats.hpp"

namespace fixture {

inline std::string dir() { return MEDNER_FIXTURE_DIR; }
inline std::string mapping_csv() { return dir() + "/mapping_fixture.csv"; }
inline std::string ensemble_dir() { return dir() + "/ensemble"; }
inline std::string ensemble_gold() { return ensemble_dir() + "/gold.jsonl"; }

inline std::vector<std::string> ensemble_logit_paths() {
  std::vector<std::string> paths;
  for (int m = 0; m < 8; ++m) paths.push_back(ensemble_dir() + "/model" + std::to_string(m) + ".jsonl");
  return paths;
}

inline std::vector<medner::LogitFile> ensemble_logits() {
  std::vector<medner::LogitFile> files;
  for (const auto& p : ensemble_logit_paths()) files.push_back(medner::load_logit_file(p));
  return files;
}

inline medner::Json ensemble_expected() {
  std::ifstream in(ensemble_dir() + "/expected.json");
  return medner::Json::parse(in);
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("medner-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& name = "") const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace fixture
