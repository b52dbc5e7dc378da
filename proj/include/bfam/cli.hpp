#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace bfam::cli {

// Flat key=value run configuration. '#' starts a comment; unknown keys are
// hard errors so a typo in b or A cannot silently invalidate a run.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> load_config(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  std::string config_path;
  std::string out_dir;
  unsigned seed = 0;
  std::string version;
  std::map<std::string, std::string> settings;  // resolved grid/scheme echo
  std::vector<std::string> outputs;

  void write(const std::filesystem::path& path) const;
};

// Entry point behind the binary. Exit codes: 0 success, 1 criterion failure,
// 2 usage or configuration error.
int dispatch(const std::vector<std::string>& args);

}  // namespace bfam::cli
