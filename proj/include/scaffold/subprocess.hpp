#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scaffold {

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  /// Terminating signal, if the child was killed by one.
  std::optional<int> signal;
  std::string out;
  std::string err;
  long duration_ms = 0;
};

/// Runs argv[0] (PATH lookup) in its own process group with the given stdin,
/// capturing stdout and stderr. The group is killed when `timeout` expires.
ProcessResult run_process(const std::vector<std::string>& argv, std::string_view input,
                          const std::filesystem::path& cwd, std::chrono::milliseconds timeout);

/// Resolves a program name against PATH; nullopt if nothing executable.
std::optional<std::filesystem::path> find_executable(std::string_view name);

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace scaffold
