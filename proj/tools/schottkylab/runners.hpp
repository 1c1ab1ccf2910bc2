#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "manifest.hpp"

namespace schottkylab {

struct RunContext {
  std::filesystem::path out_dir = ".";
  bool has_seed = false;
  std::uint64_t seed = 0;
  bool has_tol = false;
  double tol = 0.0;
  int threads = 0;  // accepted for forward compatibility; pipelines are serial
};

// Executes `command` ("group.sub") with inputs from the manifest and writes
// the report files under ctx.out_dir.  Returns the process exit status:
// 0 every threshold passed, 1 a threshold failed (the criterion is printed).
// Validation problems throw UsageError; the caller maps them to status 2.
int run_command(const std::string& command, Manifest& m, const RunContext& ctx);

// All known command ids, for help text and the dispatch test.
const std::vector<std::string>& command_ids();

}  // namespace schottkylab
