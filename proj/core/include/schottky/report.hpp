#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "schottky/types.hpp"

namespace schottky {

// Aggregated outcome of one residual criterion over a sample set.  The text
// and JSON renderings are deterministic: fixed key order, %.17g numbers, no
// timestamps, so identical inputs produce byte-identical reports.
struct ResidualReport {
  std::string criterion;
  int samples = 0;
  int skipped = 0;      // points discarded by the near-divisor guard
  double max_residual = 0.0;
  double mean_residual = 0.0;
  double normalization = 0.0;  // typical magnitude of the terms being cancelled
  double tol_used = 0.0;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> details;  // extra named values, pre-formatted

  bool pass() const { return samples > 0 && max_residual <= tol_used; }
  void record(double residual);  // updates max/mean/samples

  std::string to_text() const;
  std::string to_json() const;
};

// FNV-1a over the listed doubles, used to stamp reports with their inputs.
std::uint64_t hash_doubles(const double* data, std::size_t count);

}  // namespace schottky
