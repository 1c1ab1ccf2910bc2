#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "schottky/types.hpp"

namespace schottkylab {

using schottky::cdouble;

// Line-oriented run description: `[section]` headers, `key = value` entries,
// blank lines and # comments ignored.  Keys are consumed as the runner wires
// its inputs; anything left over at the end is an unknown key and the run is
// rejected, so typos cannot silently fall back to defaults.
class Manifest {
 public:
  static Manifest parse_text(const std::string& text);
  static Manifest parse_file(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;
  // Consume a required key (UsageError when absent) or an optional one.
  std::string take(const std::string& section, const std::string& key);
  std::string take_or(const std::string& section, const std::string& key,
                      const std::string& fallback);
  // UsageError listing every unconsumed [section] key.
  void assert_consumed() const;

  // Directory of the manifest file; relative file references resolve here.
  std::filesystem::path base_dir() const { return base_dir_; }
  bool empty() const { return entries_.empty(); }

 private:
  struct Entry {
    std::string value;
    bool consumed = false;
  };
  std::map<std::string, std::map<std::string, Entry>> entries_;
  std::filesystem::path base_dir_ = ".";
};

// Value readers; every failure names the offending key.
long to_int(const std::string& value, const std::string& key);
double to_double(const std::string& value, const std::string& key);
// Complex scalars use the same text form the reports emit: `re`, `imi` or
// `re+imi`, e.g. 0.3+1.1i, -2i, 1.5.
cdouble to_complex(const std::string& value, const std::string& key);
std::vector<cdouble> to_complex_list(const std::string& value, const std::string& key);
std::vector<double> to_double_list(const std::string& value, const std::string& key);

}  // namespace schottkylab
