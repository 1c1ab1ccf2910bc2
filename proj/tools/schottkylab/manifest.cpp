#include "manifest.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

using schottky::UsageError;

namespace schottkylab {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

Manifest Manifest::parse_text(const std::string& text) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) {
        throw UsageError("manifest line " + std::to_string(lineno) +
                         ": malformed section header '" + t + "'");
      }
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError("manifest line " + std::to_string(lineno) +
                       ": expected 'key = value', got '" + t + "'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw UsageError("manifest line " + std::to_string(lineno) + ": empty key");
    }
    if (section.empty()) {
      throw UsageError("manifest line " + std::to_string(lineno) + ": key '" + key +
                       "' appears before any [section] header");
    }
    auto& sec = m.entries_[section];
    if (sec.count(key)) {
      throw UsageError("manifest line " + std::to_string(lineno) + ": duplicate key '" +
                       key + "' in [" + section + "]");
    }
    sec[key] = Entry{value, false};
  }
  return m;
}

Manifest Manifest::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open manifest file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  Manifest m = parse_text(buf.str());
  m.base_dir_ = path.has_parent_path() ? path.parent_path() : ".";
  return m;
}

bool Manifest::has(const std::string& section, const std::string& key) const {
  auto sit = entries_.find(section);
  return sit != entries_.end() && sit->second.count(key) > 0;
}

std::string Manifest::take(const std::string& section, const std::string& key) {
  auto sit = entries_.find(section);
  if (sit == entries_.end() || !sit->second.count(key)) {
    throw UsageError("manifest is missing required key '" + key + "' in [" + section + "]");
  }
  Entry& e = sit->second[key];
  e.consumed = true;
  return e.value;
}

std::string Manifest::take_or(const std::string& section, const std::string& key,
                              const std::string& fallback) {
  return has(section, key) ? take(section, key) : fallback;
}

void Manifest::assert_consumed() const {
  std::string leftovers;
  for (const auto& [section, keys] : entries_) {
    for (const auto& [key, entry] : keys) {
      if (!entry.consumed) leftovers += " [" + section + "] " + key;
    }
  }
  if (!leftovers.empty()) {
    throw UsageError("unknown manifest keys:" + leftovers);
  }
}

long to_int(const std::string& value, const std::string& key) {
  std::size_t used = 0;
  long out = 0;
  try {
    out = std::stol(value, &used);
  } catch (const std::exception&) {
    throw UsageError("key '" + key + "': '" + value + "' is not an integer");
  }
  if (used != value.size()) {
    throw UsageError("key '" + key + "': '" + value + "' is not an integer");
  }
  return out;
}

double to_double(const std::string& value, const std::string& key) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    throw UsageError("key '" + key + "': '" + value + "' is not a number");
  }
  if (used != value.size()) {
    throw UsageError("key '" + key + "': '" + value + "' is not a number");
  }
  return out;
}

namespace {

cdouble parse_complex_token(const std::string& tok, const std::string& key) {
  const auto bad = [&]() -> UsageError {
    return UsageError("key '" + key + "': '" + tok + "' is not a complex number " +
                      "(expected forms: 1.5, -2i, 0.3+1.1i)");
  };
  if (tok.empty()) throw bad();
  if (tok.back() != 'i') {
    return cdouble(to_double(tok, key), 0.0);
  }
  const std::string body = tok.substr(0, tok.size() - 1);
  if (body.empty() || body == "+" || body == "-") {
    throw bad();
  }
  // split at the last +/- that is not an exponent sign and not leading
  std::size_t split = std::string::npos;
  for (std::size_t i = body.size(); i-- > 1;) {
    const char c = body[i];
    if ((c == '+' || c == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
      split = i;
      break;
    }
  }
  if (split == std::string::npos) {
    return cdouble(0.0, to_double(body, key));
  }
  const double re = to_double(body.substr(0, split), key);
  const double im = to_double(body.substr(split), key);
  return cdouble(re, im);
}

std::vector<std::string> split_ws(const std::string& value) {
  std::vector<std::string> out;
  std::istringstream in(value);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

cdouble to_complex(const std::string& value, const std::string& key) {
  return parse_complex_token(value, key);
}

std::vector<cdouble> to_complex_list(const std::string& value, const std::string& key) {
  std::vector<cdouble> out;
  for (const std::string& tok : split_ws(value)) {
    out.push_back(parse_complex_token(tok, key));
  }
  if (out.empty()) throw UsageError("key '" + key + "': empty list");
  return out;
}

std::vector<double> to_double_list(const std::string& value, const std::string& key) {
  std::vector<double> out;
  for (const std::string& tok : split_ws(value)) {
    out.push_back(to_double(tok, key));
  }
  if (out.empty()) throw UsageError("key '" + key + "': empty list");
  return out;
}

}  // namespace schottkylab
