#include "schottky/report.hpp"

#include <cstdio>
#include <cstring>
#include <sstream>

namespace schottky {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string format_complex(cdouble z) {
  std::string out = format_double(z.real());
  out += (z.imag() < 0.0 || std::signbit(z.imag())) ? "-" : "+";
  out += format_double(std::abs(z.imag()));
  out += "i";
  return out;
}

void ResidualReport::record(double residual) {
  max_residual = std::max(max_residual, residual);
  mean_residual = (mean_residual * samples + residual) / (samples + 1);
  samples += 1;
}

std::string ResidualReport::to_text() const {
  std::ostringstream os;
  os << "criterion: " << criterion << "\n"
     << "samples: " << samples << "\n"
     << "skipped: " << skipped << "\n"
     << "max_residual: " << format_double(max_residual) << "\n"
     << "mean_residual: " << format_double(mean_residual) << "\n"
     << "normalization: " << format_double(normalization) << "\n"
     << "tol: " << format_double(tol_used) << "\n"
     << "seed: " << seed << "\n";
  for (const auto& [key, value] : details) os << key << ": " << value << "\n";
  os << "verdict: " << (pass() ? "pass" : "fail") << "\n";
  return os.str();
}

std::string ResidualReport::to_json() const {
  std::ostringstream os;
  os << "{\n"
     << "  \"criterion\": \"" << criterion << "\",\n"
     << "  \"samples\": " << samples << ",\n"
     << "  \"skipped\": " << skipped << ",\n"
     << "  \"max_residual\": " << format_double(max_residual) << ",\n"
     << "  \"mean_residual\": " << format_double(mean_residual) << ",\n"
     << "  \"normalization\": " << format_double(normalization) << ",\n"
     << "  \"tol\": " << format_double(tol_used) << ",\n"
     << "  \"seed\": " << seed << ",\n"
     << "  \"details\": {";
  bool first = true;
  for (const auto& [key, value] : details) {
    os << (first ? "\n" : ",\n") << "    \"" << key << "\": \"" << value << "\"";
    first = false;
  }
  os << (first ? "" : "\n  ") << "},\n"
     << "  \"verdict\": \"" << (pass() ? "pass" : "fail") << "\"\n"
     << "}\n";
  return os.str();
}

std::uint64_t hash_doubles(const double* data, std::size_t count) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &data[i], sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace schottky
