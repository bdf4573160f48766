#pragma once

// Minimal CSV emission with reproducibility stamps. Every file starts with
// '#' comment lines carrying the run stamp (seed, config digest, tool
// version) so a result can always be traced back to the exact invocation.
// Numeric formatting is fixed (shortest round-trip via %.17g for doubles),
// which keeps output byte-identical across runs with the same seed.

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "powlab/rng.hpp"

namespace powlab {

inline std::string csv_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string csv_int(long long v) { return std::to_string(v); }

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void comment(const std::string& text) { os_ << "# " << text << "\n"; }

  void stamp(const RunStamp& s) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "seed=%llu config_digest=%016llx tool_version=%s",
                  static_cast<unsigned long long>(s.seed),
                  static_cast<unsigned long long>(s.config_digest),
                  s.tool_version.c_str());
    comment(buf);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << ',';
      os_ << cells[i];
    }
    os_ << "\n";
  }

 private:
  std::ostream& os_;
};

}  // namespace powlab
