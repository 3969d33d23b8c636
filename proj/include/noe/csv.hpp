#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "noe/errors.hpp"

namespace noe {

/// Shortest 17-significant-digit form; round-trips IEEE doubles exactly.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw Error("cannot open '" + path + "' for writing");
  }
  void header(const std::vector<std::string>& cols) {
    for (size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
    out_ << "\n";
  }
  void row(const std::vector<double>& vals) {
    for (size_t i = 0; i < vals.size(); ++i) out_ << (i ? "," : "") << fmt17(vals[i]);
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

}  // namespace noe
