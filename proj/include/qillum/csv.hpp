#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qillum {

/// Deterministic CSV emission: '#'-prefixed key=value comment lines,
/// one header row, then data. Doubles are printed with %.12g so a rerun
/// with the same configuration produces identical bytes.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_)
      throw std::runtime_error("cannot open output file: " + path);
  }

  void comment(const std::string& key, const std::string& value) {
    out_ << "# " << key << "=" << value << "\n";
  }
  void comment(const std::string& key, double value) {
    comment(key, format(value));
  }
  void comment(const std::string& key, std::uint64_t value) {
    comment(key, std::to_string(value));
  }

  void header(const std::vector<std::string>& columns) { row_strings(columns); }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ",";
      out_ << cells[i];
    }
    out_ << "\n";
  }

  void row(std::uint64_t index, const std::vector<double>& values) {
    out_ << index;
    for (double v : values) out_ << "," << format(v);
    out_ << "\n";
  }

  void close() {
    out_.flush();
    if (!out_) throw std::runtime_error("error writing output file");
    out_.close();
  }

  static std::string format(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
  }

 private:
  std::ofstream out_;
};

}  // namespace qillum
