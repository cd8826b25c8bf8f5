#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "qgd/experiment.hpp"

namespace qgd::io {

// CSV writer with a fixed header; doubles at 17 significant digits.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(long v);
  CsvWriter& operator<<(int v) { return *this << static_cast<long>(v); }
  CsvWriter& operator<<(bool v);
  CsvWriter& operator<<(const std::string& v);
  void end_row();
  void close();

 private:
  void sep();
  std::FILE* f_ = nullptr;
  std::string path_;
  std::size_t columns_ = 0;
  std::size_t in_row_ = 0;
};

/// Writes `text` to path via a temporary file and rename.
void write_atomic(const std::string& path, const std::string& text);

json manifest_json(const RunManifest& m);

}  // namespace qgd::io
