#include <openssl/evp.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "io.hpp"

namespace qgd {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 init failed");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

namespace io {

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()) {
  f_ = std::fopen(path.c_str(), "wb");
  if (!f_) throw std::runtime_error("cannot write '" + path + "': " + std::strerror(errno));
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::fputs(header[i].c_str(), f_);
    std::fputc(i + 1 == header.size() ? '\n' : ',', f_);
  }
}

CsvWriter::~CsvWriter() {
  if (f_) std::fclose(f_);
}

void CsvWriter::sep() {
  if (in_row_ > 0) std::fputc(',', f_);
  ++in_row_;
}

CsvWriter& CsvWriter::operator<<(double v) {
  sep();
  std::fputs(format_double(v).c_str(), f_);
  return *this;
}

CsvWriter& CsvWriter::operator<<(long v) {
  sep();
  std::fprintf(f_, "%ld", v);
  return *this;
}

CsvWriter& CsvWriter::operator<<(bool v) {
  sep();
  std::fputs(v ? "true" : "false", f_);
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& v) {
  sep();
  if (v.find_first_of(",\"\n") == std::string::npos) {
    std::fputs(v.c_str(), f_);
  } else {
    std::fputc('"', f_);
    for (char c : v) {
      if (c == '"') std::fputc('"', f_);
      std::fputc(c, f_);
    }
    std::fputc('"', f_);
  }
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) {
    throw std::logic_error(path_ + ": row has " + std::to_string(in_row_) + " fields, header has " +
                           std::to_string(columns_));
  }
  std::fputc('\n', f_);
  in_row_ = 0;
}

void CsvWriter::close() {
  if (f_ && std::fclose(f_) != 0) {
    f_ = nullptr;
    throw std::runtime_error("error closing '" + path_ + "'");
  }
  f_ = nullptr;
}

void write_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("error writing '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

json manifest_json(const RunManifest& m) {
  json j;
  j["tool"] = "qgd";
  j["status"] = m.status;
  j["config"] = m.config;
  json files = json::array();
  for (const Artifact& a : m.artifacts) {
    files.push_back({{"file", a.file}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  }
  j["artifacts"] = files;
  j["invariants"] = m.invariants;
  j["warnings"] = m.warnings;
  j["errors"] = m.errors;
  j["wall_time_s"] = m.wall_time;
  return j;
}

}  // namespace io
}  // namespace qgd
