#include "curvescope/io.hpp"

#include <cstring>
#include <filesystem>

namespace curvescope::io {

BinaryWriter::BinaryWriter(const std::string& path)
    : out_(path, std::ios::binary), path_(path) {
  if (!out_) throw DataError("cannot open for writing: " + path);
}

void BinaryWriter::magic(const char* tag) { bytes(tag, std::strlen(tag)); }

void BinaryWriter::u32(std::uint32_t v) { bytes(&v, sizeof v); }
void BinaryWriter::u64(std::uint64_t v) { bytes(&v, sizeof v); }
void BinaryWriter::f32(float v) { bytes(&v, sizeof v); }
void BinaryWriter::f64(double v) { bytes(&v, sizeof v); }

void BinaryWriter::str(const std::string& s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes(s.data(), s.size());
}

void BinaryWriter::bytes(const void* data, std::size_t n) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out_) throw DataError("write failed: " + path_);
}

void BinaryWriter::close() {
  out_.close();
  if (!out_) throw DataError("close failed: " + path_);
}

BinaryReader::BinaryReader(const std::string& path)
    : in_(path, std::ios::binary), path_(path) {
  if (!in_) throw DataError("cannot open: " + path);
}

bool BinaryReader::try_magic(const char* tag) {
  const std::size_t n = std::strlen(tag);
  std::string buf(n, '\0');
  in_.read(buf.data(), static_cast<std::streamsize>(n));
  const std::streamsize got = in_.gcount();
  if (static_cast<std::size_t>(got) == n && buf == tag) return true;
  in_.clear();
  in_.seekg(0);
  return false;
}

void BinaryReader::expect_magic(const char* tag) {
  if (!try_magic(tag))
    throw DataError(path_ + ": missing magic '" + tag + "'");
}

std::uint32_t BinaryReader::u32() {
  std::uint32_t v;
  bytes(&v, sizeof v);
  return v;
}

std::uint64_t BinaryReader::u64() {
  std::uint64_t v;
  bytes(&v, sizeof v);
  return v;
}

float BinaryReader::f32() {
  float v;
  bytes(&v, sizeof v);
  return v;
}

double BinaryReader::f64() {
  double v;
  bytes(&v, sizeof v);
  return v;
}

std::string BinaryReader::str() {
  const std::uint32_t n = u32();
  std::string s(n, '\0');
  bytes(s.data(), n);
  return s;
}

void BinaryReader::bytes(void* data, std::size_t n) {
  in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n)
    throw DataError(path_ + ": truncated file");
}

bool BinaryReader::at_eof() { return in_.peek() == std::char_traits<char>::eof(); }

bool file_exists(const std::string& path) {
  std::error_code ec;
  return std::filesystem::exists(path, ec);
}

std::vector<std::string> split_tsv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  std::string s = line;
  if (!s.empty() && s.back() == '\r') s.pop_back();
  while (true) {
    const std::size_t tab = s.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, tab - start));
    start = tab + 1;
  }
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool files_identical(const std::string& a, const std::string& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  constexpr std::size_t kChunk = 1 << 16;
  std::vector<char> ba(kChunk), bb(kChunk);
  while (true) {
    fa.read(ba.data(), kChunk);
    fb.read(bb.data(), kChunk);
    if (fa.gcount() != fb.gcount()) return false;
    if (std::memcmp(ba.data(), bb.data(), static_cast<std::size_t>(fa.gcount())) != 0)
      return false;
    if (fa.gcount() == 0) return fa.eof() && fb.eof();
    if (fa.eof() || fb.eof()) return fa.eof() && fb.eof();
  }
}

}  // namespace curvescope::io
