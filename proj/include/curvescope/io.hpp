#ifndef CURVESCOPE_IO_HPP
#define CURVESCOPE_IO_HPP

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "curvescope/errors.hpp"

namespace curvescope::io {

// All binary formats are little-endian. Readers validate a short magic
// prefix before touching the payload.

class BinaryWriter {
public:
  explicit BinaryWriter(const std::string& path);
  void magic(const char* tag);  // writes tag bytes verbatim
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  void str(const std::string& s);  // u32 length + bytes
  void bytes(const void* data, std::size_t n);
  void close();

private:
  std::ofstream out_;
  std::string path_;
};

class BinaryReader {
public:
  explicit BinaryReader(const std::string& path);
  bool try_magic(const char* tag);  // peeks; consumes only on match
  void expect_magic(const char* tag);
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::string str();
  void bytes(void* data, std::size_t n);
  bool at_eof();
  const std::string& path() const { return path_; }

private:
  std::ifstream in_;
  std::string path_;
};

bool file_exists(const std::string& path);

// Splits a line on tabs. Lone '\r' at end of line is stripped.
std::vector<std::string> split_tsv(const std::string& line);
std::vector<std::string> split_ws(const std::string& s);

// True when both files hold identical bytes.
bool files_identical(const std::string& a, const std::string& b);

}  // namespace curvescope::io

#endif
