#include "fastbeam/io_util.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace fastbeam {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void expect_magic(std::istream& in, const std::string& magic) {
  std::string line;
  if (!std::getline(in, line) || line != magic)
    throw std::runtime_error("bad file header, expected '" + magic + "'");
}

}  // namespace fastbeam
