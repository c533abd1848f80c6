#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace fastbeam {

/// Shortest exact decimal form of a double; round-trips bit-identically.
std::string g17(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// Header line check for the self-describing text containers.
void expect_magic(std::istream& in, const std::string& magic);

}  // namespace fastbeam
