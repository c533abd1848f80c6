#include "fastbeam/dataset_io.hpp"

#include <sstream>
#include <stdexcept>

#include "fastbeam/io_util.hpp"

namespace fastbeam {

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ostringstream out;
  out << "fastbeam-dataset v1\n";
  out << "nt " << ds.nt << "\n";
  out << "k " << ds.k_users << "\n";
  out << "family " << ds.family << "\n";
  out << "seed " << ds.seed << "\n";
  out << "power " << g17(ds.power_budget) << "\n";
  out << "noise";
  for (double v : ds.noise) out << " " << g17(v);
  out << "\n";
  out << "normalization per_sample_max_col\n";
  out << "labeled " << (ds.labeled() ? 1 : 0) << "\n";
  out << "count " << ds.samples.size() << "\n";
  for (const auto& s : ds.samples) {
    out << "sample " << g17(s.norm) << " " << s.family << "\n";
    for (int c = 0; c < s.h.cols; ++c) {
      for (int r = 0; r < s.h.rows; ++r) {
        out << g17(s.h(r, c).real()) << " " << g17(s.h(r, c).imag());
        out << (r + 1 == s.h.rows && c + 1 == s.h.cols ? "\n" : " ");
      }
    }
    if (!s.label.empty()) {
      out << "label";
      for (double v : s.label) out << " " << g17(v);
      out << "\n";
    }
  }
  write_text_file(path, out.str());
}

Dataset load_dataset(const std::string& path) {
  std::istringstream in(read_text_file(path));
  expect_magic(in, "fastbeam-dataset v1");
  Dataset ds;
  std::string key;
  size_t count = 0;
  int labeled = 0;
  in >> key >> ds.nt;
  if (key != "nt") throw std::runtime_error("dataset file: expected nt");
  in >> key >> ds.k_users;
  if (key != "k") throw std::runtime_error("dataset file: expected k");
  in >> key >> ds.family;
  in >> key >> ds.seed;
  in >> key >> ds.power_budget;
  ds.noise.assign(ds.k_users, 0.0);
  in >> key;
  if (key != "noise") throw std::runtime_error("dataset file: expected noise");
  for (auto& v : ds.noise) in >> v;
  std::string norm_tag;
  in >> key >> norm_tag;
  if (key != "normalization" || norm_tag != "per_sample_max_col")
    throw std::runtime_error("dataset file: unsupported normalization");
  in >> key >> labeled;
  in >> key >> count;
  if (key != "count") throw std::runtime_error("dataset file: expected count");
  ds.samples.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    Sample s;
    in >> key >> s.norm >> s.family;
    if (key != "sample") throw std::runtime_error("dataset file: expected sample record");
    s.h = CMat(ds.nt, ds.k_users);
    for (int c = 0; c < ds.k_users; ++c) {
      for (int r = 0; r < ds.nt; ++r) {
        double re = 0.0, im = 0.0;
        in >> re >> im;
        s.h(r, c) = cplx(re, im);
      }
    }
    if (labeled) {
      in >> key;
      if (key != "label") throw std::runtime_error("dataset file: expected label record");
      s.label.assign(ds.k_users, 0.0);
      for (auto& v : s.label) in >> v;
    }
    ds.samples.push_back(std::move(s));
  }
  if (!in) throw std::runtime_error("dataset file: truncated");
  return ds;
}

}  // namespace fastbeam
