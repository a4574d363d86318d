#include "fedopt/problems/problem.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fedopt {

Vec Problem::full_grad(const Vec& x) const {
  RunningMean mean(dim());
  for (std::size_t m = 0; m < num_clients(); ++m) mean.add(client_full_grad(m, x));
  return mean.value();
}

double Problem::scalar_grad(double x, RngStream& rng) const {
  if (dim() != 1) throw std::logic_error(kind() + ": scalar_grad needs a one-dimensional problem");
  return client_grad(0, Vec{x}, rng)[0];
}

double Problem::scalar_full_grad(double x) const {
  if (dim() != 1) throw std::logic_error(kind() + ": scalar_full_grad needs a one-dimensional problem");
  return full_grad(Vec{x})[0];
}

std::size_t Dataset::num_samples() const {
  std::size_t n = 0;
  for (const auto& f : features) n += f.rows();
  return n;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + path);
  const std::size_t p = data.num_features();
  out << "client_id";
  for (std::size_t j = 0; j < p; ++j) out << ",f" << j;
  out << ",label\n";
  char buf[32];
  for (std::size_t m = 0; m < data.num_clients(); ++m) {
    const Mat& a = data.features[m];
    for (std::size_t i = 0; i < a.rows(); ++i) {
      out << m;
      for (std::size_t j = 0; j < p; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", a(i, j));
        out << ',' << buf;
      }
      std::snprintf(buf, sizeof buf, "%.17g", data.labels[m][i]);
      out << ',' << buf << '\n';
    }
  }
  if (!out) throw std::runtime_error("write_dataset_csv: write failed for " + path);
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_dataset_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_dataset_csv: empty file " + path);
  std::size_t cols = 1;
  for (char ch : line) cols += ch == ',';
  if (cols < 3) throw std::runtime_error("read_dataset_csv: header needs client_id, features and label");
  const std::size_t p = cols - 2;

  std::vector<std::vector<double>> feats;
  std::vector<std::vector<double>> labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != cols) {
      throw std::runtime_error("read_dataset_csv: line " + std::to_string(lineno) + " has " +
                               std::to_string(row.size()) + " fields, expected " + std::to_string(cols));
    }
    const auto m = static_cast<std::size_t>(row[0]);
    if (m >= feats.size()) {
      feats.resize(m + 1);
      labels.resize(m + 1);
    }
    feats[m].insert(feats[m].end(), row.begin() + 1, row.end() - 1);
    labels[m].push_back(row.back());
  }
  Dataset data;
  for (std::size_t m = 0; m < feats.size(); ++m) {
    if (labels[m].empty()) throw std::runtime_error("read_dataset_csv: client " + std::to_string(m) + " has no rows");
    data.features.emplace_back(labels[m].size(), p, std::move(feats[m]));
    data.labels.emplace_back(std::move(labels[m]));
  }
  return data;
}

}  // namespace fedopt
