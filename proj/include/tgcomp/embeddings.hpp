#pragma once

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tgcomp/corpus.hpp"
#include "tgcomp/tensor.hpp"
#include "tgcomp/vocab.hpp"

namespace tgc {

inline constexpr double kInitRange = 0.05;

/// |V| x dim table with entries drawn from uniform(-0.05, 0.05).
inline Tensor uniform_table(std::size_t rows, std::size_t dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-kInitRange, kInitRange);
  Tensor t = Tensor::matrix(rows, dim);
  for (double& v : t.data) v = u(rng);
  return t;
}

struct EmbeddingLoad {
  Tensor table;
  std::size_t found = 0;
};

/// Reads a GloVe-style text file (token followed by `dim` reals per line, no
/// header). Rows for words absent from the file, and the unknown row, keep
/// their uniform(-0.05, 0.05) initialization.
inline EmbeddingLoad load_embeddings(const std::string& path, const Vocab& vocab,
                                     std::size_t dim, std::mt19937_64& rng) {
  EmbeddingLoad out{uniform_table(vocab.size(), dim, rng), 0};
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings " + path);
  std::string line;
  std::size_t lineno = 0;
  std::size_t file_dim = 0;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    row.clear();
    std::string field;
    while (ss >> field) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw DataError(path + ":" + std::to_string(lineno) + ": not a number: " + field);
      }
    }
    if (file_dim == 0) {
      file_dim = row.size();
      if (file_dim != dim) {
        throw DataError(path + ": vectors have dimension " + std::to_string(file_dim) +
                        ", configured dimension is " + std::to_string(dim));
      }
    }
    if (row.size() != file_dim) {
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(file_dim) + " values, got " + std::to_string(row.size()));
    }
    const int id = vocab.lookup(token);
    if (id == Vocab::kUnknown) continue;
    std::copy(row.begin(), row.end(),
              out.table.data.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(id) * dim));
    ++out.found;
  }
  return out;
}

}  // namespace tgc
