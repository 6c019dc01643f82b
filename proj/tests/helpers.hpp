#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <unistd.h>

#include "tgcomp/tgcomp.hpp"

namespace th {

inline tgc::ModelSpec small_spec(tgc::Variant v, tgc::Fusion f = tgc::Fusion::Concat,
                                 tgc::Dims d = {4, 4, 4, 4, 4}, tgc::Task task = tgc::Task::Classify) {
  tgc::ModelSpec s;
  s.variant = v;
  s.fusion = f;
  s.dims = d;
  s.task = task;
  s.num_classes = 3;
  s.num_words = 9;
  s.num_tags = 6;
  return s;
}

// Model with every parameter drawn from uniform(-scale, scale).
inline tgc::ModelParams random_model(const tgc::ModelSpec& s, std::uint64_t seed, double scale = 0.8) {
  std::mt19937_64 rng(seed);
  tgc::ModelParams m(s, rng);
  std::uniform_real_distribution<double> u(-scale, scale);
  m.for_each([&](tgc::PId, tgc::Param& p) {
    for (double& v : p.value.data) v = u(rng);
  });
  return m;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("tgcomp_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return file(name);
  }
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace th
