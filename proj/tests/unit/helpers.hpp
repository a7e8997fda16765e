#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lgw/core.hpp"

namespace testing {

// Fresh directory under the build tree, removed and recreated per call.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::current_path() / "scratch" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Single-factor dataset; `values[i]` is the value index of row i (-1 = unannotated).
inline lgw::LatentDataset one_factor(const std::vector<std::vector<double>>& rows, const std::vector<int>& values,
                                     std::vector<std::string> vocab = {"a", "b"}) {
  lgw::FactorSchema schema({{"F", std::move(vocab)}});
  std::vector<std::vector<lgw::Label>> labels;
  for (int v : values) labels.push_back({v < 0 ? lgw::Label::none() : lgw::Label::categorical(v)});
  return lgw::LatentDataset::build(schema, lgw::Matrix::from_rows(rows), std::move(labels));
}

}  // namespace testing
