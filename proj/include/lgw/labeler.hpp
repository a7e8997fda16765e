#pragma once

#include <span>
#include <string>
#include <vector>

#include "lgw/core.hpp"
#include "lgw/learners.hpp"

namespace lgw {

// Reads factor values off a latent vector. Stands in for decoding a vector
// and reading the annotation of the generated text.
class Labeler {
 public:
  virtual ~Labeler() = default;

  virtual const FactorSchema& schema() const = 0;

  // One class per schema factor (the value index for categorical factors);
  // -1 where the labeler abstains.
  virtual std::vector<int> label(std::span<const double> z) const = 0;

  int label_factor(std::span<const double> z, std::size_t factor) const {
    return label(z).at(factor);
  }
};

// Single-factor labeler over a fitted tree. The factor's vocabulary is the
// tree's class labels rendered as strings; label() returns the index of the
// predicted class in DecisionTree::classes.
class TreeLabeler : public Labeler {
 public:
  TreeLabeler(const DecisionTree& tree, std::string factor_name = "class");

  const FactorSchema& schema() const override { return schema_; }
  std::vector<int> label(std::span<const double> z) const override;

 private:
  const DecisionTree& tree_;
  FactorSchema schema_;
};

}  // namespace lgw
