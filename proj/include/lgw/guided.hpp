#pragma once

#include <span>
#include <string>
#include <vector>

#include "lgw/core.hpp"
#include "lgw/geometry.hpp"
#include "lgw/labeler.hpp"
#include "lgw/learners.hpp"
#include "lgw/rng.hpp"

namespace lgw {

struct DimStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population
};

std::vector<DimStats> dim_stats(const Matrix& x);

struct EditValueOptions {
  double delta = 0.5;
  double epsilon = 1e-6;
};

// threshold -/+ max(delta * std, epsilon) for a yes/no branch, clamped to
// [min - std, max + std] unless the clamp would leave the branch.
double edit_value_for_branch(double threshold, Branch branch, const DimStats& stats,
                             const EditValueOptions& options = {});

struct EditStep {
  std::size_t node = 0;
  std::size_t dim = 0;
  double old_value = 0.0;
  double new_value = 0.0;
  double threshold = 0.0;
  Branch branch = Branch::kYes;
};

struct GuidedEdit {
  int from_class = 0;
  int to_class = 0;
  Vector seed;
  Vector final;
  TreePath path;                    // root path to the chosen target leaf
  std::vector<EditStep> edits;      // only the nodes whose branch had to change
  std::vector<Vector> intermediates;  // vector after each edit
  int seed_prediction = 0;
  int final_prediction = 0;
  std::vector<std::string> warnings;
};

// Fits one tree over labeled latents and walks vectors onto target leaves.
class GuidedTraverser {
 public:
  GuidedTraverser(const Matrix& x, std::span<const int> labels, const TreeParams& params, Seed seed,
                  const EditValueOptions& options = {});

  const DecisionTree& tree() const { return tree_; }
  const std::vector<DimStats>& stats() const { return stats_; }

  // Among the shortest to_class leaves, the one whose cell center is
  // nearest the seed; each node on its root path is then forced onto the
  // required branch, keeping earlier constraints on the same dim.
  GuidedEdit traverse(std::span<const double> z, int from_class, int to_class) const;

 private:
  DecisionTree tree_;
  std::vector<DimStats> stats_;
  EditValueOptions options_;
};

GuidedEdit guided_traverse(const Matrix& x, std::span<const int> labels, std::span<const double> seed_vector,
                           int from_class, int to_class, const TreeParams& params, Seed seed);

// Applies the logged edits to the seed vector.
Vector replay(std::span<const double> seed_vector, std::span<const EditStep> edits);

struct FlipResult {
  double ratio = 0.0;             // labeler hits / seeds
  std::size_t seeds = 0;
  std::size_t labeler_hits = 0;
  std::size_t failures = 0;       // traversals that threw
  std::size_t tree_hits = 0;      // successful edits the tree predicts as to_class
  std::vector<GuidedEdit> edits;  // per seed; empty `final` on failure
};

// Runs every seed row through the traverser; a seed counts when `labeler`
// assigns `to_class` on `factor` to the final vector.
FlipResult flip_ratio(const GuidedTraverser& traverser, const Matrix& seeds, int from_class, int to_class,
                      const Labeler& labeler, std::size_t factor);

std::string to_string(Branch branch);

// JSONL: a header line with the interpretation, then one line per edit.
std::string render_edit_log(const GuidedEdit& edit);
std::vector<EditStep> parse_edit_log(const std::string& text);

}  // namespace lgw
