#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include "lgw/core.hpp"
#include "lgw/learners.hpp"
#include "lgw/report.hpp"
#include "lgw/rng.hpp"

namespace lgw {

// Equal-width bins over [min, max] of one latent dimension.
struct DimBins {
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 20;
  std::vector<double> edges;  // count + 1 entries, strictly increasing unless constant
  bool constant = false;

  static DimBins fit(std::span<const double> values, std::size_t count = 20);
  // Out-of-range values clamp to the end bins.
  std::size_t bin_of(double value) const;
};

// Per-dimension bins fitted on a full dataset.
class BinGrid {
 public:
  static BinGrid fit(const Matrix& x, std::size_t bins = 20);

  const DimBins& dim(std::size_t d) const { return dims_.at(d); }
  std::size_t size() const { return dims_.size(); }

 private:
  std::vector<DimBins> dims_;
};

// Plug-in entropy of the bin histogram, in bits. Constant dims give 0.
double entropy_binned(std::span<const double> values, const DimBins& bins);

struct MutualInformation {
  Matrix mi;                            // dims x included factors, bits, clamped at 0
  std::vector<std::size_t> factors;     // schema indices of included factors
  std::vector<double> entropy;          // H(z_d) over the full dataset
  std::vector<double> factor_entropy;   // H(v_k) per included factor
  std::vector<std::string> warnings;    // skipped factors
};

// MI(z_d, v_k) = H(z_d) - sum_c P(v_k = c) H(z_d | v_k = c), all on the
// global bin grid. Factors with fewer than two populated values are skipped.
MutualInformation mutual_information_matrix(const LatentDataset& ds, std::size_t bins = 20);

struct MigResult {
  double value = 0.0;
  std::vector<double> gaps;  // per included factor
};

// Mean over factors of (largest - second largest) MI across dimensions.
// `normalized` divides each gap by H(v_k).
MigResult mig(const MutualInformation& mi, bool normalized = false);
double mig(const LatentDataset& ds, std::size_t bins = 20, bool normalized = false);

struct ModularityResult {
  double value = 0.0;
  std::vector<double> per_dim;
};

// Per dimension: drop the factor with the largest MI, score 1 - population
// variance of the rest. By default MI rows are first divided by the row max;
// `raw_variance` uses the MI values as they are.
ModularityResult modularity(const MutualInformation& mi, bool raw_variance = false);

struct ZDiffConfig {
  std::size_t batch = 64;
  std::size_t train_points_per_factor = 200;
  std::size_t test_points_per_factor = 100;
  LinearParams linear;
};

struct ZDiffResult {
  double accuracy = 0.0;  // percent
  bool degenerate = false;
  std::size_t factors_used = 0;
};

// Points are mean |z1 - z2| over `batch` pairs sharing one value of a
// factor, labeled by that factor. Training points come from `train`, scored
// points from `test`.
ZDiffResult z_diff_accuracy(const LatentDataset& ds, std::span<const std::size_t> train,
                            std::span<const std::size_t> test, const ZDiffConfig& config, Seed seed);

struct ZMinVarConfig {
  std::size_t samples = 64;
  std::size_t repeats = 50;
};

struct ZMinVarResult {
  double score = 0.0;
  Matrix counts;                          // dims x factors, train argmin votes
  std::vector<int> golden;                // per dim: factor index with the most votes, -1 if none
  std::vector<double> per_factor;         // test matches / repeats
  std::vector<std::size_t> factors;       // schema indices scored
};

// Per dimension, the factor with the most votes (ties to the lowest
// factor); -1 for a dimension that never won a vote.
std::vector<int> golden_table(const Matrix& counts);

// Argmin-variance dimension voting on normalized latents; the score is the
// fraction of test votes that the train golden table maps back to the factor.
ZMinVarResult z_min_var_score(const LatentDataset& ds, std::span<const std::size_t> train,
                              std::span<const std::size_t> test, const ZMinVarConfig& config, Seed seed);

struct Importance {
  Matrix r;                           // included factors x dims, rows sum to 1
  std::vector<std::size_t> factors;
  std::vector<std::string> warnings;
};

// One random forest per factor over the `rows` subset.
Importance dci_importance(const LatentDataset& ds, std::span<const std::size_t> rows,
                          const ForestParams& params, Seed seed);

double disentanglement_score(const Matrix& r);
double completeness_score(const Matrix& r);

struct InformativenessResult {
  double error = 0.0;                 // mean test error over factors
  std::vector<double> accuracy;       // per included factor
  std::vector<std::size_t> factors;
  std::vector<std::string> warnings;
};

InformativenessResult informativeness_score(const LatentDataset& ds, std::span<const std::size_t> train,
                                            std::span<const std::size_t> test, const LinearParams& params,
                                            Seed seed);

struct MetricsConfig {
  std::size_t bins = 20;
  double test_fraction = 0.2;
  ZDiffConfig z_diff;
  ZMinVarConfig z_min_var;
  // DCI forests search every dimension at each split. With sqrt(dim)
  // candidates, splits on noise dims soak up a large share of the
  // importance whenever many dims carry no factor.
  ForestParams forest{64, TreeParams{0, 1, kAllFeatures}};
  LinearParams linear;
  bool raw_variance = false;
  bool normalized_mig = false;
  // Empty = all of: z_diff, z_min_var, mig, modularity, dci, informativeness.
  std::set<std::string> selected;
};

const std::vector<std::string>& metric_names();

// All metrics on one shared train/test split. Per-metric failures become
// report warnings.
MetricReport run_all_metrics(const LatentDataset& ds, const MetricsConfig& config, Seed seed);

}  // namespace lgw
