#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lgw/core.hpp"
#include "lgw/labeler.hpp"
#include "lgw/rng.hpp"

namespace lgw {

struct CvaeShape {
  std::vector<std::size_t> groups;  // vocabulary size per factor; x is their one-hots concatenated
  std::size_t r_dim = 0;
  std::size_t hidden = 16;
  std::size_t latent = 32;

  std::size_t x_dim() const;
};

// Encoder: h = tanh(We [x; r] + be), mu = Wm h + bm, log sigma = Ws h + bs.
// Prior:   mu_p = Wpm r + bpm, log sigma_p = Wps r + bps.
// Decoder: logits = Wd [z; r] + bd, one softmax per factor group.
// Biases are stored as n x 1 matrices.
struct CvaeModel {
  CvaeShape shape;
  Matrix enc_w, enc_b;
  Matrix mu_w, mu_b;
  Matrix logsig_w, logsig_b;
  Matrix prior_mu_w, prior_mu_b;
  Matrix prior_logsig_w, prior_logsig_b;
  Matrix dec_w, dec_b;

  // Weights ~ N(0, scale^2), biases 0.
  static CvaeModel init(const CvaeShape& shape, Seed seed, double scale = 0.1);
  // Same shapes, all zeros.
  static CvaeModel zeros_like(const CvaeModel& other);

  std::vector<std::pair<std::string, Matrix*>> tensors();
  std::vector<std::pair<std::string, const Matrix*>> tensors() const;
  std::size_t parameter_count() const;
};

struct CvaeSample {
  std::vector<int> targets;  // value index per factor group, -1 = missing
  std::vector<double> r;
};

// One sample per dataset row: targets are the categorical value indices and
// r marks which factors are annotated.
std::vector<CvaeSample> cvae_samples(const LatentDataset& ds);
CvaeShape cvae_shape(const FactorSchema& schema, std::size_t hidden = 16, std::size_t latent = 32);

// Multi-hot encoding of the targets.
std::vector<double> multi_hot(const CvaeShape& shape, std::span<const int> targets);

struct TrainConfig {
  std::size_t cycle_length = 200;
  double ramp_fraction = 0.5;
  double lambda = 0.05;  // nats per dim
  double learning_rate = 0.05;
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  Seed seed{1};
  std::optional<double> fixed_beta;  // overrides the schedule
  double divergence_limit = 1e6;

  void validate() const;
};

// phase = (step mod cycle) / cycle; beta = min(1, phase / ramp_fraction).
double beta_at(const TrainConfig& config, std::size_t step);
double beta_for_step(const TrainConfig& config, std::size_t step);  // honours fixed_beta

struct Posterior {
  std::vector<double> mu;
  std::vector<double> log_sigma;
};

Posterior encode(const CvaeModel& model, std::span<const double> x, std::span<const double> r);
Posterior prior(const CvaeModel& model, std::span<const double> r);

// z = mu + exp(log_sigma) * eps, eps ~ N(0, I).
std::vector<double> reparameterize(std::span<const double> mu, std::span<const double> log_sigma, Seed seed);

// KL(q || p) per dimension, nats.
std::vector<double> kl_diag_gaussians(std::span<const double> mu_q, std::span<const double> log_sigma_q,
                                      std::span<const double> mu_p, std::span<const double> log_sigma_p);

// Decoder logits for one latent vector.
std::vector<double> decode_logits(const CvaeModel& model, std::span<const double> z, std::span<const double> r);

struct CvaeLoss {
  double total = 0.0;
  double recon = 0.0;           // batch mean of the summed per-factor NLL
  double kl_raw = 0.0;          // sum_i of the batch-mean KL_i
  double kl_thresholded = 0.0;  // sum_i max(lambda, batch-mean KL_i)
  double beta = 0.0;
  std::vector<double> kl_per_dim;
};

// total = recon + beta(step) * kl_thresholded. Noise for the batch is drawn
// from `seed`, sample by sample.
CvaeLoss cvae_loss(const CvaeModel& model, std::span<const CvaeSample> batch, const TrainConfig& config,
                   std::size_t step, Seed seed);

// Same loss, plus its gradient with respect to every parameter.
CvaeLoss cvae_loss_grad(const CvaeModel& model, std::span<const CvaeSample> batch, const TrainConfig& config,
                        std::size_t step, Seed seed, CvaeModel& grad);

struct TraceRow {
  std::size_t step = 0;
  double beta = 0.0;
  double recon = 0.0;
  double kl_raw = 0.0;
  double kl_thresholded = 0.0;
  double total = 0.0;
};

struct TrainResult {
  CvaeModel model;
  std::vector<TraceRow> trace;
};

// Minibatch gradient descent, reshuffled every epoch. Throws
// NumericalError when the loss passes divergence_limit or is not finite.
TrainResult train(CvaeModel model, std::span<const CvaeSample> samples, const TrainConfig& config);

std::string render_loss_trace(std::span<const TraceRow> trace);

struct Checkpoint {
  CvaeModel model;
  TrainConfig config;
};

std::string render_checkpoint(const CvaeModel& model, const TrainConfig& config);
Checkpoint parse_checkpoint(const std::string& text);

struct AttentionResult {
  Matrix keys;     // (seq + 1) x d, z_kv first
  Matrix values;   // (seq + 1) x d
  Matrix weights;  // seq x (seq + 1), rows sum to 1
  Matrix output;   // seq x d
};

// softmax(Q [z; K]^T / sqrt(d)) [z; V].
AttentionResult inject_latent_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                                        std::span<const double> z_kv);

// Reads factor values off a latent vector through the decoder, with every
// factor marked present in r.
class CvaeLabeler : public Labeler {
 public:
  CvaeLabeler(const CvaeModel& model, FactorSchema schema);

  const FactorSchema& schema() const override { return schema_; }
  std::vector<int> label(std::span<const double> z) const override;

 private:
  const CvaeModel& model_;
  FactorSchema schema_;
};

}  // namespace lgw
