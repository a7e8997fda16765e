#include "lgw/cvae.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace lgw {

namespace {

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericalError(std::string(what) + " is not finite");
  }
}

// out = W x + b
std::vector<double> affine(const Matrix& w, const Matrix& b, std::span<const double> x) {
  std::vector<double> out(w.rows());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    double s = b(i, 0);
    auto row = w.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) s += row[j] * x[j];
    out[i] = s;
  }
  return out;
}

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// dW += g x^T, db += g
void add_outer(Matrix& dw, Matrix& db, std::span<const double> g, std::span<const double> x) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto row = dw.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) row[j] += g[i] * x[j];
    db(i, 0) += g[i];
  }
}

// W^T g added into out
void back(const Matrix& w, std::span<const double> g, std::span<double> out) {
  for (std::size_t i = 0; i < w.rows(); ++i) {
    auto row = w.row(i);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += row[j] * g[i];
  }
}

struct Forward {
  std::vector<double> u;  // [x; r]
  std::vector<double> h;
  Posterior q;
  Posterior p;
  std::vector<double> eps;
  std::vector<double> z;
  std::vector<double> v;  // [z; r]
  std::vector<double> logits;
  std::vector<double> kl;
  double nll = 0.0;
};

Forward forward(const CvaeModel& m, const CvaeSample& s, Rng& rng) {
  const auto& shape = m.shape;
  if (s.targets.size() != shape.groups.size()) throw InvalidArgument("sample has the wrong number of targets");
  if (s.r.size() != shape.r_dim) throw InvalidArgument("sample r has the wrong length");
  Forward f;
  const auto x = multi_hot(shape, s.targets);
  f.u = concat(x, s.r);
  f.h = affine(m.enc_w, m.enc_b, f.u);
  for (auto& a : f.h) a = std::tanh(a);
  f.q.mu = affine(m.mu_w, m.mu_b, f.h);
  f.q.log_sigma = affine(m.logsig_w, m.logsig_b, f.h);
  f.p.mu = affine(m.prior_mu_w, m.prior_mu_b, s.r);
  f.p.log_sigma = affine(m.prior_logsig_w, m.prior_logsig_b, s.r);
  f.eps.resize(shape.latent);
  f.z.resize(shape.latent);
  for (std::size_t i = 0; i < shape.latent; ++i) {
    f.eps[i] = rng.normal();
    f.z[i] = f.q.mu[i] + std::exp(f.q.log_sigma[i]) * f.eps[i];
  }
  f.v = concat(f.z, s.r);
  f.logits = affine(m.dec_w, m.dec_b, f.v);
  f.kl = kl_diag_gaussians(f.q.mu, f.q.log_sigma, f.p.mu, f.p.log_sigma);
  std::size_t offset = 0;
  for (std::size_t g = 0; g < shape.groups.size(); ++g) {
    const std::size_t n = shape.groups[g];
    if (s.targets[g] >= 0) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < n; ++c) mx = std::max(mx, f.logits[offset + c]);
      double se = 0.0;
      for (std::size_t c = 0; c < n; ++c) se += std::exp(f.logits[offset + c] - mx);
      f.nll += mx + std::log(se) - f.logits[offset + static_cast<std::size_t>(s.targets[g])];
    }
    offset += n;
  }
  return f;
}

CvaeLoss run(const CvaeModel& m, std::span<const CvaeSample> batch, const TrainConfig& config, std::size_t step,
             Seed seed, CvaeModel* grad) {
  if (batch.empty()) throw InvalidArgument("cvae_loss needs a non-empty batch");
  const std::size_t n_latent = m.shape.latent;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Rng rng(seed);
  std::vector<Forward> passes;
  passes.reserve(batch.size());
  CvaeLoss loss;
  loss.beta = beta_for_step(config, step);
  loss.kl_per_dim.assign(n_latent, 0.0);
  for (const auto& s : batch) {
    passes.push_back(forward(m, s, rng));
    loss.recon += passes.back().nll;
    for (std::size_t i = 0; i < n_latent; ++i) loss.kl_per_dim[i] += passes.back().kl[i];
  }
  loss.recon *= inv_b;
  for (auto& k : loss.kl_per_dim) {
    k *= inv_b;
    loss.kl_raw += k;
    loss.kl_thresholded += std::max(config.lambda, k);
  }
  loss.total = loss.recon + loss.beta * loss.kl_thresholded;
  if (!std::isfinite(loss.total)) {
    std::ostringstream os;
    os << "non-finite loss at step " << step << " (recon " << loss.recon << ", kl " << loss.kl_raw << ")";
    throw NumericalError(os.str());
  }
  if (grad == nullptr) return loss;

  *grad = CvaeModel::zeros_like(m);
  CvaeModel& g = *grad;
  // Only dims above the floor carry gradient.
  std::vector<double> w(n_latent);
  for (std::size_t i = 0; i < n_latent; ++i) w[i] = loss.kl_per_dim[i] > config.lambda ? loss.beta * inv_b : 0.0;

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& f = passes[b];
    const auto& s = batch[b];
    std::vector<double> dlogits(f.logits.size(), 0.0);
    std::size_t offset = 0;
    for (std::size_t grp = 0; grp < m.shape.groups.size(); ++grp) {
      const std::size_t n = m.shape.groups[grp];
      if (s.targets[grp] >= 0) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < n; ++c) mx = std::max(mx, f.logits[offset + c]);
        double se = 0.0;
        for (std::size_t c = 0; c < n; ++c) se += std::exp(f.logits[offset + c] - mx);
        for (std::size_t c = 0; c < n; ++c) {
          const double p = std::exp(f.logits[offset + c] - mx) / se;
          const double t = static_cast<int>(c) == s.targets[grp] ? 1.0 : 0.0;
          dlogits[offset + c] = (p - t) * inv_b;
        }
      }
      offset += n;
    }
    add_outer(g.dec_w, g.dec_b, dlogits, f.v);
    std::vector<double> dv(f.v.size(), 0.0);
    back(m.dec_w, dlogits, dv);

    std::vector<double> dmu(n_latent), dls(n_latent), dmup(n_latent), dlsp(n_latent);
    for (std::size_t i = 0; i < n_latent; ++i) {
      const double sq = std::exp(f.q.log_sigma[i]);
      const double sp2 = std::exp(2.0 * f.p.log_sigma[i]);
      const double diff = f.q.mu[i] - f.p.mu[i];
      dmu[i] = dv[i] + w[i] * diff / sp2;
      dls[i] = dv[i] * sq * f.eps[i] + w[i] * (sq * sq / sp2 - 1.0);
      dmup[i] = -w[i] * diff / sp2;
      dlsp[i] = w[i] * (1.0 - (sq * sq + diff * diff) / sp2);
    }
    add_outer(g.mu_w, g.mu_b, dmu, f.h);
    add_outer(g.logsig_w, g.logsig_b, dls, f.h);
    add_outer(g.prior_mu_w, g.prior_mu_b, dmup, s.r);
    add_outer(g.prior_logsig_w, g.prior_logsig_b, dlsp, s.r);

    std::vector<double> dh(f.h.size(), 0.0);
    back(m.mu_w, dmu, dh);
    back(m.logsig_w, dls, dh);
    for (std::size_t j = 0; j < dh.size(); ++j) dh[j] *= 1.0 - f.h[j] * f.h[j];
    add_outer(g.enc_w, g.enc_b, dh, f.u);
  }
  return loss;
}

Matrix gaussian(std::size_t rows, std::size_t cols, Rng& rng, double scale) {
  Matrix m(rows, cols);
  for (auto& x : m.data()) x = rng.normal(0.0, scale);
  return m;
}

nlohmann::ordered_json matrix_json(const Matrix& m) {
  auto out = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    out.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols, const std::string& name) {
  if (!j.is_array() || j.size() != rows) throw SchemaError("tensor " + name + " has the wrong row count");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw SchemaError("tensor " + name + " has the wrong column count");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

}  // namespace

std::size_t CvaeShape::x_dim() const { return std::accumulate(groups.begin(), groups.end(), std::size_t{0}); }

CvaeModel CvaeModel::init(const CvaeShape& shape, Seed seed, double scale) {
  if (shape.groups.empty() || shape.latent == 0 || shape.hidden == 0) {
    throw InvalidArgument("cvae shape needs factors, hidden and latent units");
  }
  for (auto n : shape.groups) {
    if (n < 1) throw InvalidArgument("every factor group needs at least one value");
  }
  Rng rng(seed);
  const std::size_t in = shape.x_dim() + shape.r_dim;
  CvaeModel m;
  m.shape = shape;
  m.enc_w = gaussian(shape.hidden, in, rng, scale);
  m.enc_b = Matrix(shape.hidden, 1);
  m.mu_w = gaussian(shape.latent, shape.hidden, rng, scale);
  m.mu_b = Matrix(shape.latent, 1);
  m.logsig_w = gaussian(shape.latent, shape.hidden, rng, scale);
  m.logsig_b = Matrix(shape.latent, 1);
  m.prior_mu_w = gaussian(shape.latent, shape.r_dim, rng, scale);
  m.prior_mu_b = Matrix(shape.latent, 1);
  m.prior_logsig_w = gaussian(shape.latent, shape.r_dim, rng, scale);
  m.prior_logsig_b = Matrix(shape.latent, 1);
  m.dec_w = gaussian(shape.x_dim(), shape.latent + shape.r_dim, rng, scale);
  m.dec_b = Matrix(shape.x_dim(), 1);
  return m;
}

CvaeModel CvaeModel::zeros_like(const CvaeModel& other) {
  CvaeModel m = other;
  for (auto& [name, t] : m.tensors()) std::fill(t->data().begin(), t->data().end(), 0.0);
  return m;
}

std::vector<std::pair<std::string, Matrix*>> CvaeModel::tensors() {
  return {{"enc_w", &enc_w},           {"enc_b", &enc_b},
          {"mu_w", &mu_w},             {"mu_b", &mu_b},
          {"logsig_w", &logsig_w},     {"logsig_b", &logsig_b},
          {"prior_mu_w", &prior_mu_w}, {"prior_mu_b", &prior_mu_b},
          {"prior_logsig_w", &prior_logsig_w}, {"prior_logsig_b", &prior_logsig_b},
          {"dec_w", &dec_w},           {"dec_b", &dec_b}};
}

std::vector<std::pair<std::string, const Matrix*>> CvaeModel::tensors() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (auto& [name, t] : const_cast<CvaeModel*>(this)->tensors()) out.emplace_back(name, t);
  return out;
}

std::size_t CvaeModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors()) n += t->rows() * t->cols();
  return n;
}

std::vector<CvaeSample> cvae_samples(const LatentDataset& ds) {
  std::vector<CvaeSample> out(ds.size());
  const std::size_t k = ds.schema().size();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out[i].targets.assign(k, -1);
    out[i].r.assign(k, 0.0);
    for (std::size_t f = 0; f < k; ++f) {
      const Label& l = ds.label(i, f);
      if (l.kind != LabelKind::kCategorical) continue;
      out[i].targets[f] = l.value;
      out[i].r[f] = 1.0;
    }
  }
  return out;
}

CvaeShape cvae_shape(const FactorSchema& schema, std::size_t hidden, std::size_t latent) {
  CvaeShape s;
  for (const auto& f : schema.factors()) s.groups.push_back(f.values.size());
  s.r_dim = schema.size();
  s.hidden = hidden;
  s.latent = latent;
  return s;
}

std::vector<double> multi_hot(const CvaeShape& shape, std::span<const int> targets) {
  if (targets.size() != shape.groups.size()) throw InvalidArgument("one target per factor group required");
  std::vector<double> x(shape.x_dim(), 0.0);
  std::size_t offset = 0;
  for (std::size_t g = 0; g < targets.size(); ++g) {
    if (targets[g] >= static_cast<int>(shape.groups[g])) throw InvalidArgument("target out of range");
    if (targets[g] >= 0) x[offset + static_cast<std::size_t>(targets[g])] = 1.0;
    offset += shape.groups[g];
  }
  return x;
}

void TrainConfig::validate() const {
  if (cycle_length < 2) throw InvalidArgument("cycle_length must be at least 2");
  if (!(ramp_fraction > 0.0 && ramp_fraction <= 1.0)) throw InvalidArgument("ramp_fraction must be in (0, 1]");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be >= 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("learning rate must be > 0");
  if (batch_size < 1) throw InvalidArgument("batch size must be at least 1");
  if (fixed_beta && !(*fixed_beta >= 0.0 && *fixed_beta <= 1.0)) throw InvalidArgument("beta must be in [0, 1]");
}

double beta_at(const TrainConfig& config, std::size_t step) {
  const double phase =
      static_cast<double>(step % config.cycle_length) / static_cast<double>(config.cycle_length);
  return std::min(1.0, phase / config.ramp_fraction);
}

double beta_for_step(const TrainConfig& config, std::size_t step) {
  return config.fixed_beta ? *config.fixed_beta : beta_at(config, step);
}

Posterior encode(const CvaeModel& model, std::span<const double> x, std::span<const double> r) {
  if (x.size() != model.shape.x_dim() || r.size() != model.shape.r_dim) {
    throw InvalidArgument("encoder input has the wrong length");
  }
  auto h = affine(model.enc_w, model.enc_b, concat(x, r));
  for (auto& a : h) a = std::tanh(a);
  Posterior q{affine(model.mu_w, model.mu_b, h), affine(model.logsig_w, model.logsig_b, h)};
  check_finite(q.mu, "posterior mean");
  check_finite(q.log_sigma, "posterior log sigma");
  return q;
}

Posterior prior(const CvaeModel& model, std::span<const double> r) {
  if (r.size() != model.shape.r_dim) throw InvalidArgument("prior input has the wrong length");
  Posterior p{affine(model.prior_mu_w, model.prior_mu_b, r), affine(model.prior_logsig_w, model.prior_logsig_b, r)};
  check_finite(p.mu, "prior mean");
  check_finite(p.log_sigma, "prior log sigma");
  return p;
}

std::vector<double> reparameterize(std::span<const double> mu, std::span<const double> log_sigma, Seed seed) {
  if (mu.size() != log_sigma.size()) throw InvalidArgument("mu and log sigma lengths differ");
  check_finite(mu, "mu");
  check_finite(log_sigma, "log sigma");
  Rng rng(seed);
  std::vector<double> z(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) z[i] = mu[i] + std::exp(log_sigma[i]) * rng.normal();
  return z;
}

std::vector<double> kl_diag_gaussians(std::span<const double> mu_q, std::span<const double> log_sigma_q,
                                      std::span<const double> mu_p, std::span<const double> log_sigma_p) {
  const std::size_t n = mu_q.size();
  if (log_sigma_q.size() != n || mu_p.size() != n || log_sigma_p.size() != n) {
    throw InvalidArgument("kl_diag_gaussians needs equal lengths");
  }
  check_finite(mu_q, "mu_q");
  check_finite(log_sigma_q, "log_sigma_q");
  check_finite(mu_p, "mu_p");
  check_finite(log_sigma_p, "log_sigma_p");
  std::vector<double> kl(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double vq = std::exp(2.0 * log_sigma_q[i]);
    const double vp = std::exp(2.0 * log_sigma_p[i]);
    const double d = mu_q[i] - mu_p[i];
    kl[i] = log_sigma_p[i] - log_sigma_q[i] + (vq + d * d) / (2.0 * vp) - 0.5;
  }
  return kl;
}

std::vector<double> decode_logits(const CvaeModel& model, std::span<const double> z, std::span<const double> r) {
  if (z.size() != model.shape.latent || r.size() != model.shape.r_dim) {
    throw InvalidArgument("decoder input has the wrong length");
  }
  return affine(model.dec_w, model.dec_b, concat(z, r));
}

CvaeLoss cvae_loss(const CvaeModel& model, std::span<const CvaeSample> batch, const TrainConfig& config,
                   std::size_t step, Seed seed) {
  return run(model, batch, config, step, seed, nullptr);
}

CvaeLoss cvae_loss_grad(const CvaeModel& model, std::span<const CvaeSample> batch, const TrainConfig& config,
                        std::size_t step, Seed seed, CvaeModel& grad) {
  return run(model, batch, config, step, seed, &grad);
}

TrainResult train(CvaeModel model, std::span<const CvaeSample> samples, const TrainConfig& config) {
  config.validate();
  if (samples.empty()) throw InvalidArgument("train needs at least one sample");
  TrainResult out;
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;
  CvaeModel grad;
  std::vector<CvaeSample> batch;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle(derive(config.seed, 2 * epoch + 1));
    shuffle.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(samples[order[i]]);
      CvaeLoss loss;
      try {
        loss = cvae_loss_grad(model, batch, config, step, derive(derive(config.seed, 2 * epoch + 2), step), grad);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " after " + std::to_string(out.trace.size()) + " logged steps");
      }
      out.trace.push_back({step, loss.beta, loss.recon, loss.kl_raw, loss.kl_thresholded, loss.total});
      if (loss.total > config.divergence_limit) {
        throw NumericalError("training diverged at step " + std::to_string(step) + " (loss " +
                             std::to_string(loss.total) + ")");
      }
      auto params = model.tensors();
      auto grads = grad.tensors();
      for (std::size_t t = 0; t < params.size(); ++t) {
        auto p = params[t].second->data();
        auto g = grads[t].second->data();
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= config.learning_rate * g[i];
      }
      ++step;
    }
  }
  out.model = std::move(model);
  return out;
}

std::string render_loss_trace(std::span<const TraceRow> trace) {
  std::ostringstream os;
  os.precision(17);
  os << "step,beta,recon,kl_raw,kl_thresholded,total\n";
  for (const auto& t : trace) {
    os << t.step << ',' << t.beta << ',' << t.recon << ',' << t.kl_raw << ',' << t.kl_thresholded << ','
       << t.total << '\n';
  }
  return os.str();
}

std::string render_checkpoint(const CvaeModel& model, const TrainConfig& config) {
  nlohmann::ordered_json j;
  j["seed"] = config.seed.value;
  nlohmann::ordered_json cfg;
  cfg["cycle_length"] = config.cycle_length;
  cfg["ramp_fraction"] = config.ramp_fraction;
  cfg["lambda"] = config.lambda;
  cfg["learning_rate"] = config.learning_rate;
  cfg["epochs"] = config.epochs;
  cfg["batch_size"] = config.batch_size;
  cfg["fixed_beta"] = config.fixed_beta ? nlohmann::ordered_json(*config.fixed_beta) : nlohmann::ordered_json();
  j["config"] = cfg;
  nlohmann::ordered_json shape;
  shape["groups"] = model.shape.groups;
  shape["r_dim"] = model.shape.r_dim;
  shape["hidden"] = model.shape.hidden;
  shape["latent"] = model.shape.latent;
  j["shape"] = shape;
  nlohmann::ordered_json tensors;
  for (const auto& [name, t] : model.tensors()) tensors[name] = matrix_json(*t);
  j["tensors"] = tensors;
  return j.dump(2) + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Checkpoint out;
    out.config.seed = Seed{j.at("seed").get<std::uint64_t>()};
    const auto& cfg = j.at("config");
    out.config.cycle_length = cfg.at("cycle_length").get<std::size_t>();
    out.config.ramp_fraction = cfg.at("ramp_fraction").get<double>();
    out.config.lambda = cfg.at("lambda").get<double>();
    out.config.learning_rate = cfg.at("learning_rate").get<double>();
    out.config.epochs = cfg.at("epochs").get<std::size_t>();
    out.config.batch_size = cfg.at("batch_size").get<std::size_t>();
    if (!cfg.at("fixed_beta").is_null()) out.config.fixed_beta = cfg.at("fixed_beta").get<double>();
    CvaeShape shape;
    const auto& s = j.at("shape");
    shape.groups = s.at("groups").get<std::vector<std::size_t>>();
    shape.r_dim = s.at("r_dim").get<std::size_t>();
    shape.hidden = s.at("hidden").get<std::size_t>();
    shape.latent = s.at("latent").get<std::size_t>();
    out.model = CvaeModel::init(shape, Seed{0}, 0.0);
    const auto& tensors = j.at("tensors");
    for (auto& [name, t] : out.model.tensors()) {
      *t = matrix_from_json(tensors.at(name), t->rows(), t->cols(), name);
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint: ") + e.what());
  }
}

AttentionResult inject_latent_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                                        std::span<const double> z_kv) {
  const std::size_t d = q.cols();
  if (d == 0) throw InvalidArgument("attention needs d > 0");
  if (k.cols() != d || v.cols() != d || z_kv.size() != d) throw InvalidArgument("attention width mismatch");
  if (k.rows() != v.rows()) throw InvalidArgument("K and V need the same number of rows");
  AttentionResult out;
  out.keys = Matrix(k.rows() + 1, d);
  out.values = Matrix(v.rows() + 1, d);
  std::copy(z_kv.begin(), z_kv.end(), out.keys.row(0).begin());
  std::copy(z_kv.begin(), z_kv.end(), out.values.row(0).begin());
  for (std::size_t r = 0; r < k.rows(); ++r) {
    std::copy(k.row(r).begin(), k.row(r).end(), out.keys.row(r + 1).begin());
    std::copy(v.row(r).begin(), v.row(r).end(), out.values.row(r + 1).begin());
  }
  const std::size_t n = out.keys.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  out.weights = Matrix(q.rows(), n);
  out.output = Matrix(q.rows(), d);
  for (std::size_t i = 0; i < q.rows(); ++i) {
    auto w = out.weights.row(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += q(i, c) * out.keys(j, c);
      w[j] = s * scale;
      mx = std::max(mx, w[j]);
    }
    if (!std::isfinite(mx)) throw NumericalError("attention scores are not finite");
    double total = 0.0;
    for (auto& x : w) {
      x = std::exp(x - mx);
      total += x;
    }
    for (auto& x : w) x /= total;
    auto o = out.output.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t c = 0; c < d; ++c) o[c] += w[j] * out.values(j, c);
    }
  }
  return out;
}

CvaeLabeler::CvaeLabeler(const CvaeModel& model, FactorSchema schema) : model_(model), schema_(std::move(schema)) {
  if (schema_.size() != model_.shape.groups.size()) throw InvalidArgument("schema does not match the model");
  for (std::size_t f = 0; f < schema_.size(); ++f) {
    if (schema_.factor(f).values.size() != model_.shape.groups[f]) {
      throw InvalidArgument("schema vocabulary does not match the model");
    }
  }
}

std::vector<int> CvaeLabeler::label(std::span<const double> z) const {
  const std::vector<double> r(model_.shape.r_dim, 1.0);
  const auto logits = decode_logits(model_, z, r);
  std::vector<int> out(schema_.size());
  std::size_t offset = 0;
  for (std::size_t g = 0; g < schema_.size(); ++g) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < model_.shape.groups[g]; ++c) {
      if (logits[offset + c] > logits[offset + best]) best = c;
    }
    out[g] = static_cast<int>(best);
    offset += model_.shape.groups[g];
  }
  return out;
}

}  // namespace lgw
