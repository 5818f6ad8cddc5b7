#include "txtopo/nn.hpp"

#include <cmath>

#include "txtopo/errors.hpp"

namespace txtopo::nn {

namespace {

// Glorot-uniform initialization, deterministic under the caller's Rng.
void glorot_init(Matrix& w, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      w(i, j) = (2.0 * rng.uniform_real() - 1.0) * limit;
    }
  }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ln(1 + e^x) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

GraphBatch GraphBatch::from_binary_adjacency(const Matrix& a_bin) {
  GraphBatch g;
  g.a_bin = a_bin;
  g.a_hat = normalize_adjacency(a_bin);
  g.mean_agg = a_bin;
  for (Eigen::Index i = 0; i < a_bin.rows(); ++i) {
    const double deg = a_bin.row(i).sum();
    if (deg > 0.0) g.mean_agg.row(i) /= deg;
  }
  g.graph_of.assign(static_cast<std::size_t>(a_bin.rows()), 0);
  g.graph_count = 1;
  return g;
}

Matrix normalize_adjacency(const Matrix& a_bin) {
  const Eigen::Index n = a_bin.rows();
  Matrix with_loops = a_bin + Matrix::Identity(n, n);
  Vector inv_sqrt_deg(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    inv_sqrt_deg(i) = 1.0 / std::sqrt(with_loops.row(i).sum());
  }
  return inv_sqrt_deg.asDiagonal() * with_loops * inv_sqrt_deg.asDiagonal();
}

Matrix leaky_relu(const Matrix& x, double slope) {
  return x.array().max(x.array() * slope).matrix();
}

Matrix leaky_relu_backward(const Matrix& x, const Matrix& grad_out, double slope) {
  return (x.array() > 0.0).select(grad_out, grad_out * slope);
}

Matrix inner_product_decode(const Matrix& z) {
  Matrix p = z * z.transpose();
  return p.unaryExpr([](double s) { return sigmoid(s); });
}

double bce_loss(const Matrix& p, const Matrix& target, const GraphBatch& g) {
  const Eigen::Index n = p.rows();
  std::vector<double> loss(static_cast<std::size_t>(g.graph_count), 0.0);
  std::vector<std::int64_t> pairs(static_cast<std::size_t>(g.graph_count), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto gi = static_cast<std::size_t>(g.graph_of[static_cast<std::size_t>(i)]);
      if (g.graph_of[static_cast<std::size_t>(j)] != static_cast<int>(gi)) continue;
      const double pij = std::clamp(p(i, j), 1e-12, 1.0 - 1e-12);
      const double a = target(i, j);
      loss[gi] += -(a * std::log(pij) + (1.0 - a) * std::log(1.0 - pij));
      ++pairs[gi];
    }
  }
  double total = 0.0;
  for (std::size_t k = 0; k < loss.size(); ++k) {
    if (pairs[k] == 0) throw DataError("bce_loss: graph with no off-diagonal pairs");
    total += loss[k] / static_cast<double>(pairs[k]);
  }
  return total / static_cast<double>(g.graph_count);
}

namespace {

// Shared core: stable per-pair BCE from logits, optional gradient wrt the
// logit matrix. loss_ij = softplus(s_ij) - a_ij * s_ij.
std::vector<double> logit_bce_per_graph(const Matrix& z, const GraphBatch& g,
                                        Matrix* grad_s) {
  const Eigen::Index n = z.rows();
  const Matrix s = z * z.transpose();
  std::vector<double> loss(static_cast<std::size_t>(g.graph_count), 0.0);
  std::vector<std::int64_t> pairs(static_cast<std::size_t>(g.graph_count), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto gi = static_cast<std::size_t>(g.graph_of[static_cast<std::size_t>(i)]);
      if (g.graph_of[static_cast<std::size_t>(j)] != static_cast<int>(gi)) continue;
      ++pairs[gi];
    }
  }
  if (grad_s) *grad_s = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto gi = static_cast<std::size_t>(g.graph_of[static_cast<std::size_t>(i)]);
      if (g.graph_of[static_cast<std::size_t>(j)] != static_cast<int>(gi)) continue;
      const double a = g.a_bin(i, j);
      loss[gi] += softplus(s(i, j)) - a * s(i, j);
      if (grad_s) {
        (*grad_s)(i, j) = (sigmoid(s(i, j)) - a) /
                          (static_cast<double>(pairs[gi]) * g.graph_count);
      }
    }
  }
  for (std::size_t k = 0; k < loss.size(); ++k) {
    if (pairs[k] == 0) throw DataError("reconstruction loss: graph with a single node");
    loss[k] /= static_cast<double>(pairs[k]);
  }
  return loss;
}

}  // namespace

std::vector<double> reconstruction_loss_per_graph(const Matrix& z, const GraphBatch& g) {
  return logit_bce_per_graph(z, g, nullptr);
}

double reconstruction_loss(const Matrix& z, const GraphBatch& g) {
  const auto per_graph = logit_bce_per_graph(z, g, nullptr);
  double total = 0.0;
  for (const double l : per_graph) total += l;
  return total / static_cast<double>(g.graph_count);
}

double reconstruction_loss(const Matrix& z, const GraphBatch& g, Matrix& grad_z) {
  Matrix grad_s;
  const auto per_graph = logit_bce_per_graph(z, g, &grad_s);
  grad_z = (grad_s + grad_s.transpose()) * z;
  double total = 0.0;
  for (const double l : per_graph) total += l;
  return total / static_cast<double>(g.graph_count);
}

// --- GcnConv ---

GcnConv::GcnConv(int in_dim, int out_dim, Rng& init_rng, const std::string& name)
    : w(name + ".w", in_dim, out_dim), b(name + ".b", 1, out_dim) {
  glorot_init(w.value, init_rng);
}

Matrix GcnConv::forward(const GraphBatch& g, const Matrix& input) {
  propagated_ = g.a_hat * input;
  return (propagated_ * w.value).rowwise() + b.value.row(0);
}

Matrix GcnConv::backward(const GraphBatch& g, const Matrix& grad_out) {
  w.grad += propagated_.transpose() * grad_out;
  b.grad += grad_out.colwise().sum();
  return g.a_hat.transpose() * (grad_out * w.value.transpose());
}

void GcnConv::collect_params(std::vector<Param*>& out) {
  out.push_back(&w);
  out.push_back(&b);
}

// --- SageConv ---

SageConv::SageConv(int in_dim, int out_dim, Rng& init_rng, const std::string& name)
    : w_self(name + ".w_self", in_dim, out_dim),
      w_neigh(name + ".w_neigh", in_dim, out_dim),
      b(name + ".b", 1, out_dim) {
  glorot_init(w_self.value, init_rng);
  glorot_init(w_neigh.value, init_rng);
}

Matrix SageConv::forward(const GraphBatch& g, const Matrix& input) {
  input_ = input;
  aggregated_ = g.mean_agg * input;
  return (input * w_self.value + aggregated_ * w_neigh.value).rowwise() + b.value.row(0);
}

Matrix SageConv::backward(const GraphBatch& g, const Matrix& grad_out) {
  w_self.grad += input_.transpose() * grad_out;
  w_neigh.grad += aggregated_.transpose() * grad_out;
  b.grad += grad_out.colwise().sum();
  return grad_out * w_self.value.transpose() +
         g.mean_agg.transpose() * (grad_out * w_neigh.value.transpose());
}

void SageConv::collect_params(std::vector<Param*>& out) {
  out.push_back(&w_self);
  out.push_back(&w_neigh);
  out.push_back(&b);
}

// --- GatConv ---

GatConv::GatConv(int in_dim, int out_dim, Rng& init_rng, const std::string& name,
                 double attn_slope)
    : w(name + ".w", in_dim, out_dim),
      attn_src(name + ".a_src", out_dim, 1),
      attn_dst(name + ".a_dst", out_dim, 1),
      attn_slope_(attn_slope) {
  glorot_init(w.value, init_rng);
  glorot_init(attn_src.value, init_rng);
  glorot_init(attn_dst.value, init_rng);
}

Matrix GatConv::forward(const GraphBatch& g, const Matrix& input) {
  const Eigen::Index n = input.rows();
  input_ = input;
  projected_ = input * w.value;  // n x out

  const Vector src = projected_ * attn_src.value;  // contribution of i
  const Vector dst = projected_ * attn_dst.value;  // contribution of j

  // Raw scores on the mask N(i) + self; everything else stays out of the
  // softmax entirely.
  scores_ = Matrix::Zero(n, n);
  alpha_ = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double row_max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && g.a_bin(i, j) == 0.0) continue;
      const double raw = src(i) + dst(j);
      scores_(i, j) = raw > 0.0 ? raw : attn_slope_ * raw;
      row_max = std::max(row_max, scores_(i, j));
    }
    double denom = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && g.a_bin(i, j) == 0.0) continue;
      alpha_(i, j) = std::exp(scores_(i, j) - row_max);
      denom += alpha_(i, j);
    }
    for (Eigen::Index j = 0; j < n; ++j) alpha_(i, j) /= denom;
  }
  return alpha_ * projected_;
}

Matrix GatConv::backward(const GraphBatch& g, const Matrix& grad_out) {
  const Eigen::Index n = input_.rows();

  Matrix grad_proj = alpha_.transpose() * grad_out;
  const Matrix grad_alpha = grad_out * projected_.transpose();

  // Softmax backward per row, then the attention LeakyReLU.
  Vector grad_src_sum = Vector::Zero(n);
  Vector grad_dst_sum = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double dot = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && g.a_bin(i, j) == 0.0) continue;
      dot += alpha_(i, j) * grad_alpha(i, j);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && g.a_bin(i, j) == 0.0) continue;
      const double grad_e = alpha_(i, j) * (grad_alpha(i, j) - dot);
      const double raw = scores_(i, j);  // post-LReLU; sign matches pre-activation
      const double grad_raw = raw > 0.0 ? grad_e : grad_e * attn_slope_;
      grad_src_sum(i) += grad_raw;
      grad_dst_sum(j) += grad_raw;
    }
  }

  grad_proj += grad_src_sum * attn_src.value.transpose();
  grad_proj += grad_dst_sum * attn_dst.value.transpose();
  attn_src.grad += projected_.transpose() * grad_src_sum;
  attn_dst.grad += projected_.transpose() * grad_dst_sum;

  w.grad += input_.transpose() * grad_proj;
  return grad_proj * w.value.transpose();
}

void GatConv::collect_params(std::vector<Param*>& out) {
  out.push_back(&w);
  out.push_back(&attn_src);
  out.push_back(&attn_dst);
}

// --- BatchNorm ---

BatchNorm::BatchNorm(int dim, const std::string& name, double momentum, double eps)
    : gamma(name + ".gamma", 1, dim),
      beta(name + ".beta", 1, dim),
      running_mean(Vector::Zero(dim)),
      running_var(Vector::Ones(dim)),
      momentum_(momentum),
      eps_(eps) {
  gamma.value.setOnes();
}

Matrix BatchNorm::forward(const Matrix& input, Mode mode) {
  mode_ = mode;
  const Eigen::Index n = input.rows();
  const Eigen::Index d = input.cols();
  Matrix out(n, d);
  if (mode == Mode::Eval) {
    inv_std_ = (running_var.array() + eps_).sqrt().inverse();
    x_hat_ = (input.rowwise() - running_mean.transpose()) * inv_std_.asDiagonal();
  } else {
    const Vector mean = input.colwise().mean().transpose();
    Vector var(d);
    for (Eigen::Index c = 0; c < d; ++c) {
      var(c) = (input.col(c).array() - mean(c)).square().mean();
    }
    inv_std_ = (var.array() + eps_).sqrt().inverse();
    x_hat_ = (input.rowwise() - mean.transpose()) * inv_std_.asDiagonal();
    if (mode == Mode::Train) {
      running_mean = (1.0 - momentum_) * running_mean + momentum_ * mean;
      running_var = (1.0 - momentum_) * running_var + momentum_ * var;
    }
  }
  for (Eigen::Index c = 0; c < d; ++c) {
    out.col(c) = x_hat_.col(c) * gamma.value(0, c) + Vector::Constant(n, beta.value(0, c));
  }
  return out;
}

Matrix BatchNorm::backward(const Matrix& grad_out) {
  const Eigen::Index n = grad_out.rows();
  const Eigen::Index d = grad_out.cols();

  gamma.grad += (grad_out.array() * x_hat_.array()).colwise().sum().matrix();
  beta.grad += grad_out.colwise().sum();

  Matrix grad_in(n, d);
  if (mode_ == Mode::Eval) {
    for (Eigen::Index c = 0; c < d; ++c) {
      grad_in.col(c) = grad_out.col(c) * (gamma.value(0, c) * inv_std_(c));
    }
    return grad_in;
  }
  // Batch statistics participate in the forward pass, so they carry
  // gradient too:
  // dx = (g - mean(g) - x_hat * mean(g .* x_hat)) * gamma * inv_std
  for (Eigen::Index c = 0; c < d; ++c) {
    const double mean_g = grad_out.col(c).mean();
    const double mean_gx = (grad_out.col(c).array() * x_hat_.col(c).array()).mean();
    grad_in.col(c) =
        (grad_out.col(c).array() - mean_g - x_hat_.col(c).array() * mean_gx) *
        (gamma.value(0, c) * inv_std_(c));
  }
  return grad_in;
}

void BatchNorm::collect_params(std::vector<Param*>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

// --- Dropout ---

Matrix Dropout::forward(const Matrix& input, Mode mode, Rng* rng) {
  active_ = mode != Mode::Eval && p_ > 0.0;
  if (!active_) return input;
  if (rng == nullptr) throw NumericalError("dropout in train mode needs an rng");
  const double keep = 1.0 - p_;
  mask_ = Matrix::Zero(input.rows(), input.cols());
  for (Eigen::Index i = 0; i < input.rows(); ++i) {
    for (Eigen::Index j = 0; j < input.cols(); ++j) {
      if (rng->uniform_real() >= p_) mask_(i, j) = 1.0 / keep;
    }
  }
  return input.cwiseProduct(mask_);
}

Matrix Dropout::backward(const Matrix& grad_out) const {
  if (!active_) return grad_out;
  return grad_out.cwiseProduct(mask_);
}

// --- Encoder ---

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::GCN: return "gcn";
    case Variant::SAGE: return "sage";
    case Variant::GAT: return "gat";
  }
  return "unknown";
}

std::optional<Variant> variant_from_name(std::string_view name) {
  if (name == "gcn") return Variant::GCN;
  if (name == "sage") return Variant::SAGE;
  if (name == "gat") return Variant::GAT;
  return std::nullopt;
}

std::unique_ptr<ConvLayer> Encoder::make_conv(int in_dim, int out_dim, Rng& rng,
                                              const std::string& name) const {
  switch (variant_) {
    case Variant::GCN: return std::make_unique<GcnConv>(in_dim, out_dim, rng, name);
    case Variant::SAGE: return std::make_unique<SageConv>(in_dim, out_dim, rng, name);
    case Variant::GAT:
      return std::make_unique<GatConv>(in_dim, out_dim, rng, name, cfg_.attn_slope);
  }
  throw NumericalError("unknown encoder variant");
}

Encoder::Encoder(Variant variant, const EncoderConfig& cfg, std::uint64_t init_seed)
    : variant_(variant), cfg_(cfg) {
  Rng rng(derive_seed(init_seed, "encoder-init"));
  int in_dim = cfg.input_dim;
  for (std::size_t layer = 0; layer < cfg.widths.size(); ++layer) {
    const int out_dim = cfg.widths[layer];
    const std::string name = "conv" + std::to_string(layer + 1);
    convs_.push_back(make_conv(in_dim, out_dim, rng, name));
    if (layer + 1 < cfg.widths.size()) {
      norms_.push_back(std::make_unique<BatchNorm>(
          out_dim, "bn" + std::to_string(layer + 1), cfg.bn_momentum, cfg.bn_eps));
      dropouts_.emplace_back(cfg.dropout);
    }
    in_dim = out_dim;
  }
}

Matrix Encoder::forward(const GraphBatch& g, const Matrix& x, Mode mode,
                        Rng* dropout_rng) {
  pre_activations_.clear();
  Matrix h = x;
  for (std::size_t layer = 0; layer < convs_.size(); ++layer) {
    h = convs_[layer]->forward(g, h);
    if (layer + 1 < convs_.size()) {
      h = norms_[layer]->forward(h, mode);
      pre_activations_.push_back(h);
      h = leaky_relu(h, cfg_.lrelu_slope);
      h = dropouts_[layer].forward(h, mode, dropout_rng);
    }
  }
  return h;
}

void Encoder::backward(const GraphBatch& g, const Matrix& grad_z) {
  Matrix grad = grad_z;
  for (std::size_t layer = convs_.size(); layer-- > 0;) {
    if (layer + 1 < convs_.size()) {
      grad = dropouts_[layer].backward(grad);
      grad = leaky_relu_backward(pre_activations_[layer], grad, cfg_.lrelu_slope);
      grad = norms_[layer]->backward(grad);
    }
    grad = convs_[layer]->backward(g, grad);
  }
}

std::vector<Param*> Encoder::params() {
  std::vector<Param*> out;
  for (std::size_t layer = 0; layer < convs_.size(); ++layer) {
    convs_[layer]->collect_params(out);
    if (layer + 1 < convs_.size()) norms_[layer]->collect_params(out);
  }
  return out;
}

void Encoder::zero_grads() {
  for (Param* p : params()) p->zero_grad();
}

// --- Adam ---

void Adam::step(const std::vector<Param*>& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (Param* p : params) {
    if (!p->grad.allFinite()) {
      throw NumericalError("non-finite gradient in parameter " + p->name);
    }
    p->adam_m = cfg_.beta1 * p->adam_m + (1.0 - cfg_.beta1) * p->grad;
    p->adam_v = cfg_.beta2 * p->adam_v + (1.0 - cfg_.beta2) * p->grad.cwiseProduct(p->grad);
    const Matrix m_hat = p->adam_m / bc1;
    const Matrix v_hat = p->adam_v / bc2;
    p->value.array() -= cfg_.lr * m_hat.array() / (v_hat.array().sqrt() + cfg_.eps);
  }
}

// --- gradient checking ---

GradCheckResult check_gradients(const std::vector<Param*>& params,
                                const std::function<double()>& compute_loss,
                                const std::function<void()>& compute_grads,
                                double h) {
  for (Param* p : params) p->zero_grad();
  compute_grads();

  GradCheckResult result;
  for (Param* p : params) {
    for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
        const double saved = p->value(i, j);
        p->value(i, j) = saved + h;
        const double plus = compute_loss();
        p->value(i, j) = saved - h;
        const double minus = compute_loss();
        p->value(i, j) = saved;
        const double numeric = (plus - minus) / (2.0 * h);
        const double analytic = p->grad(i, j);
        const double rel = std::abs(numeric - analytic) /
                           std::max({1.0, std::abs(numeric), std::abs(analytic)});
        if (rel > result.max_rel_error) {
          result.max_rel_error = rel;
          result.worst_param = p->name;
        }
      }
    }
  }
  return result;
}

}  // namespace txtopo::nn
