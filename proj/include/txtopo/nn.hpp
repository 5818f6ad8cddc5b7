#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "txtopo/rng.hpp"

namespace txtopo::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// FrozenStats runs batch-normalization on batch statistics without touching
// the running averages; the gradient checker uses it to differentiate the
// exact training-path math.
enum class Mode { Train, Eval, FrozenStats };

struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;

  Param() = default;
  Param(std::string n, int rows, int cols)
      : name(std::move(n)),
        value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)),
        adam_m(Matrix::Zero(rows, cols)),
        adam_v(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

// Fixed graph structures for one (possibly block-diagonal) batch.
struct GraphBatch {
  Matrix a_bin;      // symmetric binary adjacency, zero diagonal
  Matrix a_hat;      // D^{-1/2} (A+I) D^{-1/2}
  Matrix mean_agg;   // row-normalized a_bin; zero rows stay zero
  std::vector<int> graph_of;  // node -> graph ordinal in the batch
  int graph_count = 1;

  static GraphBatch from_binary_adjacency(const Matrix& a_bin);
};

// --- stateless ops ---

// D^{-1/2} (A+I) D^{-1/2} with D = rowsum(A+I); A symmetric 0/1, zero diag.
Matrix normalize_adjacency(const Matrix& a_bin);

Matrix leaky_relu(const Matrix& x, double slope);
Matrix leaky_relu_backward(const Matrix& x, const Matrix& grad_out, double slope);

// sigmoid(z z^T), elementwise.
Matrix inner_product_decode(const Matrix& z);

// Mean binary cross-entropy over off-diagonal same-graph pairs, averaged per
// graph and then across graphs; probabilities are clamped at 1e-12.
double bce_loss(const Matrix& p, const Matrix& target, const GraphBatch& g);

// Same loss computed stably from the logits z z^T, with the gradient wrt z.
// Identical to bce_loss(inner_product_decode(z), target, g) in exact math.
double reconstruction_loss(const Matrix& z, const GraphBatch& g);
double reconstruction_loss(const Matrix& z, const GraphBatch& g, Matrix& grad_z);

// Per-graph losses of a batch, in graph order.
std::vector<double> reconstruction_loss_per_graph(const Matrix& z, const GraphBatch& g);

// --- layers ---

class ConvLayer {
 public:
  virtual ~ConvLayer() = default;
  virtual Matrix forward(const GraphBatch& g, const Matrix& input) = 0;
  // Returns grad wrt input and accumulates parameter grads.
  virtual Matrix backward(const GraphBatch& g, const Matrix& grad_out) = 0;
  virtual void collect_params(std::vector<Param*>& out) = 0;
};

// H' = A_hat H W + b
class GcnConv : public ConvLayer {
 public:
  GcnConv(int in_dim, int out_dim, Rng& init_rng, const std::string& name);
  Matrix forward(const GraphBatch& g, const Matrix& input) override;
  Matrix backward(const GraphBatch& g, const Matrix& grad_out) override;
  void collect_params(std::vector<Param*>& out) override;

  Param w, b;

 private:
  Matrix propagated_;  // A_hat * input
};

// H'_i = W_self h_i + W_neigh mean_{j in N(i)} h_j + b; empty neighborhoods
// contribute zero.
class SageConv : public ConvLayer {
 public:
  SageConv(int in_dim, int out_dim, Rng& init_rng, const std::string& name);
  Matrix forward(const GraphBatch& g, const Matrix& input) override;
  Matrix backward(const GraphBatch& g, const Matrix& grad_out) override;
  void collect_params(std::vector<Param*>& out) override;

  Param w_self, w_neigh, b;

 private:
  Matrix input_;
  Matrix aggregated_;  // mean_agg * input
};

// Single-head attention over N(i) plus the self edge; LeakyReLU slope 0.2
// inside the attention scores.
class GatConv : public ConvLayer {
 public:
  GatConv(int in_dim, int out_dim, Rng& init_rng, const std::string& name,
          double attn_slope = 0.2);
  Matrix forward(const GraphBatch& g, const Matrix& input) override;
  Matrix backward(const GraphBatch& g, const Matrix& grad_out) override;
  void collect_params(std::vector<Param*>& out) override;

  // Attention coefficients of the last forward (row-stochastic on the mask).
  const Matrix& last_attention() const { return alpha_; }

  Param w, attn_src, attn_dst;

 private:
  double attn_slope_;
  Matrix input_, projected_, scores_, alpha_;
};

// Per-column batch normalization over the nodes in the batch.
class BatchNorm {
 public:
  BatchNorm(int dim, const std::string& name, double momentum = 0.1, double eps = 1e-5);
  Matrix forward(const Matrix& input, Mode mode);
  Matrix backward(const Matrix& grad_out);
  void collect_params(std::vector<Param*>& out);

  Param gamma, beta;
  Vector running_mean;
  Vector running_var;

 private:
  double momentum_, eps_;
  Mode mode_ = Mode::Eval;
  Matrix x_hat_;
  Vector inv_std_;
};

// Inverted dropout; identity in eval mode. The rng may be null when the
// layer is inactive (eval mode or p = 0).
class Dropout {
 public:
  explicit Dropout(double p) : p_(p) {}
  Matrix forward(const Matrix& input, Mode mode, Rng* rng);
  Matrix backward(const Matrix& grad_out) const;

 private:
  double p_;
  Matrix mask_;
  bool active_ = false;
};

// --- encoder ---

enum class Variant : int { GCN = 0, SAGE = 1, GAT = 2 };

std::string_view variant_name(Variant v);
std::optional<Variant> variant_from_name(std::string_view name);

struct EncoderConfig {
  int input_dim = 9;
  std::array<int, 3> widths{32, 16, 8};
  double dropout = 0.2;
  double lrelu_slope = 0.01;
  double attn_slope = 0.2;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
};

// CONV -> BN -> LeakyReLU -> Dropout, twice, then a final CONV to the
// latent width.
class Encoder {
 public:
  Encoder(Variant variant, const EncoderConfig& cfg, std::uint64_t init_seed);

  Matrix forward(const GraphBatch& g, const Matrix& x, Mode mode, Rng* dropout_rng);
  void backward(const GraphBatch& g, const Matrix& grad_z);

  std::vector<Param*> params();
  void zero_grads();

  Variant variant() const { return variant_; }
  const EncoderConfig& config() const { return cfg_; }

  BatchNorm& batch_norm(int i) { return *norms_[static_cast<std::size_t>(i)]; }

 private:
  std::unique_ptr<ConvLayer> make_conv(int in_dim, int out_dim, Rng& rng,
                                       const std::string& name) const;

  Variant variant_;
  EncoderConfig cfg_;
  std::vector<std::unique_ptr<ConvLayer>> convs_;
  std::vector<std::unique_ptr<BatchNorm>> norms_;
  std::vector<Dropout> dropouts_;
  std::vector<Matrix> pre_activations_;
};

// --- optimization ---

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
  void step(const std::vector<Param*>& params);
  long steps_taken() const { return t_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
};

// --- verification ---

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
};

// Central finite differences against analytic gradients. `compute_loss`
// must be a pure function of the parameter values; `compute_grads` fills
// Param::grad for the same loss.
GradCheckResult check_gradients(const std::vector<Param*>& params,
                                const std::function<double()>& compute_loss,
                                const std::function<void()>& compute_grads,
                                double h = 1e-5);

}  // namespace txtopo::nn
