#pragma once

#include "uent/common.hpp"
#include "uent/rng.hpp"

namespace uent {

// One masked affine autoregressive layer. Masked weight entries are kept
// exactly zero (gradients are masked before the optimizer step), so forward
// passes can use the matrices directly. degree_in[j] is coordinate j's 1-based
// rank in this layer's ordering; (mu_j, alpha_j) may depend only on inputs of
// strictly smaller rank.
struct MadeLayer {
  Matrix W1, W2;        // hidden x d, hidden x hidden
  Vector b1, b2;        // hidden
  Matrix Wmu, Walpha;   // d x hidden output heads
  Vector bmu, balpha;   // d
  Matrix M1, M2, Mout;  // binary masks matching W1 / W2 / heads
  std::vector<int> degree_in;
};

// alpha is clamped to this band before exponentiation.
inline constexpr double kAlphaClamp = 7.0;

struct FlowModel {
  long d = 0;
  int hidden = 50;
  std::vector<MadeLayer> layers;
  // Fixed per-coordinate affine preprocessing u0 = (x - in_shift)/in_scale
  // applied before the first layer (empty vectors = identity). train() fills
  // these with the sample mean/std so layer inputs are scale-free; the
  // returned model still maps raw coordinates.
  Vector in_shift, in_scale;

  // Base-direction pass y = g(x) with log|det dg/dx|; one affine evaluation
  // per layer.
  std::pair<Vector, double> push_to_base(const Vector& x) const;
  void push_to_base_batch(const Matrix& x, Matrix& y, Vector& log_det) const;

  // Data-direction pass x = g^{-1}(y); sequential per-coordinate
  // reconstruction in each layer.
  Vector pull_from_base(const Vector& y) const;

  // log q(g(x)) + log|det dg/dx| against the standard normal base.
  double log_density(const Vector& x) const;
};

// Identity-initialized model: hidden weights get fan-in-scaled uniform noise,
// output heads start at zero, so g is the identity map with log_det 0.
// Orderings alternate natural / reversed across layers.
FlowModel make_flow(long d, int n_layers, int hidden_width, RngStream& rng);

struct TrainConfig {
  int n_layers = 5;
  int hidden_width = 50;
  int epochs = 400;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double val_fraction = 0.1;
  int patience = 20;
  std::uint64_t seed = 0;
};

struct TrainResult {
  FlowModel model;  // parameters at the best validation NLL seen
  std::vector<double> train_nll;  // per-epoch means
  std::vector<double> val_nll;
  int best_epoch = 0;
};

// Per-layer parameter gradients, shaped like the corresponding MadeLayer.
struct LayerGrads {
  Matrix W1, W2, Wmu, Walpha;
  Vector b1, b2, bmu, balpha;
};

// Mean NLL of a batch under the flow (standard normal base) together with its
// exact reverse-mode parameter gradients. grads is resized to match the model.
// The batch is fed to the layers directly; in_shift/in_scale are not applied.
double nll_with_gradients(const FlowModel& model, const Matrix& batch,
                          std::vector<LayerGrads>& grads);

// Maximum-likelihood training against the standard normal base with Adam and
// early stopping on a held-out split. Deterministic given config.seed. Throws
// Diverged when the loss leaves the finite range.
TrainResult train_with_history(const SampleSet& samples, const TrainConfig& cfg);
FlowModel train(const SampleSet& samples, const TrainConfig& cfg);

// Standard normal probability integral transform, clamped to
// [1e-15, 1 - 1e-15] so downstream logs stay finite.
double gaussian_cdf(double y);

// JSON document with dimensions, orderings, and parameter arrays; numbers are
// written in shortest-round-trip form so save/load is bit-exact.
void save_flow(const std::string& path, const FlowModel& model);
FlowModel load_flow(const std::string& path);

}  // namespace uent
