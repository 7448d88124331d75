#include "uent/flow.hpp"

#include "uent/special.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace uent {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;

// Hidden degrees cycle through 1..d-1 (everything for d=1, where the heads end
// up fully masked and the layer is a learned constant shift/scale).
int hidden_degree(int unit, long d) {
  return d >= 2 ? 1 + static_cast<int>(unit % (d - 1)) : 1;
}

void build_masks(MadeLayer& layer, long d, int h) {
  layer.M1.resize(h, d);
  layer.M2.resize(h, h);
  layer.Mout.resize(d, h);
  for (int i = 0; i < h; ++i)
    for (long j = 0; j < d; ++j)
      layer.M1(i, j) = hidden_degree(i, d) >= layer.degree_in[j] ? 1.0 : 0.0;
  for (int i2 = 0; i2 < h; ++i2)
    for (int i1 = 0; i1 < h; ++i1)
      layer.M2(i2, i1) = hidden_degree(i2, d) >= hidden_degree(i1, d) ? 1.0 : 0.0;
  for (long j = 0; j < d; ++j)
    for (int i = 0; i < h; ++i)
      layer.Mout(j, i) = layer.degree_in[j] > hidden_degree(i, d) ? 1.0 : 0.0;
}

MadeLayer make_layer(long d, int h, bool reversed, RngStream& rng) {
  MadeLayer layer;
  layer.degree_in.resize(d);
  for (long j = 0; j < d; ++j)
    layer.degree_in[j] = reversed ? static_cast<int>(d - j) : static_cast<int>(j + 1);
  build_masks(layer, d, h);

  const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
  layer.W1.resize(h, d);
  layer.W2.resize(h, h);
  for (int i = 0; i < h; ++i)
    for (long j = 0; j < d; ++j) layer.W1(i, j) = rng.uniform(-s1, s1);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < h; ++j) layer.W2(i, j) = rng.uniform(-s2, s2);
  layer.W1 = layer.W1.cwiseProduct(layer.M1);
  layer.W2 = layer.W2.cwiseProduct(layer.M2);
  layer.b1 = Vector::Zero(h);
  layer.b2 = Vector::Zero(h);
  // Zero heads make the freshly built flow the identity map.
  layer.Wmu = Matrix::Zero(d, h);
  layer.Walpha = Matrix::Zero(d, h);
  layer.bmu = Vector::Zero(d);
  layer.balpha = Vector::Zero(d);
  return layer;
}

struct LayerEval {
  Matrix H1, H2, Mu, Alpha, ClampMask;
};

// One masked layer in the base direction; U = (X - mu) .* exp(-alpha).
void layer_forward(const MadeLayer& L, const Matrix& X, LayerEval& ev, Matrix& U) {
  ev.H1.noalias() = X * L.W1.transpose();
  ev.H1.rowwise() += L.b1.transpose();
  ev.H1 = ev.H1.array().tanh();
  ev.H2.noalias() = ev.H1 * L.W2.transpose();
  ev.H2.rowwise() += L.b2.transpose();
  ev.H2 = ev.H2.array().tanh();
  ev.Mu.noalias() = ev.H2 * L.Wmu.transpose();
  ev.Mu.rowwise() += L.bmu.transpose();
  Matrix araw = ev.H2 * L.Walpha.transpose();
  araw.rowwise() += L.balpha.transpose();
  ev.ClampMask = (araw.array().abs() <= kAlphaClamp).cast<double>();
  ev.Alpha = araw.array().min(kAlphaClamp).max(-kAlphaClamp);
  U = (X - ev.Mu).array() * (-ev.Alpha).array().exp();
}

}  // namespace

FlowModel make_flow(long d, int n_layers, int hidden_width, RngStream& rng) {
  if (d < 1 || n_layers < 1 || hidden_width < 1)
    throw ConfigError("make_flow: bad dimensions");
  FlowModel m;
  m.d = d;
  m.hidden = hidden_width;
  m.in_shift = Vector::Zero(d);
  m.in_scale = Vector::Ones(d);
  m.layers.reserve(n_layers);
  for (int l = 0; l < n_layers; ++l)
    m.layers.push_back(make_layer(d, hidden_width, l % 2 == 1, rng));
  return m;
}

void FlowModel::push_to_base_batch(const Matrix& x, Matrix& y, Vector& log_det) const {
  y = x;
  log_det = Vector::Zero(x.rows());
  if (in_shift.size() > 0) {
    if ((in_scale.array() <= 0.0).any())
      throw ConfigError("flow: in_scale must be positive");
    y.rowwise() -= in_shift.transpose();
    y.array().rowwise() /= in_scale.transpose().array();
    log_det.array() -= in_scale.array().log().sum();
  }
  LayerEval ev;
  Matrix u;
  for (const MadeLayer& L : layers) {
    layer_forward(L, y, ev, u);
    log_det -= ev.Alpha.rowwise().sum();
    y = u;
  }
  if (!y.allFinite() || !log_det.allFinite())
    throw NonFinite("push_to_base: non-finite flow output");
}

std::pair<Vector, double> FlowModel::push_to_base(const Vector& x) const {
  Matrix xm(1, d);
  xm.row(0) = x.transpose();
  Matrix ym;
  Vector ld;
  push_to_base_batch(xm, ym, ld);
  return {ym.row(0).transpose(), ld[0]};
}

Vector FlowModel::pull_from_base(const Vector& y) const {
  Vector x = y;
  LayerEval ev;
  Matrix u1(1, d);
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    const MadeLayer& L = *it;
    const Vector u = x;
    std::vector<long> pos(d);
    for (long j = 0; j < d; ++j) pos[L.degree_in[j] - 1] = j;
    Matrix xl = Matrix::Zero(1, d);
    for (long deg = 0; deg < d; ++deg) {
      layer_forward(L, xl, ev, u1);  // mu/alpha for rank deg+1 see only earlier ranks
      const long j = pos[deg];
      xl(0, j) = u[j] * std::exp(ev.Alpha(0, j)) + ev.Mu(0, j);
    }
    x = xl.row(0).transpose();
  }
  if (in_shift.size() > 0)
    x = x.cwiseProduct(in_scale) + in_shift;
  if (!x.allFinite()) throw NonFinite("pull_from_base: non-finite flow output");
  return x;
}

double FlowModel::log_density(const Vector& x) const {
  const auto [y, log_det] = push_to_base(x);
  return -static_cast<double>(d) * kHalfLog2Pi - 0.5 * y.squaredNorm() + log_det;
}

double gaussian_cdf(double y) { return normal_cdf(y); }

namespace {

LayerGrads zeros_like(const MadeLayer& L) {
  LayerGrads g;
  g.W1 = Matrix::Zero(L.W1.rows(), L.W1.cols());
  g.W2 = Matrix::Zero(L.W2.rows(), L.W2.cols());
  g.Wmu = Matrix::Zero(L.Wmu.rows(), L.Wmu.cols());
  g.Walpha = Matrix::Zero(L.Walpha.rows(), L.Walpha.cols());
  g.b1 = Vector::Zero(L.b1.size());
  g.b2 = Vector::Zero(L.b2.size());
  g.bmu = Vector::Zero(L.bmu.size());
  g.balpha = Vector::Zero(L.balpha.size());
  return g;
}

struct BatchCache {
  std::vector<Matrix> X;  // input of each layer, plus the final output
  std::vector<LayerEval> ev;
};

// Mean NLL of the batch under the flow; caches retained for backprop.
double forward_nll(const FlowModel& model, const Matrix& X, BatchCache& cache) {
  const long B = X.rows();
  cache.X.assign(model.layers.size() + 1, Matrix());
  cache.ev.assign(model.layers.size(), LayerEval());
  cache.X[0] = X;
  double alpha_sum = 0.0;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    layer_forward(model.layers[l], cache.X[l], cache.ev[l], cache.X[l + 1]);
    alpha_sum += cache.ev[l].Alpha.sum();
  }
  const Matrix& Y = cache.X.back();
  return model.d * kHalfLog2Pi +
         (0.5 * Y.squaredNorm() + alpha_sum) / static_cast<double>(B);
}

void backward(const FlowModel& model, const BatchCache& cache,
              std::vector<LayerGrads>& grads) {
  const long B = cache.X[0].rows();
  const double invB = 1.0 / static_cast<double>(B);
  Matrix GU = invB * cache.X.back();  // d(mean NLL)/dY
  for (long l = static_cast<long>(model.layers.size()) - 1; l >= 0; --l) {
    const MadeLayer& L = model.layers[l];
    const LayerEval& ev = cache.ev[l];
    const Matrix& X = cache.X[l];
    const Matrix& U = cache.X[l + 1];
    LayerGrads& g = grads[l];

    const Matrix expnega = (-ev.Alpha).array().exp();
    Matrix galpha = (-(GU.cwiseProduct(U))).array() + invB;
    const Matrix garaw = galpha.cwiseProduct(ev.ClampMask);
    const Matrix gmu = -GU.cwiseProduct(expnega);
    const Matrix gx_direct = GU.cwiseProduct(expnega);

    g.Walpha.noalias() = garaw.transpose() * ev.H2;
    g.Walpha = g.Walpha.cwiseProduct(L.Mout);
    g.balpha = garaw.colwise().sum().transpose();
    g.Wmu.noalias() = gmu.transpose() * ev.H2;
    g.Wmu = g.Wmu.cwiseProduct(L.Mout);
    g.bmu = gmu.colwise().sum().transpose();

    Matrix gh2 = gmu * L.Wmu + garaw * L.Walpha;
    const Matrix ga2 = gh2.cwiseProduct((1.0 - ev.H2.array().square()).matrix());
    g.W2.noalias() = ga2.transpose() * ev.H1;
    g.W2 = g.W2.cwiseProduct(L.M2);
    g.b2 = ga2.colwise().sum().transpose();

    Matrix gh1 = ga2 * L.W2;
    const Matrix ga1 = gh1.cwiseProduct((1.0 - ev.H1.array().square()).matrix());
    g.W1.noalias() = ga1.transpose() * X;
    g.W1 = g.W1.cwiseProduct(L.M1);
    g.b1 = ga1.colwise().sum().transpose();

    GU = gx_direct + ga1 * L.W1;
  }
}

struct Adam {
  double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;
  std::vector<LayerGrads> m, v;

  explicit Adam(const FlowModel& model, double learning_rate) : lr(learning_rate) {
    for (const auto& L : model.layers) {
      m.push_back(zeros_like(L));
      v.push_back(zeros_like(L));
    }
  }

  template <typename T>
  void update(T& param, T& mm, T& vv, const T& g, double c1, double c2) {
    mm = beta1 * mm + (1.0 - beta1) * g;
    vv = beta2 * vv + (1.0 - beta2) * g.cwiseProduct(g);
    param.array() -=
        lr * (mm.array() / c1) / ((vv.array() / c2).sqrt() + eps);
  }

  void step(FlowModel& model, const std::vector<LayerGrads>& grads) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      MadeLayer& L = model.layers[l];
      const LayerGrads& g = grads[l];
      update(L.W1, m[l].W1, v[l].W1, g.W1, c1, c2);
      update(L.b1, m[l].b1, v[l].b1, g.b1, c1, c2);
      update(L.W2, m[l].W2, v[l].W2, g.W2, c1, c2);
      update(L.b2, m[l].b2, v[l].b2, g.b2, c1, c2);
      update(L.Wmu, m[l].Wmu, v[l].Wmu, g.Wmu, c1, c2);
      update(L.bmu, m[l].bmu, v[l].bmu, g.bmu, c1, c2);
      update(L.Walpha, m[l].Walpha, v[l].Walpha, g.Walpha, c1, c2);
      update(L.balpha, m[l].balpha, v[l].balpha, g.balpha, c1, c2);
    }
  }
};

double eval_nll(const FlowModel& model, const Matrix& X) {
  BatchCache cache;
  return forward_nll(model, X, cache);
}

}  // namespace

double nll_with_gradients(const FlowModel& model, const Matrix& batch,
                          std::vector<LayerGrads>& grads) {
  if (batch.cols() != model.d)
    throw ConfigError("nll_with_gradients: dimension mismatch");
  grads.clear();
  for (const auto& L : model.layers) grads.push_back(zeros_like(L));
  BatchCache cache;
  const double nll = forward_nll(model, batch, cache);
  backward(model, cache, grads);
  return nll;
}

TrainResult train_with_history(const SampleSet& samples, const TrainConfig& cfg) {
  const long n = samples.n();
  if (n < 2) throw TooFewSamples("train: need at least 2 samples");
  if (cfg.n_layers < 1 || cfg.hidden_width < 1 || cfg.epochs < 0 ||
      cfg.batch_size < 1 || !(cfg.learning_rate > 0.0) ||
      !(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0) || cfg.patience < 0)
    throw ConfigError("train: bad TrainConfig");

  RngStream rng(cfg.seed);
  const long d = samples.dim();
  FlowModel model = make_flow(d, cfg.n_layers, cfg.hidden_width, rng);

  // Standardize once so layer inputs are scale-free regardless of the data's
  // units; the affine stage is folded into the model, which keeps mapping raw
  // coordinates. Constant columns are left unscaled.
  Vector mean = samples.data().colwise().mean();
  Vector sd(d);
  for (long j = 0; j < d; ++j) {
    const double ss = (samples.data().col(j).array() - mean[j]).square().sum();
    const double s = std::sqrt(ss / static_cast<double>(n - 1));
    sd[j] = s > 1e-12 ? s : 1.0;
  }
  model.in_shift = mean;
  model.in_scale = sd;
  const double log_scale_sum = sd.array().log().sum();
  Matrix Xs = samples.data();
  Xs.rowwise() -= mean.transpose();
  Xs.array().rowwise() /= sd.transpose().array();

  std::vector<long> idx(n);
  for (long i = 0; i < n; ++i) idx[i] = i;
  rng.shuffle(idx);
  long n_val = std::lround(cfg.val_fraction * static_cast<double>(n));
  n_val = std::max<long>(1, std::min(n_val, n - 1));
  const long n_train = n - n_val;
  std::vector<long> train_idx(idx.begin(), idx.begin() + n_train);
  Matrix val(n_val, d);
  for (long i = 0; i < n_val; ++i) val.row(i) = Xs.row(idx[n_train + i]);

  TrainResult res;
  res.best_epoch = -1;  // identity-initialized state
  double best_val = eval_nll(model, val);
  if (!std::isfinite(best_val)) throw Diverged("train: non-finite initial loss");
  FlowModel best = model;

  Adam opt(model, cfg.learning_rate);
  std::vector<LayerGrads> grads;
  for (const auto& L : model.layers) grads.push_back(zeros_like(L));

  int since_best = 0;
  Matrix batch;
  BatchCache cache;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(train_idx);
    double epoch_nll = 0.0;
    for (long start = 0; start < n_train; start += cfg.batch_size) {
      const long b = std::min<long>(cfg.batch_size, n_train - start);
      batch.resize(b, d);
      for (long i = 0; i < b; ++i)
        batch.row(i) = Xs.row(train_idx[start + i]);
      const double nll = forward_nll(model, batch, cache);
      if (!std::isfinite(nll)) throw Diverged("train: non-finite training loss");
      backward(model, cache, grads);
      opt.step(model, grads);
      epoch_nll += nll * static_cast<double>(b);
    }
    // Histories in raw-data units: standardized NLL plus the affine log-det.
    res.train_nll.push_back(epoch_nll / static_cast<double>(n_train) + log_scale_sum);

    const double vnll = eval_nll(model, val);
    if (!std::isfinite(vnll)) throw Diverged("train: non-finite validation loss");
    res.val_nll.push_back(vnll + log_scale_sum);
    if (vnll < best_val) {
      best_val = vnll;
      best = model;
      res.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best > cfg.patience) {
      break;
    }
  }
  res.model = std::move(best);
  return res;
}

FlowModel train(const SampleSet& samples, const TrainConfig& cfg) {
  return train_with_history(samples, cfg).model;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  std::vector<double> flat(m.data(), m.data() + m.size());
  return flat;
}

Matrix matrix_from_json(const nlohmann::json& j, long rows, long cols) {
  const auto flat = j.get<std::vector<double>>();
  if (static_cast<long>(flat.size()) != rows * cols)
    throw ConfigError("flow file: parameter shape mismatch");
  Matrix m(rows, cols);
  std::copy(flat.begin(), flat.end(), m.data());
  return m;
}

Vector vector_from_json(const nlohmann::json& j, long size) {
  const auto flat = j.get<std::vector<double>>();
  if (static_cast<long>(flat.size()) != size)
    throw ConfigError("flow file: parameter shape mismatch");
  Vector v(size);
  std::copy(flat.begin(), flat.end(), v.data());
  return v;
}

}  // namespace

void save_flow(const std::string& path, const FlowModel& model) {
  nlohmann::json doc;
  doc["format"] = "maf-1";
  doc["d"] = model.d;
  doc["hidden"] = model.hidden;
  if (model.in_shift.size() > 0) {
    doc["in_shift"] = matrix_to_json(model.in_shift);
    doc["in_scale"] = matrix_to_json(model.in_scale);
  }
  doc["layers"] = nlohmann::json::array();
  for (const auto& L : model.layers) {
    nlohmann::json lj;
    lj["degree_in"] = L.degree_in;
    lj["W1"] = matrix_to_json(L.W1);
    lj["b1"] = matrix_to_json(L.b1);
    lj["W2"] = matrix_to_json(L.W2);
    lj["b2"] = matrix_to_json(L.b2);
    lj["Wmu"] = matrix_to_json(L.Wmu);
    lj["bmu"] = matrix_to_json(L.bmu);
    lj["Walpha"] = matrix_to_json(L.Walpha);
    lj["balpha"] = matrix_to_json(L.balpha);
    doc["layers"].push_back(std::move(lj));
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for write: " + path);
  out << doc.dump();
}

FlowModel load_flow(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("flow file: bad json: ") + e.what());
  }
  if (doc.value("format", "") != "maf-1")
    throw ConfigError("flow file: unknown format");
  FlowModel m;
  m.d = doc.at("d").get<long>();
  m.hidden = doc.at("hidden").get<int>();
  if (doc.contains("in_shift")) {
    m.in_shift = vector_from_json(doc.at("in_shift"), m.d);
    m.in_scale = vector_from_json(doc.at("in_scale"), m.d);
    if ((m.in_scale.array() <= 0.0).any())
      throw ConfigError("flow file: in_scale must be positive");
  }
  const int h = m.hidden;
  for (const auto& lj : doc.at("layers")) {
    MadeLayer L;
    L.degree_in = lj.at("degree_in").get<std::vector<int>>();
    if (static_cast<long>(L.degree_in.size()) != m.d)
      throw ConfigError("flow file: ordering length mismatch");
    L.W1 = matrix_from_json(lj.at("W1"), h, m.d);
    L.b1 = vector_from_json(lj.at("b1"), h);
    L.W2 = matrix_from_json(lj.at("W2"), h, h);
    L.b2 = vector_from_json(lj.at("b2"), h);
    L.Wmu = matrix_from_json(lj.at("Wmu"), m.d, h);
    L.bmu = vector_from_json(lj.at("bmu"), m.d);
    L.Walpha = matrix_from_json(lj.at("Walpha"), m.d, h);
    L.balpha = vector_from_json(lj.at("balpha"), m.d);
    build_masks(L, m.d, h);
    m.layers.push_back(std::move(L));
  }
  return m;
}

}  // namespace uent
