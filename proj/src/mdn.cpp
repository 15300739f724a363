#include "wavelocate/mdn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <nlohmann/json.hpp>
#include <string>

#include "f64_io.hpp"
#include "wavelocate/errors.hpp"
#include "wavelocate/log.hpp"

namespace wavelocate::mdn {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

struct ActivationDetail {
  GmmPrediction pred;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> floored;  // k x 2
};

ActivationDetail activate_detail(const Eigen::VectorXd& z,
                                 const NetworkSpec& spec) {
  const int k = spec.num_components;
  if (static_cast<int>(z.size()) != spec.output_dim()) {
    throw LengthMismatch("activation expects " +
                         std::to_string(spec.output_dim()) +
                         " raw outputs, got " + std::to_string(z.size()));
  }
  ActivationDetail out;
  out.pred.means.resize(k, kOutputDims);
  out.pred.variances.resize(k, kOutputDims);
  out.pred.weights.resize(k);
  out.floored.resize(k, kOutputDims);
  for (int i = 0; i < k; ++i) {
    for (int a = 0; a < kOutputDims; ++a) {
      out.pred.means(i, a) = z[kOutputDims * i + a];
      const double raw = std::exp(z[kOutputDims * k + kOutputDims * i + a]);
      out.floored(i, a) = !(raw > spec.variance_floor);
      out.pred.variances(i, a) = std::max(raw, spec.variance_floor);
      if (!std::isfinite(out.pred.variances(i, a)) ||
          !std::isfinite(out.pred.means(i, a))) {
        throw NonFiniteActivation("mixture parameters are not finite");
      }
    }
  }
  // softmax with max shift
  const auto logits = z.segment(2 * kOutputDims * k, k);
  const double m = logits.maxCoeff();
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    out.pred.weights[i] = std::exp(logits[i] - m);
    sum += out.pred.weights[i];
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    throw NonFiniteActivation("mixture weights are not finite");
  }
  out.pred.weights /= sum;
  return out;
}

// log mixture density with responsibilities; component terms are summed in
// descending order so the value is independent of component ordering
double log_density(const GmmPrediction& pred, const Point2& y,
                   Eigen::VectorXd* gamma) {
  const int k = pred.num_components();
  Eigen::VectorXd g(k);
  for (int i = 0; i < k; ++i) {
    double gi = std::log(pred.weights[i]) - kLog2Pi;
    const double dx = y.x - pred.means(i, 0);
    const double dy = y.y - pred.means(i, 1);
    gi -= 0.5 * (std::log(pred.variances(i, 0)) + std::log(pred.variances(i, 1)));
    gi -= 0.5 * (dx * dx / pred.variances(i, 0) + dy * dy / pred.variances(i, 1));
    g[i] = gi;
  }
  const double m = g.maxCoeff();
  Eigen::VectorXd e(k);
  for (int i = 0; i < k; ++i) e[i] = std::exp(g[i] - m);
  Eigen::VectorXd sorted = e;
  std::sort(sorted.data(), sorted.data() + k, std::greater<double>());
  double s = 0.0;
  for (int i = 0; i < k; ++i) s += sorted[i];
  if (gamma != nullptr) *gamma = e / s;
  return m + std::log(s);
}

void require_finite_loss(double loss) {
  if (!std::isfinite(loss)) {
    throw DivergedTraining("training loss is not finite");
  }
}

}  // namespace

void NetworkSpec::validate() const {
  if (input_dim < 1) throw InvalidParameter("network input_dim must be >= 1");
  for (int h : hidden) {
    if (h < 1) throw InvalidParameter("hidden layer widths must be >= 1");
  }
  if (num_components < 1) {
    throw InvalidParameter("num_components must be >= 1");
  }
  if (!(dropout_prob >= 0.0) || dropout_prob >= 1.0) {
    throw InvalidParameter("dropout_prob must lie in [0, 1)");
  }
  if (!(variance_floor > 0.0)) {
    throw InvalidParameter("variance_floor must be positive");
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw InvalidParameter("learning_rate must be >= 0");
  if (!(beta1 >= 0.0) || beta1 >= 1.0 || !(beta2 >= 0.0) || beta2 >= 1.0) {
    throw InvalidParameter("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw InvalidParameter("Adam epsilon must be positive");
  if (batch_size < 1) throw InvalidParameter("batch_size must be >= 1");
  if (epochs < 1) throw InvalidParameter("epochs must be >= 1");
  if (!(dropout_prob >= 0.0) || dropout_prob >= 1.0) {
    throw InvalidParameter("dropout_prob must lie in [0, 1)");
  }
  if (!(variance_floor > 0.0)) {
    throw InvalidParameter("variance_floor must be positive");
  }
  if (!(clip_norm > 0.0)) throw InvalidParameter("clip_norm must be positive");
}

Params Params::initial(const NetworkSpec& spec, RngStream& rng) {
  spec.validate();
  const std::array<int, 4> in = {spec.input_dim, spec.hidden[0], spec.hidden[1],
                                 spec.hidden[2]};
  const std::array<int, 4> out = {spec.hidden[0], spec.hidden[1],
                                  spec.hidden[2], spec.output_dim()};
  Params p;
  for (int l = 0; l < 4; ++l) {
    p.w[l].resize(out[l], in[l]);
    const double a = std::sqrt(6.0 / static_cast<double>(in[l]));
    // fill in storage order so the draw sequence is well defined
    for (Eigen::Index i = 0; i < p.w[l].size(); ++i) {
      p.w[l].data()[i] = rng.uniform(-a, a);
    }
    p.b[l] = Eigen::VectorXd::Zero(out[l]);
  }
  // start with moderate spread instead of exp(0) = 1 per axis
  const int k = spec.num_components;
  for (int i = 0; i < kOutputDims * k; ++i) {
    p.b[3][kOutputDims * k + i] = std::log(0.05);
  }
  return p;
}

std::size_t Params::count() const {
  std::size_t n = 0;
  for (int l = 0; l < 4; ++l) n += w[l].size() + b[l].size();
  return n;
}

bool Params::all_finite() const {
  for (int l = 0; l < 4; ++l) {
    if (!w[l].allFinite() || !b[l].allFinite()) return false;
  }
  return true;
}

Grads Grads::zeros_like(const Params& p) {
  Grads g;
  for (int l = 0; l < 4; ++l) {
    g.w[l] = Eigen::MatrixXd::Zero(p.w[l].rows(), p.w[l].cols());
    g.b[l] = Eigen::VectorXd::Zero(p.b[l].size());
  }
  return g;
}

double Grads::global_norm() const {
  double s = 0.0;
  for (int l = 0; l < 4; ++l) s += w[l].squaredNorm() + b[l].squaredNorm();
  return std::sqrt(s);
}

void Grads::scale(double s) {
  for (int l = 0; l < 4; ++l) {
    w[l] *= s;
    b[l] *= s;
  }
}

GmmPrediction activate(const Eigen::VectorXd& z, const NetworkSpec& spec) {
  return activate_detail(z, spec).pred;
}

Eigen::MatrixXd forward(const Params& params, const NetworkSpec& spec,
                        const Eigen::MatrixXd& x, bool train_mode,
                        RngStream* dropout_rng, ForwardCache* cache) {
  if (x.rows() != params.w[0].cols()) {
    throw DimensionMismatch("forward expects " +
                            std::to_string(params.w[0].cols()) +
                            " input rows, got " + std::to_string(x.rows()));
  }
  const bool dropping = train_mode && spec.dropout_prob > 0.0;
  if (dropping && dropout_rng == nullptr) {
    throw InvalidParameter("train-mode forward needs a dropout stream");
  }
  const double keep_scale = 1.0 / (1.0 - spec.dropout_prob);
  Eigen::MatrixXd h = x;
  if (cache != nullptr) {
    cache->x = x;
    cache->train_mode = train_mode;
  }
  for (int l = 0; l < 3; ++l) {
    Eigen::MatrixXd z = (params.w[l] * h).colwise() + params.b[l];
    Eigen::MatrixXd a = z.cwiseMax(0.0);
    if (dropping) {
      Eigen::MatrixXd mask(a.rows(), a.cols());
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
          mask(i, j) =
              dropout_rng->uniform01() < spec.dropout_prob ? 0.0 : keep_scale;
        }
      }
      a = a.cwiseProduct(mask);
      if (cache != nullptr) cache->mask[l] = std::move(mask);
    }
    if (cache != nullptr) {
      cache->z_hidden[l] = std::move(z);
      cache->h[l] = a;
    }
    h = std::move(a);
  }
  Eigen::MatrixXd z_out = (params.w[3] * h).colwise() + params.b[3];
  if (!z_out.allFinite()) {
    throw NonFiniteActivation("network output is not finite");
  }
  if (cache != nullptr) cache->z_out = z_out;
  return z_out;
}

double nll(const GmmPrediction& prediction, std::span<const Point2> targets) {
  if (prediction.num_components() < 1) {
    throw EmptyPrediction("prediction has no mixture components");
  }
  if (targets.empty()) throw InvalidParameter("nll needs >= 1 target");
  double acc = 0.0;
  for (const auto& y : targets) acc += -log_density(prediction, y, nullptr);
  return acc / static_cast<double>(targets.size());
}

double batch_loss(const Params& params, const NetworkSpec& spec,
                  const Eigen::MatrixXd& x, std::span<const TargetSet> targets,
                  bool train_mode, RngStream* dropout_rng, Grads* grads) {
  const auto batch = x.cols();
  if (static_cast<Eigen::Index>(targets.size()) != batch) {
    throw DimensionMismatch("batch has " + std::to_string(batch) +
                            " columns but " + std::to_string(targets.size()) +
                            " target sets");
  }
  if (batch == 0) throw InvalidParameter("empty batch");
  ForwardCache cache;
  const Eigen::MatrixXd z_out = forward(params, spec, x, train_mode,
                                        dropout_rng, grads ? &cache : nullptr);
  const int k = spec.num_components;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  double loss = 0.0;
  Eigen::MatrixXd dz_out;
  if (grads != nullptr) dz_out = Eigen::MatrixXd::Zero(z_out.rows(), batch);
  Eigen::VectorXd gamma;
  for (Eigen::Index j = 0; j < batch; ++j) {
    const auto& points = targets[j].points;
    if (points.empty()) throw InvalidParameter("target set is empty");
    const ActivationDetail act = activate_detail(z_out.col(j), spec);
    const double unit_scale = inv_batch / static_cast<double>(points.size());
    for (const auto& y : points) {
      loss += -log_density(act.pred, y, grads ? &gamma : nullptr) * unit_scale;
      if (grads == nullptr) continue;
      for (int i = 0; i < k; ++i) {
        dz_out(2 * kOutputDims * k + i, j) +=
            (act.pred.weights[i] - gamma[i]) * unit_scale;
        const double ys[2] = {y.x, y.y};
        for (int a = 0; a < kOutputDims; ++a) {
          const double var = act.pred.variances(i, a);
          const double diff = ys[a] - act.pred.means(i, a);
          dz_out(kOutputDims * i + a, j) += -gamma[i] * diff / var * unit_scale;
          if (!act.floored(i, a)) {
            // d loss / d log-variance; zero where the floor clamps
            dz_out(kOutputDims * k + kOutputDims * i + a, j) +=
                gamma[i] * (0.5 - diff * diff / (2.0 * var)) * unit_scale;
          }
        }
      }
    }
  }
  if (grads == nullptr) return loss;

  const bool dropping = cache.train_mode && spec.dropout_prob > 0.0;
  grads->w[3] = dz_out * cache.h[2].transpose();
  grads->b[3] = dz_out.rowwise().sum();
  Eigen::MatrixXd dh = params.w[3].transpose() * dz_out;
  for (int l = 2; l >= 0; --l) {
    if (dropping) dh = dh.cwiseProduct(cache.mask[l]);
    const Eigen::MatrixXd dz =
        dh.cwiseProduct((cache.z_hidden[l].array() > 0.0).cast<double>().matrix());
    const Eigen::MatrixXd& below = l == 0 ? cache.x : cache.h[l - 1];
    grads->w[l] = dz * below.transpose();
    grads->b[l] = dz.rowwise().sum();
    if (l > 0) dh = params.w[l].transpose() * dz;
  }
  const double norm = grads->global_norm();
  if (!std::isfinite(norm)) {
    throw NonFiniteGradient("gradient norm is not finite");
  }
  return loss;
}

namespace {

struct Unit {
  int sample;                 // column of the split matrix
  std::vector<Point2> points;  // targets this unit averages over
};

std::vector<Unit> make_units(const std::vector<wavefield::Sample>& split,
                             const std::vector<int>& indices,
                             MultiTarget mode) {
  std::vector<Unit> units;
  for (int idx : indices) {
    const auto& truth = split[idx].truth;
    if (truth.empty()) {
      throw InvalidParameter("sample without damage locations cannot train");
    }
    if (mode == MultiTarget::Average) {
      units.push_back({idx, truth});
    } else {
      for (const auto& y : truth) units.push_back({idx, {y}});
    }
  }
  return units;
}

struct Adam {
  Grads m, v;
  long t = 0;

  explicit Adam(const Params& p)
      : m(Grads::zeros_like(p)), v(Grads::zeros_like(p)) {}

  void step(Params& p, const Grads& g, const TrainConfig& cfg) {
    ++t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    auto update = [&](auto& theta, auto& mm, auto& vv, const auto& grad) {
      mm = cfg.beta1 * mm + (1.0 - cfg.beta1) * grad;
      vv = cfg.beta2 * vv + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
      theta.array() -= cfg.learning_rate * (mm.array() / bc1) /
                       ((vv.array() / bc2).sqrt() + cfg.epsilon);
    };
    for (int l = 0; l < 4; ++l) {
      update(p.w[l], m.w[l], v.w[l], g.w[l]);
      update(p.b[l], m.b[l], v.b[l], g.b[l]);
    }
  }
};

// mean inference-mode loss over whole-sample units; NaN when empty
double eval_nll(const Params& params, const NetworkSpec& spec,
                const Eigen::MatrixXd& x_all,
                const std::vector<wavefield::Sample>& split,
                const std::vector<int>& indices) {
  if (indices.empty()) return std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd x(x_all.rows(), indices.size());
  std::vector<TargetSet> targets(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    x.col(j) = x_all.col(indices[j]);
    targets[j].points = split[indices[j]].truth;
  }
  return batch_loss(params, spec, x, targets, false, nullptr, nullptr);
}

}  // namespace

ModelArtifact train(const wavefield::Dataset& dataset, NetworkSpec spec,
                    const TrainConfig& config, bool cross_validate) {
  config.validate();
  spec.dropout_prob = config.dropout_prob;
  spec.variance_floor = config.variance_floor;
  const int n = dataset.scenario.grid.num_points;
  const int expected = dataset.num_pairs() * n;
  if (spec.input_dim == 0) spec.input_dim = expected;
  if (spec.input_dim != expected) {
    throw DimensionMismatch("network input_dim " +
                            std::to_string(spec.input_dim) +
                            " does not match dataset feature size " +
                            std::to_string(expected));
  }
  spec.validate();
  if (dataset.train.empty()) {
    throw InvalidParameter("training requires a nonempty train split");
  }

  const int n_train = static_cast<int>(dataset.train.size());
  Eigen::MatrixXd x_train(spec.input_dim, n_train);
  for (int i = 0; i < n_train; ++i) {
    x_train.col(i) = dataset.input_vector(dataset.train[i]);
  }
  const int n_val = static_cast<int>(dataset.val.size());
  Eigen::MatrixXd x_val(spec.input_dim, n_val);
  std::vector<int> val_indices(n_val);
  for (int i = 0; i < n_val; ++i) {
    x_val.col(i) = dataset.input_vector(dataset.val[i]);
    val_indices[i] = i;
  }

  auto run = [&](const std::vector<int>& indices, std::uint64_t tag,
                 std::vector<EpochLogEntry>* epoch_log) {
    RngStream init_rng = RngStream::derive(config.seed, {streams::kInit, tag});
    RngStream shuffle_rng =
        RngStream::derive(config.seed, {streams::kShuffle, tag});
    RngStream dropout_rng =
        RngStream::derive(config.seed, {streams::kDropout, tag});
    Params params = Params::initial(spec, init_rng);
    Adam adam(params);
    Grads grads = Grads::zeros_like(params);
    std::vector<Unit> units =
        make_units(dataset.train, indices, config.multi_target);
    std::vector<int> order(units.size());
    for (std::size_t i = 0; i < units.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
      for (std::size_t i = units.size(); i > 1; --i) {
        std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);
      }
      double running = 0.0;
      int batches = 0;
      for (std::size_t start = 0; start < units.size();
           start += config.batch_size) {
        const std::size_t stop =
            std::min(units.size(), start + config.batch_size);
        const auto b = static_cast<Eigen::Index>(stop - start);
        Eigen::MatrixXd xb(spec.input_dim, b);
        std::vector<TargetSet> tb(b);
        for (Eigen::Index j = 0; j < b; ++j) {
          const Unit& u = units[order[start + j]];
          xb.col(j) = x_train.col(u.sample);
          tb[j].points = u.points;
        }
        const double loss =
            batch_loss(params, spec, xb, tb, true, &dropout_rng, &grads);
        require_finite_loss(loss);
        const double norm = grads.global_norm();
        if (norm > config.clip_norm) grads.scale(config.clip_norm / norm);
        adam.step(params, grads, config);
        running += loss;
        ++batches;
      }
      if (!params.all_finite()) {
        throw DivergedTraining("parameters diverged at epoch " +
                               std::to_string(epoch));
      }
      if (epoch_log != nullptr) {
        const double val_nll =
            eval_nll(params, spec, x_val, dataset.val, val_indices);
        epoch_log->push_back({epoch, running / batches, val_nll});
      }
    }
    return params;
  };

  ModelArtifact artifact;
  artifact.spec = spec;
  artifact.config = config;
  artifact.feature_mean = dataset.feature_mean;
  artifact.feature_std = dataset.feature_std;

  if (cross_validate) {
    if (n_train < 3) {
      throw InvalidParameter("3-fold cross-validation needs >= 3 train samples");
    }
    for (int fold = 0; fold < 3; ++fold) {
      std::vector<int> fit, held;
      for (int i = 0; i < n_train; ++i) {
        (i % 3 == fold ? held : fit).push_back(i);
      }
      const Params fold_params = run(fit, static_cast<std::uint64_t>(fold),
                                     nullptr);
      // evaluate on the held-out third of the train split
      const double fold_nll =
          eval_nll(fold_params, spec, x_train, dataset.train, held);
      artifact.log.folds.push_back({fold, fold_nll});
      log_info("cv fold " + std::to_string(fold) + " val nll " +
               std::to_string(fold_nll));
    }
  }

  std::vector<int> all(n_train);
  for (int i = 0; i < n_train; ++i) all[i] = i;
  artifact.params = run(all, 3, &artifact.log.epochs);
  if (!artifact.log.epochs.empty()) {
    const auto& last = artifact.log.epochs.back();
    log_info("training done: train nll " + std::to_string(last.train_nll) +
             ", val nll " + std::to_string(last.val_nll));
  }
  return artifact;
}

GmmPrediction predict(const ModelArtifact& artifact,
                      const Eigen::MatrixXd& raw_signals) {
  const Eigen::Index dim = raw_signals.size();
  if (dim != artifact.spec.input_dim ||
      artifact.feature_mean.size() != dim || artifact.feature_std.size() != dim) {
    throw DimensionMismatch("expected " +
                            std::to_string(artifact.spec.input_dim) +
                            " input features, got " + std::to_string(dim));
  }
  Eigen::VectorXd v(dim);
  const Eigen::Index qt = raw_signals.cols();
  for (Eigen::Index m = 0; m < raw_signals.rows(); ++m) {
    for (Eigen::Index t = 0; t < qt; ++t) {
      const Eigen::Index f = m * qt + t;
      v[f] = (raw_signals(m, t) - artifact.feature_mean[f]) /
             artifact.feature_std[f];
    }
  }
  const Eigen::MatrixXd z =
      forward(artifact.params, artifact.spec, v, false, nullptr, nullptr);
  return activate(z.col(0), artifact.spec);
}

namespace {

using nlohmann::ordered_json;

constexpr const char* kModelFormat = "wavelocate-model/1";

}  // namespace

void save_model(const ModelArtifact& artifact,
                const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  ordered_json j;
  j["format"] = kModelFormat;
  j["network"] = {{"input_dim", artifact.spec.input_dim},
                  {"hidden", artifact.spec.hidden},
                  {"num_components", artifact.spec.num_components},
                  {"dropout_prob", artifact.spec.dropout_prob},
                  {"variance_floor", artifact.spec.variance_floor}};
  j["training"] = {
      {"learning_rate", artifact.config.learning_rate},
      {"beta1", artifact.config.beta1},
      {"beta2", artifact.config.beta2},
      {"epsilon", artifact.config.epsilon},
      {"batch_size", artifact.config.batch_size},
      {"epochs", artifact.config.epochs},
      {"dropout_prob", artifact.config.dropout_prob},
      {"variance_floor", artifact.config.variance_floor},
      {"clip_norm", artifact.config.clip_norm},
      {"seed", artifact.config.seed},
      {"multi_damage_target",
       artifact.config.multi_target == MultiTarget::Each ? "each" : "average"}};
  j["standardization"] = {
      {"mean",
       std::vector<double>(artifact.feature_mean.data(),
                           artifact.feature_mean.data() +
                               artifact.feature_mean.size())},
      {"std", std::vector<double>(artifact.feature_std.data(),
                                  artifact.feature_std.data() +
                                      artifact.feature_std.size())}};
  ordered_json folds = ordered_json::array();
  for (const auto& f : artifact.log.folds) {
    folds.push_back({{"fold", f.fold}, {"val_nll", f.val_nll}});
  }
  ordered_json epochs = ordered_json::array();
  for (const auto& e : artifact.log.epochs) {
    ordered_json entry = {{"epoch", e.epoch}, {"train_nll", e.train_nll}};
    if (std::isfinite(e.val_nll)) {
      entry["val_nll"] = e.val_nll;
    } else {
      entry["val_nll"] = nullptr;
    }
    epochs.push_back(entry);
  }
  j["log"] = {{"folds", folds}, {"epochs", epochs}};

  std::ofstream jf(dir / "model.json", std::ios::trunc);
  if (!jf) throw IoError("cannot write model.json");
  jf << j.dump(2) << "\n";
  if (!jf) throw IoError("model.json write failed");

  std::ofstream pf(dir / "params.f64", std::ios::binary | std::ios::trunc);
  if (!pf) throw IoError("cannot write params.f64");
  for (int l = 0; l < 4; ++l) {
    for (Eigen::Index i = 0; i < artifact.params.w[l].size(); ++i) {
      detail::put_f64(pf, artifact.params.w[l].data()[i]);
    }
    for (Eigen::Index i = 0; i < artifact.params.b[l].size(); ++i) {
      detail::put_f64(pf, artifact.params.b[l][i]);
    }
  }
  if (!pf) throw IoError("params.f64 write failed");
}

ModelArtifact load_model(const std::filesystem::path& dir) {
  std::ifstream jf(dir / "model.json");
  if (!jf) throw IoError("cannot open " + (dir / "model.json").string());
  ordered_json j;
  try {
    jf >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed model.json: " + std::string(e.what()));
  }
  try {
    if (j.at("format").get<std::string>() != kModelFormat) {
      throw IoError("unsupported model format");
    }
    ModelArtifact artifact;
    const auto& net = j.at("network");
    artifact.spec.input_dim = net.at("input_dim").get<int>();
    const auto hidden = net.at("hidden").get<std::vector<int>>();
    if (hidden.size() != 3) throw IoError("expected 3 hidden layer widths");
    std::copy(hidden.begin(), hidden.end(), artifact.spec.hidden.begin());
    artifact.spec.num_components = net.at("num_components").get<int>();
    artifact.spec.dropout_prob = net.at("dropout_prob").get<double>();
    artifact.spec.variance_floor = net.at("variance_floor").get<double>();

    const auto& tr = j.at("training");
    artifact.config.learning_rate = tr.at("learning_rate").get<double>();
    artifact.config.beta1 = tr.at("beta1").get<double>();
    artifact.config.beta2 = tr.at("beta2").get<double>();
    artifact.config.epsilon = tr.at("epsilon").get<double>();
    artifact.config.batch_size = tr.at("batch_size").get<int>();
    artifact.config.epochs = tr.at("epochs").get<int>();
    artifact.config.dropout_prob = tr.at("dropout_prob").get<double>();
    artifact.config.variance_floor = tr.at("variance_floor").get<double>();
    artifact.config.clip_norm = tr.at("clip_norm").get<double>();
    artifact.config.seed = tr.at("seed").get<std::uint64_t>();
    artifact.config.multi_target =
        tr.at("multi_damage_target").get<std::string>() == "each"
            ? MultiTarget::Each
            : MultiTarget::Average;

    const auto mean =
        j.at("standardization").at("mean").get<std::vector<double>>();
    const auto sd = j.at("standardization").at("std").get<std::vector<double>>();
    if (static_cast<int>(mean.size()) != artifact.spec.input_dim ||
        static_cast<int>(sd.size()) != artifact.spec.input_dim) {
      throw IoError("standardization vectors do not match input_dim");
    }
    artifact.feature_mean =
        Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
    artifact.feature_std =
        Eigen::Map<const Eigen::VectorXd>(sd.data(), sd.size());

    for (const auto& f : j.at("log").at("folds")) {
      artifact.log.folds.push_back(
          {f.at("fold").get<int>(), f.at("val_nll").get<double>()});
    }
    for (const auto& e : j.at("log").at("epochs")) {
      const double val = e.at("val_nll").is_null()
                             ? std::numeric_limits<double>::quiet_NaN()
                             : e.at("val_nll").get<double>();
      artifact.log.epochs.push_back(
          {e.at("epoch").get<int>(), e.at("train_nll").get<double>(), val});
    }

    artifact.spec.validate();
    RngStream dummy(0);
    artifact.params = Params::initial(artifact.spec, dummy);  // shapes only
    std::ifstream pf(dir / "params.f64", std::ios::binary);
    if (!pf) throw IoError("cannot open params.f64");
    for (int l = 0; l < 4; ++l) {
      for (Eigen::Index i = 0; i < artifact.params.w[l].size(); ++i) {
        artifact.params.w[l].data()[i] = detail::get_f64(pf);
      }
      for (Eigen::Index i = 0; i < artifact.params.b[l].size(); ++i) {
        artifact.params.b[l][i] = detail::get_f64(pf);
      }
    }
    char extra;
    if (pf.read(&extra, 1)) throw IoError("trailing bytes in params.f64");
    return artifact;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("model.json is missing required fields: " +
                  std::string(e.what()));
  }
}

}  // namespace wavelocate::mdn
