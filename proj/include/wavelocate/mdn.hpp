#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "wavelocate/geometry.hpp"
#include "wavelocate/rng.hpp"
#include "wavelocate/wavefield.hpp"

namespace wavelocate::mdn {

// predictions are 2-D (damage coordinates)
inline constexpr int kOutputDims = 2;

struct NetworkSpec {
  int input_dim = 0;
  // desk-scale widths; the full-scale 600/300/60 stack is a config choice
  std::array<int, 3> hidden = {128, 64, 32};
  int num_components = 3;
  double dropout_prob = 0.2;
  double variance_floor = 1e-6;

  // raw output per component: 2 means, 2 log variances, 1 weight logit
  int output_dim() const { return 5 * num_components; }
  void validate() const;
};

// Gaussian mixture over damage locations: diagonal covariances, weights on
// the simplex.
struct GmmPrediction {
  Eigen::MatrixXd means;      // k x 2
  Eigen::MatrixXd variances;  // k x 2, strictly positive
  Eigen::VectorXd weights;    // k, sums to 1

  int num_components() const { return static_cast<int>(weights.size()); }
};

struct Params {
  std::array<Eigen::MatrixXd, 4> w;
  std::array<Eigen::VectorXd, 4> b;

  static Params initial(const NetworkSpec& spec, RngStream& rng);
  std::size_t count() const;
  bool all_finite() const;
};

// per-tensor gradients (or Adam moments); same shapes as Params
struct Grads {
  std::array<Eigen::MatrixXd, 4> w;
  std::array<Eigen::VectorXd, 4> b;

  static Grads zeros_like(const Params& p);
  double global_norm() const;
  void scale(double s);
};

// Raw output layer to mixture parameters: means pass through, variances are
// exp of the raw values clamped to the floor, weights are a softmax.
// Layout of z: [means (2k) | log variances (2k) | weight logits (k)],
// component-major inside each block.
GmmPrediction activate(const Eigen::VectorXd& z, const NetworkSpec& spec);

// intermediate activations kept for backprop
struct ForwardCache {
  Eigen::MatrixXd x;
  std::array<Eigen::MatrixXd, 3> z_hidden;  // pre-activation
  std::array<Eigen::MatrixXd, 3> h;         // post ReLU and dropout
  std::array<Eigen::MatrixXd, 3> mask;      // dropout scale factors (train)
  Eigen::MatrixXd z_out;
  bool train_mode = false;
};

// Batched forward pass; columns of x are samples. Train mode applies inverted
// dropout after each hidden ReLU using draws from dropout_rng. Throws
// NonFiniteActivation if the output layer stops being finite.
Eigen::MatrixXd forward(const Params& params, const NetworkSpec& spec,
                        const Eigen::MatrixXd& x, bool train_mode,
                        RngStream* dropout_rng, ForwardCache* cache);

// Negative log likelihood of a target set under one prediction, averaged over
// the targets. Component terms are accumulated in sorted order, so the value
// is invariant under component permutation.
double nll(const GmmPrediction& prediction, std::span<const Point2> targets);

// One unit of supervision: a sample (column of x) plus the target list its
// loss averages over.
struct TargetSet {
  std::vector<Point2> points;
};

// Mean loss over the batch and, when grads is non-null, its exact gradient.
// Gradients flow through the softmax, the exp (zero where the variance floor
// clamps), and the dropout masks recorded in the cache.
double batch_loss(const Params& params, const NetworkSpec& spec,
                  const Eigen::MatrixXd& x, std::span<const TargetSet> targets,
                  bool train_mode, RngStream* dropout_rng, Grads* grads);

enum class MultiTarget { Average, Each };

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 32;
  int epochs = 80;
  double dropout_prob = 0.2;
  double variance_floor = 1e-6;
  double clip_norm = 10.0;
  std::uint64_t seed = 1;
  MultiTarget multi_target = MultiTarget::Average;

  void validate() const;
};

struct EpochLogEntry {
  int epoch;
  double train_nll;  // running mean of minibatch losses
  double val_nll;    // inference-mode loss on the validation split
};

struct FoldLogEntry {
  int fold;
  double val_nll;
};

struct TrainLog {
  std::vector<FoldLogEntry> folds;
  std::vector<EpochLogEntry> epochs;
};

struct ModelArtifact {
  NetworkSpec spec;
  TrainConfig config;
  Params params;
  Eigen::VectorXd feature_mean, feature_std;
  TrainLog log;
};

// Adam training on the dataset's train split. With cross_validate, three
// folds (sample index mod 3) are trained first and their validation losses
// logged, then the final model is retrained on the full split.
ModelArtifact train(const wavefield::Dataset& dataset, NetworkSpec spec,
                    const TrainConfig& config, bool cross_validate = false);

// Mixture prediction for one sample of raw (unstandardized) pair signals.
GmmPrediction predict(const ModelArtifact& artifact,
                      const Eigen::MatrixXd& raw_signals);

// Model directory: model.json (spec, config, standardization, log) plus
// params.f64 (little-endian float64, tensors in layer order, column-major).
void save_model(const ModelArtifact& artifact,
                const std::filesystem::path& dir);
ModelArtifact load_model(const std::filesystem::path& dir);

}  // namespace wavelocate::mdn
