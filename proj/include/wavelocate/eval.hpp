#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "wavelocate/mdn.hpp"
#include "wavelocate/mfp.hpp"
#include "wavelocate/wavefield.hpp"

namespace wavelocate::eval {

// 0.95 quantile of the chi-square distribution with 2 degrees of freedom,
// -2 ln(0.05); gates the squared Mahalanobis distance for 95% intervals
inline constexpr double kCi95Threshold = 5.991464547107979;

// Component-to-damage matching: every predicted mean attaches to its nearest
// true damage (ties to the lower damage index); each damage selects its
// highest-weight attached component (ties to the lower component index);
// damages left without any component fall back to the globally nearest mean.
struct Assignment {
  std::vector<int> component_to_damage;  // size k
  std::vector<int> damage_to_component;  // size num_damages
};

Assignment assign_components(const mdn::GmmPrediction& prediction,
                             std::span<const Point2> truths);

// aligned per-damage estimates for one prediction, in truth order
std::vector<Point2> selected_means(const mdn::GmmPrediction& prediction,
                                   std::span<const Point2> truths);

// Average localization error: per sample the mean Euclidean error over its
// aligned damage pairs, then the mean (and sample standard deviation) across
// samples.
struct AleResult {
  double ale = 0.0;
  double ale_std = 0.0;
  std::vector<double> per_sample;
};

AleResult ale(const std::vector<std::vector<Point2>>& estimates,
              const std::vector<std::vector<Point2>>& truths);

// Fraction of (sample, damage) pairs whose truth falls inside the selected
// component's 95% ellipse.
double ci95_coverage(const std::vector<mdn::GmmPrediction>& predictions,
                     const std::vector<std::vector<Point2>>& truths);

// largest per-axis component variance over a set of predictions
double max_component_variance(
    const std::vector<mdn::GmmPrediction>& predictions);

// mean over samples of the mean mixture log likelihood of their true damages
double mean_loglik(const std::vector<mdn::GmmPrediction>& predictions,
                   const std::vector<std::vector<Point2>>& truths);

enum class Method { Mdn, Mfp };

struct SweepSpec {
  std::vector<double> snr_db;
  std::vector<double> w_distort;
  std::vector<int> num_damages;
  std::vector<Method> methods;
};

struct SweepContext {
  wavefield::ScenarioConfig scenario;  // per-cell uncertainty/damages overwritten
  wavefield::SplitCounts counts;
  mdn::NetworkSpec network;  // num_components 0 means damages-per-cell + 1
  mdn::TrainConfig training;
  mfp::QueryGrid grid;
  std::size_t cache_budget_bytes = std::size_t{512} << 20;
  bool cv3 = false;
  int export_surfaces = 0;  // first N test ambiguity surfaces per mfp cell
  std::filesystem::path export_dir;
};

struct CellResult {
  double snr_db = 0.0;
  double w_distort = 0.0;
  int num_damages = 1;
  Method method = Method::Mdn;
  double ale = 0.0;
  double ale_std = 0.0;
  // NaN when the method does not produce the quantity (mfp rows)
  double ci95 = 0.0;
  double max_var = 0.0;
  double mean_loglik = 0.0;
  double wall_time_s = 0.0;
};

struct MetricReport {
  std::uint64_t master_seed = 0;
  std::vector<CellResult> rows;
};

// Full grid scan over snr x distortion x damage-count cells. Each cell draws
// its dataset from a seed derived from (master_seed, cell indices), so a
// rerun of the same spec and seed reproduces the report bitwise.
MetricReport run_sweep(const SweepContext& context, const SweepSpec& spec,
                       std::uint64_t master_seed);

// CSV: one row per cell and method, NaN-valued fields left empty. JSON mirror
// carries the same rows plus fixed provenance notes.
void write_report_csv(const MetricReport& report, std::ostream& out);
void write_report_json(const MetricReport& report, std::ostream& out);

std::string method_name(Method method);

}  // namespace wavelocate::eval
