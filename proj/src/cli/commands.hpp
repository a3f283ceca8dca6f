#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace fimscore::cli {

// Collects what a run read and wrote; serialised as <out>/manifest.json.
class RunContext {
 public:
  RunContext(std::string subcommand, nlohmann::json config, std::ostream& out)
      : subcommand_(std::move(subcommand)), config_(std::move(config)), out_(out) {}

  void add_input(const std::filesystem::path& path);
  void add_artifact(const std::filesystem::path& path);
  std::ostream& out() { return out_; }
  const std::string& subcommand() const { return subcommand_; }
  const nlohmann::json& config() const { return config_; }

  // Sidecar <path>.json naming the producing subcommand and its config.
  void describe_artifact(const std::filesystem::path& path, nlohmann::json extra = nlohmann::json::object());
  void write_manifest(const std::filesystem::path& out_dir);

 private:
  std::string subcommand_;
  nlohmann::json config_;
  std::ostream& out_;
  nlohmann::json inputs_ = nlohmann::json::array();
  nlohmann::json artifacts_ = nlohmann::json::array();
};

struct GenDataOptions {
  std::string dist = "two_moons";
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string out;
  std::string name;
  double eval_fraction = 0.5;
  std::optional<double> noise;
  std::optional<double> side;
  std::optional<double> sigma;
  std::optional<double> spacing;
  std::optional<std::size_t> k;
  std::optional<std::size_t> cells;
  std::optional<double> cell_size;
  std::vector<double> radii;
};

struct TrainOptions {
  std::string data;
  std::string out;
  std::string model = "flow";
  std::size_t blocks = 6;
  std::size_t hidden = 32;
  double clamp = 5.0;
  double init_scale = 0.01;
  std::size_t epochs = 200;
  std::size_t batch_size = 50;
  double lr = 1e-3;
  double fit_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct FeaturesOptions {
  std::string model;
  std::string data;
  std::string out;
  std::string split = "eval";
  std::size_t batch_size = 5;
  std::size_t max_batches = 0;  // 0: all full batches
  double floor = 1e-300;
};

struct FitOptions {
  std::string features;
  std::string out;
};

struct ScoreOptions {
  std::string method = "ours";
  std::string out;
  std::string detector;
  std::string features;
  std::string model;
  std::string data;
  std::string fit_data;
  std::string split = "eval";
  std::size_t batch_size = 5;
};

struct EvalOptions {
  std::vector<std::string> train;  // NAME=DIR from `train`
  std::vector<std::string> test;   // NAME=DMAT, test-only columns
  std::vector<std::string> methods{"ours", "fisher", "typicality", "likelihood"};
  std::vector<std::size_t> batch_sizes{1, 5};
  std::size_t n_eval_batches = 200;
  std::uint64_t seed = 0;
  std::string out;
  std::string in_scores;
  std::string ood_scores;
};

struct FimProbeOptions {
  std::string model;
  std::string out;
  std::vector<std::size_t> layers;  // default: first two layers
  std::size_t weights_per_layer = 50;
  std::size_t n = 1024;
  std::uint64_t seed = 0;
};

struct InvarianceOptions {
  std::string model;  // checkpoint; empty: random models of --model-kind
  std::string model_kind = "flow";
  std::size_t dim = 2;
  std::vector<std::string> transforms{"identity", "affine", "scale", "sinh", "asinh", "exp"};
  std::size_t points = 20;
  std::uint64_t seed = 0;
  double grad_tol = 1e-10;
  double value_tol = 1e-9;
  std::string out;
};

struct TvVolumeOptions {
  double alpha = 1.0;
  std::size_t d = 1;
  std::size_t mc_samples = 0;
  std::uint64_t seed = 0;
  std::optional<double> expect_log10;
  double tol = 0.01;
  std::string out;
};

// Each returns an exit code; library errors propagate as exceptions.
int cmd_gen_data(const GenDataOptions& o, RunContext& ctx);
int cmd_train(const TrainOptions& o, RunContext& ctx);
int cmd_features(const FeaturesOptions& o, RunContext& ctx);
int cmd_fit(const FitOptions& o, RunContext& ctx);
int cmd_score(const ScoreOptions& o, RunContext& ctx);
int cmd_eval(const EvalOptions& o, RunContext& ctx);
int cmd_fim_probe(const FimProbeOptions& o, RunContext& ctx);
int cmd_invariance_check(const InvarianceOptions& o, RunContext& ctx);
int cmd_tv_volume(const TvVolumeOptions& o, RunContext& ctx);

}  // namespace fimscore::cli
