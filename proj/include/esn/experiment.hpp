#pragma once

#include "esn/config.hpp"
#include "esn/dynamics.hpp"
#include "esn/hyperopt.hpp"
#include "esn/metrics.hpp"
#include "esn/prediction.hpp"
#include "esn/reservoir.hpp"
#include "esn/training.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace esn {

/// A drive system picked by family name plus the one parameter that varies
/// between experiments: c for Rössler, rho for Lorenz.
struct DriveChoice {
  std::string model = "rossler";
  double value = 18.0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::filesystem::path output_dir = "runs/experiment";
  std::uint64_t seed = 0;
  double dt = 0.01;

  // Coupled system shared by every run.
  RosslerParams response{};
  double epsilon = 0.3;
  std::array<double, 6> initial_state{1, 1, 1, 1, 1, 1};
  Eigen::Index spinup_steps = 5000;
  RosslerParams rossler_drive{};  // c is overridden by DriveChoice::value
  LorenzParams lorenz_drive{};    // rho is overridden by DriveChoice::value

  EsnParams esn{};

  struct Train {
    std::string drive = "rossler";
    std::vector<double> values{5.0, 10.0, 15.0};
    Eigen::Index steps = 60000;
    Eigen::Index transient = 1000;
    ColumnLayout layout{};
  } train;

  struct Predict {
    DriveChoice drive{};
    Eigen::Index warmup = 1000;
    Eigen::Index steps = 10000;
    WarmupMode warmup_mode = WarmupMode::TeacherForced;
    NrmseNormalization normalization = NrmseNormalization::Std;
    std::vector<double> initial_response;  // empty: taken from the true response
  } predict;

  struct Sweep {
    Eigen::Index realizations = 100;
    Eigen::Index bins = 20;
  } sweep;

  struct Scale {
    DriveChoice drive{"lorenz", 38.0};
    std::vector<double> amplitudes{0.7, 1.0, 1.3};
    std::vector<double> frequencies{0.7, 1.0, 1.3};
  } scale;

  struct Hyperopt {
    std::string method = "gp";
    Eigen::Index budget = 30;
    Eigen::Index realizations = 5;
    Eigen::Index warmup = 1000;
    Eigen::Index horizon = 2000;
    Eigen::Index initial_points = 10;
    Eigen::Index candidates = 1000;
    DriveChoice drive{"rossler", 12.0};
    SearchSpace space{};
  } hyperopt;
};

ExperimentConfig parse_experiment_config(const ConfigDocument& doc);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Every field, defaults included, in the syntax the parser reads back.
std::string to_toml(const ExperimentConfig& config);
void validate(const ExperimentConfig& config);

CoupledSystemSpec make_spec(const ExperimentConfig& config, const DriveChoice& drive);
std::vector<CoupledSystemSpec> training_specs(const ExperimentConfig& config);
/// Training settings with the series left empty.
TrainingConfig training_config(const ExperimentConfig& config);
/// Training settings with the series simulated.
TrainingConfig simulated_training_config(const ExperimentConfig& config);
PredictionConfig prediction_config(const ExperimentConfig& config);
/// Simulates `drive` long enough for warmup + steps predictions and splits
/// it under `layout`.
PredictionTask make_task(const ExperimentConfig& config, const DriveChoice& drive, Eigen::Index warmup,
                         Eigen::Index steps, const ColumnLayout& layout);
LossTask make_loss_task(const ExperimentConfig& config);

/// One cell of the amplitude/frequency grid: log10 NRMSE of the prediction
/// for the drive scaled by (amp, freq), or +inf when it diverges.
struct ScaleCell {
  double amplitude = 1.0;
  double frequency = 1.0;
  double log10_nrmse = 0.0;
};

/// The base coupled trajectory is simulated once, long enough for the
/// largest frequency factor. The true response for a rescaled drive is
/// re-integrated from the scaled z_d signal; an unchanged drive keeps the
/// simulated response.
std::vector<ScaleCell> scale_study(const EsnModel& model, const ExperimentConfig& config);
void write_scale_grid_csv(const ExperimentConfig& config, const std::vector<ScaleCell>& cells,
                          const std::filesystem::path& path);

/// Command-line overrides shared by the subcommands.
struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::string> method;
  std::optional<std::filesystem::path> resume;
  std::optional<std::filesystem::path> model;   // default: <out>/model.json
  std::optional<std::filesystem::path> params;  // best_params.json to apply over [esn]
};

/// Loads the config and applies the overrides.
ExperimentConfig resolve_config(const CommandOptions& options);

/// Each command writes its artifacts, effective_config.toml and
/// manifest.json into the output directory and returns the exit code.
int cmd_train(const CommandOptions& options);
int cmd_predict(const CommandOptions& options);
int cmd_sweep(const CommandOptions& options);
int cmd_scale(const CommandOptions& options);
int cmd_hyperopt(const CommandOptions& options);

/// SHA-256 of a file as lowercase hex.
std::string sha256_file(const std::filesystem::path& path);
/// Lists every regular file in `dir` except manifest.json and timing.json
/// with its size and SHA-256.
void write_manifest(const std::filesystem::path& dir);

}  // namespace esn
