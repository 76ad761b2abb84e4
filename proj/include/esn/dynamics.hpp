#pragma once

#include "esn/errors.hpp"
#include "esn/time_series.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <variant>

namespace esn {

struct RosslerParams {
  double a = 0.2;
  double b = 0.2;
  double c = 5.7;
};

struct LorenzParams {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
};

using DriveModel = std::variant<RosslerParams, LorenzParams>;

/// Drive (Rossler or Lorenz) coupled one-way into a Rossler response through
/// epsilon * (z_d - z_r) in the response z equation. State layout is
/// (x_d, y_d, z_d, x_r, y_r, z_r).
struct CoupledSystemSpec {
  DriveModel drive = RosslerParams{};
  RosslerParams response{};
  double epsilon = 0.3;
  std::array<double, 6> initial_state{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
};

using State6 = Eigen::Matrix<double, 6, 1>;

inline constexpr double kBlowupThreshold = 1e6;
inline constexpr int kDriveZ = 2;

/// Classical fourth-order Runge-Kutta step. `step` only labels the error.
template <typename Field, typename Scalar, int Rows>
Eigen::Matrix<Scalar, Rows, 1> rk4_step(Field&& f, const Eigen::Matrix<Scalar, Rows, 1>& x, Scalar dt,
                                        std::size_t step = 0) {
  const Scalar half = dt / Scalar(2);
  const Eigen::Matrix<Scalar, Rows, 1> k1 = f(x);
  const Eigen::Matrix<Scalar, Rows, 1> k2 = f((x + half * k1).eval());
  const Eigen::Matrix<Scalar, Rows, 1> k3 = f((x + half * k2).eval());
  const Eigen::Matrix<Scalar, Rows, 1> k4 = f((x + dt * k3).eval());
  Eigen::Matrix<Scalar, Rows, 1> next = x + (dt / Scalar(6)) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
  if (!next.allFinite()) throw Error(ErrorKind::IntegrationBlowup, "rk4: non-finite state", step);
  return next;
}

/// Right-hand side of the coupled system.
State6 coupled_vector_field(const CoupledSystemSpec& spec, const State6& s);

/// Integrates `spinup_steps` silently, then records `n_steps` rows starting
/// with the state reached after spin-up.
TimeSeries simulate_coupled(const CoupledSystemSpec& spec, Eigen::Index n_steps, double dt,
                            Eigen::Index spinup_steps = 0);

/// Integrates only the response, forced by a sampled drive z signal. RK4
/// half-step drive values come from four-point cubic interpolation.
/// Returns an (n x 3) series (x_r, y_r, z_r) aligned with `drive_z`.
TimeSeries simulate_driven_response(const Eigen::VectorXd& drive_z, double dt, const RosslerParams& response,
                                    double epsilon, const Eigen::Vector3d& initial_response);

/// Scales the drive columns by `amp` and resamples them in time by `freq`
/// (freq > 1 speeds the signal up) with linear interpolation on the original
/// grid. Other columns are copied. Output is truncated to the rows where
/// every column is defined.
TimeSeries scale_drive(const TimeSeries& series, std::span<const int> drive_columns, double amp, double freq);

}  // namespace esn
