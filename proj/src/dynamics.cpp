#include "esn/dynamics.hpp"

#include <cmath>
#include <string>
#include <type_traits>

namespace esn {

namespace {

const std::vector<std::string> kCoupledLabels{"x_d", "y_d", "z_d", "x_r", "y_r", "z_r"};

Eigen::Vector3d rossler(const RosslerParams& p, double x, double y, double z) {
  return {-y - z, x + p.a * y, p.b + z * (x - p.c)};
}

Eigen::Vector3d lorenz(const LorenzParams& p, double x, double y, double z) {
  return {p.sigma * (y - x), p.rho * x - y - x * z, x * y - p.beta * z};
}

void check_bounded(const State6& s, std::size_t step) {
  if (!s.allFinite() || s.cwiseAbs().maxCoeff() > kBlowupThreshold)
    throw Error(ErrorKind::IntegrationBlowup, "simulate_coupled: trajectory diverged at step " + std::to_string(step),
                step);
}

// Cubic interpolation of a uniformly sampled signal at the midpoint of
// [i, i+1]; one-sided quadratic at the ends.
double midpoint_value(const Eigen::VectorXd& v, Eigen::Index i) {
  const Eigen::Index n = v.size();
  if (n == 2) return 0.5 * (v(0) + v(1));
  if (i == 0) return (3.0 * v(0) + 6.0 * v(1) - v(2)) / 8.0;
  if (i == n - 2) return (-v(n - 3) + 6.0 * v(n - 2) + 3.0 * v(n - 1)) / 8.0;
  return (-v(i - 1) + 9.0 * v(i) + 9.0 * v(i + 1) - v(i + 2)) / 16.0;
}

}  // namespace

State6 coupled_vector_field(const CoupledSystemSpec& spec, const State6& s) {
  State6 ds;
  ds.head<3>() = std::visit(
      [&](const auto& p) -> Eigen::Vector3d {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, RosslerParams>)
          return rossler(p, s(0), s(1), s(2));
        else
          return lorenz(p, s(0), s(1), s(2));
      },
      spec.drive);
  ds.tail<3>() = rossler(spec.response, s(3), s(4), s(5));
  ds(5) += spec.epsilon * (s(2) - s(5));
  return ds;
}

TimeSeries simulate_coupled(const CoupledSystemSpec& spec, Eigen::Index n_steps, double dt, Eigen::Index spinup_steps) {
  if (n_steps < 2) throw Error(ErrorKind::InvalidParams, "simulate_coupled: n_steps must be >= 2");
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidParams, "simulate_coupled: dt must be positive");
  if (spinup_steps < 0) throw Error(ErrorKind::InvalidParams, "simulate_coupled: negative spin-up");
  if (!std::isfinite(spec.epsilon)) throw Error(ErrorKind::InvalidParams, "simulate_coupled: epsilon not finite");

  State6 s = Eigen::Map<const State6>(spec.initial_state.data());
  if (!s.allFinite()) throw Error(ErrorKind::InvalidParams, "simulate_coupled: initial state not finite");

  const auto field = [&spec](const State6& x) { return coupled_vector_field(spec, x); };
  std::size_t step = 0;
  for (Eigen::Index i = 0; i < spinup_steps; ++i, ++step) {
    s = rk4_step(field, s, dt, step);
    check_bounded(s, step);
  }

  Eigen::MatrixXd out(n_steps, 6);
  out.row(0) = s.transpose();
  for (Eigen::Index i = 1; i < n_steps; ++i, ++step) {
    s = rk4_step(field, s, dt, step);
    check_bounded(s, step);
    out.row(i) = s.transpose();
  }
  return TimeSeries(std::move(out), dt, kCoupledLabels);
}

TimeSeries simulate_driven_response(const Eigen::VectorXd& drive_z, double dt, const RosslerParams& response,
                                    double epsilon, const Eigen::Vector3d& initial_response) {
  const Eigen::Index n = drive_z.size();
  if (n < 2) throw Error(ErrorKind::InvalidParams, "simulate_driven_response: drive needs >= 2 samples");
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidParams, "simulate_driven_response: dt must be positive");

  Eigen::MatrixXd out(n, 3);
  Eigen::Vector3d s = initial_response;
  out.row(0) = s.transpose();
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double z0 = drive_z(i);
    const double zh = midpoint_value(drive_z, i);
    const double z1 = drive_z(i + 1);
    const auto f = [&](const Eigen::Vector3d& x, double zd) {
      Eigen::Vector3d d = rossler(response, x(0), x(1), x(2));
      d(2) += epsilon * (zd - x(2));
      return d;
    };
    const double h = dt / 2.0;
    const Eigen::Vector3d k1 = f(s, z0);
    const Eigen::Vector3d k2 = f(s + h * k1, zh);
    const Eigen::Vector3d k3 = f(s + h * k2, zh);
    const Eigen::Vector3d k4 = f(s + dt * k3, z1);
    s += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!s.allFinite() || s.cwiseAbs().maxCoeff() > kBlowupThreshold)
      throw Error(ErrorKind::IntegrationBlowup, "simulate_driven_response: diverged", static_cast<std::size_t>(i));
    out.row(i + 1) = s.transpose();
  }
  return TimeSeries(std::move(out), dt, {"x_r", "y_r", "z_r"});
}

TimeSeries scale_drive(const TimeSeries& series, std::span<const int> drive_columns, double amp, double freq) {
  if (!(amp > 0.0) || !(freq > 0.0) || !std::isfinite(amp) || !std::isfinite(freq))
    throw Error(ErrorKind::InvalidScaling, "scale_drive: amp and freq must be positive");
  const Eigen::Index t = series.steps();
  for (int c : drive_columns)
    if (c < 0 || c >= series.dims()) throw Error(ErrorKind::InvalidScaling, "scale_drive: bad drive column");

  // Row i samples source position i * freq, which must stay inside [0, t-1].
  const auto reach = static_cast<Eigen::Index>(std::floor(static_cast<double>(t - 1) / freq)) + 1;
  const Eigen::Index rows = std::min(t, reach);
  if (rows < 2) throw Error(ErrorKind::InvalidScaling, "scale_drive: empty result after truncation");

  Eigen::MatrixXd out = series.values().topRows(rows);
  for (int c : drive_columns) {
    const auto src = series.values().col(c);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double pos = static_cast<double>(i) * freq;
      const auto k = static_cast<Eigen::Index>(std::floor(pos));
      const double frac = pos - static_cast<double>(k);
      const double v = (frac == 0.0 || k + 1 >= t) ? src(k) : src(k) + frac * (src(k + 1) - src(k));
      out(i, c) = amp * v;
    }
  }
  return TimeSeries(std::move(out), series.dt(), series.labels());
}

}  // namespace esn
