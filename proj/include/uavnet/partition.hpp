#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavnet/channel.hpp"
#include "uavnet/grid.hpp"

namespace uavnet {

struct UavState {
  int id = 0;
  UavPose pose;
  double available_energy_j = 1.0;     // P_a
  double bandwidth_hz = 1e7;           // B_i
  double mobility_rate_j_per_m = 0.1;  // gamma

  void validate() const {
    if (!(available_energy_j > 0.0) || !(bandwidth_hz > 0.0) || !(mobility_rate_j_per_m > 0.0) ||
        !(pose.h_m > 0.0))
      throw std::invalid_argument("uav " + std::to_string(id) + ": all parameters must be positive");
  }
};

// Transmit power a UAV needs for a set of cells: sum of the per-cell minimum
// power times cell area, with the per-channel bandwidth B_i / N_i split.
inline double transmit_power_integral(const ChannelParams& channel, const UavPose& pose,
                                      double bandwidth_hz, double n_users, const DemandGrid& grid,
                                      const std::vector<int>& cells) {
  double acc = 0.0;
  for (int c : cells) {
    const double beta = grid.rate_density[c];
    if (beta <= 0.0) continue;
    if (!(n_users >= 1.0))
      throw std::invalid_argument("transmit_power_integral: demand cells but n_users < 1");
    const Vec2 p = grid.cell_center(c);
    const double pl = mean_path_loss_linear(channel, pose, {p.x, p.y});
    acc += min_transmit_power(channel, bandwidth_hz, n_users, beta, pl) * grid.cell_area;
  }
  return acc;
}

struct PartitionOptions {
  double tol = 0.01;   // max |share_i/kappa - 1|
  int max_rounds = 300;
  double step = 0.5;   // multiplier update exponent
};

struct Partition {
  std::vector<int> assignment;          // cell index -> fleet index
  std::vector<double> uav_power_w;      // integral of P_min over each A_i
  std::vector<double> n_users;          // N_i, user-density integral over A_i
  std::vector<double> rate_demand_bps;  // alpha_i
  std::vector<double> shares;           // power_i / Pa_i
  std::vector<double> multipliers;      // final lambda_i
  double kappa = 0.0;                   // total power / sum Pa
  double total_power_w = 0.0;
  int rounds = 0;
  double max_imbalance = 0.0;
};

struct PartitionConvergenceError : std::runtime_error {
  double best_imbalance;
  explicit PartitionConvergenceError(double imbalance)
      : std::runtime_error("partition_solve: no convergence, best imbalance " +
                           std::to_string(imbalance)),
        best_imbalance(imbalance) {}
};

namespace detail {

// Working state of the partition descent: exact per-UAV loads and powers.
class PartitionState {
 public:
  PartitionState(const std::vector<UavState>& fleet, const DemandGrid& grid,
                 const ChannelParams& channel)
      : fleet_(fleet), grid_(grid), I_(static_cast<int>(fleet.size())), C_(grid.size()) {
    pl_.resize(static_cast<std::size_t>(I_) * C_);
    for (int i = 0; i < I_; ++i)
      for (int c = 0; c < C_; ++c) {
        const Vec2 p = grid.cell_center(c);
        pl_[static_cast<std::size_t>(i) * C_ + c] =
            mean_path_loss_linear(channel, fleet[i].pose, {p.x, p.y});
      }
    noise_ = channel.noise_w_per_hz();
    gain_ = channel.antenna_gain_linear();
  }

  double pmin(int i, int c, double n) const {
    const double beta = grid_.rate_density[c];
    if (beta <= 0.0) return 0.0;
    const double b = fleet_[i].bandwidth_hz;
    const double coeff = b * noise_ * pl_[static_cast<std::size_t>(i) * C_ + c] / (gain_ * n);
    return coeff * (std::exp2(beta * n / b) - 1.0);
  }

  // d pmin / d n_users
  double dpmin(int i, int c, double n) const {
    const double beta = grid_.rate_density[c];
    if (beta <= 0.0) return 0.0;
    const double b = fleet_[i].bandwidth_hz;
    const double coeff = b * noise_ * pl_[static_cast<std::size_t>(i) * C_ + c] / gain_;
    const double e = std::exp2(beta * n / b);
    return coeff * (beta * std::numbers::ln2 * e / (b * n) - (e - 1.0) / (n * n));
  }

  // first-order objective change of moving cell c to UAV `to`; exact when the
  // cell carries no user mass
  double flip_delta_estimate(int c, int to, const std::vector<double>& lambda) const {
    const int from = assignment_[c];
    const double du = grid_.user_mass[c];
    return lambda[to] * (pmin(to, c, load(to)) * grid_.cell_area + du * dsum_[to]) -
           lambda[from] * (pmin(from, c, load(from)) * grid_.cell_area + du * dsum_[from]);
  }

  void assign_all(const std::vector<int>& assignment) {
    assignment_ = assignment;
    umass_.assign(I_, 0.0);
    cells_.assign(I_, {});
    for (int c = 0; c < C_; ++c) {
      umass_[assignment_[c]] += grid_.user_mass[c];
      cells_[assignment_[c]].push_back(c);
    }
    for (int i = 0; i < I_; ++i) recompute_power(i);
  }

  double load(int i) const { return std::max(1.0, umass_[i]); }
  double power(int i) const { return power_[i]; }
  const std::vector<int>& assignment() const { return assignment_; }
  double user_mass(int i) const { return umass_[i]; }

  // exact objective change of moving cell c to UAV `to` under multipliers
  double flip_delta(int c, int to, const std::vector<double>& lambda) const {
    const int from = assignment_[c];
    const double new_from = power_without(from, c);
    const double new_to = power_with(to, c);
    return lambda[to] * (new_to - power_[to]) + lambda[from] * (new_from - power_[from]);
  }

  void apply_flip(int c, int to) {
    const int from = assignment_[c];
    assignment_[c] = to;
    umass_[from] -= grid_.user_mass[c];
    umass_[to] += grid_.user_mass[c];
    auto& fc = cells_[from];
    fc.erase(std::find(fc.begin(), fc.end(), c));
    cells_[to].push_back(c);
    recompute_power(from);
    recompute_power(to);
  }

 private:
  void recompute_power(int i) {
    if (static_cast<int>(power_.size()) != I_) power_.assign(I_, 0.0);
    if (static_cast<int>(dsum_.size()) != I_) dsum_.assign(I_, 0.0);
    const double n = load(i);
    double acc = 0.0, dacc = 0.0;
    for (int c : cells_[i]) {
      acc += pmin(i, c, n);
      dacc += dpmin(i, c, n);
    }
    power_[i] = acc * grid_.cell_area;
    dsum_[i] = umass_[i] > 1.0 ? dacc * grid_.cell_area : 0.0;  // load pinned at the floor
  }
  double power_without(int i, int drop) const {
    const double n = std::max(1.0, umass_[i] - grid_.user_mass[drop]);
    double acc = 0.0;
    for (int c : cells_[i])
      if (c != drop) acc += pmin(i, c, n);
    return acc * grid_.cell_area;
  }
  double power_with(int i, int add) const {
    const double n = std::max(1.0, umass_[i] + grid_.user_mass[add]);
    double acc = pmin(i, add, n);
    for (int c : cells_[i]) acc += pmin(i, c, n);
    return acc * grid_.cell_area;
  }

  const std::vector<UavState>& fleet_;
  const DemandGrid& grid_;
  int I_, C_;
  std::vector<double> pl_;
  double noise_ = 0.0, gain_ = 1.0;
  std::vector<int> assignment_;
  std::vector<double> umass_;
  std::vector<double> power_;
  std::vector<double> dsum_;  // lambda-free load sensitivity of each UAV's power
  std::vector<std::vector<int>> cells_;
};

}  // namespace detail

// Fairness-constrained partition. Cells go to the UAV with the smallest
// multiplier-adjusted minimum power; the multipliers are driven
// multiplicatively until every UAV's power share matches its available-power
// share. Between multiplier updates the assignment descends the exact
// multiplier-adjusted objective one cell at a time (each accepted move must
// win by a relative margin), which makes the combined dynamics terminate.
inline Partition partition_solve(const std::vector<UavState>& fleet, const DemandGrid& grid,
                                 const ChannelParams& channel, const PartitionOptions& opts = {}) {
  if (fleet.empty()) throw std::invalid_argument("partition_solve: empty fleet");
  if (!grid.has_demand()) throw std::invalid_argument("partition_solve: grid has no demand");
  const int I = static_cast<int>(fleet.size());
  const int C = grid.size();
  constexpr double kFlipMargin = 1e-7;

  detail::PartitionState state(fleet, grid, channel);

  double pa_total = 0.0;
  for (const auto& u : fleet) pa_total += u.available_energy_j;

  std::vector<double> lambda(I, 1.0);

  // initial assignment: cheapest UAV per cell at a uniform load guess
  {
    const double guess = std::max(1.0, grid.total_users() / I);
    std::vector<int> init(C, 0);
    for (int c = 0; c < C; ++c) {
      int arg = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < I; ++i) {
        const double cost = state.pmin(i, c, guess);
        if (cost < best) {
          best = cost;
          arg = i;
        }
      }
      init[c] = arg;
    }
    state.assign_all(init);
  }

  double step = opts.step;
  double prev_imbalance = std::numeric_limits<double>::infinity();
  double best_imbalance = std::numeric_limits<double>::infinity();

  for (int round = 0; round < opts.max_rounds; ++round) {
    // descent sweeps: move single cells while a move beats the margin
    bool moved_any = true;
    for (int sweep = 0; sweep < 50 && moved_any; ++sweep) {
      moved_any = false;
      for (int c = 0; c < C; ++c) {
        if (grid.rate_density[c] <= 0.0 && grid.user_mass[c] <= 0.0) continue;
        const int from = state.assignment()[c];
        int best_to = from;
        double best_estimate = 0.0;
        const double scale =
            lambda[from] * state.pmin(from, c, state.load(from)) * grid.cell_area + 1e-300;
        for (int i = 0; i < I; ++i) {
          if (i == from) continue;
          const double estimate = state.flip_delta_estimate(c, i, lambda);
          if (estimate < best_estimate) {
            best_estimate = estimate;
            best_to = i;
          }
        }
        if (best_to == from) continue;
        const double delta = state.flip_delta(c, best_to, lambda);  // exact
        if (delta < -kFlipMargin * scale) {
          state.apply_flip(c, best_to);
          moved_any = true;
        }
      }
    }

    double total = 0.0;
    for (int i = 0; i < I; ++i) total += state.power(i);
    const double kappa = total / pa_total;
    std::vector<double> shares(I);
    double imbalance = 0.0;
    for (int i = 0; i < I; ++i) {
      shares[i] = state.power(i) / fleet[i].available_energy_j;
      imbalance = std::max(imbalance, std::abs(shares[i] / kappa - 1.0));
    }
    best_imbalance = std::min(best_imbalance, imbalance);

    if (imbalance <= opts.tol) {
      Partition out;
      out.assignment = state.assignment();
      out.uav_power_w.resize(I);
      out.n_users.resize(I);
      out.shares = shares;
      out.multipliers = lambda;
      out.kappa = kappa;
      out.total_power_w = total;
      out.rounds = round + 1;
      out.max_imbalance = imbalance;
      out.rate_demand_bps.assign(I, 0.0);
      std::vector<bool> has_demand(I, false);
      for (int c = 0; c < C; ++c) {
        out.rate_demand_bps[out.assignment[c]] += grid.rate_density[c] * grid.cell_area;
        if (grid.rate_density[c] > 0.0) has_demand[out.assignment[c]] = true;
      }
      for (int i = 0; i < I; ++i) {
        out.uav_power_w[i] = state.power(i);
        out.n_users[i] = has_demand[i] ? state.load(i) : 0.0;
      }
      return out;
    }

    // cool on worsening rounds, recover while improving
    if (imbalance > prev_imbalance)
      step = std::max(0.02, step * 0.75);
    else
      step = std::min(opts.step, step * 1.15);
    prev_imbalance = imbalance;

    // multiplicative multiplier update toward the fairness target; the ratio
    // clamp bounds each round's movement so large fleets cannot overshoot
    double log_mean = 0.0;
    for (int i = 0; i < I; ++i) {
      const double ratio = std::clamp(shares[i] / kappa, 0.5, 2.0);
      lambda[i] *= std::pow(ratio, step);
      log_mean += std::log(lambda[i]);
    }
    const double norm = std::exp(log_mean / I);
    for (double& l : lambda) l /= norm;
  }
  throw PartitionConvergenceError(best_imbalance);
}

// Cells of one UAV.
inline std::vector<int> cells_of(const Partition& p, int fleet_index) {
  std::vector<int> out;
  for (int c = 0; c < static_cast<int>(p.assignment.size()); ++c)
    if (p.assignment[c] == fleet_index) out.push_back(c);
  return out;
}

}  // namespace uavnet
