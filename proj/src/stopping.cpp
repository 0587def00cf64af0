#include "sns/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sns/parallel.hpp"
#include "sns/rng.hpp"

namespace sns {

namespace {

// First index m with q[m] >= threshold, or the last index if never hit.
int first_hit(const std::vector<double>& q, double threshold, bool* fired) {
  for (int m = 0; m < static_cast<int>(q.size()); ++m) {
    if (q[m] >= threshold) {
      *fired = true;
      return m;
    }
  }
  *fired = false;
  return static_cast<int>(q.size()) - 1;
}

}  // namespace

TrajectoryAccumulators build_accumulators(const TrajectoryResult& traj,
                                          double tau) {
  const int last = static_cast<int>(traj.steps.size()) - 1;
  if (last < 0)
    throw std::invalid_argument("build_accumulators: empty trajectory");

  TrajectoryAccumulators acc;
  acc.s_accum.resize(last + 1);
  acc.t_quantity.resize(last + 1);
  acc.noise_sup.resize(last + 1);

  double s = 0.0, a = 0.0, w = 0.0;
  for (int m = 0; m <= last; ++m) {
    const StepDiagnostics& d = traj.steps[m];
    s += tau * d.energy * d.enstrophy;  // n = 0 term included
    if (m > 0) a += tau * d.stokes_norm2;
    w = std::max(w, d.noise_w22);
    acc.s_accum[m] = s;
    acc.t_quantity[m] = d.enstrophy + a;
    acc.noise_sup[m] = w;
  }
  return acc;
}

TrajectoryAccumulators build_accumulators(
    const std::vector<double>& energy, const std::vector<double>& enstrophy,
    const std::vector<double>& stokes_norm2,
    const std::vector<double>& noise_w22, double tau) {
  const size_t n = energy.size();
  if (n == 0 || enstrophy.size() != n || stokes_norm2.size() != n ||
      noise_w22.size() != n)
    throw std::invalid_argument("build_accumulators: column size mismatch");

  TrajectoryAccumulators acc;
  acc.s_accum.resize(n);
  acc.t_quantity.resize(n);
  acc.noise_sup.resize(n);

  double s = 0.0, a = 0.0, w = 0.0;
  for (size_t m = 0; m < n; ++m) {
    s += tau * energy[m] * enstrophy[m];
    if (m > 0) a += tau * stokes_norm2[m];
    w = std::max(w, noise_w22[m]);
    acc.s_accum[m] = s;
    acc.t_quantity[m] = enstrophy[m] + a;
    acc.noise_sup[m] = w;
  }
  return acc;
}

StoppingReport evaluate_stopping(const TrajectoryAccumulators& acc,
                                 const StoppingConfig& cfg) {
  if (!(cfg.r1 > 0.0 && cfg.r2 > 0.0 && cfg.k > 0.0))
    throw std::invalid_argument("evaluate_stopping: thresholds must be > 0");
  StoppingReport rep;
  rep.s_index = first_hit(acc.s_accum, std::pow(cfg.r1, 4), &rep.s_stopped);
  rep.t_index = first_hit(acc.t_quantity, cfg.r2 * cfg.r2, &rep.t_stopped);
  rep.noise_index = first_hit(acc.noise_sup, cfg.k, &rep.noise_stopped);
  rep.tilde_index =
      std::min(rep.s_index, std::min(rep.t_index, rep.noise_index));
  rep.s_final = acc.s_accum.back();
  rep.t_final = acc.t_quantity.back();
  rep.noise_final = acc.noise_sup.back();
  return rep;
}

WilsonInterval wilson_interval(int hits, int n) {
  if (n <= 0 || hits < 0 || hits > n)
    throw std::invalid_argument("wilson_interval: bad counts");
  const double z = 1.96;
  const double z2 = z * z;
  const double p = static_cast<double>(hits) / n;
  const double denom = 1.0 + z2 / n;
  const double centre = p + z2 / (2.0 * n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  WilsonInterval w;
  // The interval always contains the point estimate; enforce that exactly so
  // rounding in the sqrt cannot leave p outside by one ulp (e.g. hits == n).
  w.low = std::min(std::max(0.0, (centre - half) / denom), p);
  w.high = std::max(std::min(1.0, (centre + half) / denom), p);
  return w;
}

DecayStudy stopping_decay_study(const StepContext& ctx,
                                const NoiseProjection& proj, const Vec& u0,
                                const DecayStudyParams& params) {
  if (params.samples < 1)
    throw std::invalid_argument("stopping_decay_study: samples < 1");
  if (params.r_ladder.empty())
    throw std::invalid_argument("stopping_decay_study: empty ladder");
  for (size_t i = 1; i < params.r_ladder.size(); ++i)
    if (!(params.r_ladder[i] > params.r_ladder[i - 1]))
      throw std::invalid_argument(
          "stopping_decay_study: ladder must be strictly increasing");

  const int N = params.samples;
  const NoiseModel& noise = *proj.noise;
  const double T = ctx.grid().T;
  const int M = ctx.grid().M;

  DecayStudy study;
  study.s_finals.resize(N);

  for_each_sample(N, params.threads, [&](int i) {
    const BrownianPath path =
        sample_path(noise, M, T, sample_seed(params.master_seed, i));
    TrajectoryInputs in;
    in.formulation = Formulation::velocity;
    in.u0 = u0;
    in.path = &path;
    // The s-clause needs only energy and enstrophy, both recorded by
    // default; no extra tracking.
    const TrajectoryResult traj = run_trajectory(ctx, proj, in);
    double s = 0.0;
    for (const StepDiagnostics& d : traj.steps)
      s += ctx.grid().tau * d.energy * d.enstrophy;
    study.s_finals[i] = s;
  });

  for (double r : params.r_ladder) {
    DecayRow row;
    row.r = r;
    const double threshold = std::pow(r, 4);
    for (double s : study.s_finals)
      if (s >= threshold) ++row.hits;
    row.frequency = static_cast<double>(row.hits) / N;
    const WilsonInterval ci = wilson_interval(row.hits, N);
    row.ci_low = ci.low;
    row.ci_high = ci.high;
    study.rows.push_back(row);
  }

  // Tail slope over the rows that have left the bulk but not yet emptied.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (const DecayRow& row : study.rows) {
    if (row.frequency > 0.0 && row.frequency < 0.5) {
      const double x = std::log(row.r);
      const double y = std::log(row.frequency);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++k;
    }
  }
  study.slope_points = k;
  study.log_slope = (k >= 2)
                        ? (k * sxy - sx * sy) / (k * sxx - sx * sx)
                        : std::numeric_limits<double>::quiet_NaN();
  return study;
}

}  // namespace sns
