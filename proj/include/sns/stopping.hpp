#pragma once

#include <cstdint>
#include <vector>

#include "sns/schemes.hpp"

namespace sns {

// Thresholds for the three first-hit clauses.  The s-clause fires when the
// drift accumulator sum tau ||u_n||^2 ||grad u_n||^2 reaches r1^4, the
// t-clause when ||grad u_m||^2 + sum tau ||A_h u_n||^2 reaches r2^2, and the
// noise clause when the running sup of ||Phi W(t_n)||_{W^{2,2}} reaches k.
struct StoppingConfig {
  double r1 = 1.0;
  double r2 = 1.0;
  double k = 1.0;
};

// Per-step clause quantities for one trajectory, entries 0..M.  All three
// series are nondecreasing in m, so first-hit scans and threshold ladders
// commute.
struct TrajectoryAccumulators {
  std::vector<double> s_accum;
  std::vector<double> t_quantity;
  std::vector<double> noise_sup;

  int last_index() const { return static_cast<int>(s_accum.size()) - 1; }
};

// From a recorded trajectory (requires track_stokes_norm and
// track_noise_norm in the scheme options).
TrajectoryAccumulators build_accumulators(const TrajectoryResult& traj,
                                          double tau);

// From raw per-step columns, e.g. parsed back from a CSV dump.
TrajectoryAccumulators build_accumulators(const std::vector<double>& energy,
                                          const std::vector<double>& enstrophy,
                                          const std::vector<double>& stokes_norm2,
                                          const std::vector<double>& noise_w22,
                                          double tau);

struct StoppingReport {
  // First grid index at which each clause fires; M when it never does
  // (the minimum of the empty set is the final time).
  int s_index = 0;
  int t_index = 0;
  int noise_index = 0;
  int tilde_index = 0;  // min of the three
  bool s_stopped = false;
  bool t_stopped = false;
  bool noise_stopped = false;
  // Final accumulator values, the quantities the thresholds are tested
  // against.
  double s_final = 0.0;
  double t_final = 0.0;
  double noise_final = 0.0;
};

StoppingReport evaluate_stopping(const TrajectoryAccumulators& acc,
                                 const StoppingConfig& cfg);

// Wilson 95% score interval for a binomial frequency.
struct WilsonInterval {
  double low = 0.0;
  double high = 1.0;
};
WilsonInterval wilson_interval(int hits, int n);

struct DecayRow {
  double r = 0.0;          // threshold R1
  int hits = 0;            // samples with s-clause fired by T
  double frequency = 0.0;  // hits / N
  double ci_low = 0.0;
  double ci_high = 1.0;
};

struct DecayStudy {
  std::vector<DecayRow> rows;
  std::vector<double> s_finals;  // per-sample final accumulator values
  // Least-squares slope of log(frequency) vs log(R) over rows with
  // 0 < frequency < 1/2; NaN when fewer than two such rows exist.
  double log_slope = 0.0;
  int slope_points = 0;
};

struct DecayStudyParams {
  std::vector<double> r_ladder;  // strictly increasing R1 values
  int samples = 100;
  std::uint64_t master_seed = 42;
  int threads = 1;
};

// Empirical P[s-clause fires by T] across an R ladder.  One trajectory per
// sample serves the whole ladder; monotonicity in R is structural.
DecayStudy stopping_decay_study(const StepContext& ctx,
                                const NoiseProjection& proj, const Vec& u0,
                                const DecayStudyParams& params);

}  // namespace sns
