#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "handsoff/certify.hpp"
#include "handsoff/control_law.hpp"
#include "handsoff/errors.hpp"
#include "handsoff/nelder_mead.hpp"

namespace handsoff {

/// Raised when no enumerated bang-off-bang structure reaches the endpoint.
class NoFeasibleStructureError : public Error {
 public:
  using Error::Error;
};

/**
 * Segment pattern of a bang-off-bang control. For box sets each label is a
 * control value with components in {0, lower_i, upper_i}. For balls with
 * m >= 2 a label is either zero or the "on" placeholder radius * e_1; the
 * direction of each on segment is optimized with its duration.
 */
struct Structure {
  std::vector<Vector> labels;
  bool directional = false;

  std::size_t size() const { return labels.size(); }
  std::size_t on_count() const;
};

/// All label sequences of length 1..k_max without consecutive repeats,
/// ordered by (number of on segments, length) and lexicographically within.
std::vector<Structure> enumerate_structures(Eigen::Index m, const AdmissibleSet& U, int k_max);

inline constexpr std::size_t kMaxStructures = 1'000'000;

struct SynthOptions {
  /// 0 selects 2 * state_dim + 1.
  int k_max = 0;
  double feas_tol = 1e-6;
  int starts = 20;
  std::uint64_t seed = 42;
  double zero_tol = kDefaultZeroTol;
  int min_time_intervals = 500;
  double min_time_tol = 1e-4;
  int recover_starts = 50;
  NelderMeadOptions nelder_mead{4000, 1e-24, 1e-15, 0.1};
  CertifyOptions certify;
};

struct DurationFit {
  std::vector<double> durations;
  std::vector<Vector> values;
  double residual = 0.0;
  double support = 0.0;
};

/**
 * Fits segment durations (and on-directions for ball sets) of a structure
 * to the endpoint constraint by multi-start Nelder-Mead over the sorted,
 * clamped breakpoints. The first start is `init`; the rest are uniform draws
 * on the duration simplex. Among starts meeting feas_tol the one with least
 * support wins (then earliest first breakpoint); otherwise least residual.
 */
DurationFit solve_durations(const Problem& prob, const Structure& st,
                            const std::vector<double>& init, const SynthOptions& opts,
                            std::uint64_t seed);

/// Control built from a structure and fitted durations; empty segments dropped.
PiecewiseConstantControl control_from_fit(const Problem& prob, const DurationFit& fit);

/**
 * Shortest horizon (within tol) on which the endpoint is reachable under U on
 * an N-interval grid, by bisection on the L-infinity feasibility gauge.
 * Returns +inf when unreachable within b - a.
 */
double min_time(const Problem& prob, double tol = 1e-4, int N = 500);

/**
 * Inverts the maximum condition: looks for (eta, p_hat) whose maximizer sets
 * contain the given control almost everywhere, trying eta = 1 before eta = 0.
 * Box sets solve a minimax-violation LP exactly; ball sets use multi-start
 * Nelder-Mead. Returns nothing if no multiplier passes `certify`.
 */
std::optional<AdjointParams> recover_adjoint(const Problem& prob,
                                             const PiecewiseConstantControl& control,
                                             const SynthOptions& opts = {});

/// Integrated distance from the control to the maximizer sets of ap.
double consistency_loss(const Problem& prob, const AdjointParams& ap,
                        const PiecewiseConstantControl& control, int samples = kDefaultSamples,
                        double window = 1e-6);

struct SearchEntry {
  std::size_t structure_index = 0;
  double residual = 0.0;
  double support = 0.0;
  bool feasible = false;
};

struct SynthResult {
  PiecewiseConstantControl control;
  double support = 0.0;
  std::optional<AdjointParams> certificate;
  std::optional<CertificateReport> report;
  bool certified = false;
  bool locally_optimal = false;
  Structure structure;
  std::size_t structure_index = 0;
  std::vector<SearchEntry> log;
};

/**
 * Sparsest bang-off-bang control found by structure search. Throws
 * InfeasibleError when the horizon is shorter than the minimum time and
 * NoFeasibleStructureError when nothing within k_max segments fits.
 */
SynthResult synth_l0(const Problem& prob, const SynthOptions& opts = {});

/// {support, eta, p_hat, certified, locally_optimal}.
nlohmann::json sidecar_json(const SynthResult& result);

}  // namespace handsoff
