#include "fpl/probability.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <cmath>
#include <numeric>
#include <string>

#include "fpl/random.hpp"
#include "parallel.hpp"

namespace fpl {

namespace {

constexpr std::size_t kMonteCarloChunk = std::size_t{1} << 14;

// Integration domain [0, kTailCutoff] in units of epsilon * x: the envelope
// exp(-y) drops below 1e-14 there.
const double kTailCutoff = 14.0 * std::log(10.0);
constexpr double kQuadratureRelTol = 1e-8;
constexpr double kQuadratureAbsFloor = 1e-15;
constexpr int kQuadraturePanels = 64;
constexpr int kQuadratureMaxDepth = 40;

void validate_state(std::span<const double> penalized, double epsilon) {
  if (penalized.empty()) throw InvalidArgument("empty penalized state");
  if (std::isnan(epsilon) || !(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("learning rate must be positive and finite");
  }
  for (double s : penalized) {
    if (!std::isfinite(s)) throw InvalidArgument("penalized state must be finite");
  }
}

// Scaled gaps a_j = epsilon * (s_j - s_min).
std::vector<double> scaled_gaps(std::span<const double> penalized, double epsilon) {
  const double smin = *std::min_element(penalized.begin(), penalized.end());
  std::vector<double> a(penalized.size());
  for (std::size_t j = 0; j < a.size(); ++j) a[j] = epsilon * (penalized[j] - smin);
  return a;
}

struct Neumaier {
  double sum = 0.0;
  double c = 0.0;
  void add(double x) {
    const double t = sum + x;
    c += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

WeightVector inclusion_exclusion(std::span<const double> penalized, double epsilon) {
  const std::size_t n = penalized.size();
  if (n > kMaxInclusionExclusion) {
    throw Unsupported("inclusion-exclusion needs n <= " + std::to_string(kMaxInclusionExclusion) + ", got " +
                      std::to_string(n) + "; use quadrature or monte_carlo");
  }
  const std::vector<double> a = scaled_gaps(penalized, epsilon);
  const std::uint32_t subsets = std::uint32_t{1} << n;

  // Gap sum of every non-empty subset, built from the subset without its lowest bit.
  std::vector<double> gap(subsets, 0.0);
  for (std::uint32_t mask = 1; mask < subsets; ++mask) {
    const std::uint32_t low = mask & (~mask + 1);
    gap[mask] = gap[mask ^ low] + a[static_cast<std::size_t>(std::countr_zero(low))];
  }
  // Smallest terms first: descending gap sum.
  std::vector<std::uint32_t> order(subsets - 1);
  std::iota(order.begin(), order.end(), 1u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t x, std::uint32_t y) {
    return gap[x] != gap[y] ? gap[x] > gap[y] : x < y;
  });

  std::vector<Neumaier> acc(n);
  std::vector<double> magnitude(n, 0.0);
  for (std::uint32_t mask : order) {
    const int size = std::popcount(mask);
    const double term = std::exp(-gap[mask]) / size;
    if (term == 0.0) continue;
    const double signed_term = (size % 2 == 1) ? term : -term;
    for (std::uint32_t rest = mask; rest != 0; rest &= rest - 1) {
      const auto i = static_cast<std::size_t>(std::countr_zero(rest));
      acc[i].add(signed_term);
      magnitude[i] += term;
    }
  }

  WeightVector out;
  out.method = WeightMethod::inclusion_exclusion;
  out.weights.resize(n);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.weights[i] = std::clamp(acc[i].value(), 0.0, 1.0);
    worst = std::max(worst, magnitude[i]);
  }
  out.error_estimate = worst * 4.0 * std::numeric_limits<double>::epsilon();
  return out;
}

class Integrand {
 public:
  Integrand(const std::vector<double>& a, std::size_t i) : a_(a), i_(i) {}

  double operator()(double y) const {
    double value = std::exp(-(a_[i_] + y));
    for (std::size_t j = 0; j < a_.size() && value != 0.0; ++j) {
      if (j != i_) value *= -std::expm1(-(a_[j] + y));
    }
    return value;
  }

 private:
  const std::vector<double>& a_;
  std::size_t i_;
};

struct SimpsonResult {
  double value = 0.0;
  double error = 0.0;
};

double simpson(double h, double fa, double fm, double fb) { return h / 6.0 * (fa + 4.0 * fm + fb); }

void adaptive_simpson(const Integrand& f, double lo, double hi, double flo, double fmid, double fhi, double whole,
                      double tol, int depth, SimpsonResult& out) {
  const double mid = 0.5 * (lo + hi);
  const double lm = 0.5 * (lo + mid);
  const double rm = 0.5 * (mid + hi);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(mid - lo, flo, flm, fmid);
  const double right = simpson(hi - mid, fmid, frm, fhi);
  const double delta = left + right - whole;
  if (depth >= kQuadratureMaxDepth || std::abs(delta) <= 15.0 * tol) {
    out.value += left + right + delta / 15.0;
    out.error += std::abs(delta) / 15.0;
    return;
  }
  adaptive_simpson(f, lo, mid, flo, flm, fmid, left, 0.5 * tol, depth + 1, out);
  adaptive_simpson(f, mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth + 1, out);
}

SimpsonResult integrate(const Integrand& f) {
  const double width = kTailCutoff / kQuadraturePanels;
  std::vector<double> node(kQuadraturePanels + 1);
  std::vector<double> mid(kQuadraturePanels);
  double coarse = 0.0;
  for (int p = 0; p <= kQuadraturePanels; ++p) node[p] = f(p * width);
  for (int p = 0; p < kQuadraturePanels; ++p) {
    mid[p] = f((p + 0.5) * width);
    coarse += simpson(width, node[p], mid[p], node[p + 1]);
  }
  const double tol = std::max(kQuadratureRelTol * std::abs(coarse), kQuadratureAbsFloor);
  SimpsonResult out;
  for (int p = 0; p < kQuadraturePanels; ++p) {
    const double whole = simpson(width, node[p], mid[p], node[p + 1]);
    adaptive_simpson(f, p * width, (p + 1) * width, node[p], mid[p], node[p + 1], whole,
                     tol / kQuadraturePanels, 0, out);
  }
  return out;
}

WeightVector quadrature(std::span<const double> penalized, double epsilon) {
  const std::vector<double> a = scaled_gaps(penalized, epsilon);
  WeightVector out;
  out.method = WeightMethod::quadrature;
  out.weights.resize(a.size());
  double error = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const SimpsonResult r = integrate(Integrand(a, i));
    out.weights[i] = std::clamp(r.value, 0.0, 1.0);
    // Truncated tail is bounded by exp(-kTailCutoff) = 1e-14.
    error = std::max(error, r.error + 1e-14);
  }
  out.error_estimate = error;
  return out;
}

}  // namespace

double WeightVector::normalization_tolerance() const noexcept {
  switch (method) {
    case WeightMethod::inclusion_exclusion:
      return 1e-9;
    case WeightMethod::quadrature:
      return 1e-6;
    case WeightMethod::monte_carlo:
      return samples == 0 ? 1.0 : 3.0 / std::sqrt(static_cast<double>(samples));
  }
  return 0.0;
}

std::string_view to_string(WeightMethod method) noexcept {
  switch (method) {
    case WeightMethod::inclusion_exclusion:
      return "inclusion_exclusion";
    case WeightMethod::quadrature:
      return "quadrature";
    case WeightMethod::monte_carlo:
      return "monte_carlo";
  }
  return "?";
}

std::string_view to_string(EstimatorOptions::Choice choice) noexcept {
  switch (choice) {
    case EstimatorOptions::Choice::automatic:
      return "automatic";
    case EstimatorOptions::Choice::exact:
      return "exact";
    case EstimatorOptions::Choice::inclusion_exclusion:
      return "inclusion_exclusion";
    case EstimatorOptions::Choice::quadrature:
      return "quadrature";
    case EstimatorOptions::Choice::monte_carlo:
      return "monte_carlo";
  }
  return "?";
}

EstimatorOptions::Choice estimator_from_string(std::string_view name) {
  using Choice = EstimatorOptions::Choice;
  if (name == "automatic" || name == "auto") return Choice::automatic;
  if (name == "exact") return Choice::exact;
  if (name == "inclusion_exclusion") return Choice::inclusion_exclusion;
  if (name == "quadrature") return Choice::quadrature;
  if (name == "monte_carlo" || name == "mc") return Choice::monte_carlo;
  throw InvalidArgument("unknown estimator '" + std::string(name) + "'");
}

WeightMethod resolve_method(const EstimatorOptions& options, std::size_t n) {
  using Choice = EstimatorOptions::Choice;
  switch (options.choice) {
    case Choice::inclusion_exclusion:
      if (n > kMaxInclusionExclusion) {
        throw Unsupported("inclusion-exclusion needs n <= " + std::to_string(kMaxInclusionExclusion));
      }
      return WeightMethod::inclusion_exclusion;
    case Choice::quadrature:
      return WeightMethod::quadrature;
    case Choice::exact:
      return n <= kMaxInclusionExclusion ? WeightMethod::inclusion_exclusion : WeightMethod::quadrature;
    case Choice::monte_carlo:
      return WeightMethod::monte_carlo;
    case Choice::automatic:
      if (n <= kMaxInclusionExclusion) return WeightMethod::inclusion_exclusion;
      if (options.allow_quadrature && n <= kMaxAutomaticQuadrature) return WeightMethod::quadrature;
      if (options.samples > 0) return WeightMethod::monte_carlo;
      break;
  }
  throw Unsupported("no exact method for n = " + std::to_string(n) + " with quadrature disabled");
}

std::vector<double> penalized_state(std::span<const double> sums, const ExpertClass& k, double epsilon) {
  if (sums.size() != k.size()) throw InvalidArgument("state and expert class differ in length");
  if (std::isnan(epsilon) || !(epsilon > 0.0)) throw InvalidArgument("learning rate must be positive");
  std::vector<double> out(sums.begin(), sums.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += k[i] / epsilon;
  return out;
}

WeightVector selection_probabilities(std::span<const double> penalized, double epsilon, WeightMethod method) {
  validate_state(penalized, epsilon);
  switch (method) {
    case WeightMethod::inclusion_exclusion:
      return inclusion_exclusion(penalized, epsilon);
    case WeightMethod::quadrature:
      return quadrature(penalized, epsilon);
    case WeightMethod::monte_carlo:
      break;
  }
  throw InvalidArgument("Monte-Carlo weights need a sample count; use selection_probabilities_mc");
}

WeightVector selection_probabilities_mc(std::span<const double> penalized, double epsilon, std::size_t samples,
                                        std::uint64_t seed, unsigned workers) {
  validate_state(penalized, epsilon);
  if (samples == 0) throw InvalidArgument("Monte Carlo needs at least one sample");
  const std::size_t n = penalized.size();
  const random::UniformStream stream(random::derive_seed(seed, random::Domain::monte_carlo));
  const std::size_t chunks = (samples + kMonteCarloChunk - 1) / kMonteCarloChunk;
  std::vector<std::vector<std::uint64_t>> counts(chunks, std::vector<std::uint64_t>(n, 0));

  detail::parallel_chunks(chunks, workers, [&](std::size_t chunk) {
    std::vector<double> q(n);
    const std::size_t begin = chunk * kMonteCarloChunk;
    const std::size_t end = std::min(samples, begin + kMonteCarloChunk);
    auto& local = counts[chunk];
    for (std::size_t s = begin; s < end; ++s) {
      stream.fill(s, n, [&](std::size_t i, double u) { q[i] = random::exponential_from_uniform(u); });
      std::size_t best = 0;
      double best_value = penalized[0] - q[0] / epsilon;
      for (std::size_t i = 1; i < n; ++i) {
        const double v = penalized[i] - q[i] / epsilon;
        if (v < best_value) {
          best_value = v;
          best = i;
        }
      }
      ++local[best];
    }
  });

  WeightVector out;
  out.method = WeightMethod::monte_carlo;
  out.samples = samples;
  out.error_estimate = 3.0 / std::sqrt(static_cast<double>(samples));
  out.weights.assign(n, 0.0);
  for (const auto& local : counts) {
    for (std::size_t i = 0; i < n; ++i) out.weights[i] += static_cast<double>(local[i]);
  }
  for (double& w : out.weights) w /= static_cast<double>(samples);
  return out;
}

WeightVector estimate_weights(std::span<const double> penalized, double epsilon, const EstimatorOptions& options) {
  const WeightMethod method = resolve_method(options, penalized.size());
  if (method == WeightMethod::monte_carlo) {
    return selection_probabilities_mc(penalized, epsilon, options.samples, options.seed, options.workers);
  }
  return selection_probabilities(penalized, epsilon, method);
}

double expected_step_loss(const WeightVector& weights, const LossVector& loss) {
  if (weights.weights.size() != loss.size()) throw InvalidArgument("weights and losses differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < loss.size(); ++i) total += weights.weights[i] * loss[i];
  return total;
}

double step_loss_variance(const WeightVector& weights, const LossVector& loss) {
  const double mean = expected_step_loss(weights, loss);
  double second = 0.0;
  for (std::size_t i = 0; i < loss.size(); ++i) second += weights.weights[i] * loss[i] * loss[i];
  return std::max(0.0, second - mean * mean);
}

double total_variation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("weight vectors differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return 0.5 * total;
}

ShiftedMaxEstimate shifted_exp_max_estimate(const ExpertClass& k, std::size_t samples, std::uint64_t seed,
                                            unsigned workers) {
  if (samples < 1000) throw InvalidArgument("shifted maximum estimate needs at least 1000 samples");
  const std::size_t n = k.size();
  const random::UniformStream stream(random::derive_seed(seed, random::Domain::monte_carlo, 1));
  const std::size_t chunks = (samples + kMonteCarloChunk - 1) / kMonteCarloChunk;

  struct Moments {
    double count = 0.0;
    double mean = 0.0;
    double m2 = 0.0;
  };
  std::vector<Moments> parts(chunks);
  detail::parallel_chunks(chunks, workers, [&](std::size_t chunk) {
    const std::size_t begin = chunk * kMonteCarloChunk;
    const std::size_t end = std::min(samples, begin + kMonteCarloChunk);
    Moments m;
    for (std::size_t s = begin; s < end; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      stream.fill(s, n, [&](std::size_t i, double u) {
        best = std::max(best, random::exponential_from_uniform(u) - k[i]);
      });
      m.count += 1.0;
      const double delta = best - m.mean;
      m.mean += delta / m.count;
      m.m2 += delta * (best - m.mean);
    }
    parts[chunk] = m;
  });

  // Chan et al. pairwise combination, in chunk order.
  Moments total;
  for (const Moments& m : parts) {
    const double count = total.count + m.count;
    const double delta = m.mean - total.mean;
    total.mean += delta * m.count / count;
    total.m2 += m.m2 + delta * delta * total.count * m.count / count;
    total.count = count;
  }
  ShiftedMaxEstimate out;
  out.samples = samples;
  out.mean = total.mean;
  const double variance = total.m2 / (total.count - 1.0);
  out.standard_error = std::sqrt(variance / total.count);
  return out;
}

}  // namespace fpl
