#include "pmcast/decomposition.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <cmath>
#include <random>
#include <thread>

#include "pmcast/errors.hpp"
#include "pmcast/rng.hpp"
#include "pmcast/spline.hpp"

namespace pmcast {

namespace {

constexpr std::size_t kMinLength = 8;
constexpr std::size_t kMirrored = 2;
// Bound on modes when max_imfs is unset; a 2^60-sample signal would need more.
constexpr std::size_t kModeCap = 60;
// A mode this small relative to the input is sifted roundoff; extraction stops.
constexpr double kNegligible = 1e-10;

double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

}  // namespace

void SiftConfig::validate() const {
  if (!(sd_threshold > 0.0)) throw ParameterError("sd_threshold must be > 0");
  if (max_sift_iterations < 1) throw ParameterError("max_sift_iterations must be >= 1");
}

Extrema find_extrema(std::span<const double> x) {
  Extrema ext;
  const std::size_t n = x.size();
  if (n < 3) return ext;
  // Walk runs of equal values; an interior run above (below) both
  // neighbouring runs is a maximum (minimum).
  std::size_t start = 0;
  while (start < n && x[start] == x[0]) ++start;
  if (start == n) return ext;
  double prev_value = x[0];
  while (start < n) {
    std::size_t end = start;
    while (end + 1 < n && x[end + 1] == x[start]) ++end;
    if (end + 1 >= n) break;
    const double v = x[start];
    const double next = x[end + 1];
    const std::size_t mid = start + (end - start) / 2;
    if (v > prev_value && v > next) ext.maxima.push_back(mid);
    if (v < prev_value && v < next) ext.minima.push_back(mid);
    prev_value = v;
    start = end + 1;
  }
  return ext;
}

std::size_t count_zero_crossings(std::span<const double> x) {
  std::size_t crossings = 0;
  int last_sign = 0;
  for (double v : x) {
    const int s = (v > 0.0) - (v < 0.0);
    if (s == 0) continue;
    if (last_sign != 0 && s != last_sign) ++crossings;
    last_sign = s;
  }
  return crossings;
}

bool is_decomposable(std::span<const double> x) {
  if (x.size() < kMinLength) return false;
  const Extrema ext = find_extrema(x);
  return !ext.maxima.empty() && !ext.minima.empty() && ext.maxima.size() + ext.minima.size() >= 3;
}

namespace {

using Index = std::vector<std::size_t>;

// v[first, last) clipped to the valid range, reversed.
Index reversed_range(const Index& v, std::ptrdiff_t first, std::ptrdiff_t last) {
  const auto size = static_cast<std::ptrdiff_t>(v.size());
  first = std::max<std::ptrdiff_t>(first, 0);
  last = std::min(last, size);
  Index out;
  for (std::ptrdiff_t i = last - 1; i >= first; --i) out.push_back(v[static_cast<std::size_t>(i)]);
  return out;
}

struct Knots {
  std::vector<double> t;
  std::vector<double> y;
};

// Mirrors up to kMirrored extrema across each end so the splines are pinned
// beyond the signal boundary.
void mirrored_knots(std::span<const double> x, const Extrema& ext, Knots& upper, Knots& lower) {
  const auto nb = static_cast<std::ptrdiff_t>(kMirrored);
  const Index& imax = ext.maxima;
  const Index& imin = ext.minima;
  const std::size_t last = x.size() - 1;
  const auto nmax = static_cast<std::ptrdiff_t>(imax.size());
  const auto nmin = static_cast<std::ptrdiff_t>(imin.size());

  Index lmax, lmin, rmax, rmin;
  std::size_t lsym = 0;
  std::size_t rsym = last;

  if (imax.front() < imin.front()) {
    if (x[0] > x[imin.front()]) {
      lmax = reversed_range(imax, 1, nb + 1);
      lmin = reversed_range(imin, 0, nb);
      lsym = imax.front();
    } else {
      lmax = reversed_range(imax, 0, nb);
      lmin = reversed_range(imin, 0, nb - 1);
      lmin.push_back(0);
      lsym = 0;
    }
  } else {
    if (x[0] < x[imax.front()]) {
      lmax = reversed_range(imax, 0, nb);
      lmin = reversed_range(imin, 1, nb + 1);
      lsym = imin.front();
    } else {
      lmax = reversed_range(imax, 0, nb - 1);
      lmax.push_back(0);
      lmin = reversed_range(imin, 0, nb);
      lsym = 0;
    }
  }

  if (imax.back() < imin.back()) {
    if (x[last] < x[imax.back()]) {
      rmax = reversed_range(imax, nmax - nb, nmax);
      rmin = reversed_range(imin, nmin - nb - 1, nmin - 1);
      rsym = imin.back();
    } else {
      rmax = {last};
      for (auto i : reversed_range(imax, nmax - nb + 1, nmax)) rmax.push_back(i);
      rmin = reversed_range(imin, nmin - nb, nmin);
      rsym = last;
    }
  } else {
    if (x[last] > x[imin.back()]) {
      rmax = reversed_range(imax, nmax - nb - 1, nmax - 1);
      rmin = reversed_range(imin, nmin - nb, nmin);
      rsym = imax.back();
    } else {
      rmax = reversed_range(imax, nmax - nb, nmax);
      rmin = {last};
      for (auto i : reversed_range(imin, nmin - nb + 1, nmin)) rmin.push_back(i);
      rsym = last;
    }
  }

  auto mirror = [](const Index& idx, std::size_t sym) {
    std::vector<double> t;
    for (auto i : idx) t.push_back(2.0 * static_cast<double>(sym) - static_cast<double>(i));
    return t;
  };

  auto tlmin = mirror(lmin, lsym);
  auto tlmax = mirror(lmax, lsym);
  auto trmin = mirror(rmin, rsym);
  auto trmax = mirror(rmax, rsym);

  // When the mirrored points do not reach past the ends, mirror about the
  // end sample itself instead.
  const bool left_short = (!tlmin.empty() && tlmin.front() > 0.0) || (!tlmax.empty() && tlmax.front() > 0.0);
  if (left_short && lsym != 0) {
    if (lsym == imax.front()) {
      lmax = reversed_range(imax, 0, nb);
    } else {
      lmin = reversed_range(imin, 0, nb);
    }
    lsym = 0;
    tlmin = mirror(lmin, lsym);
    tlmax = mirror(lmax, lsym);
  }
  const auto end_t = static_cast<double>(last);
  const bool right_short = (!trmin.empty() && trmin.back() < end_t) || (!trmax.empty() && trmax.back() < end_t);
  if (right_short && rsym != last) {
    if (rsym == imax.back()) {
      rmax = reversed_range(imax, nmax - nb, nmax);
    } else {
      rmin = reversed_range(imin, nmin - nb, nmin);
    }
    rsym = last;
    trmin = mirror(rmin, rsym);
    trmax = mirror(rmax, rsym);
  }

  auto assemble = [&](Knots& k, const std::vector<double>& tl, const Index& lidx, const Index& mid,
                      const std::vector<double>& tr, const Index& ridx) {
    k.t.clear();
    k.y.clear();
    auto push = [&](double t, double y) {
      // Keep knots strictly increasing.
      if (!k.t.empty() && !(t > k.t.back())) return;
      k.t.push_back(t);
      k.y.push_back(y);
    };
    for (std::size_t i = 0; i < tl.size(); ++i) push(tl[i], x[lidx[i]]);
    for (auto i : mid) push(static_cast<double>(i), x[i]);
    for (std::size_t i = 0; i < tr.size(); ++i) push(tr[i], x[ridx[i]]);
  };
  assemble(upper, tlmax, lmax, imax, trmax, rmax);
  assemble(lower, tlmin, lmin, imin, trmin, rmin);
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> envelopes(std::span<const double> x, const Extrema& ext) {
  if (ext.maxima.empty() || ext.minima.empty()) {
    throw ContractError("envelopes: need at least one maximum and one minimum");
  }
  Knots upper, lower;
  mirrored_knots(x, ext, upper, lower);
  return {cubic_spline_on_grid(upper.t, upper.y, x.size()), cubic_spline_on_grid(lower.t, lower.y, x.size())};
}

std::optional<std::vector<double>> extract_first_imf(std::span<const double> x, const SiftConfig& config) {
  if (!is_decomposable(x)) return std::nullopt;
  std::vector<double> h(x.begin(), x.end());
  const std::size_t n = h.size();
  for (std::size_t it = 0; it < config.max_sift_iterations; ++it) {
    const Extrema ext = find_extrema(h);
    if (ext.maxima.empty() || ext.minima.empty()) break;
    const auto [upper, lower] = envelopes(h, ext);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double m = 0.5 * (upper[t] + lower[t]);
      den += h[t] * h[t];
      num += m * m;
      h[t] -= m;
    }
    if (den == 0.0) break;
    // The SD test alone often passes after one sift; also require the
    // candidate to be an IMF (extrema and zero crossings differ by <= 1).
    if (num / den < config.sd_threshold) {
      const std::size_t extrema = find_extrema(h).count();
      const std::size_t crossings = count_zero_crossings(h);
      if ((extrema > crossings ? extrema - crossings : crossings - extrema) <= 1) break;
    }
  }
  return h;
}

DecompositionResult emd(std::span<const double> signal, const SiftConfig& config) {
  config.validate();
  DecompositionResult result;
  result.meta = {"emd", 1, 0.0, 0};
  result.residue.assign(signal.begin(), signal.end());
  const std::size_t cap = config.max_imfs.value_or(kModeCap);
  const double floor = kNegligible * max_abs(signal);
  while (result.imfs.size() < cap) {
    auto imf = extract_first_imf(result.residue, config);
    if (!imf || max_abs(*imf) <= floor) break;
    for (std::size_t t = 0; t < imf->size(); ++t) result.residue[t] -= (*imf)[t];
    result.imfs.push_back(std::move(*imf));
  }
  return result;
}

namespace {

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& e : v) e = dist(gen);
  return v;
}

double population_std(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

template <class Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace

DecompositionResult ceemdan(std::span<const double> signal, const CeemdanOptions& options) {
  if (options.trials <= 0) throw ParameterError("ceemdan: trials must be >= 1");
  if (!(options.noise_ratio >= 0.0)) throw ParameterError("ceemdan: noise_ratio must be >= 0");
  options.sift.validate();

  DecompositionResult result;
  result.meta = {"ceemdan", options.trials, options.noise_ratio, options.seed};
  result.residue.assign(signal.begin(), signal.end());
  const std::size_t n = signal.size();
  if (!is_decomposable(signal)) return result;

  const auto trials = static_cast<std::size_t>(options.trials);
  const double amplitude = options.noise_ratio * population_std(signal);
  const bool noisy = amplitude > 0.0;

  // Per-trial noise residual: v^i minus the noise modes already consumed.
  std::vector<std::vector<double>> noise_residual(noisy ? trials : 0);
  std::vector<std::vector<double>> noise_mode(noisy ? trials : 0);
  if (noisy) {
    parallel_for(trials, options.jobs, [&](std::size_t i) {
      noise_residual[i] = white_noise(n, child_seed(options.seed, i));
    });
  }

  // Moves each trial's noise on to its next EMD mode.
  auto advance_noise = [&](std::size_t i) {
    auto mode = extract_first_imf(noise_residual[i], options.sift);
    if (mode) {
      for (std::size_t t = 0; t < n; ++t) noise_residual[i][t] -= (*mode)[t];
      noise_mode[i] = std::move(*mode);
    } else {
      noise_mode[i].assign(n, 0.0);
    }
  };

  std::vector<std::vector<double>> trial_modes(trials);
  const std::size_t cap = options.sift.max_imfs.value_or(kModeCap);
  const double floor = kNegligible * max_abs(signal);
  for (std::size_t stage = 0; stage < cap && is_decomposable(result.residue); ++stage) {
    parallel_for(trials, options.jobs, [&](std::size_t i) {
      std::vector<double> s(result.residue);
      if (noisy) {
        // Stage 1 perturbs with raw white noise, later stages with the
        // (stage-1)-th EMD mode of the same noise realisation.
        const std::vector<double>& v = stage == 0 ? noise_residual[i] : noise_mode[i];
        for (std::size_t t = 0; t < n; ++t) s[t] += amplitude * v[t];
      }
      auto mode = extract_first_imf(s, options.sift);
      trial_modes[i] = mode ? std::move(*mode) : std::vector<double>(n, 0.0);
      if (noisy) {
        // Keep the local mean s - E1(s) instead of E1(s): the ensemble
        // average then carries no leftover of the injected noise.
        for (std::size_t t = 0; t < n; ++t) trial_modes[i][t] = s[t] - trial_modes[i][t];
        advance_noise(i);
      }
    });

    std::vector<double> acc(n, 0.0);
    for (std::size_t i = 0; i < trials; ++i) {
      for (std::size_t t = 0; t < n; ++t) acc[t] += trial_modes[i][t];
    }
    const double inv = 1.0 / static_cast<double>(trials);
    std::vector<double> imf(n);
    for (std::size_t t = 0; t < n; ++t) imf[t] = noisy ? result.residue[t] - acc[t] * inv : acc[t] * inv;
    if (max_abs(imf) <= floor) break;
    for (std::size_t t = 0; t < n; ++t) result.residue[t] -= imf[t];
    result.imfs.push_back(std::move(imf));
  }
  return result;
}

std::vector<double> reconstruct(const DecompositionResult& result) {
  if (result.residue.empty() && result.imfs.empty()) throw ContractError("reconstruct: empty decomposition");
  std::vector<double> out = result.residue.empty() ? std::vector<double>(result.imfs.front().size(), 0.0)
                                                   : result.residue;
  for (const auto& imf : result.imfs) {
    if (imf.size() != out.size()) throw ShapeError("reconstruct: component lengths differ");
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += imf[t];
  }
  return out;
}

double reconstruction_error(const DecompositionResult& result, std::span<const double> signal) {
  const auto rec = reconstruct(result);
  if (rec.size() != signal.size()) throw ShapeError("reconstruction_error: length mismatch");
  double worst = 0.0;
  for (std::size_t t = 0; t < rec.size(); ++t) worst = std::max(worst, std::fabs(rec[t] - signal[t]));
  return worst;
}

}  // namespace pmcast
