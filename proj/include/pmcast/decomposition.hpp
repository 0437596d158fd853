#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pmcast {

enum class BoundaryPolicy { Mirror };

struct SiftConfig {
  std::size_t max_sift_iterations = 100;
  /// Cauchy-type stop: sum (h_prev - h_new)^2 / sum h_prev^2 below this ends a
  /// sift once the candidate is also an IMF.
  double sd_threshold = 0.2;
  std::optional<std::size_t> max_imfs;
  BoundaryPolicy boundary = BoundaryPolicy::Mirror;

  void validate() const;
};

struct DecompositionMeta {
  std::string method = "emd";
  int trials = 1;
  /// Noise standard deviation as a fraction of the signal's; applied at every stage.
  double noise_ratio = 0.0;
  std::uint64_t seed = 0;
};

/// IMFs ordered from highest to lowest frequency, plus the final residue.
struct DecompositionResult {
  std::vector<std::vector<double>> imfs;
  std::vector<double> residue;
  DecompositionMeta meta;

  std::size_t length() const noexcept { return residue.size(); }
  std::size_t imf_count() const noexcept { return imfs.size(); }
};

struct Extrema {
  std::vector<std::size_t> maxima;
  std::vector<std::size_t> minima;

  std::size_t count() const noexcept { return maxima.size() + minima.size(); }
};

/// Interior local extrema; a flat run counts once, at its middle sample.
Extrema find_extrema(std::span<const double> x);

std::size_t count_zero_crossings(std::span<const double> x);

/// True when the series still has an oscillation to sift: at least one
/// maximum, one minimum and three extrema in total. A single max/min pair is
/// usually a trend bent by end effects and stays in the residue.
bool is_decomposable(std::span<const double> x);

/// Upper and lower cubic-spline envelopes with mirrored end extrema.
/// Requires at least one maximum and one minimum.
std::pair<std::vector<double>, std::vector<double>> envelopes(std::span<const double> x, const Extrema& ext);

/// Sifts out the first IMF. Empty when the input has no oscillation left.
std::optional<std::vector<double>> extract_first_imf(std::span<const double> x, const SiftConfig& config);

DecompositionResult emd(std::span<const double> signal, const SiftConfig& config = {});

struct CeemdanOptions {
  double noise_ratio = 0.2;
  int trials = 100;
  std::uint64_t seed = 0;
  /// Worker threads for the ensemble; results do not depend on it.
  std::size_t jobs = 1;
  SiftConfig sift;
};

DecompositionResult ceemdan(std::span<const double> signal, const CeemdanOptions& options = {});

std::vector<double> reconstruct(const DecompositionResult& result);

/// Largest |reconstruct(result) - signal|.
double reconstruction_error(const DecompositionResult& result, std::span<const double> signal);

}  // namespace pmcast
