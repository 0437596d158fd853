#pragma once

#include <cstddef>
#include <cstdint>

#include "pmcast/frame.hpp"

namespace pmcast {

/// Deterministic hourly frame in the ingestion schema, starting at
/// 2015-01-02T00:00. Needs n_hours >= 48.
///
/// PM2.5 is built in log space: a constant level, daily and weekly
/// sinusoids, an AR(1) anomaly, weather offsets (haze and fog raise it,
/// rain and snow wash it out) and a wind-speed term; the exponentiated
/// series is clipped to [2, 692]. Weather follows a persistent,
/// season-dependent Markov chain. The meteorological columns carry
/// annual and daily cycles plus AR noise; the other pollutants are noisy
/// transforms of PM2.5 and temperature. Every value lies inside the
/// plausibility ranges, and no cell is missing.
TimeSeriesFrame synth_generate(std::size_t n_hours, std::uint64_t seed);

}  // namespace pmcast
