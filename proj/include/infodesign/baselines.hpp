#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "infodesign/error.hpp"

namespace infodesign {

/// Shared amplitude and slew envelope for the benchmark signal generators.
struct SignalSpec {
    int horizon = 1;
    double dt = 1.0;
    Vector u_lo;
    Vector u_hi;
    Vector du_max;  //!< +inf disables the slew bound for a channel
    std::uint64_t seed = 0;
    std::optional<Vector> center;  //!< defaults to the box midpoint

    [[nodiscard]] Index m() const { return u_lo.size(); }
    [[nodiscard]] Vector midpoint() const { return center ? *center : Vector(0.5 * (u_lo + u_hi)); }
    void validate() const;
};

/// horizon samples, each an m-vector.
using Signal = std::vector<Vector>;

/// Slew-limited random walk: each channel moves by +-du_max per step, clamped to the box.
Signal random_inputs(const SignalSpec& spec);

/// One full period (2^bits - 1 symbols) of a maximal-length shift-register sequence, as 0/1.
std::vector<int> maximal_length_sequence(int register_bits, std::uint32_t initial_state);

/// Binary PRBS mapped onto {u_lo, u_hi}, symbols held `hold_steps` samples, then slew limited.
Signal prbs(const SignalSpec& spec, int hold_steps, int register_bits = 7);

struct MultisineOptions {
    int num_components = 4;     //!< sinusoids per channel
    double band_lo_hz = 0.0;    //!< lower edge of the usable band
    double band_hi_hz = 0.0;    //!< upper edge, below Nyquist
    int rpf_iters = 200;        //!< random-search candidates for phase refinement
};

struct MultisineSignal {
    Signal samples;
    std::vector<std::vector<int>> harmonics;   //!< harmonic indices of the fundamental, per channel
    std::vector<std::vector<double>> phases;   //!< radians, per channel
    std::vector<double> rpf;                   //!< achieved relative peak factor, per channel
};

/**
 * @brief Multisine with disjoint harmonics per channel.
 *
 * Harmonics of 1/(horizon dt) inside the band are interleaved across channels,
 * phases start from Schroeder's rule and are refined by random search on the
 * relative peak factor, and each channel is scaled to fill its box about the
 * center. Throws Error(Allocation) when the band holds too few harmonics and
 * Error(Slew) when a finite du_max is exceeded.
 */
MultisineSignal multisine(const SignalSpec& spec, const MultisineOptions& opts);

/// Schroeder phases for `count` equal-power components, first phase zero.
std::vector<double> schroeder_phases(int count);

/// Per-channel slew bound equal to the largest per-step change of the multisine.
Vector derive_slew_from_multisine(const SignalSpec& spec, const MultisineOptions& opts);

/// (max - min) / (2 sqrt(2) rms(u - mean(u))); NaN when the zero-mean part vanishes.
double relative_peak_factor(const std::vector<double>& u);

struct SignalScore {
    std::vector<double> rpf;
    std::vector<bool> rpf_defined;
    std::vector<double> max_diff;
};

SignalScore score_signal(const Signal& u);

} // namespace infodesign
