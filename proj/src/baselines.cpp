#include "infodesign/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace infodesign {

namespace {

// Feedback taps (1-based bit positions) of primitive polynomials, 2..16 bits.
const std::vector<std::vector<int>>& lfsr_taps() {
    static const std::vector<std::vector<int>> taps = {
        {},           {},           {2, 1},       {3, 2},        {4, 3},       {5, 3},
        {6, 5},       {7, 6},       {8, 6, 5, 4}, {9, 5},        {10, 7},      {11, 9},
        {12, 6, 4, 1}, {13, 4, 3, 1}, {14, 5, 3, 1}, {15, 14},     {16, 15, 13, 4},
    };
    return taps;
}

std::vector<double> channel(const Signal& u, Index j) {
    std::vector<double> out(u.size());
    for (std::size_t t = 0; t < u.size(); ++t) out[t] = u[t](j);
    return out;
}

std::vector<double> synthesize(const std::vector<int>& harmonics, const std::vector<double>& phases, int N) {
    std::vector<double> s(static_cast<std::size_t>(N), 0.0);
    for (std::size_t i = 0; i < harmonics.size(); ++i) {
        const double w = 2.0 * std::numbers::pi * harmonics[i] / N;
        for (int t = 0; t < N; ++t) s[static_cast<std::size_t>(t)] += std::cos(w * t + phases[i]);
    }
    return s;
}

double max_step(const std::vector<double>& s) {
    double d = 0.0;
    for (std::size_t t = 1; t < s.size(); ++t) d = std::max(d, std::abs(s[t] - s[t - 1]));
    return d;
}

} // namespace

void SignalSpec::validate() const {
    if (horizon < 1) throw Error(ErrorKind::InvalidInput, "signal spec: horizon must be at least 1");
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidInput, "signal spec: dt must be positive");
    if (u_hi.size() != u_lo.size() || du_max.size() != u_lo.size()) {
        throw Error(ErrorKind::InvalidInput, "signal spec: u_lo, u_hi and du_max must share a dimension");
    }
    for (Index j = 0; j < m(); ++j) {
        if (!(u_lo(j) <= u_hi(j))) throw Error(ErrorKind::InvalidInput, "signal spec: empty input box");
        if (!(du_max(j) >= 0.0)) throw Error(ErrorKind::InvalidInput, "signal spec: du_max must be non-negative");
    }
    if (center) {
        if (center->size() != m()) throw Error(ErrorKind::InvalidInput, "signal spec: center has wrong dimension");
        for (Index j = 0; j < m(); ++j) {
            if ((*center)(j) < u_lo(j) || (*center)(j) > u_hi(j)) {
                throw Error(ErrorKind::InvalidInput, "signal spec: center outside the input box");
            }
        }
    }
}

Signal random_inputs(const SignalSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::bernoulli_distribution coin(0.5);
    Signal out;
    out.reserve(static_cast<std::size_t>(spec.horizon));
    Vector u = spec.midpoint();
    out.push_back(u);
    for (int t = 1; t < spec.horizon; ++t) {
        for (Index j = 0; j < spec.m(); ++j) {
            const double step = coin(rng) ? spec.du_max(j) : -spec.du_max(j);
            u(j) = std::clamp(u(j) + step, spec.u_lo(j), spec.u_hi(j));
        }
        out.push_back(u);
    }
    return out;
}

std::vector<int> maximal_length_sequence(int bits, std::uint32_t state) {
    if (bits < 2 || bits > 16) throw Error(ErrorKind::InvalidInput, "PRBS register must have 2..16 bits");
    const std::uint32_t mask = (1u << bits) - 1u;
    state &= mask;
    if (state == 0) throw Error(ErrorKind::InvalidInput, "PRBS register state must be non-zero");
    const auto& taps = lfsr_taps()[static_cast<std::size_t>(bits)];
    std::vector<int> seq;
    seq.reserve(mask);
    for (std::uint32_t i = 0; i < mask; ++i) {
        seq.push_back(static_cast<int>(state & 1u));
        std::uint32_t fb = 0;
        for (int tap : taps) fb ^= (state >> (bits - tap)) & 1u;
        state = (state >> 1) | (fb << (bits - 1));
    }
    return seq;
}

Signal prbs(const SignalSpec& spec, int hold_steps, int register_bits) {
    spec.validate();
    if (hold_steps < 1) throw Error(ErrorKind::InvalidInput, "PRBS hold_steps must be at least 1");
    if (register_bits < 2 || register_bits > 16) throw Error(ErrorKind::InvalidInput, "PRBS register must have 2..16 bits");
    const std::uint32_t period = (1u << register_bits) - 1u;
    std::mt19937_64 rng(spec.seed);
    std::vector<std::vector<int>> symbols;
    for (Index j = 0; j < spec.m(); ++j) {
        const auto start = static_cast<std::uint32_t>(rng() % period) + 1u;
        symbols.push_back(maximal_length_sequence(register_bits, start));
    }

    Signal out;
    out.reserve(static_cast<std::size_t>(spec.horizon));
    Vector y = spec.midpoint();
    for (int t = 0; t < spec.horizon; ++t) {
        const std::size_t sym = static_cast<std::size_t>(t / hold_steps) % period;
        for (Index j = 0; j < spec.m(); ++j) {
            const double target = symbols[static_cast<std::size_t>(j)][sym] ? spec.u_hi(j) : spec.u_lo(j);
            const double d = spec.du_max(j);
            y(j) += std::clamp(target - y(j), -d, d);
        }
        out.push_back(y);
    }
    return out;
}

std::vector<double> schroeder_phases(int count) {
    std::vector<double> phi(static_cast<std::size_t>(count));
    for (int i = 1; i <= count; ++i) {
        phi[static_cast<std::size_t>(i - 1)] = -std::numbers::pi * i * (i - 1) / count;
    }
    return phi;
}

MultisineSignal multisine(const SignalSpec& spec, const MultisineOptions& opts) {
    spec.validate();
    if (opts.num_components < 1) throw Error(ErrorKind::InvalidInput, "multisine needs at least one component");
    const int N = spec.horizon;
    const double f0 = 1.0 / (N * spec.dt);
    const double nyquist = 0.5 / spec.dt;
    if (!(opts.band_lo_hz > 0.0) || !(opts.band_hi_hz < nyquist) || opts.band_lo_hz > opts.band_hi_hz) {
        throw Error(ErrorKind::InvalidInput, "multisine band must lie inside (0, 1/(2 dt))");
    }

    std::vector<int> pool;
    for (int k = std::max(1, static_cast<int>(std::ceil(opts.band_lo_hz / f0 - 1e-9)));
         k * f0 <= opts.band_hi_hz * (1.0 + 1e-12) && 2 * k < N; ++k) {
        pool.push_back(k);
    }
    const Index m = spec.m();
    const std::size_t needed = static_cast<std::size_t>(m) * static_cast<std::size_t>(opts.num_components);
    if (pool.size() < needed) {
        std::ostringstream os;
        os << "multisine: band [" << opts.band_lo_hz << ", " << opts.band_hi_hz << "] Hz holds " << pool.size()
           << " harmonics of " << f0 << " Hz, need " << needed << " for " << m << " channels";
        throw Error(ErrorKind::Allocation, os.str());
    }

    MultisineSignal ms;
    ms.samples.assign(static_cast<std::size_t>(N), Vector::Zero(m));
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Vector c = spec.midpoint();

    for (Index j = 0; j < m; ++j) {
        std::vector<int> harm;
        for (int i = 0; i < opts.num_components; ++i) {
            harm.push_back(pool[static_cast<std::size_t>(j + static_cast<Index>(i) * m)]);
        }
        std::vector<double> phases = schroeder_phases(opts.num_components);
        std::vector<double> s = synthesize(harm, phases, N);
        double best = relative_peak_factor(s);

        // first phase stays fixed: a common time shift cannot change the peak factor
        for (int it = 0; it < opts.rpf_iters && opts.num_components > 1; ++it) {
            const double scale = std::numbers::pi * (1.0 - static_cast<double>(it) / opts.rpf_iters) + 0.02;
            std::vector<double> cand = phases;
            for (std::size_t i = 1; i < cand.size(); ++i) cand[i] += scale * gauss(rng);
            const std::vector<double> sc = synthesize(harm, cand, N);
            const double rpf = relative_peak_factor(sc);
            if (rpf < best) {
                best = rpf;
                phases = std::move(cand);
                s = sc;
            }
        }

        const double smax = *std::max_element(s.begin(), s.end());
        const double smin = *std::min_element(s.begin(), s.end());
        double amp = std::numeric_limits<double>::infinity();
        if (smax > 0.0) amp = std::min(amp, (spec.u_hi(j) - c(j)) / smax);
        if (smin < 0.0) amp = std::min(amp, (c(j) - spec.u_lo(j)) / -smin);
        if (!std::isfinite(amp)) amp = 0.0;

        for (int t = 0; t < N; ++t) {
            ms.samples[static_cast<std::size_t>(t)](j) =
                std::clamp(c(j) + amp * s[static_cast<std::size_t>(t)], spec.u_lo(j), spec.u_hi(j));
        }
        const std::vector<double> out = channel(ms.samples, j);
        const double step = max_step(out);
        if (std::isfinite(spec.du_max(j)) && step > spec.du_max(j)) {
            std::ostringstream os;
            os << "multisine: channel " << j << " changes by " << step << " per step, above du_max "
               << spec.du_max(j) << "; offending component " << harm.back() * f0 << " Hz";
            throw Error(ErrorKind::Slew, os.str());
        }
        ms.harmonics.push_back(std::move(harm));
        ms.phases.push_back(std::move(phases));
        ms.rpf.push_back(relative_peak_factor(out));
    }
    return ms;
}

Vector derive_slew_from_multisine(const SignalSpec& spec, const MultisineOptions& opts) {
    SignalSpec free = spec;
    free.du_max = Vector::Constant(spec.m(), std::numeric_limits<double>::infinity());
    const MultisineSignal ms = multisine(free, opts);
    return Eigen::Map<const Vector>(score_signal(ms.samples).max_diff.data(), spec.m());
}

double relative_peak_factor(const std::vector<double>& u) {
    if (u.empty()) return std::numeric_limits<double>::quiet_NaN();
    double mean = 0.0;
    for (double v : u) mean += v;
    mean /= static_cast<double>(u.size());
    double ss = 0.0;
    for (double v : u) ss += (v - mean) * (v - mean);
    const double rms = std::sqrt(ss / static_cast<double>(u.size()));
    if (!(rms > 1e-14 * std::max(1.0, std::abs(mean)))) return std::numeric_limits<double>::quiet_NaN();
    const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
    return (*hi - *lo) / (2.0 * std::numbers::sqrt2 * rms);
}

SignalScore score_signal(const Signal& u) {
    if (u.empty()) throw Error(ErrorKind::InvalidInput, "score_signal: empty sequence");
    SignalScore sc;
    const Index m = u.front().size();
    for (Index j = 0; j < m; ++j) {
        const std::vector<double> ch = channel(u, j);
        const double rpf = relative_peak_factor(ch);
        sc.rpf.push_back(rpf);
        sc.rpf_defined.push_back(!std::isnan(rpf));
        sc.max_diff.push_back(max_step(ch));
    }
    return sc;
}

} // namespace infodesign
