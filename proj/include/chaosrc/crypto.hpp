#pragma once

// Open-loop delay-system cryptosystem: Alice encodes the message inside the
// Mackey-Glass delay dynamics, the channel adds uniform noise, Bob inverts
// with an open-loop replica, and Eve learns the inverse from plain text.

#include "chaosrc/dynamics.hpp"
#include "chaosrc/reservoir.hpp"
#include "chaosrc/series.hpp"

#include <functional>
#include <optional>

namespace chaosrc {

/// eps x'(t) = -x(t) + f(x(t - tau)) + m(t) with f(v) = (beta/gamma) v / (1 + v^n).
/// eps = 1/gamma turns m = 0 into plain Mackey-Glass.
struct CipherParams {
    double epsilon = 10.0;
    MGParams mg;
    double nu = 0.0;
    double dt = 0.5;

    void validate() const;
    double f(double v) const;
    /// Equivalent Mackey-Glass parameters (beta/(gamma eps), 1/eps, tau, n).
    MGParams equivalent_mg() const;
};

/// Integrates from `hist` over the sample times of m (m.dt must equal p.dt).
/// Between samples the message is interpolated by a cubic through the four
/// nearest samples. Returns one ciphertext sample per message sample.
TimeSeries alice_encrypt(const TimeSeries& m, const CipherParams& p, const DelayHistory& hist);

/// Same, with the message given as a function of time.
TimeSeries alice_encrypt(const std::function<double(double)>& m, const CipherParams& p, const DelayHistory& hist,
                         std::size_t steps, double t0 = 0.0);

/// x'(n) = x(n) + uniform noise on [-nu, nu].
TimeSeries channel(const TimeSeries& x, double nu, std::uint64_t seed);

struct BandSpec {
    double f_lo = 0.0;
    double f_hi = 0.0;
};

/// Open-loop decoding. The replica eps y' = -y + f(x'(t - tau)) starts at
/// x'.t0 + tau from y = x'; the result covers [x'.t0 + tau, end] and is
/// m' = eps dz'/dt + z' with z' = x' - y (central differences), optionally
/// band-pass filtered. The delayed ciphertext between samples is a Hermite
/// cubic; its slopes start as finite differences and are then refined twice
/// from eps x' = -x' + f(x'(t - tau)) + m'.
TimeSeries bob_decrypt(const TimeSeries& x_prime, const CipherParams& p,
                       const std::optional<BandSpec>& filter = std::nullopt);

struct TrainedAttacker {
    WeightSet weights;
    ReservoirConfig cfg;
    std::optional<double> training_nmse;
    ReservoirState final_state;
};

/// Eve's plain-text attack: u(n) = x'(n), target m(n), both sampled at cfg.delta.
/// cfg.feedback_scale must be 0.
TrainedAttacker eve_train(const TimeSeries& x_prime, const TimeSeries& m, const ReservoirConfig& cfg,
                          std::size_t washout);

/// Feed-forward run over x' sampled at att.cfg.delta, from `start` (zero state if unset).
TimeSeries eve_decrypt(const TrainedAttacker& att, const TimeSeries& x_prime,
                       const std::optional<ReservoirState>& start = std::nullopt);

/// Carrier variance over noise power.
double power_snr(const TimeSeries& clean, const TimeSeries& noisy);

}  // namespace chaosrc
