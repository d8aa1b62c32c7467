#pragma once

#include "capimg/fieldsolver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace capimg {

struct ReferenceSignal {
    double f_in = 15e3;     ///< Hz
    double v_ref = 1.0;     ///< V
    double theta_ref = 0.0; ///< rad
};

struct TimeSeries {
    double fs = 0.0;  ///< Hz
    double t0 = 0.0;  ///< s
    std::vector<double> samples;

    double time(std::size_t n) const { return t0 + static_cast<double>(n) / fs; }
};

enum class NoiseKind { none, white_gaussian };

struct NoiseModel {
    NoiseKind kind = NoiseKind::none;
    double sigma = 0.0;  ///< V per sample
    std::uint64_t seed = 0;
};

/// Lock-in output. X and Y carry the 1/2 v_out v_ref scaling of an ideal
/// multiplying demodulator.
struct Demodulation {
    double x = 0.0;
    double y = 0.0;
    double r = 0.0;
    double phi = 0.0;  ///< (-pi, pi]
};

/// Wraps an angle to (-pi, pi].
double wrap_phase(double a);

/// v_out sin(2 pi f_in t + theta_out) + noise over round(n_periods fs / f_in)
/// samples. Throws SamplingError when fs <= 2 f_in or n_periods < 1.
TimeSeries synthesize(double v_out, double theta_out, const ReferenceSignal& ref, double fs,
                      std::size_t n_periods, const NoiseModel& noise);

/// Synchronous demodulation against v_ref sin(wt + theta_ref) and its
/// quadrature. The low-pass stage is a least-squares fit of sine, cosine and
/// offset over the record (the boxcar mean when the record holds an integer
/// number of samples per period). The record must span
/// an integer number of reference periods to within half a sample
/// (AlignmentError otherwise).
Demodulation demodulate(const TimeSeries& ts, const ReferenceSignal& ref);

/// Charge amplifier: v_out = gain |q|, theta_out = arg(q) + extra_phase
/// wrapped to (-pi, pi].
struct AmplifierOutput {
    double v_out = 0.0;
    double theta_out = 0.0;
};
AmplifierOutput charge_to_voltage(const InducedCharge& q, double gain, double extra_phase);

}  // namespace capimg
