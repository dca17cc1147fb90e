// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

// Contour preprocessing and spectral primitives.

#pragma once

#include <array>
#include <vector>

#include "prosync/types.hpp"

namespace prosync::dsp {

/// Linear interpolation across invalid stretches; leading and trailing gaps
/// hold the nearest valid value. Throws if no sample is valid.
SampledTrack interpolate_gaps(const SampledTrack& track);

/// Marks samples outside the 1.5 IQR fences of log2(f0) as invalid. Fences are
/// inclusive. No-op with fewer than 4 valid samples.
SampledTrack remove_outliers(const SampledTrack& track);

/// Savitzky-Golay smoothing, cubic fit over 5-sample windows. The first and
/// last two samples take the fit of the nearest full window.
SampledTrack savgol_smooth(const SampledTrack& track);

/// Weights that evaluate the 5-point cubic least-squares fit at each of the
/// five window positions (row = evaluation position).
const Eigen::Matrix<double, 5, 5>& savgol_weights();

/// Median of the samples at or below the 5th percentile.
double semitone_base(const Vector& hz);

/// 12 * log2(f / base). All samples must be valid and positive.
SampledTrack to_semitones(const SampledTrack& track, double base);
/// Convenience form that takes the base from the track itself.
std::pair<SampledTrack, double> to_semitones(const SampledTrack& track);
SampledTrack from_semitones(const SampledTrack& track, double base);

inline constexpr double kEnergyRate = 100.0;
inline constexpr double kEnergyWindow = 0.050;

/// Hamming-windowed RMS at 100 Hz; frame k is centered on t = k / 100 and
/// zero-padded beyond the signal.
SampledTrack rms_energy(const Waveform& w);

/// Second-order section, a0 normalized to 1.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

struct BandpassDesign {
  std::vector<Biquad> sections;
  double gain = 1.0;
  double rate = 0.0;

  /// |H(e^{jw})| of the single (one-directional) filter at `hz`.
  double magnitude(double hz) const;
};

inline constexpr int kBandpassOrder = 5;
inline constexpr double kBandLow = 200.0;
inline constexpr double kBandHigh = 4000.0;

/// Digital Butterworth band-pass by bilinear transform with prewarping.
BandpassDesign design_bandpass(double rate, int order = kBandpassOrder, double low = kBandLow,
                               double high = kBandHigh);

/// Forward-backward (zero-phase) band-pass filtering, same length as input.
Waveform bandpass(const Waveform& w);
Vector filtfilt(const BandpassDesign& design, const Vector& x);

/// Orthonormal DCT-II with the frequency of each coefficient.
struct DctSpectrum {
  Vector coefficients;
  double rate = 0.0;

  Eigen::Index size() const { return coefficients.size(); }
  /// k * rate / (2N)
  double freq_of(Eigen::Index k) const {
    return static_cast<double>(k) * rate / (2.0 * static_cast<double>(coefficients.size()));
  }
};

DctSpectrum dct_spectrum(const SampledTrack& track);
Vector dct2(const Vector& x);

}  // namespace prosync::dsp
