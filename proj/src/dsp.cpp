// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

#include "prosync/dsp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "prosync/numeric.hpp"

namespace prosync::dsp {

SampledTrack interpolate_gaps(const SampledTrack& track) {
  const Eigen::Index n = track.size();
  Eigen::Index first = -1;
  for (Eigen::Index i = 0; i < n; ++i)
    if (track.valid[i]) {
      first = i;
      break;
    }
  if (first < 0) throw Error("interpolate_gaps: track has no valid sample");

  SampledTrack out = track;
  for (Eigen::Index i = 0; i < first; ++i) out.values[i] = track.values[first];
  Eigen::Index prev = first;
  for (Eigen::Index i = first + 1; i < n; ++i) {
    if (!track.valid[i]) continue;
    if (i - prev > 1) {
      const double a = track.values[prev], b = track.values[i];
      const double span = static_cast<double>(i - prev);
      for (Eigen::Index j = prev + 1; j < i; ++j)
        out.values[j] = a + (b - a) * static_cast<double>(j - prev) / span;
    }
    prev = i;
  }
  for (Eigen::Index i = prev + 1; i < n; ++i) out.values[i] = track.values[prev];
  out.valid.setConstant(true);
  return out;
}

SampledTrack remove_outliers(const SampledTrack& track) {
  std::vector<double> logs;
  for (Eigen::Index i = 0; i < track.size(); ++i)
    if (track.valid[i] && track.values[i] > 0.0) logs.push_back(std::log2(track.values[i]));
  SampledTrack out = track;
  if (logs.size() < 4) return out;
  std::sort(logs.begin(), logs.end());
  const double q1 = num::percentile_sorted(logs, 25.0);
  const double q3 = num::percentile_sorted(logs, 75.0);
  const double iqr = q3 - q1;
  const double lo = q1 - 1.5 * iqr, hi = q3 + 1.5 * iqr;
  for (Eigen::Index i = 0; i < track.size(); ++i) {
    if (!track.valid[i]) continue;
    if (track.values[i] <= 0.0) {
      out.valid[i] = false;
      continue;
    }
    const double l = std::log2(track.values[i]);
    if (l < lo || l > hi) out.valid[i] = false;
  }
  return out;
}

const Eigen::Matrix<double, 5, 5>& savgol_weights() {
  static const Eigen::Matrix<double, 5, 5> weights = [] {
    Eigen::Matrix<double, 5, 4> design;
    for (int r = 0; r < 5; ++r) {
      const double t = r - 2.0;
      design.row(r) << 1.0, t, t * t, t * t * t;
    }
    const Eigen::Matrix4d gram = design.transpose() * design;
    return Eigen::Matrix<double, 5, 5>(design * gram.inverse() * design.transpose());
  }();
  return weights;
}

SampledTrack savgol_smooth(const SampledTrack& track) {
  const Eigen::Index n = track.size();
  if (n < 5) throw Error("savgol_smooth: need at least 5 samples");
  const auto& h = savgol_weights();
  SampledTrack out = track;
  const Vector& x = track.values;
  for (Eigen::Index i = 2; i + 2 < n; ++i) out.values[i] = h.row(2).dot(x.segment<5>(i - 2));
  out.values[0] = h.row(0).dot(x.head<5>());
  out.values[1] = h.row(1).dot(x.head<5>());
  out.values[n - 2] = h.row(3).dot(x.tail<5>());
  out.values[n - 1] = h.row(4).dot(x.tail<5>());
  return out;
}

double semitone_base(const Vector& hz) {
  if (hz.size() == 0) throw Error("semitone_base: empty contour");
  std::vector<double> sorted(hz.data(), hz.data() + hz.size());
  std::sort(sorted.begin(), sorted.end());
  const double p5 = num::percentile_sorted(sorted, 5.0);
  const auto end = std::upper_bound(sorted.begin(), sorted.end(), p5);
  return num::median(std::span<const double>(sorted.data(), end - sorted.begin()));
}

SampledTrack to_semitones(const SampledTrack& track, double base) {
  if (!(base > 0.0)) throw Error("to_semitones: base must be positive");
  SampledTrack out = track;
  for (Eigen::Index i = 0; i < track.size(); ++i) {
    if (!track.valid[i]) continue;
    if (!(track.values[i] > 0.0)) throw Error("to_semitones: non-positive f0 sample");
    out.values[i] = 12.0 * std::log2(track.values[i] / base);
  }
  out.unit = Unit::kSemitone;
  return out;
}

std::pair<SampledTrack, double> to_semitones(const SampledTrack& track) {
  std::vector<double> voiced;
  for (Eigen::Index i = 0; i < track.size(); ++i)
    if (track.valid[i]) voiced.push_back(track.values[i]);
  if (voiced.empty()) throw Error("to_semitones: no valid samples");
  for (double v : voiced)
    if (!(v > 0.0)) throw Error("to_semitones: non-positive f0 sample");
  const double base =
      semitone_base(Eigen::Map<const Vector>(voiced.data(), static_cast<Eigen::Index>(voiced.size())));
  return {to_semitones(track, base), base};
}

SampledTrack from_semitones(const SampledTrack& track, double base) {
  SampledTrack out = track;
  out.values = base * (track.values.array() / 12.0 * std::numbers::ln2).exp();
  out.unit = Unit::kHertz;
  return out;
}

SampledTrack rms_energy(const Waveform& w) {
  const Eigen::Index n = w.samples.size();
  const auto half = static_cast<Eigen::Index>(std::lround(0.5 * kEnergyWindow * w.rate));
  const Eigen::Index len = 2 * half + 1;
  Vector w2(len);
  for (Eigen::Index j = 0; j < len; ++j) {
    const double h = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) /
                                            static_cast<double>(len - 1));
    w2[j] = h * h;
  }
  const double hop = w.rate / kEnergyRate;
  const auto frames =
      n == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(std::ceil(static_cast<double>(n) / hop));
  const Vector sq = w.samples.array().square();

  Vector out(frames);
  for (Eigen::Index k = 0; k < frames; ++k) {
    const auto center = static_cast<Eigen::Index>(std::llround(static_cast<double>(k) * hop));
    const Eigen::Index lo = center - half;
    const Eigen::Index a = std::max<Eigen::Index>(lo, 0);
    const Eigen::Index b = std::min<Eigen::Index>(lo + len, n);
    double acc = 0.0;
    if (b > a) acc = w2.segment(a - lo, b - a).dot(sq.segment(a, b - a));
    out[k] = std::sqrt(acc / static_cast<double>(len));
  }
  return SampledTrack::all_valid(std::move(out), kEnergyRate, Unit::kRms);
}

// Band-pass --------------------------------------------------------------------

namespace {

using Complex = std::complex<double>;

double eval_magnitude(const BandpassDesign& d, double hz) {
  const Complex zinv = std::polar(1.0, -2.0 * std::numbers::pi * hz / d.rate);
  const Complex zinv2 = zinv * zinv;
  Complex h = d.gain;
  for (const auto& s : d.sections)
    h *= (s.b0 + s.b1 * zinv + s.b2 * zinv2) / (1.0 + s.a1 * zinv + s.a2 * zinv2);
  return std::abs(h);
}

// Direct-form II transposed sections advanced sample by sample, so the
// section recurrences overlap in the pipeline. M is fixed at compile time to
// keep the state in registers.
template <int M>
void run_sections(const std::vector<Biquad>& sections, double gain, double* x, Eigen::Index n,
                  std::array<double, M> z1, std::array<double, M> z2) {
  std::array<Biquad, M> s;
  std::copy_n(sections.begin(), M, s.begin());
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = x[i] * gain;
    for (int k = 0; k < M; ++k) {
      const double y = s[k].b0 * v + z1[k];
      z1[k] = s[k].b1 * v - s[k].a1 * y + z2[k];
      z2[k] = s[k].b2 * v - s[k].a2 * y;
      v = y;
    }
    x[i] = v;
  }
}

template <int M>
void run_fixed(const BandpassDesign& d, Vector& x) {
  std::array<double, M> z1{}, z2{};
  double level = x.size() > 0 ? x[0] * d.gain : 0.0;
  for (int k = 0; k < M; ++k) {
    const auto& s = d.sections[static_cast<std::size_t>(k)];
    const double g = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double y = g * level;
    z2[k] = s.b2 * level - s.a2 * y;
    z1[k] = s.b1 * level - s.a1 * y + z2[k];
    level = y;
  }
  run_sections<M>(d.sections, d.gain, x.data(), x.size(), z1, z2);
}

// Runs the cascade with steady-state initial conditions for a constant input
// equal to x[0].
void run_cascade(const BandpassDesign& d, Vector& x) {
  switch (d.sections.size()) {
    case 1: return run_fixed<1>(d, x);
    case 2: return run_fixed<2>(d, x);
    case 3: return run_fixed<3>(d, x);
    case 4: return run_fixed<4>(d, x);
    case 5: return run_fixed<5>(d, x);
    case 6: return run_fixed<6>(d, x);
    case 7: return run_fixed<7>(d, x);
    case 8: return run_fixed<8>(d, x);
    default: throw Error("bandpass: at most 8 sections are supported");
  }
}

}  // namespace

double BandpassDesign::magnitude(double hz) const { return eval_magnitude(*this, hz); }

BandpassDesign design_bandpass(double rate, int order, double low, double high) {
  if (!(high < 0.5 * rate)) throw Error("bandpass: sample rate too low for the upper cutoff");
  if (!(low > 0.0 && low < high)) throw Error("bandpass: invalid cutoffs");
  const double fs2 = 2.0 * rate;
  const double w1 = fs2 * std::tan(std::numbers::pi * low / rate);
  const double w2 = fs2 * std::tan(std::numbers::pi * high / rate);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  std::vector<Complex> poles;
  for (int m = -order + 1; m < order; m += 2) {
    const Complex p = -std::polar(1.0, std::numbers::pi * m / (2.0 * order));
    const Complex plp = p * (bw / 2.0);
    const Complex root = std::sqrt(plp * plp - w0sq);
    poles.push_back(plp + root);
    poles.push_back(plp - root);
  }

  Complex gain = std::pow(bw, order);
  std::vector<Complex> zpoles;
  for (const auto& p : poles) {
    zpoles.push_back((fs2 + p) / (fs2 - p));
    gain /= (fs2 - p);
  }
  gain *= std::pow(fs2, order);

  BandpassDesign d;
  d.rate = rate;
  d.gain = gain.real();
  std::vector<Complex> upper, real;
  for (const auto& p : zpoles) {
    if (std::fabs(p.imag()) < 1e-12 * std::max(1.0, std::abs(p)))
      real.push_back(p.real());
    else if (p.imag() > 0.0)
      upper.push_back(p);
  }
  for (const auto& p : upper) d.sections.push_back({1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});
  std::sort(real.begin(), real.end(), [](Complex a, Complex b) { return a.real() < b.real(); });
  for (std::size_t i = 0; i + 1 < real.size(); i += 2)
    d.sections.push_back(
        {1.0, 0.0, -1.0, -(real[i] + real[i + 1]).real(), (real[i] * real[i + 1]).real()});
  if (static_cast<int>(d.sections.size()) != order)
    throw Error("bandpass: unexpected pole configuration");
  return d;
}

Vector filtfilt(const BandpassDesign& design, const Vector& x) {
  const Eigen::Index n = x.size();
  if (n == 0) return x;
  const Eigen::Index pad =
      std::min<Eigen::Index>(n - 1, 3 * (2 * static_cast<Eigen::Index>(design.sections.size()) + 1));
  Vector ext(n + 2 * pad);
  for (Eigen::Index i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
  ext.segment(pad, n) = x;
  for (Eigen::Index i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

  run_cascade(design, ext);
  ext.reverseInPlace();
  run_cascade(design, ext);
  ext.reverseInPlace();
  return ext.segment(pad, n);
}

Waveform bandpass(const Waveform& w) {
  if (!(w.rate > 2.0 * kBandHigh)) throw Error("bandpass: sample rate must exceed 8000 Hz");
  static thread_local BandpassDesign cached;
  if (cached.rate != w.rate) cached = design_bandpass(w.rate);
  return {filtfilt(cached, w.samples), w.rate};
}

// DCT ----------------------------------------------------------------------------

Vector dct2(const Vector& x) {
  const Eigen::Index n = x.size();
  Vector out(n);
  if (n == 0) return out;
  if (n == 1) {  // the FFT backend cannot take a single point
    out[0] = x[0];
    return out;
  }
  std::vector<double> v(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; 2 * i < n; ++i) v[static_cast<std::size_t>(i)] = x[2 * i];
  for (Eigen::Index i = 0; 2 * i + 1 < n; ++i)
    v[static_cast<std::size_t>(n - 1 - i)] = x[2 * i + 1];
  Eigen::FFT<double> fft;
  std::vector<Complex> spec;
  fft.fwd(spec, v);
  const double nd = static_cast<double>(n);
  const double s0 = std::sqrt(1.0 / nd), sk = std::sqrt(2.0 / nd);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Complex tw = std::polar(1.0, -std::numbers::pi * static_cast<double>(k) / (2.0 * nd));
    out[k] = (tw * spec[static_cast<std::size_t>(k)]).real() * (k == 0 ? s0 : sk);
  }
  return out;
}

DctSpectrum dct_spectrum(const SampledTrack& track) {
  if (track.size() < 2) throw Error("dct_spectrum: need at least 2 samples");
  return {dct2(track.values), track.rate};
}

}  // namespace prosync::dsp
