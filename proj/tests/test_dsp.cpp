// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "prosync/dsp.hpp"
#include "prosync/numeric.hpp"

using namespace prosync;
using std::numbers::pi;

namespace {

SampledTrack track_of(std::initializer_list<double> v, std::initializer_list<bool> valid) {
  SampledTrack t;
  t.values = Eigen::Map<const Vector>(v.begin(), static_cast<Eigen::Index>(v.size()));
  t.valid.resize(static_cast<Eigen::Index>(valid.size()));
  Eigen::Index i = 0;
  for (bool b : valid) t.valid[i++] = b;
  return t;
}

Vector random_vector(Eigen::Index n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

// Naive O(N^2) orthonormal DCT-II straight from the definition.
Vector naive_dct(const Vector& x) {
  const auto n = x.size();
  Vector c(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      s += x[i] * std::cos(pi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) /
                           (2.0 * static_cast<double>(n)));
    c[k] = s * std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
  }
  return c;
}

// Least-squares cubic on one window by explicit normal equations, evaluated at `at`.
double window_fit(const Vector& y, Eigen::Index first, double at) {
  Eigen::Matrix<double, 5, 4> x;
  for (int r = 0; r < 5; ++r) {
    const double t = r;
    x.row(r) << 1, t, t * t, t * t * t;
  }
  const Eigen::Vector4d beta = (x.transpose() * x).ldlt().solve(x.transpose() * y.segment<5>(first));
  return beta[0] + beta[1] * at + beta[2] * at * at + beta[3] * at * at * at;
}

double sine_amplitude_after(const Vector& y, Eigen::Index skip) {
  return y.segment(skip, y.size() - 2 * skip).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("interpolate_gaps") {
  SUBCASE("midpoint") {
    const auto out = dsp::interpolate_gaps(track_of({100, 0, 200}, {true, false, true}));
    CHECK(out.values[1] == 150.0);
    CHECK(out.valid.all());
  }
  SUBCASE("no gaps is identity") {
    const auto in = track_of({1, 2, 3}, {true, true, true});
    CHECK(dsp::interpolate_gaps(in).values == in.values);
  }
  SUBCASE("leading and trailing holds") {
    const auto out = dsp::interpolate_gaps(
        track_of({0, 0, 120, 130, 0}, {false, false, true, true, false}));
    CHECK(out.values[0] == 120.0);
    CHECK(out.values[1] == 120.0);
    CHECK(out.values[4] == 130.0);
  }
  SUBCASE("idempotent") {
    const auto once = dsp::interpolate_gaps(
        track_of({0, 5, 0, 0, 11, 0}, {false, true, false, false, true, false}));
    CHECK(dsp::interpolate_gaps(once).values == once.values);
  }
  SUBCASE("all invalid") {
    CHECK_THROWS_AS(dsp::interpolate_gaps(track_of({0, 0}, {false, false})), Error);
  }
}

TEST_CASE("remove_outliers") {
  SUBCASE("constant contour keeps everything") {
    auto t = SampledTrack::all_valid(Vector::Constant(20, 150.0), 100, Unit::kHertz);
    CHECK(dsp::remove_outliers(t).valid.all());
  }
  SUBCASE("a 4x spike on a constant contour is removed") {
    Vector v = Vector::Constant(20, 150.0);
    v[7] = 600.0;
    const auto out = dsp::remove_outliers(SampledTrack::all_valid(v, 100, Unit::kHertz));
    CHECK(!out.valid[7]);
    CHECK(out.valid.count() == 19);
  }
  SUBCASE("listed contour: fences computed with numpy remove index 5 only") {
    const auto out = dsp::remove_outliers(track_of(
        {100, 102, 98, 101, 99, 400, 100, 103, 97, 100}, {1, 1, 1, 1, 1, 1, 1, 1, 1, 1}));
    for (Eigen::Index i = 0; i < 10; ++i) CHECK(out.valid[i] == (i != 5));
  }
  SUBCASE("spread inside the fences is unchanged") {
    const auto out = dsp::remove_outliers(
        track_of({100, 110, 120, 130, 140, 150}, {1, 1, 1, 1, 1, 1}));
    CHECK(out.valid.all());
  }
  SUBCASE("fewer than four valid samples is a no-op") {
    const auto out = dsp::remove_outliers(track_of({100, 900, 100}, {1, 1, 1}));
    CHECK(out.valid.all());
  }
}

TEST_CASE("savgol_smooth") {
  SUBCASE("constant contour unchanged") {
    auto t = SampledTrack::all_valid(Vector::Constant(9, 3.5), 100, Unit::kSemitone);
    CHECK(dsp::savgol_smooth(t).values.isApprox(t.values, 1e-14));
  }
  SUBCASE("interior center weights are the classic (-3,12,17,12,-3)/35") {
    Eigen::Matrix<double, 5, 1> expect;
    expect << -3, 12, 17, 12, -3;
    CHECK((dsp::savgol_weights().row(2).transpose() - expect / 35.0).norm() < 1e-14);
  }
  SUBCASE("exact cubic reproduced to 1e-9") {
    const Vector t = Vector::LinSpaced(30, -2.0, 2.0);
    const Vector y = (t.array().cube() - 2.0 * t.array()).matrix();
    const auto out = dsp::savgol_smooth(SampledTrack::all_valid(y, 100, Unit::kSemitone));
    CHECK((out.values - y).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("noisy sine equals per-window normal-equation fits") {
    const Eigen::Index n = 40;
    Vector y(n);
    const Vector noise = random_vector(n, 11);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = std::sin(0.3 * static_cast<double>(i)) + 0.2 * noise[i];
    const auto out = dsp::savgol_smooth(SampledTrack::all_valid(y, 100, Unit::kSemitone));
    for (Eigen::Index i = 2; i + 2 < n; ++i) CHECK(std::abs(out.values[i] - window_fit(y, i - 2, 2.0)) < 1e-9);
    CHECK(std::abs(out.values[0] - window_fit(y, 0, 0.0)) < 1e-9);
    CHECK(std::abs(out.values[1] - window_fit(y, 0, 1.0)) < 1e-9);
    CHECK(std::abs(out.values[n - 2] - window_fit(y, n - 5, 3.0)) < 1e-9);
    CHECK(std::abs(out.values[n - 1] - window_fit(y, n - 5, 4.0)) < 1e-9);
  }
  SUBCASE("too short") {
    CHECK_THROWS_AS(dsp::savgol_smooth(SampledTrack::all_valid(Vector::Ones(4), 100, Unit::kHertz)), Error);
  }
}

TEST_CASE("semitone transform") {
  SUBCASE("base and octave") {
    auto t = SampledTrack::all_valid((Vector(2) << 100.0, 200.0).finished(), 100, Unit::kHertz);
    const auto st = dsp::to_semitones(t, 100.0);
    CHECK(st.values[0] == 0.0);
    CHECK(st.values[1] == doctest::Approx(12.0).epsilon(1e-15));
    CHECK(st.unit == Unit::kSemitone);
  }
  SUBCASE("base of a 20-sample listed contour (numpy: p5 = 157.95, base 157)") {
    const Vector c = (Vector(20) << 182., 175, 169, 190, 201, 160, 158, 171, 166, 177, 188, 195,
                      163, 159, 172, 180, 168, 161, 157, 174)
                         .finished();
    CHECK(dsp::semitone_base(c) == 157.0);
  }
  SUBCASE("base of a 60-sample contour takes the median of a 3-element tail") {
    const Vector c = (Vector(60) << 216.9, 217.3, 167.6, 128.6, 89.2, 145.2, 149.4, 87.7, 88.3,
                      249.9, 190.9, 119.9, 153.9, 245.6, 232.6, 223.5, 146.7, 163.8, 195.0, 90.3,
                      174.5, 126.1, 229.5, 90.9, 195.5, 227.9, 118.6, 232.2, 228.3, 83.1, 200.3,
                      80.2, 165.6, 154.2, 114.6, 135.2, 217.1, 133.8, 105.3, 198.7, 156.3, 215.8,
                      120.0, 134.4, 216.0, 166.2, 166.1, 120.2, 82.5, 238.6, 94.6, 223.6, 142.5,
                      241.7, 147.9, 239.2, 174.5, 120.8, 206.0, 194.6)
                         .finished();
    CHECK(dsp::semitone_base(c) == 82.5);
  }
  SUBCASE("monotone and invertible") {
    const Vector hz = Vector::LinSpaced(50, 80.0, 400.0);
    const auto [st, base] = dsp::to_semitones(SampledTrack::all_valid(hz, 100, Unit::kHertz));
    for (Eigen::Index i = 1; i < st.size(); ++i) CHECK(st.values[i] > st.values[i - 1]);
    const auto back = dsp::from_semitones(st, base);
    CHECK(((back.values - hz).array() / hz.array()).abs().maxCoeff() < 1e-9);
  }
  SUBCASE("non-positive sample") {
    auto t = SampledTrack::all_valid((Vector(2) << 100.0, 0.0).finished(), 100, Unit::kHertz);
    CHECK_THROWS_AS(dsp::to_semitones(t, 100.0), Error);
  }
}

TEST_CASE("rms_energy") {
  const double rate = 16000;
  SUBCASE("silence") {
    const auto e = dsp::rms_energy({Vector::Zero(16000), rate});
    CHECK(e.rate == 100.0);
    CHECK(e.size() == 100);
    CHECK(e.values.isZero(0.0));
  }
  SUBCASE("homogeneous of degree one") {
    const Vector x = random_vector(8000, 3);
    const auto a = dsp::rms_energy({x, rate});
    const auto b = dsp::rms_energy({2.0 * x, rate});
    CHECK((b.values - 2.0 * a.values).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("unit 440 Hz sine against a direct windowed sum") {
    Vector x(16000);
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = std::sin(2 * pi * 440 * static_cast<double>(i) / rate);
    const auto e = dsp::rms_energy({x, rate});
    const int half = 400, len = 801;  // 50 ms at 16 kHz, centered
    for (int k = 3; k < 97; ++k) {
      const int c = k * 160;
      double acc = 0.0;
      for (int j = 0; j < len; ++j) {
        const double w = 0.54 - 0.46 * std::cos(2 * pi * j / (len - 1));
        const double s = std::sin(2 * pi * 440 * (c - half + j) / rate);
        acc += w * w * s * s;
      }
      CHECK(std::abs(e.values[k] - std::sqrt(acc / len)) < 1e-9);
    }
  }
}

TEST_CASE("band-pass design matches the analog Butterworth magnitude") {
  const double rate = 16000;
  const auto d = dsp::design_bandpass(rate);
  CHECK(d.sections.size() == 5);
  const double fs2 = 2 * rate;
  const double w1 = fs2 * std::tan(pi * 200 / rate), w2 = fs2 * std::tan(pi * 4000 / rate);
  for (double f : {30.0, 50.0, 150.0, 200.0, 500.0, 1000.0, 2000.0, 3500.0, 4000.0, 6000.0}) {
    const double w = fs2 * std::tan(pi * f / rate);  // analog frequency that maps onto f
    const double x = (w * w - w1 * w2) / (w * (w2 - w1));
    const double analog = 1.0 / std::sqrt(1.0 + std::pow(x, 10));
    CHECK(d.magnitude(f) == doctest::Approx(analog).epsilon(1e-7));
  }
}

TEST_CASE("bandpass") {
  const double rate = 16000;
  const Eigen::Index n = 16000;
  auto tone = [&](double f) {
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = std::sin(2 * pi * f * static_cast<double>(i) / rate);
    return x;
  };
  SUBCASE("DC is rejected") {
    const auto y = dsp::bandpass({Vector::Constant(n, 0.5), rate});
    CHECK(y.samples.size() == n);
    CHECK(sine_amplitude_after(y.samples, 1600) < 1e-3 * 0.5);
  }
  SUBCASE("1 kHz passes within 0.5 dB, 50 Hz loses more than 20 dB") {
    const double a1k = sine_amplitude_after(dsp::bandpass({tone(1000), rate}).samples, 1600);
    CHECK(std::abs(20 * std::log10(a1k)) < 0.5);
    const double a50 = sine_amplitude_after(dsp::bandpass({tone(50), rate}).samples, 1600);
    CHECK(20 * std::log10(a50) < -20.0);
    // zero-phase filtering applies the magnitude twice
    const auto d = dsp::design_bandpass(rate);
    CHECK(a1k == doctest::Approx(d.magnitude(1000) * d.magnitude(1000)).epsilon(1e-3));
  }
  SUBCASE("linear") {
    const Vector a = random_vector(4000, 1), b = random_vector(4000, 2);
    const auto fa = dsp::bandpass({a, rate}).samples, fb = dsp::bandpass({b, rate}).samples;
    const auto fab = dsp::bandpass({a + b, rate}).samples;
    CHECK((fab - fa - fb).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("rate too low") { CHECK_THROWS_AS(dsp::bandpass({Vector::Zero(100), 8000}), Error); }
}

TEST_CASE("dct_spectrum") {
  SUBCASE("constant input has only a DC coefficient") {
    const auto s = dsp::dct_spectrum(SampledTrack::all_valid(Vector::Constant(32, 2.0), 100, Unit::kRms));
    CHECK(s.coefficients[0] == doctest::Approx(2.0 * std::sqrt(32.0)));
    CHECK(s.coefficients.tail(31).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("basis function excites a single coefficient") {
    const Eigen::Index n = 50, k0 = 7;
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = std::cos(pi * k0 * (2.0 * i + 1) / (2.0 * n));
    const auto s = dsp::dct_spectrum(SampledTrack::all_valid(x, 100, Unit::kRms));
    Eigen::Index arg;
    s.coefficients.cwiseAbs().maxCoeff(&arg);
    CHECK(arg == k0);
    CHECK(s.coefficients.cwiseAbs().sum() - std::abs(s.coefficients[k0]) < 1e-10);
  }
  SUBCASE("frequency mapping") {
    dsp::DctSpectrum s{Vector::Zero(200), 100.0};
    CHECK(s.freq_of(0) == 0.0);
    CHECK(s.freq_of(8) == doctest::Approx(2.0));
    for (Eigen::Index k = 1; k < 200; ++k) CHECK(s.freq_of(k) > s.freq_of(k - 1));
  }
  SUBCASE("Parseval on random 64 samples") {
    const Vector x = random_vector(64, 9);
    const Vector c = dsp::dct2(x);
    CHECK(std::abs(x.squaredNorm() - c.squaredNorm()) < 1e-9);
  }
  SUBCASE("matches the naive transform for N <= 256") {
    for (Eigen::Index n : {2, 3, 5, 16, 31, 64, 97, 128, 200, 256}) {
      const Vector x = random_vector(n, static_cast<unsigned>(n));
      CHECK((dsp::dct2(x) - naive_dct(x)).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}
