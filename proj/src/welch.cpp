#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>

#include "hopfcal/constants.hpp"
#include "hopfcal/errors.hpp"
#include "hopfcal/spectral.hpp"

namespace hopfcal {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n),
        in_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
        out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
    if (!in_ || !out_) throw NumericError("welch_psd: FFT buffer allocation failed");
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE);
    if (!plan_) throw NumericError("welch_psd: FFT planning failed");
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_.get(); }
  void execute() { fftw_execute(plan_); }
  double power(std::size_t k) const { return out_.get()[k][0] * out_.get()[k][0] + out_.get()[k][1] * out_.get()[k][1]; }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  std::unique_ptr<double, FftwFree> in_;
  std::unique_ptr<fftw_complex, FftwFree> out_;
  fftw_plan plan_ = nullptr;
};

}  // namespace

SpectrumRecord welch_psd(std::span<const double> trace, double sample_rate, std::size_t segment_length,
                         double overlap) {
  if (!(sample_rate > 0.0)) throw DomainError("welch_psd: sample rate must be > 0");
  if (segment_length < 4) throw DomainError("welch_psd: segment length must be >= 4");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw DomainError("welch_psd: overlap must lie in [0, 1)");
  if (trace.size() < segment_length) throw DataError("welch_psd: trace shorter than one segment");
  for (double v : trace)
    if (!std::isfinite(v)) throw DataError("welch_psd: trace contains non-finite samples");

  const std::size_t L = segment_length;
  const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(L * (1.0 - overlap))));
  const std::size_t segments = 1 + (trace.size() - L) / hop;

  std::vector<double> window(L);
  double window_power = 0.0;
  for (std::size_t j = 0; j < L; ++j) {
    window[j] = 0.5 * (1.0 - std::cos(constants::two_pi * static_cast<double>(j) / static_cast<double>(L)));
    window_power += window[j] * window[j];
  }

  RealFft fft(L);
  const std::size_t bins = L / 2 + 1;
  std::vector<double> acc(bins, 0.0);
  for (std::size_t s = 0; s < segments; ++s) {
    const double* seg = trace.data() + s * hop;
    for (std::size_t j = 0; j < L; ++j) fft.input()[j] = seg[j] * window[j];
    fft.execute();
    for (std::size_t k = 0; k < bins; ++k) acc[k] += fft.power(k);
  }

  SpectrumRecord out;
  out.freqs.resize(bins);
  out.psd.resize(bins);
  const double norm = 1.0 / (sample_rate * window_power * static_cast<double>(segments));
  for (std::size_t k = 0; k < bins; ++k) {
    out.freqs[k] = static_cast<double>(k) * sample_rate / static_cast<double>(L);
    const bool unpaired = k == 0 || (L % 2 == 0 && k == L / 2);
    out.psd[k] = acc[k] * norm * (unpaired ? 1.0 : 2.0);
  }
  out.metadata = "welch hann L=" + std::to_string(L) + " segments=" + std::to_string(segments);
  return out;
}

}  // namespace hopfcal
