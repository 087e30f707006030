#include "mre/metrics.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>

#include "mre/error.hpp"
#include "mre/log.hpp"

namespace mre {

namespace {

// Keeps log10 finite for exactly-zero bins.
constexpr double kMagnitudeFloor = 1e-300;

VectorXd detrended(const VectorXd& x, Detrend mode) {
  const Eigen::Index n = x.size();
  if (mode == Detrend::None || n == 0) return x;
  if (mode == Detrend::Mean || n < 2) return (x.array() - x.mean()).matrix();
  const VectorXd t = VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1));
  const double tm = t.mean();
  const double xm = x.mean();
  const VectorXd tc = (t.array() - tm).matrix();
  const double slope = tc.dot(x) / tc.squaredNorm();
  return (x.array() - xm - slope * tc.array()).matrix();
}

VectorXd hann_window(Eigen::Index n) {
  VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w(i) = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

void fill_axes(Spectrum& s, Eigen::Index bins, double df) {
  s.hertz = VectorXd::LinSpaced(bins, 0.0, df * static_cast<double>(bins - 1));
  s.omega = 2.0 * std::numbers::pi * s.hertz;
}

}  // namespace

NmseReport nmse_report(const MatrixXd& truth, const MatrixXd& estimate) {
  require(truth.rows() == estimate.rows() && truth.cols() == estimate.cols(),
          ErrorKind::InvalidInput, "nmse: truth and estimate shapes differ");
  require(truth.rows() > 0 && truth.cols() > 0, ErrorKind::InvalidInput, "nmse: empty input");
  NmseReport r;
  r.samples = truth.rows();
  r.variances.resize(truth.cols());
  const double nt = static_cast<double>(truth.rows());
  double total = 0.0;
  for (Eigen::Index i = 0; i < truth.cols(); ++i) {
    const double mean = truth.col(i).mean();
    const double var = (truth.col(i).array() - mean).square().sum() / nt;
    r.variances(i) = var;
    if (!(var > 0.0)) {
      r.excluded.push_back(i);
      continue;
    }
    total += (truth.col(i) - estimate.col(i)).squaredNorm() / var;
    ++r.components;
  }
  if (!r.excluded.empty()) {
    log_warning("nmse: " + std::to_string(r.excluded.size()) +
                " zero-variance component(s) excluded");
  }
  if (r.components == 0) throw Error(ErrorKind::UndefinedMetric, "nmse: every truth component has zero variance");
  r.percent = 100.0 * total / (static_cast<double>(r.components) * nt);
  return r;
}

double nmse(const MatrixXd& truth, const MatrixXd& estimate) {
  return nmse_report(truth, estimate).percent;
}

double percent_reduction(double before, double after) {
  require(before > 0.0, ErrorKind::UndefinedMetric, "reduction relative to a zero baseline");
  return 100.0 * (1.0 - after / before);
}

Eigen::VectorXcd dft(const VectorXd& signal) {
  Eigen::FFT<double> fft;
  std::vector<double> in(signal.data(), signal.data() + signal.size());
  std::vector<std::complex<double>> out;
  fft.fwd(out, in);
  Eigen::VectorXcd x(static_cast<Eigen::Index>(out.size()));
  for (std::size_t k = 0; k < out.size(); ++k) x(static_cast<Eigen::Index>(k)) = out[k];
  return x;
}

Spectrum averaged_log_fft(const MatrixXd& signals, double dt, Detrend detrend, Execution exec) {
  require(dt > 0.0, ErrorKind::InvalidInput, "spectrum: dt must be positive");
  require(signals.rows() >= 64, ErrorKind::InvalidInput, "spectrum: need at least 64 samples");
  require(signals.cols() >= 1, ErrorKind::InvalidInput, "spectrum: no channels");
  const Eigen::Index n = signals.rows();
  const Eigen::Index bins = n / 2 + 1;
  const Eigen::Index channels = signals.cols();
  MatrixXd levels(bins, channels);
  auto channel_level = [&](Eigen::Index c) {
    const Eigen::VectorXcd x = dft(detrended(signals.col(c), detrend));
    for (Eigen::Index k = 0; k < bins; ++k) {
      levels(k, c) = 20.0 * std::log10(std::max(std::abs(x(k)), kMagnitudeFloor));
    }
  };
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (Eigen::Index c = 0; c < channels; ++c) channel_level(c);
  } else {
    for (Eigen::Index c = 0; c < channels; ++c) channel_level(c);
  }
  Spectrum s;
  fill_axes(s, bins, 1.0 / (static_cast<double>(n) * dt));
  s.level_db = levels.rowwise().mean();
  return s;
}

Spectrum averaged_log_fft(const MatrixXd& signals, const VectorXd& time, Detrend detrend) {
  require(time.size() == signals.rows() && time.size() >= 2, ErrorKind::InvalidInput,
          "spectrum: time vector does not match the signals");
  const double dt = time(1) - time(0);
  for (Eigen::Index k = 1; k < time.size(); ++k) {
    const double step = time(k) - time(k - 1);
    require(std::abs(step - dt) <= 1e-9 * std::max(std::abs(dt), 1e-300) + 1e-12,
            ErrorKind::InvalidInput, "spectrum: non-uniform time grid");
  }
  return averaged_log_fft(signals, dt, detrend);
}

Spectrum frf_mean_log(const MatrixXd& input, const MatrixXd& output, double dt,
                      double band_low_hz, double band_high_hz, const WelchOptions& options) {
  require(dt > 0.0, ErrorKind::InvalidInput, "frf: dt must be positive");
  require(input.rows() == output.rows(), ErrorKind::InvalidInput, "frf: length mismatch");
  require(input.cols() == 1 || input.cols() == output.cols(), ErrorKind::InvalidInput,
          "frf: input must have one column or one per output channel");
  require(options.segments >= 1 && options.overlap >= 0.0 && options.overlap < 1.0,
          ErrorKind::InvalidInput, "frf: invalid Welch options");
  require(band_high_hz > band_low_hz, ErrorKind::InvalidInput, "frf: empty band");
  const Eigen::Index n = input.rows();
  const double span = 1.0 + (options.segments - 1) * (1.0 - options.overlap);
  const auto seg_len = static_cast<Eigen::Index>(std::floor(static_cast<double>(n) / span));
  require(seg_len >= 16, ErrorKind::InvalidInput, "frf: record too short for the Welch segments");
  const auto step = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::floor(static_cast<double>(seg_len) * (1.0 - options.overlap))));
  const VectorXd window = options.hann ? hann_window(seg_len) : VectorXd::Ones(seg_len);
  const Eigen::Index bins = seg_len / 2 + 1;
  const double df = 1.0 / (static_cast<double>(seg_len) * dt);

  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < bins; ++k) {
    const double f = df * static_cast<double>(k);
    if (f >= band_low_hz && f <= band_high_hz) keep.push_back(k);
  }
  require(!keep.empty(), ErrorKind::InvalidInput, "frf: no frequency bins inside the band");

  VectorXd level = VectorXd::Zero(static_cast<Eigen::Index>(keep.size()));
  for (Eigen::Index c = 0; c < output.cols(); ++c) {
    const Eigen::Index ic = input.cols() == 1 ? 0 : c;
    VectorXd pxx = VectorXd::Zero(bins);
    Eigen::VectorXcd pxy = Eigen::VectorXcd::Zero(bins);
    for (int s = 0; s < options.segments; ++s) {
      const Eigen::Index start = s * step;
      if (start + seg_len > n) break;
      VectorXd xs = input.col(ic).segment(start, seg_len);
      VectorXd ys = output.col(c).segment(start, seg_len);
      xs = detrended(xs, Detrend::Mean).cwiseProduct(window);
      ys = detrended(ys, Detrend::Mean).cwiseProduct(window);
      const Eigen::VectorXcd fx = dft(xs);
      const Eigen::VectorXcd fy = dft(ys);
      for (Eigen::Index k = 0; k < bins; ++k) {
        pxx(k) += std::norm(fx(k));
        pxy(k) += std::conj(fx(k)) * fy(k);
      }
    }
    for (std::size_t j = 0; j < keep.size(); ++j) {
      const Eigen::Index k = keep[j];
      const double mag = pxx(k) > 0.0 ? std::abs(pxy(k)) / pxx(k) : 0.0;
      level(static_cast<Eigen::Index>(j)) += 20.0 * std::log10(std::max(mag, kMagnitudeFloor));
    }
  }
  Spectrum out;
  out.hertz.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out.hertz(static_cast<Eigen::Index>(j)) = df * static_cast<double>(keep[j]);
  }
  out.omega = 2.0 * std::numbers::pi * out.hertz;
  out.level_db = level / static_cast<double>(output.cols());
  return out;
}

}  // namespace mre
