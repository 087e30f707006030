#pragma once

#include <vector>

#include "mre/linalg.hpp"
#include "mre/modal.hpp"
#include "mre/parallel.hpp"

namespace mre {

struct NmseReport {
  double percent = 0.0;
  Eigen::Index components = 0;  // components that entered the average
  Eigen::Index samples = 0;
  VectorXd variances;           // population variance of each truth component
  std::vector<Eigen::Index> excluded;  // zero-variance truth components
};

/// e = 100/(n N_t) sum_i sum_k (p_i - phat_i)^2 / var(p_i); columns are
/// components, rows are samples.
NmseReport nmse_report(const MatrixXd& truth, const MatrixXd& estimate);
double nmse(const MatrixXd& truth, const MatrixXd& estimate);

/// 100 (1 - e_after / e_before).
double percent_reduction(double before, double after);

enum class Detrend { None, Mean, Linear };

/// Averaged log-magnitude spectrum of the columns of `signals`. Each channel
/// is detrended and transformed with an unnormalized rectangular-window DFT,
/// so that sum_k |X_k|^2 = N_t sum_n x_n^2. Bins 0..N_t/2 are returned.
Spectrum averaged_log_fft(const MatrixXd& signals, double dt, Detrend detrend = Detrend::Linear,
                          Execution exec = Execution::Parallel);

/// Same from an explicit sample-time vector; rejects non-uniform grids.
Spectrum averaged_log_fft(const MatrixXd& signals, const VectorXd& time,
                          Detrend detrend = Detrend::Linear);

/// Full complex DFT of one real signal (length N), no normalization.
Eigen::VectorXcd dft(const VectorXd& signal);

struct WelchOptions {
  int segments = 8;
  double overlap = 0.5;
  bool hann = true;
};

/// Mean over output channels of 20 log10 |H1(w)|, with H1 = P_xy / P_xx
/// estimated by Welch averaging. `input` has one column (shared reference)
/// or as many columns as `output` (paired channels). Bins outside
/// [band_low_hz, band_high_hz] are dropped.
Spectrum frf_mean_log(const MatrixXd& input, const MatrixXd& output, double dt,
                      double band_low_hz, double band_high_hz, const WelchOptions& options = {});

}  // namespace mre
