#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mre/linalg.hpp"
#include "mre/parallel.hpp"

namespace mre {

/// Per-column z-score statistics. Constant columns keep std = 1 and are flagged.
struct Normalizer {
  VectorXd mean;
  VectorXd std;
  std::vector<bool> constant;

  static Normalizer fit(const MatrixXd& rows);
  MatrixXd normalize(const MatrixXd& rows) const;
  MatrixXd denormalize(const MatrixXd& rows) const;
};

/// One hidden sigmoid layer and a linear output, acting on z-scored inputs
/// and producing z-scored outputs.
struct Surrogate {
  MatrixXd w1;  // H x n_in
  VectorXd b1;  // H
  MatrixXd w2;  // n_out x H
  VectorXd b2;  // n_out
  Normalizer input;
  Normalizer output;
  std::uint64_t seed = 0;
  VectorXd input_min;  // training-data bounding box, empty when unknown
  VectorXd input_max;

  Eigen::Index inputs() const { return w1.cols(); }
  Eigen::Index hidden() const { return w1.rows(); }
  Eigen::Index outputs() const { return w2.rows(); }

  /// Rows are samples; returns denormalized outputs.
  MatrixXd evaluate(const MatrixXd& x) const;
  VectorXd evaluate(const VectorXd& x) const;
  /// eta = N(q, qdot) for one state.
  VectorXd evaluate(const VectorXd& q, const VectorXd& qdot) const;
  /// d output / d input (physical units), n_out x n_in.
  MatrixXd input_jacobian(const VectorXd& x) const;

  /// Network with zero weights whose output is the output-normalizer mean.
  static Surrogate zero(Eigen::Index n_in, Eigen::Index hidden, Eigen::Index n_out);
  /// Fan-in scaled uniform initialization on identity normalizers.
  static Surrogate random(Eigen::Index n_in, Eigen::Index hidden, Eigen::Index n_out,
                          std::uint64_t seed);
};

struct TrainingConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double l2 = 1e-6;
  int max_epochs = 5000;
  int batch_size = 128;
  double validation_fraction = 0.2;
  int patience = 50;
  std::vector<int> hidden_candidates{20, 50, 100};
  int folds = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainingReport {
  std::vector<double> train_loss;  // normalized MSE per epoch (without the L2 term)
  std::vector<double> val_loss;
  std::vector<double> best_val_so_far;
  int best_epoch = -1;
  double best_val = 0.0;
  int epochs_run = 0;
  bool early_stopped = false;
};

struct TrainedSurrogate {
  Surrogate model;
  TrainingReport report;
};

/// Trains with the last validation_fraction of the rows (in order) held out.
TrainedSurrogate train(const MatrixXd& x, const MatrixXd& y, int hidden, const TrainingConfig& cfg,
                       Execution exec = Execution::Parallel);

/// Trains on (x_train, y_train), early-stopping on (x_val, y_val).
TrainedSurrogate train_split(const MatrixXd& x_train, const MatrixXd& y_train, const MatrixXd& x_val,
                             const MatrixXd& y_val, int hidden, const TrainingConfig& cfg,
                             Execution exec = Execution::Parallel);

/// Gradient of the mean normalized squared error plus l2 * |W|^2 over a
/// batch, accumulated over fixed-size chunks in a fixed order so the serial
/// and parallel paths agree bit for bit. Inputs and targets are normalized.
struct Gradient {
  MatrixXd w1;
  VectorXd b1;
  MatrixXd w2;
  VectorXd b2;
  double loss = 0.0;
};

Gradient batch_gradient(const Surrogate& net, const MatrixXd& xn, const MatrixXd& yn,
                        const std::vector<Eigen::Index>& rows, double l2, Execution exec);

/// Mean squared error in normalized output units.
double normalized_mse(const Surrogate& net, const MatrixXd& x, const MatrixXd& y);

struct SelectionResult {
  int hidden = 0;
  std::vector<int> candidates;
  std::vector<double> mean_val_mse;  // +inf for candidates whose folds all diverged
};

/// K-fold cross-validation over contiguous blocks; ties go to the smaller H.
SelectionResult select_hidden_size(const MatrixXd& x, const MatrixXd& y,
                                   const std::vector<int>& candidates, const TrainingConfig& cfg,
                                   Execution exec = Execution::Parallel);

std::string to_json(const Surrogate& net, const TrainingReport* report = nullptr);
Surrogate surrogate_from_json(const std::string& text);

}  // namespace mre
