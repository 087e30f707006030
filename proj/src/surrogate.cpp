#include "mre/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>

#include "mre/error.hpp"
#include "mre/log.hpp"

namespace mre {

namespace {

constexpr Eigen::Index kChunk = 32;

MatrixXd sigmoid(const MatrixXd& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  std::uint64_t out[1];
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  out[0] = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  return out[0];
}

MatrixXd rows_of(const MatrixXd& m, Eigen::Index start, Eigen::Index count) {
  return m.middleRows(start, count);
}

void check_training_data(const MatrixXd& x, const MatrixXd& y) {
  require(x.rows() == y.rows(), ErrorKind::InvalidInput, "surrogate: input and target row counts differ");
  require(x.cols() >= 1 && y.cols() >= 1, ErrorKind::InvalidInput, "surrogate: empty dimensions");
  require(x.allFinite() && y.allFinite(), ErrorKind::InvalidInput, "surrogate: non-finite training data");
}

}  // namespace

Normalizer Normalizer::fit(const MatrixXd& rows) {
  require(rows.rows() >= 1, ErrorKind::InvalidInput, "normalizer: no samples");
  Normalizer n;
  const double count = static_cast<double>(rows.rows());
  n.mean = rows.colwise().mean().transpose();
  n.std.resize(rows.cols());
  n.constant.assign(static_cast<std::size_t>(rows.cols()), false);
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    const double var = (rows.col(j).array() - n.mean(j)).square().sum() / count;
    const double sd = std::sqrt(var);
    if (!(sd > 1e-14 * (1.0 + std::abs(n.mean(j))))) {
      n.std(j) = 1.0;
      n.constant[static_cast<std::size_t>(j)] = true;
    } else {
      n.std(j) = sd;
    }
  }
  return n;
}

MatrixXd Normalizer::normalize(const MatrixXd& rows) const {
  require(rows.cols() == mean.size(), ErrorKind::InvalidInput, "normalizer: dimension mismatch");
  return ((rows.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array()).matrix();
}

MatrixXd Normalizer::denormalize(const MatrixXd& rows) const {
  require(rows.cols() == mean.size(), ErrorKind::InvalidInput, "normalizer: dimension mismatch");
  return ((rows.array().rowwise() * std.transpose().array()).matrix().rowwise() + mean.transpose());
}

MatrixXd Surrogate::evaluate(const MatrixXd& x) const {
  require(x.cols() == inputs(), ErrorKind::InvalidInput,
          "surrogate: expected " + std::to_string(inputs()) + " inputs, got " + std::to_string(x.cols()));
  const MatrixXd xn = input.normalize(x);
  const MatrixXd a = sigmoid((w1 * xn.transpose()).colwise() + b1);
  const MatrixXd yn = ((w2 * a).colwise() + b2).transpose();
  return output.denormalize(yn);
}

VectorXd Surrogate::evaluate(const VectorXd& x) const {
  require(x.size() == inputs(), ErrorKind::InvalidInput,
          "surrogate: expected " + std::to_string(inputs()) + " inputs, got " + std::to_string(x.size()));
  const VectorXd xn = (x - input.mean).cwiseQuotient(input.std);
  const VectorXd a = sigmoid(w1 * xn + b1);
  const VectorXd yn = w2 * a + b2;
  return yn.cwiseProduct(output.std) + output.mean;
}

VectorXd Surrogate::evaluate(const VectorXd& q, const VectorXd& qdot) const {
  VectorXd x(q.size() + qdot.size());
  x << q, qdot;
  return evaluate(x);
}

MatrixXd Surrogate::input_jacobian(const VectorXd& x) const {
  require(x.size() == inputs(), ErrorKind::InvalidInput, "surrogate: dimension mismatch");
  const VectorXd xn = (x - input.mean).cwiseQuotient(input.std);
  const VectorXd a = sigmoid(w1 * xn + b1);
  const VectorXd slope = a.cwiseProduct(VectorXd::Ones(a.size()) - a);
  MatrixXd j = w2 * slope.asDiagonal() * w1;  // normalized units
  j = output.std.asDiagonal() * j;
  return j * input.std.cwiseInverse().asDiagonal();
}

Surrogate Surrogate::zero(Eigen::Index n_in, Eigen::Index hidden, Eigen::Index n_out) {
  Surrogate s;
  s.w1 = MatrixXd::Zero(hidden, n_in);
  s.b1 = VectorXd::Zero(hidden);
  s.w2 = MatrixXd::Zero(n_out, hidden);
  s.b2 = VectorXd::Zero(n_out);
  s.input = {VectorXd::Zero(n_in), VectorXd::Ones(n_in), std::vector<bool>(static_cast<std::size_t>(n_in), false)};
  s.output = {VectorXd::Zero(n_out), VectorXd::Ones(n_out), std::vector<bool>(static_cast<std::size_t>(n_out), false)};
  return s;
}

Surrogate Surrogate::random(Eigen::Index n_in, Eigen::Index hidden, Eigen::Index n_out,
                            std::uint64_t seed) {
  require(n_in >= 1 && hidden >= 1 && n_out >= 1, ErrorKind::InvalidInput,
          "surrogate: dimensions must be positive");
  Surrogate s = zero(n_in, hidden, n_out);
  s.seed = seed;
  std::mt19937_64 rng(seed);
  const double r1 = 1.0 / std::sqrt(static_cast<double>(n_in));
  const double r2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> u1(-r1, r1);
  std::uniform_real_distribution<double> u2(-r2, r2);
  for (Eigen::Index i = 0; i < hidden; ++i) {
    for (Eigen::Index j = 0; j < n_in; ++j) s.w1(i, j) = u1(rng);
  }
  for (Eigen::Index i = 0; i < hidden; ++i) s.b1(i) = u1(rng);
  for (Eigen::Index i = 0; i < n_out; ++i) {
    for (Eigen::Index j = 0; j < hidden; ++j) s.w2(i, j) = u2(rng);
  }
  for (Eigen::Index i = 0; i < n_out; ++i) s.b2(i) = u2(rng);
  return s;
}

void TrainingConfig::validate() const {
  require(learning_rate > 0.0 && beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 &&
              epsilon > 0.0,
          ErrorKind::InvalidInput, "training: invalid ADAM settings");
  require(l2 >= 0.0, ErrorKind::InvalidInput, "training: l2 weight must be non-negative");
  require(max_epochs >= 1 && batch_size >= 1, ErrorKind::InvalidInput,
          "training: epochs and batch size must be positive");
  require(validation_fraction > 0.0 && validation_fraction <= 0.5, ErrorKind::InvalidInput,
          "training: validation fraction must lie in (0, 0.5]");
  require(patience >= 1, ErrorKind::InvalidInput, "training: patience must be >= 1");
  require(folds >= 2, ErrorKind::InvalidInput, "training: need at least two folds");
}

Gradient batch_gradient(const Surrogate& net, const MatrixXd& xn, const MatrixXd& yn,
                        const std::vector<Eigen::Index>& rows, double l2, Execution exec) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  require(n >= 1, ErrorKind::InvalidInput, "gradient: empty batch");
  const Eigen::Index chunks = (n + kChunk - 1) / kChunk;
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(net.outputs()));
  std::vector<Gradient> partial(static_cast<std::size_t>(chunks));

  auto chunk_gradient = [&](Eigen::Index c) {
    const Eigen::Index start = c * kChunk;
    const Eigen::Index len = std::min(kChunk, n - start);
    MatrixXd xb(net.inputs(), len);
    MatrixXd yb(net.outputs(), len);
    for (Eigen::Index i = 0; i < len; ++i) {
      const Eigen::Index r = rows[static_cast<std::size_t>(start + i)];
      xb.col(i) = xn.row(r).transpose();
      yb.col(i) = yn.row(r).transpose();
    }
    const MatrixXd a = sigmoid((net.w1 * xb).colwise() + net.b1);
    const MatrixXd err = ((net.w2 * a).colwise() + net.b2) - yb;
    Gradient& g = partial[static_cast<std::size_t>(c)];
    g.loss = err.squaredNorm() * scale;
    const MatrixXd dy = 2.0 * scale * err;
    g.w2 = dy * a.transpose();
    g.b2 = dy.rowwise().sum();
    const MatrixXd dz = ((net.w2.transpose() * dy).array() * a.array() * (1.0 - a.array())).matrix();
    g.w1 = dz * xb.transpose();
    g.b1 = dz.rowwise().sum();
  };
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (Eigen::Index c = 0; c < chunks; ++c) chunk_gradient(c);
  } else {
    for (Eigen::Index c = 0; c < chunks; ++c) chunk_gradient(c);
  }
  Gradient g = partial[0];
  for (Eigen::Index c = 1; c < chunks; ++c) {
    const Gradient& p = partial[static_cast<std::size_t>(c)];
    g.w1 += p.w1;
    g.b1 += p.b1;
    g.w2 += p.w2;
    g.b2 += p.b2;
    g.loss += p.loss;
  }
  if (l2 > 0.0) {
    g.w1 += 2.0 * l2 * net.w1;
    g.w2 += 2.0 * l2 * net.w2;
  }
  return g;
}

double normalized_mse(const Surrogate& net, const MatrixXd& x, const MatrixXd& y) {
  const MatrixXd pred = net.output.normalize(net.evaluate(x));
  const MatrixXd target = net.output.normalize(y);
  return (pred - target).squaredNorm() / static_cast<double>(y.size());
}

TrainedSurrogate train_split(const MatrixXd& x_train, const MatrixXd& y_train, const MatrixXd& x_val,
                             const MatrixXd& y_val, int hidden, const TrainingConfig& cfg,
                             Execution exec) {
  cfg.validate();
  check_training_data(x_train, y_train);
  check_training_data(x_val, y_val);
  require(x_val.cols() == x_train.cols() && y_val.cols() == y_train.cols(), ErrorKind::InvalidInput,
          "surrogate: validation dimensions differ from training");
  require(x_val.rows() >= 1, ErrorKind::InvalidInput, "surrogate: empty validation set");
  require(hidden >= 1, ErrorKind::InvalidInput, "surrogate: hidden width must be positive");

  Surrogate net = Surrogate::random(x_train.cols(), hidden, y_train.cols(), cfg.seed);
  net.input = Normalizer::fit(x_train);
  net.output = Normalizer::fit(y_train);
  const MatrixXd xn = net.input.normalize(x_train);
  const MatrixXd yn = net.output.normalize(y_train);
  const MatrixXd xv = net.input.normalize(x_val);
  const MatrixXd yv = net.output.normalize(y_val);
  // Constant targets are reproduced exactly by the output mean.
  auto pin_constant_outputs = [&](Surrogate& s) {
    for (Eigen::Index j = 0; j < s.outputs(); ++j) {
      if (!s.output.constant[static_cast<std::size_t>(j)]) continue;
      s.w2.row(j).setZero();
      s.b2(j) = 0.0;
    }
  };
  pin_constant_outputs(net);
  auto val_mse = [&](const Surrogate& s) {
    const MatrixXd a = sigmoid((s.w1 * xv.transpose()).colwise() + s.b1);
    const MatrixXd pred = ((s.w2 * a).colwise() + s.b2).transpose();
    return (pred - yv).squaredNorm() / static_cast<double>(yv.size());
  };

  Surrogate m1 = Surrogate::zero(net.inputs(), hidden, net.outputs());
  Surrogate m2 = m1;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x_train.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(mix_seed(cfg.seed, 0x5eed));

  TrainedSurrogate out;
  Surrogate best = net;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  long step = 0;
  auto adam = [&](MatrixXd& w, MatrixXd& m, MatrixXd& v, const MatrixXd& g, double c1, double c2) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    w.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.epsilon);
  };
  auto adam_vec = [&](VectorXd& w, VectorXd& m, VectorXd& v, const VectorXd& g, double c1, double c2) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    w.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.epsilon);
  };

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    Eigen::Index seen = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::vector<Eigen::Index> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                            order.begin() + static_cast<std::ptrdiff_t>(end));
      const Gradient g = batch_gradient(net, xn, yn, batch, cfg.l2, exec);
      loss_sum += g.loss * static_cast<double>(batch.size());
      seen += static_cast<Eigen::Index>(batch.size());
      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      adam(net.w1, m1.w1, m2.w1, g.w1, c1, c2);
      adam_vec(net.b1, m1.b1, m2.b1, g.b1, c1, c2);
      adam(net.w2, m1.w2, m2.w2, g.w2, c1, c2);
      adam_vec(net.b2, m1.b2, m2.b2, g.b2, c1, c2);
      pin_constant_outputs(net);
    }
    const double train_loss = loss_sum / static_cast<double>(seen);
    const double val = val_mse(net);
    if (!std::isfinite(train_loss) || !std::isfinite(val)) {
      throw Error(ErrorKind::TrainingDiverged, "loss became non-finite at epoch " + std::to_string(epoch));
    }
    out.report.train_loss.push_back(train_loss);
    out.report.val_loss.push_back(val);
    out.report.epochs_run = epoch + 1;
    if (val < best_val) {
      best_val = val;
      best = net;
      out.report.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      out.report.early_stopped = true;
      out.report.best_val_so_far.push_back(best_val);
      break;
    }
    out.report.best_val_so_far.push_back(best_val);
  }
  out.report.best_val = best_val;
  out.model = best;
  out.model.input_min = x_train.colwise().minCoeff().transpose().cwiseMin(x_val.colwise().minCoeff().transpose());
  out.model.input_max = x_train.colwise().maxCoeff().transpose().cwiseMax(x_val.colwise().maxCoeff().transpose());
  log_debug("surrogate H=" + std::to_string(hidden) + ": best validation MSE " +
            std::to_string(best_val) + " at epoch " + std::to_string(out.report.best_epoch));
  return out;
}

TrainedSurrogate train(const MatrixXd& x, const MatrixXd& y, int hidden, const TrainingConfig& cfg,
                       Execution exec) {
  cfg.validate();
  check_training_data(x, y);
  require(x.rows() >= 100, ErrorKind::InvalidInput, "surrogate: need at least 100 samples");
  const auto n_val = static_cast<Eigen::Index>(
      std::max(1.0, std::floor(cfg.validation_fraction * static_cast<double>(x.rows()))));
  const Eigen::Index n_train = x.rows() - n_val;
  return train_split(rows_of(x, 0, n_train), rows_of(y, 0, n_train), rows_of(x, n_train, n_val),
                     rows_of(y, n_train, n_val), hidden, cfg, exec);
}

SelectionResult select_hidden_size(const MatrixXd& x, const MatrixXd& y,
                                   const std::vector<int>& candidates, const TrainingConfig& cfg,
                                   Execution exec) {
  cfg.validate();
  check_training_data(x, y);
  require(!candidates.empty(), ErrorKind::InvalidInput, "selection: no candidates");
  SelectionResult result;
  result.candidates = candidates;
  if (candidates.size() == 1) {
    result.hidden = candidates.front();
    result.mean_val_mse.assign(1, std::numeric_limits<double>::quiet_NaN());
    return result;
  }
  const Eigen::Index n = x.rows();
  const int k = cfg.folds;
  require(n >= 2 * k, ErrorKind::InvalidInput, "selection: too few samples for the folds");
  const int jobs = static_cast<int>(candidates.size()) * k;
  std::vector<double> fold_mse(static_cast<std::size_t>(jobs), std::numeric_limits<double>::infinity());

  auto run = [&](int job) {
    const int ci = job / k;
    const int fold = job % k;
    const Eigen::Index lo = n * fold / k;
    const Eigen::Index hi = n * (fold + 1) / k;
    MatrixXd xt(n - (hi - lo), x.cols()), yt(n - (hi - lo), y.cols());
    xt << x.topRows(lo), x.bottomRows(n - hi);
    yt << y.topRows(lo), y.bottomRows(n - hi);
    TrainingConfig c = cfg;
    c.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(ci) + 1, static_cast<std::uint64_t>(fold) + 1);
    try {
      // Folds already run in parallel; keep each gradient serial.
      const TrainedSurrogate t = train_split(xt, yt, x.middleRows(lo, hi - lo), y.middleRows(lo, hi - lo),
                                             candidates[static_cast<std::size_t>(ci)], c, Execution::Serial);
      fold_mse[static_cast<std::size_t>(job)] = t.report.best_val;
    } catch (const Error& e) {
      log_warning(std::string("selection: ") + e.what());
    }
  };
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
    for (int job = 0; job < jobs; ++job) run(job);
  } else {
    for (int job = 0; job < jobs; ++job) run(job);
  }

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    double sum = 0.0;
    int ok = 0;
    for (int fold = 0; fold < k; ++fold) {
      const double v = fold_mse[ci * static_cast<std::size_t>(k) + static_cast<std::size_t>(fold)];
      if (std::isfinite(v)) {
        sum += v;
        ++ok;
      }
    }
    const double mean = ok == k ? sum / k : std::numeric_limits<double>::infinity();
    result.mean_val_mse.push_back(mean);
    const int h = candidates[ci];
    if (mean < best || (mean == best && std::isfinite(mean) && h < result.hidden)) {
      best = mean;
      result.hidden = h;
    }
  }
  if (!std::isfinite(best)) throw Error(ErrorKind::SelectionFailure, "every hidden-size candidate diverged");
  return result;
}

namespace {

nlohmann::json matrix_json(const MatrixXd& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
  }
  return flat;
}

MatrixXd matrix_from(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols) {
  const auto flat = j.get<std::vector<double>>();
  require(static_cast<Eigen::Index>(flat.size()) == rows * cols, ErrorKind::IncompatibleArtifacts,
          "surrogate: weight array has the wrong length");
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = flat[static_cast<std::size_t>(i * cols + c)];
  }
  return m;
}

nlohmann::json normalizer_json(const Normalizer& n) {
  return {{"mean", matrix_json(n.mean.transpose())},
          {"std", matrix_json(n.std.transpose())},
          {"constant", n.constant}};
}

Normalizer normalizer_from(const nlohmann::json& j, Eigen::Index size) {
  Normalizer n;
  n.mean = matrix_from(j.at("mean"), 1, size).transpose();
  n.std = matrix_from(j.at("std"), 1, size).transpose();
  n.constant = j.at("constant").get<std::vector<bool>>();
  require(static_cast<Eigen::Index>(n.constant.size()) == size && (n.std.array() > 0.0).all(),
          ErrorKind::IncompatibleArtifacts, "surrogate: invalid normalizer");
  return n;
}

}  // namespace

std::string to_json(const Surrogate& net, const TrainingReport* report) {
  nlohmann::json j;
  j["format"] = "mre-surrogate";
  j["version"] = 1;
  j["inputs"] = net.inputs();
  j["hidden"] = net.hidden();
  j["outputs"] = net.outputs();
  j["activation"] = "sigmoid";
  j["w1"] = matrix_json(net.w1);
  j["b1"] = matrix_json(net.b1.transpose());
  j["w2"] = matrix_json(net.w2);
  j["b2"] = matrix_json(net.b2.transpose());
  j["input_normalizer"] = normalizer_json(net.input);
  j["output_normalizer"] = normalizer_json(net.output);
  j["seed"] = net.seed;
  if (net.input_min.size() == net.inputs() && net.input_max.size() == net.inputs()) {
    j["input_min"] = matrix_json(net.input_min.transpose());
    j["input_max"] = matrix_json(net.input_max.transpose());
  }
  if (report != nullptr) {
    j["training"] = {{"best_epoch", report->best_epoch},
                     {"best_val_mse", report->best_val},
                     {"epochs_run", report->epochs_run},
                     {"early_stopped", report->early_stopped},
                     {"final_train_mse", report->train_loss.empty() ? 0.0 : report->train_loss.back()}};
  }
  return j.dump(2);
}

Surrogate surrogate_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::IncompatibleArtifacts, std::string("surrogate: malformed JSON: ") + e.what());
  }
  try {
    require(j.at("format") == "mre-surrogate", ErrorKind::IncompatibleArtifacts,
            "surrogate: not a surrogate file");
    const auto n_in = j.at("inputs").get<Eigen::Index>();
    const auto h = j.at("hidden").get<Eigen::Index>();
    const auto n_out = j.at("outputs").get<Eigen::Index>();
    Surrogate s;
    s.w1 = matrix_from(j.at("w1"), h, n_in);
    s.b1 = matrix_from(j.at("b1"), 1, h).transpose();
    s.w2 = matrix_from(j.at("w2"), n_out, h);
    s.b2 = matrix_from(j.at("b2"), 1, n_out).transpose();
    s.input = normalizer_from(j.at("input_normalizer"), n_in);
    s.output = normalizer_from(j.at("output_normalizer"), n_out);
    s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("input_min")) {
      s.input_min = matrix_from(j.at("input_min"), 1, n_in).transpose();
      s.input_max = matrix_from(j.at("input_max"), 1, n_in).transpose();
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::IncompatibleArtifacts, std::string("surrogate: ") + e.what());
  }
}

}  // namespace mre
