#include "mre/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "mre/error.hpp"
#include "mre/log.hpp"

namespace mre {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct InnovationFactor {
  Eigen::LDLT<MatrixXd> ldlt;
  double log_det = 0.0;
};

InnovationFactor factor_innovation(const MatrixXd& s, Eigen::Index step) {
  InnovationFactor f;
  f.ldlt.compute(s);
  const VectorXd d = f.ldlt.vectorD();
  if (f.ldlt.info() != Eigen::Success || !(d.minCoeff() > 0.0) || !d.allFinite()) {
    throw Error(ErrorKind::NumericalFailure,
                "innovation covariance is not positive definite at step " + std::to_string(step));
  }
  f.log_det = d.array().log().sum();
  return f;
}

double relative_change(const MatrixXd& a, const MatrixXd& b) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

void check_inputs(const DiscreteSSM& ssm, const MeasurementModel& meas, const MatrixXd& y,
                  const MatrixXd& p, const GaussianBelief& prior) {
  const Eigen::Index n = ssm.a.rows();
  require(ssm.a.cols() == n && ssm.q.rows() == n && ssm.q.cols() == n && ssm.b.rows() == n,
          ErrorKind::InvalidInput, "filter: inconsistent state-space blocks");
  require(meas.c.cols() == n && meas.r.rows() == meas.c.rows() && meas.r.cols() == meas.c.rows(),
          ErrorKind::InvalidInput, "filter: measurement model does not match the state");
  require(y.cols() == meas.c.rows(), ErrorKind::InvalidInput, "filter: data width does not match sensors");
  require(p.rows() == y.rows() && p.cols() == ssm.b.cols(), ErrorKind::InvalidInput,
          "filter: input series is not aligned with the data");
  require(y.rows() >= 1, ErrorKind::InvalidInput, "filter: empty data");
  require(prior.mean.size() == n && prior.cov.rows() == n && prior.cov.cols() == n,
          ErrorKind::InvalidInput, "filter: prior does not match the state");
}

}  // namespace

MeasurementModel make_measurement(const ModalBasis& basis, const std::vector<Eigen::Index>& dofs,
                                  double noise_std, Eigen::Index state_dim) {
  const Eigen::Index m = basis.count();
  require(!dofs.empty(), ErrorKind::InvalidSensor, "no measured DOFs");
  require(state_dim >= m, ErrorKind::InvalidInput, "state dimension smaller than mode count");
  require(noise_std > 0.0 && std::isfinite(noise_std), ErrorKind::InvalidInput,
          "measurement noise must be positive");
  MeasurementModel meas;
  meas.sensor_dofs = dofs;
  const auto ny = static_cast<Eigen::Index>(dofs.size());
  meas.c = MatrixXd::Zero(ny, state_dim);
  for (Eigen::Index i = 0; i < ny; ++i) {
    const Eigen::Index dof = dofs[static_cast<std::size_t>(i)];
    require(dof >= 0 && dof < basis.n_dof(), ErrorKind::InvalidSensor, "sensor DOF out of range");
    meas.c.block(i, 0, 1, m) = basis.shapes.row(dof);
  }
  meas.r = noise_std * noise_std * MatrixXd::Identity(ny, ny);
  return meas;
}

GaussianBelief default_prior(const GPHyperparams& theta, double sigma_q2) {
  const Eigen::Index m = theta.modes();
  GaussianBelief b;
  b.mean = VectorXd::Zero(3 * m);
  b.cov = MatrixXd::Zero(3 * m, 3 * m);
  b.cov.topLeftCorner(2 * m, 2 * m) = sigma_q2 * MatrixXd::Identity(2 * m, 2 * m);
  b.cov.bottomRightCorner(m, m) = theta.amplitude.array().square().matrix().asDiagonal();
  return b;
}

FilterResult kalman_filter(const DiscreteSSM& ssm, const MeasurementModel& meas, const MatrixXd& y,
                           const MatrixXd& p, const GaussianBelief& prior) {
  check_inputs(ssm, meas, y, p, prior);
  const Eigen::Index nt = y.rows();
  const Eigen::Index n = ssm.a.rows();
  const Eigen::Index ny = meas.c.rows();
  const MatrixXd eye = MatrixXd::Identity(n, n);

  FilterResult out;
  out.predicted_mean.reserve(static_cast<std::size_t>(nt));
  out.predicted_cov.reserve(static_cast<std::size_t>(nt));
  out.filtered_mean.reserve(static_cast<std::size_t>(nt));
  out.filtered_cov.reserve(static_cast<std::size_t>(nt));
  out.innovation_cov.reserve(static_cast<std::size_t>(nt));
  out.innovations.resize(nt, ny);

  VectorXd zp = prior.mean;
  MatrixXd pp = symmetrized(prior.cov);
  for (Eigen::Index k = 0; k < nt; ++k) {
    if (k > 0) {
      zp = ssm.a * out.filtered_mean.back() + ssm.b * p.row(k - 1).transpose();
      pp = symmetrized(ssm.a * out.filtered_cov.back() * ssm.a.transpose() + ssm.q);
    }
    out.predicted_mean.push_back(zp);
    out.predicted_cov.push_back(pp);

    const VectorXd e = y.row(k).transpose() - meas.c * zp;
    const MatrixXd pct = pp * meas.c.transpose();
    const MatrixXd s = symmetrized(meas.c * pct + meas.r);
    const InnovationFactor f = factor_innovation(s, k);
    const MatrixXd gain = f.ldlt.solve(pct.transpose()).transpose();
    const MatrixXd ikc = eye - gain * meas.c;
    out.filtered_mean.push_back(zp + gain * e);
    out.filtered_cov.push_back(
        symmetrized(ikc * pp * ikc.transpose() + gain * meas.r * gain.transpose()));
    out.innovations.row(k) = e.transpose();
    out.innovation_cov.push_back(s);
    out.log_likelihood -=
        0.5 * (static_cast<double>(ny) * kLog2Pi + f.log_det + e.dot(f.ldlt.solve(e)));
  }
  return out;
}

double kalman_log_likelihood(const DiscreteSSM& ssm, const MeasurementModel& meas,
                             const MatrixXd& y, const MatrixXd& p, const GaussianBelief& prior,
                             double steady_tol) {
  check_inputs(ssm, meas, y, p, prior);
  const Eigen::Index nt = y.rows();
  const Eigen::Index n = ssm.a.rows();

  // The observation only touches the leading `k` states. With isotropic noise
  // and more outputs than that, the data split exactly into the projection on
  // range(H) (filtered in k dimensions) and an orthogonal residual whose
  // density does not involve the state.
  Eigen::Index k_obs = n;
  while (k_obs > 0 && meas.c.col(k_obs - 1).cwiseAbs().maxCoeff() == 0.0) --k_obs;
  const Eigen::Index ny_full = meas.c.rows();
  const double r0 = meas.r(0, 0);
  const bool isotropic =
      (meas.r - r0 * MatrixXd::Identity(ny_full, ny_full)).cwiseAbs().maxCoeff() == 0.0 && r0 > 0.0;
  MatrixXd c;
  MatrixXd r;
  MatrixXd data;
  double ll = 0.0;
  if (isotropic && k_obs >= 1 && ny_full > k_obs) {
    const Eigen::HouseholderQR<MatrixXd> qr(meas.c.leftCols(k_obs));
    const MatrixXd q_full = qr.householderQ();
    const MatrixXd q_range = q_full.leftCols(k_obs);
    const MatrixXd upper = qr.matrixQR().topRows(k_obs).triangularView<Eigen::Upper>();
    require(upper.diagonal().cwiseAbs().minCoeff() > 0.0, ErrorKind::NumericalFailure,
            "observation matrix is rank deficient");
    c = MatrixXd::Zero(k_obs, n);
    c.leftCols(k_obs) = upper;
    r = r0 * MatrixXd::Identity(k_obs, k_obs);
    data = y * q_range;
    const double residual = (y - data * q_range.transpose()).squaredNorm();
    const double extra = static_cast<double>(ny_full - k_obs);
    ll -= 0.5 * (static_cast<double>(nt) * extra * (kLog2Pi + std::log(r0)) + residual / r0);
  } else {
    c = meas.c;
    r = meas.r;
    data = y;
  }
  const Eigen::Index ny = c.rows();
  const double const_term = static_cast<double>(ny) * kLog2Pi;

  VectorXd zf;
  MatrixXd pf;
  VectorXd zp = prior.mean;
  MatrixXd pp = symmetrized(prior.cov);
  MatrixXd pp_last, tmp(n, n), pct(n, ny), s(ny, ny), gain(n, ny);
  VectorXd e(ny);
  int calm_steps = 0;
  for (Eigen::Index k = 0; k < nt; ++k) {
    if (k > 0) {
      zp.noalias() = ssm.a * zf;
      zp.noalias() += ssm.b * p.row(k - 1).transpose();
      pp_last.swap(pp);
      tmp.noalias() = ssm.a.lazyProduct(pf);
      pp.noalias() = tmp.lazyProduct(ssm.a.transpose());
      pp += ssm.q;
      pp = 0.5 * (pp + pp.transpose()).eval();
      if (steady_tol > 0.0) {
        calm_steps = relative_change(pp, pp_last) <= steady_tol ? calm_steps + 1 : 0;
      }
    }
    e.noalias() = data.row(k).transpose() - c * zp;
    pct.noalias() = pp.leftCols(k_obs).lazyProduct(c.leftCols(k_obs).transpose());
    s.noalias() = c.leftCols(k_obs).lazyProduct(pct.topRows(k_obs));
    s += r;
    s = 0.5 * (s + s.transpose()).eval();
    const InnovationFactor f = factor_innovation(s, k);
    gain = f.ldlt.solve(pct.transpose()).transpose();
    zf = zp;
    zf.noalias() += gain * e;
    ll -= 0.5 * (const_term + f.log_det + e.dot(f.ldlt.solve(e)));
    if (calm_steps >= 3) {
      // Frozen gain: only the mean recursion remains.
      const MatrixXd s_inv = f.ldlt.solve(MatrixXd::Identity(ny, ny));
      const MatrixXd a_gain = ssm.a * gain;
      const MatrixXd a_open = ssm.a - a_gain * c;  // z_{j+1}^- = A(I-KC) z_j^- + A K y_j + B p_j
      VectorXd z = zp;
      VectorXd ej(ny);
      for (Eigen::Index j = k + 1; j < nt; ++j) {
        VectorXd next = a_open * z;
        next.noalias() += a_gain * data.row(j - 1).transpose();
        next.noalias() += ssm.b * p.row(j - 1).transpose();
        z.swap(next);
        ej.noalias() = data.row(j).transpose() - c * z;
        ll -= 0.5 * (const_term + f.log_det + ej.dot(s_inv * ej));
      }
      if (!std::isfinite(ll)) throw Error(ErrorKind::NumericalFailure, "non-finite log-likelihood");
      return ll;
    }
    pf = pp;
    pf.noalias() -= gain.lazyProduct(pct.transpose());
  }
  if (!std::isfinite(ll)) throw Error(ErrorKind::NumericalFailure, "non-finite log-likelihood");
  return ll;
}

SmoothedTrajectory rts_smoother(const DiscreteSSM& ssm, const FilterResult& filtered) {
  const auto nt = static_cast<Eigen::Index>(filtered.filtered_mean.size());
  require(nt >= 1 && filtered.predicted_cov.size() == filtered.filtered_cov.size(),
          ErrorKind::InvalidInput, "smoother: filter output is empty or inconsistent");
  const Eigen::Index n = ssm.a.rows();
  SmoothedTrajectory out;
  out.mean.resize(static_cast<std::size_t>(nt));
  out.cov.resize(static_cast<std::size_t>(nt));
  out.mean.back() = filtered.filtered_mean.back();
  out.cov.back() = filtered.filtered_cov.back();
  for (Eigen::Index k = nt - 2; k >= 0; --k) {
    const auto ku = static_cast<std::size_t>(k);
    const MatrixXd& pf = filtered.filtered_cov[ku];
    const MatrixXd& pp_next = filtered.predicted_cov[ku + 1];
    Eigen::LDLT<MatrixXd> ldlt(pp_next);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
      throw Error(ErrorKind::NumericalFailure,
                  "predicted covariance is singular at step " + std::to_string(k + 1));
    }
    // G = P_f A^T (P^-_{k+1})^{-1}
    const MatrixXd g = ldlt.solve(ssm.a * pf).transpose();
    out.mean[ku] = filtered.filtered_mean[ku] + g * (out.mean[ku + 1] - filtered.predicted_mean[ku + 1]);
    out.cov[ku] = symmetrized(pf + g * (out.cov[ku + 1] - pp_next) * g.transpose());
  }

  const Eigen::Index m = n / 3;
  out.filtered_variance.resize(nt, n);
  out.smoothed_variance.resize(nt, n);
  out.q.resize(nt, m);
  out.qdot.resize(nt, m);
  out.eta.resize(nt, m);
  out.q_std.resize(nt, m);
  out.qdot_std.resize(nt, m);
  out.eta_std.resize(nt, m);
  for (Eigen::Index k = 0; k < nt; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    out.filtered_variance.row(k) = filtered.filtered_cov[ku].diagonal().transpose();
    out.smoothed_variance.row(k) = out.cov[ku].diagonal().transpose();
    const VectorXd sd = out.cov[ku].diagonal().cwiseMax(0.0).cwiseSqrt();
    out.q.row(k) = out.mean[ku].segment(0, m).transpose();
    out.qdot.row(k) = out.mean[ku].segment(m, m).transpose();
    out.eta.row(k) = out.mean[ku].segment(2 * m, m).transpose();
    out.q_std.row(k) = sd.segment(0, m).transpose();
    out.qdot_std.row(k) = sd.segment(m, m).transpose();
    out.eta_std.row(k) = sd.segment(2 * m, m).transpose();
  }
  return out;
}

double StudentT::log_pdf(double x) const {
  const double scale2 = v;
  const double d = std::abs(x - mu) / std::sqrt(nu * scale2);
  // log(1 + d^2) without overflowing d^2
  const double log_term = d > 1e150 ? 2.0 * std::log(d) : std::log1p(d * d);
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * std::numbers::pi * scale2) - 0.5 * (nu + 1.0) * log_term;
}

double log_prior(const GPHyperparams& theta, const PriorSpec& priors) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < theta.modes(); ++i) {
    total += priors.amplitude.log_pdf(theta.amplitude(i));
    total += priors.length_scale.log_pdf(theta.length_scale(i));
  }
  return total;
}

void InferenceData::validate() const {
  require(basis.count() >= 1, ErrorKind::InvalidInput, "inference: empty modal basis");
  require(dt > 0.0, ErrorKind::InvalidInput, "inference: dt must be positive");
  require(y.cols() == static_cast<Eigen::Index>(sensor_dofs.size()), ErrorKind::InvalidInput,
          "inference: data width does not match sensors");
  require(p.rows() == y.rows() && p.cols() == basis.count(), ErrorKind::InvalidInput,
          "inference: modal force series is not aligned with the data");
  require(noise_std >= 0.0, ErrorKind::InvalidInput, "inference: negative noise level");
}

double effective_noise_std(const InferenceData& data, double floor_rel) {
  const double rms = std::sqrt(data.y.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(data.y.size(), 1)));
  const double floor = floor_rel * rms;
  const double sigma = std::max(data.noise_std, floor);
  require(sigma > 0.0, ErrorKind::InvalidInput, "measurement noise is zero and data are identically zero");
  return sigma;
}

double log_likelihood(const GPHyperparams& theta, const InferenceData& data, double noise_std) {
  const DiscreteSSM ssm = discretize(assemble_augmented(data.basis, theta, data.jitter), data.dt);
  const MeasurementModel meas =
      make_measurement(data.basis, data.sensor_dofs, noise_std, 3 * data.basis.count());
  return kalman_log_likelihood(ssm, meas, data.y, data.p, default_prior(theta, data.prior_state_var),
                               data.steady_tol);
}

double log_posterior(const GPHyperparams& theta, const PriorSpec& priors, const InferenceData& data,
                     double noise_std) {
  try {
    const double value = log_likelihood(theta, data, noise_std) + log_prior(theta, priors);
    return std::isfinite(value) ? value : -std::numeric_limits<double>::infinity();
  } catch (const Error& e) {
    log_debug(std::string("log-posterior evaluation failed: ") + e.what());
    return -std::numeric_limits<double>::infinity();
  }
}

OptimizationTrace nelder_mead_maximize(const std::function<double(const VectorXd&)>& f,
                                       const VectorXd& start, const NelderMeadOptions& options) {
  const Eigen::Index n = start.size();
  require(n >= 1, ErrorKind::InvalidInput, "optimizer: empty parameter vector");
  const double dn = static_cast<double>(n);
  // Dimension-adapted coefficients (Gao and Han).
  const double rho = 1.0;
  const double chi = 1.0 + 2.0 / dn;
  const double gamma = 0.75 - 0.5 / dn;
  const double sigma = n > 1 ? 1.0 - 1.0 / dn : 0.5;

  OptimizationTrace trace;
  trace.start = start;
  auto cost = [&](const VectorXd& x) {
    ++trace.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
  };

  std::vector<VectorXd> pts(static_cast<std::size_t>(n + 1), start);
  std::vector<double> vals(static_cast<std::size_t>(n + 1));
  vals[0] = cost(start);
  trace.start_value = -vals[0];
  for (Eigen::Index i = 0; i < n; ++i) {
    pts[static_cast<std::size_t>(i + 1)](i) += options.initial_step;
    vals[static_cast<std::size_t>(i + 1)] = cost(pts[static_cast<std::size_t>(i + 1)]);
  }
  std::vector<std::size_t> order(static_cast<std::size_t>(n + 1));
  while (true) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    {
      std::vector<VectorXd> sp;
      std::vector<double> sv;
      for (std::size_t i : order) {
        sp.push_back(pts[i]);
        sv.push_back(vals[i]);
      }
      pts = std::move(sp);
      vals = std::move(sv);
    }
    trace.history.push_back(-vals[0]);
    double diameter = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      diameter = std::max(diameter, (pts[i] - pts[0]).cwiseAbs().maxCoeff());
    }
    const double spread = vals.back() - vals[0];
    if (std::isfinite(spread) && spread <= options.f_tol * (1.0 + std::abs(vals[0])) &&
        diameter <= options.x_tol) {
      trace.converged = true;
      break;
    }
    if (trace.evaluations >= options.max_evaluations) break;

    VectorXd centroid = VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) centroid += pts[static_cast<std::size_t>(i)];
    centroid /= dn;
    const VectorXd& worst = pts.back();
    const VectorXd xr = centroid + rho * (centroid - worst);
    const double fr = cost(xr);
    if (fr < vals[0]) {
      const VectorXd xe = centroid + rho * chi * (centroid - worst);
      const double fe = cost(xe);
      if (fe < fr) {
        pts.back() = xe;
        vals.back() = fe;
      } else {
        pts.back() = xr;
        vals.back() = fr;
      }
      continue;
    }
    if (fr < vals[static_cast<std::size_t>(n - 1)]) {
      pts.back() = xr;
      vals.back() = fr;
      continue;
    }
    bool shrink = false;
    if (fr < vals.back()) {
      const VectorXd xc = centroid + gamma * rho * (centroid - worst);
      const double fc = cost(xc);
      if (fc <= fr) {
        pts.back() = xc;
        vals.back() = fc;
      } else {
        shrink = true;
      }
    } else {
      const VectorXd xc = centroid - gamma * (centroid - worst);
      const double fc = cost(xc);
      if (fc < vals.back()) {
        pts.back() = xc;
        vals.back() = fc;
      } else {
        shrink = true;
      }
    }
    if (shrink) {
      for (std::size_t i = 1; i < pts.size(); ++i) {
        pts[i] = pts[0] + sigma * (pts[i] - pts[0]);
        vals[i] = cost(pts[i]);
      }
    }
  }
  trace.best = pts[0];
  trace.best_value = -vals[0];
  return trace;
}

std::vector<VectorXd> map_start_points(Eigen::Index modes, const PriorSpec& priors,
                                       const MapOptions& options) {
  require(options.starts >= 1, ErrorKind::InvalidInput, "optimizer: need at least one start");
  VectorXd centre(2 * modes);
  centre.head(modes).setConstant(std::log(priors.amplitude.mu));
  centre.tail(modes).setConstant(std::log(priors.length_scale.mu));
  std::vector<VectorXd> starts;
  for (const auto& w : options.warm_starts) {
    require(w.size() == 2 * modes, ErrorKind::InvalidInput, "optimizer: warm start has the wrong size");
    starts.push_back(w);
  }
  starts.push_back(centre);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, options.start_spread);
  for (int s = 1; s < options.starts; ++s) {
    VectorXd x = centre;
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += normal(rng);
    starts.push_back(x);
  }
  return starts;
}

MapResult map_optimize(const InferenceData& data, const PriorSpec& priors, const MapOptions& options) {
  data.validate();
  require(priors.amplitude.mu > 0.0 && priors.length_scale.mu > 0.0, ErrorKind::InvalidInput,
          "prior locations must be positive");
  const Eigen::Index m = data.basis.count();
  const double sigma0 = effective_noise_std(data, options.noise_floor_rel);
  std::vector<VectorXd> starts = map_start_points(m, priors, options);
  if (options.estimate_noise) {
    for (auto& s : starts) {
      VectorXd x(2 * m + 1);
      x << s, std::log(sigma0);
      s = x;
    }
  }
  auto objective = [&](const VectorXd& x) {
    const GPHyperparams theta = GPHyperparams::from_log(x.head(2 * m));
    const double sigma = options.estimate_noise ? std::exp(x(2 * m)) : sigma0;
    return log_posterior(theta, priors, data, sigma);
  };

  const auto n_starts = static_cast<int>(starts.size());
  std::vector<OptimizationTrace> traces(starts.size());
  std::vector<std::string> failures(starts.size());
  auto run = [&](int s) {
    try {
      traces[static_cast<std::size_t>(s)] =
          nelder_mead_maximize(objective, starts[static_cast<std::size_t>(s)], options.nelder_mead);
    } catch (const std::exception& e) {
      failures[static_cast<std::size_t>(s)] = e.what();
      traces[static_cast<std::size_t>(s)].start = starts[static_cast<std::size_t>(s)];
      traces[static_cast<std::size_t>(s)].best_value = -std::numeric_limits<double>::infinity();
    }
  };
  if (options.execution == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
    for (int s = 0; s < n_starts; ++s) run(s);
  } else {
    for (int s = 0; s < n_starts; ++s) run(s);
  }

  MapResult result;
  result.best_start = -1;
  double best = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < n_starts; ++s) {
    const auto& t = traces[static_cast<std::size_t>(s)];
    if (std::isfinite(t.best_value) && t.best_value > best) {
      best = t.best_value;
      result.best_start = s;
    }
  }
  if (result.best_start < 0) {
    std::string msg = "every optimizer start failed";
    for (int s = 0; s < n_starts; ++s) {
      const auto& t = traces[static_cast<std::size_t>(s)];
      msg += "; start " + std::to_string(s) + ": " +
             (failures[static_cast<std::size_t>(s)].empty()
                  ? "objective " + std::to_string(t.best_value) + " after " +
                        std::to_string(t.evaluations) + " evaluations"
                  : failures[static_cast<std::size_t>(s)]);
    }
    throw Error(ErrorKind::OptimizationFailure, msg);
  }
  const VectorXd& x = traces[static_cast<std::size_t>(result.best_start)].best;
  result.theta = GPHyperparams::from_log(x.head(2 * m));
  result.noise_std = options.estimate_noise ? std::exp(x(2 * m)) : sigma0;
  result.log_posterior = best;
  result.traces = std::move(traces);
  return result;
}

SmoothedTrajectory smooth(const GPHyperparams& theta, const InferenceData& data, double noise_std) {
  data.validate();
  const DiscreteSSM ssm = discretize(assemble_augmented(data.basis, theta, data.jitter), data.dt);
  const MeasurementModel meas =
      make_measurement(data.basis, data.sensor_dofs, noise_std, 3 * data.basis.count());
  const FilterResult fr =
      kalman_filter(ssm, meas, data.y, data.p, default_prior(theta, data.prior_state_var));
  return rts_smoother(ssm, fr);
}

}  // namespace mre
