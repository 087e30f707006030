// Serial reference against OpenMP path for each parallel kernel. Argument 0
// is serial, 1 is parallel; MRE_THREADS caps the worker count.

#include <benchmark/benchmark.h>

#include <random>

#include "mre/inference.hpp"
#include "mre/log.hpp"
#include "mre/metrics.hpp"
#include "mre/rectified.hpp"
#include "mre/surrogate.hpp"
#include "mre/truth.hpp"

using namespace mre;

namespace {

Execution exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::Serial : Execution::Parallel;
}

MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  return MatrixXd::NullaryExpr(rows, cols, [&] { return g(rng); });
}

FEModel building() {
  FEModel m = assemble_shear_building(ShearBuildingSpec::uniform(6, 1e3, 2e6));
  m.damping = build_modal_damping(m.mass, m.stiffness, std::vector<double>{0.02});
  return m;
}

InferenceData two_mode_data() {
  const FEModel m = building();
  InferenceData d;
  d.basis = solve_modes(m, 2);
  d.sensor_dofs = {2, 5};
  d.dt = 0.01;
  const Eigen::Index nt = 1000;
  d.p = 100.0 * gaussian(nt, 2, 1);
  const DiscreteSSM ssm = discretize(assemble_modal(d.basis), d.dt);
  const MatrixXd c = d.basis.shapes(d.sensor_dofs, Eigen::all);
  VectorXd z = VectorXd::Zero(4);
  d.y.resize(nt, 2);
  for (Eigen::Index k = 0; k < nt; ++k) {
    if (k > 0) z = ssm.a * z + ssm.b * d.p.row(k - 1).transpose();
    d.y.row(k) = (c * z.head(2)).transpose();
  }
  d.noise_std = 0.01 * std::sqrt(d.y.squaredNorm() / static_cast<double>(d.y.size()));
  return d;
}

void BM_MapMultistart(benchmark::State& state) {
  const InferenceData d = two_mode_data();
  MapOptions o;
  o.starts = 4;
  o.nelder_mead.max_evaluations = 40;
  o.execution = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(map_optimize(d, PriorSpec{}, o).log_posterior);
}
BENCHMARK(BM_MapMultistart)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BatchGradient(benchmark::State& state) {
  const Surrogate s = Surrogate::random(8, 50, 4, 3);
  const MatrixXd xn = gaussian(4000, 8, 4);
  const MatrixXd yn = gaussian(4000, 4, 5);
  std::vector<Eigen::Index> rows(4000);
  for (Eigen::Index i = 0; i < 4000; ++i) rows[static_cast<std::size_t>(i)] = i;
  for (auto _ : state) benchmark::DoNotOptimize(batch_gradient(s, xn, yn, rows, 1e-6, exec_of(state)).loss);
}
BENCHMARK(BM_BatchGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_CrossValidation(benchmark::State& state) {
  const MatrixXd x = gaussian(800, 4, 6);
  const MatrixXd y = x.leftCols(2).array().tanh().matrix();
  TrainingConfig cfg;
  cfg.max_epochs = 20;
  cfg.folds = 3;
  for (auto _ : state) benchmark::DoNotOptimize(select_hidden_size(x, y, {5, 10}, cfg, exec_of(state)).hidden);
}
BENCHMARK(BM_CrossValidation)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_AveragedSpectrum(benchmark::State& state) {
  const MatrixXd s = gaussian(4000, 16, 7);
  for (auto _ : state) benchmark::DoNotOptimize(averaged_log_fft(s, 0.005, Detrend::Linear, exec_of(state)));
}
BENCHMARK(BM_AveragedSpectrum)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PredictMany(benchmark::State& state) {
  const FEModel m = building();
  const ModalBasis basis = solve_modes(m, 6);
  Surrogate net = Surrogate::random(12, 20, 6, 8);
  net.input.std.setConstant(1e-3);
  std::vector<MatrixXd> forces;
  for (std::uint64_t k = 0; k < 4; ++k) forces.push_back(100.0 * gaussian(2000, m.n_dof(), 10 + k));
  const RectifiedModel model{basis, &net, {}};
  for (auto _ : state) benchmark::DoNotOptimize(predict_many(model, forces, 1e-3, {0, 5}, exec_of(state)));
}
BENCHMARK(BM_PredictMany)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

int main(int argc, char** argv) {
  set_log_level(LogLevel::Quiet);
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
