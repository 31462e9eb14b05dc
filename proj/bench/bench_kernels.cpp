#include "svmrk/pipeline.hpp"

#include <benchmark/benchmark.h>

#include <omp.h>

#include <map>
#include <string>

namespace {

using namespace svmrk;

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::Parallel : Exec::Serial; }

const Discretization& inclusion(int level) {
  static std::map<int, Discretization> cache;
  auto it = cache.find(level);
  if (it == cache.end()) {
    StudyOptions o;
    o.problem = Benchmark::Inclusion;
    o.integration = Integration::Scni;
    it = cache.emplace(level, build_benchmark(o, level)).first;
  }
  return it->second;
}

const SvmModel& validation_model() {
  static const SvmModel model = [] {
    const ImageGrid img = synth_image(validation_circles(), validation_image_options());
    return *segment(img, TrainOptions{}).model;
  }();
  return model;
}

void BM_Assemble(benchmark::State& state) {
  const Discretization& d = inclusion(40);
  AssemblyOptions ao;
  ao.exec = exec_of(state);
  for (auto _ : state) {
    LinearSystem sys = assemble(*d.shapes, d.quadrature, d.exact.materials, d.bvp, ao);
    benchmark::DoNotOptimize(sys.F.data());
  }
  state.counters["sites"] = static_cast<double>(d.quadrature.cells.cells.size());
}

void BM_SmoothedGradients(benchmark::State& state) {
  const Discretization& d = inclusion(40);
  for (auto _ : state) {
    auto g = smoothed_gradients(*d.shapes, d.quadrature.cells, exec_of(state));
    benchmark::DoNotOptimize(g.data());
  }
}

void BM_PixelScores(benchmark::State& state) {
  const SvmModel& model = validation_model();
  const ImageGrid img = synth_image(validation_circles(), validation_image_options());
  for (auto _ : state) {
    auto s = pixel_scores(img, model, exec_of(state));
    benchmark::DoNotOptimize(s.data());
  }
  state.counters["pixels"] = static_cast<double>(img.size());
}

}  // namespace

BENCHMARK(BM_Assemble)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SmoothedGradients)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PixelScores)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  benchmark::AddCustomContext("omp_threads", std::to_string(omp_get_max_threads()));
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
}
