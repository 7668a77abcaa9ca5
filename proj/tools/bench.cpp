// Serial reference vs OpenMP kernel timings. Each pair is checked for
// agreement before it is timed, so the table doubles as a smoke test.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "articulab/harness.hpp"

using namespace articulab;
using Clock = std::chrono::steady_clock;

namespace {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

template <class F>
double time_ms(F&& fn, int reps) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = Clock::now();
    fn();
    auto t1 = Clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void row(const char* name, double serial_ms, double parallel_ms, const char* agreement) {
  std::printf("%-22s %10.2f %10.2f %8.2fx   %s\n", name, serial_ms, parallel_ms,
              serial_ms / parallel_ms, agreement);
}

void bench_fps() {
  Rng rng(seed_stream("bench-fps", 0));
  std::vector<Vec3> pts(20000);
  for (auto& p : pts) p = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  const int m = 512;
  auto a = fps_serial(pts, m, 0);
  auto b = fps(pts, m, 0);
  const bool same = a == b;
  double ts = time_ms([&] { fps_serial(pts, m, 0); }, 3);
  double tp = time_ms([&] { fps(pts, m, 0); }, 3);
  row("fps 20k->512", ts, tp, same ? "indices identical" : "MISMATCH");
}

void bench_sample_points() {
  ObjectInstance obj = build_instance(Category::Bottle, 0);
  const int n = 60000;
  auto a = sample_points_serial(obj, n, 7);
  auto b = sample_points(obj, n, 7);
  bool same = a.points.size() == b.points.size() && a.part == b.part;
  for (size_t i = 0; same && i < a.points.size(); ++i)
    same = a.points[i].x == b.points[i].x && a.points[i].y == b.points[i].y &&
           a.points[i].z == b.points[i].z;
  double ts = time_ms([&] { sample_points_serial(obj, n, 7); }, 3);
  double tp = time_ms([&] { sample_points(obj, n, 7); }, 3);
  row("sample_points 60k", ts, tp, same ? "points identical" : "MISMATCH");
}

void bench_grad() {
  PolicyConfig cfg;
  cfg.hidden = {256, 256};
  cfg.epochs = 1;
  DenoiserNet net = make_net(cfg);
  NoiseSchedule sched = make_schedule(cfg.diffusion_steps);
  Rng rng(seed_stream("bench-grad", 0));
  const int B = 64;
  std::vector<TrainSample> batch(B);
  for (auto& s : batch) {
    s.window.resize(cfg.window_dim());
    s.cond.resize(cfg.cond_dim());
    for (auto& v : s.window) v = rng.normal();
    for (auto& v : s.cond) v = rng.normal();
  }
  NoisePlan plan = draw_noise_plan(B, cfg.window_dim(), cfg.diffusion_steps, rng);
  std::vector<double> gs(net.n_params), gp(net.n_params);
  double ls = loss_and_grad_simple(net, net.params, batch, sched, plan, gs);
  double lp = loss_and_grad(net, net.params, batch, sched, plan, gp);
  double dmax = std::abs(ls - lp);
  for (size_t i = 0; i < gs.size(); ++i) dmax = std::max(dmax, std::abs(gs[i] - gp[i]));
  double ts = time_ms([&] { loss_and_grad_simple(net, net.params, batch, sched, plan, gs); }, 3);
  double tp = time_ms([&] { loss_and_grad(net, net.params, batch, sched, plan, gp); }, 3);
  char agree[64];
  std::snprintf(agree, sizeof agree, "max |diff| %.2e", dmax);
  row("batch-64 gradient", ts, tp, agree);
}

std::string dataset_fingerprint(const DemoDataset& ds) {
  std::ostringstream os;
  for (const auto& d : ds.demos) {
    os << to_string(d.cat) << ':' << d.seed << ':' << d.kf.size() << ';';
    for (const auto& k : d.kf)
      for (double v : k.act) os.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  return os.str();
}

void bench_collect() {
  std::vector<ObjectInstance> objs;
  for (int i = 0; i < 4; ++i) objs.push_back(build_instance(Category::Safe, i));
  ExpertConfig ecfg;
  DemoDataset ref;
  set_threads(1);
  double ts = time_ms([&] { ref = collect_dataset(objs, 8, ecfg, 3); }, 2);
  set_threads(max_threads());
  DemoDataset par;
  double tp = time_ms([&] { par = collect_dataset(objs, 8, ecfg, 3); }, 2);
  const bool same = dataset_fingerprint(ref) == dataset_fingerprint(par);
  row("collect 4x8 demos", ts, tp, same ? "datasets identical" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("threads available: %d\n", max_threads());
  std::printf("%-22s %10s %10s %9s   %s\n", "kernel", "serial ms", "omp ms", "speedup",
              "agreement");
  bench_fps();
  bench_sample_points();
  bench_grad();
  bench_collect();
  return 0;
}
