// Microbenchmark for one training iteration (loss + gradient + ADAM) on
// representative batch/network shapes; prints ms per iteration.

#include <chrono>
#include <cstdio>

#include "cauchynet/loss.hpp"
#include "cauchynet/optimizer.hpp"

using namespace cauchynet;

namespace {

CauchyBatch make_batch(std::size_t dim, bool with_time, std::size_t ni,
                       std::size_t nd, std::size_t nn, std::size_t nt) {
  CauchyBatch b;
  b.dim = dim;
  b.time_dependent = with_time;
  Rng rng(99);
  const std::size_t w = b.input_width();
  auto pt = [&]() {
    Vector x(w);
    for (double& c : x) c = rng.uniform(-0.7, 0.7);
    return x;
  };
  for (std::size_t i = 0; i < ni; ++i) b.interior.push_back(pt());
  for (std::size_t i = 0; i < nd; ++i)
    b.dirichlet.push_back({pt(), 0.3, 0.3});
  for (std::size_t i = 0; i < nn; ++i) {
    Vector n(dim, 0.0);
    double s = 0.0;
    for (double& c : n) {
      c = rng.gaussian();
      s += c * c;
    }
    for (double& c : n) c /= std::sqrt(s);
    b.neumann.push_back({pt(), n, 0.1, 0.1});
  }
  for (std::size_t i = 0; i < nt; ++i) {
    Vector x = pt();
    x.back() = 0.0;
    b.initial.push_back({x, 0.2, 0.2});
  }
  return b;
}

void bench(const char* label, std::vector<std::size_t> sizes, bool with_time,
           std::size_t ni, std::size_t nd, std::size_t nn, std::size_t nt,
           int iters) {
  const std::size_t dim = sizes[0] - (with_time ? 1 : 0);
  const CauchyBatch b = make_batch(dim, with_time, ni, nd, nn, nt);
  NetworkParams p = NetworkParams::random(sizes, 7);
  AdamState st = AdamState::init(p, 1e-4);
  LossOptions opts{.threads = thread_count_from_env()};

  // warmup
  for (int i = 0; i < 3; ++i) {
    const LossReport rep =
        with_time ? parabolic_loss(p, b, opts) : elliptic_loss(p, b, opts);
    adam_step(p, rep.grad, st);
  }
  const auto t0 = std::chrono::steady_clock::now();
  double last = 0.0;
  for (int i = 0; i < iters; ++i) {
    const LossReport rep =
        with_time ? parabolic_loss(p, b, opts) : elliptic_loss(p, b, opts);
    adam_step(p, rep.grad, st);
    last = rep.total;
  }
  const auto t1 = std::chrono::steady_clock::now();
  const double ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count() / iters;
  std::printf("%-28s %8.2f ms/iter   (J = %.6g)\n", label, ms, last);
}

}  // namespace

int main() {
  bench("2d main 2000/500/500", {2, 120, 20, 14, 12, 10, 1}, false, 2000, 500,
        500, 0, 20);
  bench("2d ladder small 2000/500", {2, 10, 1}, false, 2000, 500, 500, 0, 50);
  bench("nd d=8 10000/2500/2500", {8, 120, 20, 14, 12, 10, 1}, false, 10000,
        2500, 2500, 0, 5);
  bench("heat d=2 10000/2500x3", {3, 120, 20, 14, 12, 10, 1}, true, 10000, 2500,
        2500, 2500, 5);
  return 0;
}
