// SPDX-License-Identifier: Apache-2.0
//
// Times the serial reference kernels against the OpenMP variants and a tiny
// model forward/backward pass. Build and run:
//   cmake --build build --target avflow_bench && ./build/bench/avflow_bench
#include <chrono>
#include <cstdio>
#include <functional>

#include "avflow/config.hpp"
#include "avflow/kernels.hpp"
#include "avflow/mat.hpp"
#include "avflow/network.hpp"
#include "avflow/synthdata.hpp"

using namespace avflow;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void bench_matmul(int m, int k, int n) {
    MatF a(m, k), b(k, n), bt(n, k), c(m, n);
    Rng rng(7);
    rng.fill_normal(a);
    rng.fill_normal(b);
    rng.fill_normal(bt);
    const double flops = 2.0 * m * k * n;
    const int reps = std::max(1, static_cast<int>(2e8 / flops));
    const double t_ser = time_ms([&] { kernels::serial::matmul_nn(a, b, c); }, reps);
    const double t_par = time_ms([&] { kernels::omp::matmul_nn(a, b, c); }, reps);
    const double t_ser_nt = time_ms([&] { kernels::serial::matmul_nt(a, bt, c); }, reps);
    const double t_par_nt = time_ms([&] { kernels::omp::matmul_nt(a, bt, c); }, reps);
    std::printf("matmul %4dx%4dx%4d  nn serial %7.3f ms (%6.2f GF/s)  omp %7.3f ms (%6.2f GF/s)\n",
                m, k, n, t_ser, flops / t_ser / 1e6, t_par, flops / t_par / 1e6);
    std::printf("                     nt serial %7.3f ms (%6.2f GF/s)  omp %7.3f ms (%6.2f GF/s)\n",
                t_ser_nt, flops / t_ser_nt / 1e6, t_par_nt, flops / t_par_nt / 1e6);
}

void bench_tiny_step() {
    const ModelConfig cfg = preset("tiny");
    Network<float> net(cfg);
    net.allocate(1);
    const SyntheticScene scene = generate_scene(3, 16, 8.0);
    TrainingSample<float> s = render_sample<float>(scene, cfg);
    NetTape<float> tape;
    Rng rng(5);
    LatentSeq<float> xt(Mat<float>(s.x1.data.rows, s.x1.data.cols), s.x1.fps);
    rng.fill_normal(xt.data);
    Mat<float> dvel(xt.data.rows, xt.data.cols);
    rng.fill_normal(dvel);

    const double t_fwd =
        time_ms([&] { net.forward(FlowTime(0.5), xt, s.cond, tape); }, 3);
    const double t_bwd = time_ms(
        [&] {
            net.ps.zero_grad();
            net.forward(FlowTime(0.5), xt, s.cond, tape);
            net.backward(dvel, tape);
        },
        3);
    std::printf("tiny forward (8 s)          %7.2f ms\n", t_fwd);
    std::printf("tiny forward+backward (8 s) %7.2f ms\n", t_bwd);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) kernels::set_threads(std::atoi(argv[1]));
    std::printf("threads: %d\n", kernels::max_threads());
    bench_matmul(256, 256, 256);
    bench_matmul(391, 64, 256);
    bench_matmul(1024, 512, 128);
    bench_tiny_step();
    return 0;
}
