// SPDX-License-Identifier: Apache-2.0
//
// Times the serial reference kernels against the OpenMP versions and checks
// that both produce identical bits while doing so.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <omp.h>

#include "subgeo/kernels.hpp"
#include "subgeo/rng.hpp"

using namespace subgeo;
using Clock = std::chrono::steady_clock;

namespace {

std::vector<double> random_buffer(int n, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = rng.gaussian();
    return v;
}

template <typename F>
double time_ms(int reps, F&& f) {
    // warmup
    f();
    const auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) f();
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count() / reps;
}

} // namespace

int main(int argc, char** argv) {
    int threads = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--threads" && i + 1 < argc) threads = std::atoi(argv[++i]);
    }
    if (threads > 0) omp_set_num_threads(threads);

    std::printf("kernel benchmark: serial reference vs OpenMP (%d threads)\n", omp_get_max_threads());
    std::printf("%-10s %8s %12s %12s %9s %8s\n", "kernel", "n", "serial ms", "omp ms", "speedup",
                "match");

    Rng rng(7);
    for (int n : {64, 128, 256, 384, 512, 768}) {
        const auto a = random_buffer(n * n, rng);
        const auto b = random_buffer(n * n, rng);
        std::vector<double> c_ref(static_cast<std::size_t>(n) * n), c_par(c_ref);
        const int reps = n <= 256 ? 20 : 5;

        struct Case {
            const char* name;
            void (*ref)(const double*, const double*, double*, int, int, int);
            void (*par)(const double*, const double*, double*, int, int, int);
        };
        const Case cases[] = {
            {"matmul", kernels::ref::matmul, kernels::par::matmul},
            {"matmul_tn", kernels::ref::matmul_tn, kernels::par::matmul_tn},
            {"matmul_nt", kernels::ref::matmul_nt, kernels::par::matmul_nt},
        };
        for (const auto& k : cases) {
            const double t_ref = time_ms(reps, [&] { k.ref(a.data(), b.data(), c_ref.data(), n, n, n); });
            const double t_par = time_ms(reps, [&] { k.par(a.data(), b.data(), c_par.data(), n, n, n); });
            std::printf("%-10s %8d %12.3f %12.3f %8.2fx %8s\n", k.name, n, t_ref, t_par,
                        t_ref / t_par, c_ref == c_par ? "exact" : "DIFF");
        }
    }
    return 0;
}
