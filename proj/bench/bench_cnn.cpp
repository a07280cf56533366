#include <chrono>
#include <cstdio>
#include <random>

#include "vmi/nn/network.hpp"

int main(int argc, char** argv)
{
    const std::size_t n = argc > 1 ? std::stoul(argv[1]) : 8;
    vmi::nn::Network net(vmi::nn::build_model(n), 1);
    vmi::nn::Tensor4 x(16, 1, n, 500);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> d;
    for (double& v : x.values) v = d(rng);
    std::vector<int> labels(16);
    for (int i = 0; i < 16; ++i) labels[i] = i % 4;
    auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < 5; ++r) {
        net.forward(x, vmi::nn::Mode::Train);
        net.backward(labels);
    }
    auto t1 = std::chrono::steady_clock::now();
    std::printf("n=%zu params=%zu per-window fwd+bwd %.3f ms\n", n, net.parameter_count(),
                std::chrono::duration<double, std::milli>(t1 - t0).count() / 80.0);
}
