#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace sabrdnn::detail {

inline constexpr int kBlock = 512;

struct KernelPlan {
    std::vector<double> dt;
    std::vector<double> sdt;
    std::vector<double> vol_drift;  // -nu^2 dt / 2
    std::vector<double> vol_diff;   // nu sqrt(dt)
    std::vector<int> fixing_at;     // fixing index completed by step s, or -1
    std::vector<double> strikes;    // k_hat, flattened over fixings
    std::vector<std::size_t> strike_begin;
    std::vector<std::size_t> sums_begin;  // per fixing: [sum x, sum x^2, (cap, cap^2, floor, floor^2) per strike]
    std::size_t sums_per_block = 0;
    double log_alpha_hat = 0.0;
    double beta_m1 = 0.0;
    double rho = 0.0;
    double rho_hat = 1.0;
    double floor = 1e-14;
    double log_floor = 0.0;
    std::uint32_t key0 = 0;
    std::uint32_t key1 = 0;
};

// Simulates paths [first_path, first_path + n) with n <= kBlock and writes the block sums.
void simulate_block(const KernelPlan& plan, std::uint64_t first_path, int n, double* sums);

}  // namespace sabrdnn::detail
