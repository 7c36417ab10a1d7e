#pragma once

#include <cstdint>
#include <vector>

#include "sabrdnn/params.hpp"

namespace sabrdnn {

struct McConfig {
    std::uint64_t n_paths = 1ull << 18;
    double dt_days = 0.5;
    std::uint64_t seed = 0;
    double absorption_floor = 1e-14;
    int workers = 0;  // 0: OpenMP default
};

void validate(const McConfig& cfg);

struct McState {
    std::vector<double> x;
    std::vector<double> sig;
    std::vector<std::uint8_t> absorbed;

    explicit McState(std::size_t n = 0, double sig0 = 0.0) : x(n, 1.0), sig(n, sig0), absorbed(n, 0) {}
};

// One log-Euler step of the scaled dynamics. z_vol drives sigma, z_ind is the independent driver.
void advance_step(McState& state, const ScaledSabrParams& p, double dt_years, const std::vector<double>& z_vol,
                  const std::vector<double>& z_ind, double absorption_floor = 1e-14);

struct McPriceResult {
    double caplet = 0.0;
    double floorlet = 0.0;
    double caplet_err3 = 0.0;
    double floorlet_err3 = 0.0;
    double T = 0.0;
    double k_hat = 0.0;
    double caplet_var = 0.0;   // sample variance of the payoff
    double floorlet_var = 0.0;
};

struct ForwardCheck {
    double T = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
};

struct McSurface {
    std::vector<std::vector<McPriceResult>> prices;  // [fixing][strike]
    std::vector<ForwardCheck> forward;               // sample mean of X(T) per fixing
    std::uint64_t n_paths = 0;
    std::size_t n_steps = 0;
};

// Simulation grid: uniform steps of dt_days/365 with every fixing time inserted exactly.
struct TimeGrid {
    std::vector<double> t;            // step end times
    std::vector<std::size_t> fixing;  // index into t for each fixing time
};

TimeGrid make_time_grid(const std::vector<double>& fixing_times, double dt_days);

// Vectorized, OpenMP-parallel pricer. Results do not depend on the worker count.
McSurface price_surface(const ScaledSabrParams& p, const std::vector<double>& fixing_times,
                        const std::vector<std::vector<double>>& moneyness, const McConfig& cfg);

// Scalar reference using advance_step path by path with the same random numbers.
McSurface price_surface_serial(const ScaledSabrParams& p, const std::vector<double>& fixing_times,
                               const std::vector<std::vector<double>>& moneyness, const McConfig& cfg);

// Scalar reference on the unscaled shifted forward; strikes are shifted (K + lambda), prices unscaled.
McSurface price_surface_unscaled(const SabrParams& p, const std::vector<double>& fixing_times,
                                 const std::vector<std::vector<double>>& shifted_strikes, const McConfig& cfg);

enum class McVolStatus { Ok, LowTimeValue, DeadPoint, InversionFailed };

struct McVol {
    McVolStatus status = McVolStatus::Ok;
    double sigma = 0.0;
    double vol_err3 = 0.0;
    double floorlet_price = 0.0;  // floorlet used for the inversion, after parity if needed
    double time_value = 0.0;      // of the selected option
    bool used_floorlet = true;
};

inline constexpr double kMinTimeValue = 1e-13;

// Non-throwing extraction; status says why a point is unusable.
McVol extract_vol(const McPriceResult& r, double tau);

// Throwing variant.
McVol implied_vol_from_mc(const McPriceResult& r, double tau);

}  // namespace sabrdnn
