#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sabrdnn/mc.hpp"
#include "sabrdnn/params.hpp"

namespace sabrdnn {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct MoneynessBucket {
    Range range;
    int count = 0;
};

struct SubsetSpec {
    int id = 1;
    Range F0, alpha, beta, rho, nu;
    double lambda = kDefaultShift;
    Range maturity_span;               // maturities served by this subset's network
    std::vector<Range> date_buckets;  // one fixing date drawn per bucket
    std::vector<MoneynessBucket> moneyness_buckets;
    std::uint64_t n_surfaces = 1024;
    McConfig mc;

    int n_dates() const { return int(date_buckets.size()); }
    int n_strikes() const;
};

// Desk-scale spec: 2^10 surfaces, 2^16 paths, paper step sizes.
SubsetSpec subset_spec(int id);
// Full-scale sizes (2^20 / 2^18 / 2^18 surfaces, 2^18 paths).
SubsetSpec full_scale_spec(int id);
// Subset whose maturity span contains T; spans are half-open except the last.
int subset_for_maturity(double T);

void validate(const SubsetSpec& s);

struct VolPoint {
    double alpha_hat = 0.0;
    double beta = 0.0;
    double rho = 0.0;
    double nu = 0.0;
    double T = 0.0;
    double k_hat = 0.0;
    double sigma = 0.0;
    double vol_err3 = 0.0;
};

inline constexpr double kMaxDatasetVol = 5.0;

// Latin hypercube: per dimension one draw in each of n equal strata, strata randomly permuted.
std::vector<std::vector<double>> lhs_sample(const std::vector<Range>& ranges, std::size_t n, std::uint64_t seed);

struct SurfaceAxes {
    std::vector<double> dates;                   // ascending
    std::vector<std::vector<double>> moneyness;  // per date, ascending
};

// Training layout: one date per bucket, fresh bucketed strikes per date.
SurfaceAxes sample_surface_axes(const SubsetSpec& spec, std::uint64_t surface_seed);
// Test layout: dates uniform on the maturity span, one strike per date.
SurfaceAxes sample_test_axes(const SubsetSpec& spec, std::uint64_t surface_seed);

// SabrParams for surface index `l` of a run.
std::vector<SabrParams> sample_subset_params(const SubsetSpec& spec, std::uint64_t seed);

struct SurfaceOutcome {
    SabrParams params;
    std::vector<VolPoint> points;
    std::vector<double> floorlet;  // generating floorlet price per point (after parity if needed)
    std::uint64_t attempted = 0;
    std::uint64_t dropped_time_value = 0;
    std::uint64_t dropped_ceiling = 0;
    std::uint64_t failed = 0;
    std::string error;  // non-empty when the whole surface was aborted
};

// Prices one surface and extracts its vol points. Never throws for MC or inversion trouble.
SurfaceOutcome generate_surface(const SubsetSpec& spec, const SabrParams& params, const SurfaceAxes& axes,
                                std::uint64_t mc_seed);

struct GenStats {
    std::uint64_t surfaces = 0;
    std::uint64_t aborted_surfaces = 0;
    std::uint64_t attempted = 0;
    std::uint64_t emitted = 0;
    std::uint64_t dropped_time_value = 0;
    std::uint64_t dropped_ceiling = 0;
    std::uint64_t failed = 0;

    double drop_fraction() const { return attempted ? double(attempted - emitted) / double(attempted) : 0.0; }
};

struct GenOptions {
    bool test_set = false;
    std::uint64_t seed = 0;
    int workers = 0;
    std::function<void(std::uint64_t done, std::uint64_t total)> progress;
    std::function<void(std::uint64_t surface, const std::string& what)> on_abort;
};

// In-memory generation; rows in surface order regardless of worker count.
std::vector<VolPoint> generate_points(const SubsetSpec& spec, const GenOptions& opt, GenStats* stats = nullptr);

// Streams rows to a CSV at out_path and writes out_path + ".json" with spec, seed and stats.
GenStats generate_subset(const SubsetSpec& spec, const GenOptions& opt, const std::string& out_path);

void write_dataset_csv(const std::vector<VolPoint>& rows, const std::string& path);
std::vector<VolPoint> read_dataset_csv(const std::string& path);
std::string dataset_csv_header();
void append_csv_row(std::string& out, const VolPoint& v);

// Disjoint, exhaustive split; both halves keep the input order.
std::pair<std::vector<VolPoint>, std::vector<VolPoint>> split_train_validation(const std::vector<VolPoint>& rows,
                                                                               double fraction, std::uint64_t seed);

void to_json(nlohmann::json& j, const SubsetSpec& s);
void from_json(const nlohmann::json& j, SubsetSpec& s);
void to_json(nlohmann::json& j, const GenStats& s);

}  // namespace sabrdnn
