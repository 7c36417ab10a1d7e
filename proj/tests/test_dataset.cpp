#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "sabrdnn/black.hpp"
#include "sabrdnn/dataset.hpp"
#include "sabrdnn/error.hpp"
#include "sabrdnn/manifest.hpp"

using namespace sabrdnn;

namespace {

SubsetSpec tiny_spec(int id, std::uint64_t surfaces = 6) {
    SubsetSpec s = subset_spec(id);
    s.n_surfaces = surfaces;
    s.mc.n_paths = 1024;
    s.mc.dt_days = 10.0;
    return s;
}

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("sabrdnn_test_" + name)).string();
}

}  // namespace

TEST_CASE("LHS puts exactly one draw in every stratum") {
    const auto s = lhs_sample({{0.0, 1.0}}, 4, 17);
    std::set<int> strata;
    for (const auto& r : s) strata.insert(int(r[0] * 4));
    CHECK(strata == std::set<int>{0, 1, 2, 3});

    const std::vector<Range> box{{0.001, 0.2}, {0.1, 0.9}, {-0.8, 0.6}, {0.05, 1.6}};
    const auto big = lhs_sample(box, 1000, 5);
    for (std::size_t d = 0; d < box.size(); ++d) {
        std::vector<int> hits(1000, 0);
        for (const auto& r : big) {
            CHECK(r[d] >= box[d].lo);
            CHECK(r[d] <= box[d].hi);
            const int k = std::min(999, int((r[d] - box[d].lo) / (box[d].hi - box[d].lo) * 1000));
            ++hits[k];
        }
        CHECK(std::count(hits.begin(), hits.end(), 1) >= 998);  // edge rounding may shift a draw
    }
    CHECK(lhs_sample(box, 50, 9) == lhs_sample(box, 50, 9));
    CHECK(lhs_sample(box, 50, 9) != lhs_sample(box, 50, 10));
    CHECK(lhs_sample({{0.3, 0.3}}, 3, 1)[2][0] == 0.3);
}

TEST_CASE("subset specs follow the published layout") {
    const SubsetSpec s1 = subset_spec(1), s2 = subset_spec(2), s3 = subset_spec(3);
    CHECK(s1.n_dates() == 10);
    CHECK(s2.n_dates() == 10);
    CHECK(s3.n_dates() == 20);
    CHECK(s1.n_strikes() == 13);
    CHECK(s1.date_buckets.front().lo == doctest::Approx(2.0 / 12));
    CHECK(s1.date_buckets.front().hi == doctest::Approx(5.0 / 12));
    CHECK(s3.date_buckets.back().hi == doctest::Approx(30 + 5.0 / 12));
    CHECK(s1.nu.hi == 1.6);
    CHECK(s3.beta.lo == 0.05);
    CHECK(s1.mc.dt_days == 0.5);
    CHECK(s2.mc.dt_days == 1.0);
    CHECK(s3.mc.dt_days == 3.0);
    for (const auto* s : {&s1, &s2, &s3}) {
        validate(*s);
        for (std::size_t i = 1; i < s->date_buckets.size(); ++i)
            CHECK(s->date_buckets[i].lo == s->date_buckets[i - 1].hi);
    }
    std::uint64_t total = 0;
    for (int id = 1; id <= 3; ++id) {
        const SubsetSpec f = full_scale_spec(id);
        total += f.n_surfaces * std::uint64_t(f.n_dates() * f.n_strikes());
    }
    CHECK(total == 238551040ull);
    std::uint64_t test_total = 0;
    for (int id = 1; id <= 3; ++id) test_total += 1024ull * std::uint64_t(subset_spec(id).n_dates());
    CHECK(test_total == 40960ull);
    CHECK(std::llround(0.2 * double(total)) == 47710208ll);

    CHECK(subset_for_maturity(0.25) == 1);
    CHECK(subset_for_maturity(3.99) == 1);
    CHECK(subset_for_maturity(4.0) == 2);
    CHECK(subset_for_maturity(10.5) == 3);
    CHECK(subset_for_maturity(30.0) == 3);
    CHECK_THROWS_AS(subset_for_maturity(30.5), Error);
    CHECK_THROWS_AS(subset_spec(4), Error);
}

TEST_CASE("surface axes respect buckets") {
    const SubsetSpec s = subset_spec(1);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const SurfaceAxes ax = sample_surface_axes(s, seed);
        REQUIRE(ax.dates.size() == 10);
        CHECK(ax.dates[0] >= 2.0 / 12);
        CHECK(ax.dates[0] < 5.0 / 12);
        for (std::size_t i = 0; i < 10; ++i) {
            CHECK(ax.dates[i] >= s.date_buckets[i].lo);
            CHECK(ax.dates[i] < s.date_buckets[i].hi);
            REQUIRE(ax.moneyness[i].size() == 13);
            CHECK(std::count_if(ax.moneyness[i].begin(), ax.moneyness[i].end(), [](double k) { return k < 0.7; }) == 4);
            CHECK(std::count_if(ax.moneyness[i].begin(), ax.moneyness[i].end(), [](double k) { return k >= 1.5; }) == 4);
            for (double k : ax.moneyness[i]) {
                CHECK(k >= 0.15);
                CHECK(k <= 3.5);
            }
        }
        CHECK(ax.moneyness[0] != ax.moneyness[1]);
        const SurfaceAxes t = sample_test_axes(s, seed);
        REQUIRE(t.dates.size() == 10);
        for (std::size_t i = 0; i < 10; ++i) {
            CHECK(t.dates[i] >= 0.25);
            CHECK(t.dates[i] < 4.0);
            REQUIRE(t.moneyness[i].size() == 1);
            CHECK(t.moneyness[i][0] >= 0.15);
            CHECK(t.moneyness[i][0] <= 3.5);
        }
    }
    SubsetSpec d = s;
    d.date_buckets = {{1.0, 1.0}};
    d.moneyness_buckets = {{{0.8, 0.8}, 2}};
    const SurfaceAxes ax = sample_surface_axes(d, 3);
    CHECK(ax.dates == std::vector<double>{1.0});
    CHECK(ax.moneyness[0] == std::vector<double>{0.8, 0.8});
}

TEST_CASE("emitted points reprice their floorlet and pass the filters") {
    const SubsetSpec s = tiny_spec(1, 8);
    const auto params = sample_subset_params(s, 21);
    for (std::uint64_t l = 0; l < params.size(); ++l) {
        const SurfaceOutcome o = generate_surface(s, params[l], sample_surface_axes(s, l), l);
        CHECK(o.error.empty());
        CHECK(o.attempted == 130);
        CHECK(o.points.size() + o.dropped_time_value + o.dropped_ceiling + o.failed == o.attempted);
        for (std::size_t i = 0; i < o.points.size(); ++i) {
            const VolPoint& v = o.points[i];
            CHECK(v.sigma > 0.0);
            CHECK(v.sigma <= kMaxDatasetVol);
            CHECK(v.vol_err3 >= 0.0);
            CHECK(black_price(1.0, v.k_hat, v.sigma * v.sigma * v.T, -1) ==
                  doctest::Approx(o.floorlet[i]).epsilon(0).scale(1).epsilon(1e-10));
            CHECK(o.floorlet[i] - std::max(v.k_hat - 1.0, 0.0) >= kMinTimeValue);
        }
    }
}

TEST_CASE("time-value filter drops dead corners") {
    SubsetSpec s = tiny_spec(1);
    s.moneyness_buckets = {{{0.15, 0.15}, 1}};
    const SabrParams p{0.01, 0.03, 0.001, 0.5, 0.0, 0.05};
    SurfaceAxes ax{{0.25}, {{0.15}}};
    const SurfaceOutcome o = generate_surface(s, p, ax, 1);
    CHECK(o.points.empty());
    CHECK(o.dropped_time_value == 1);
}

TEST_CASE("generation is independent of worker count and streams the same rows") {
    const SubsetSpec s = tiny_spec(2, 10);
    GenOptions opt;
    opt.seed = 77;
    opt.workers = 1;
    GenStats st1;
    const auto a = generate_points(s, opt, &st1);
    opt.workers = 3;
    const auto b = generate_points(s, opt);
    REQUIRE(a.size() == b.size());
    CHECK(std::equal(a.begin(), a.end(), b.begin(), [](const VolPoint& x, const VolPoint& y) {
        return x.sigma == y.sigma && x.k_hat == y.k_hat && x.T == y.T && x.vol_err3 == y.vol_err3;
    }));
    CHECK(st1.attempted == 10 * 130);
    CHECK(st1.emitted == a.size());
    CHECK(st1.emitted <= st1.attempted);

    const std::string path = tmp_path("gen.csv");
    const GenStats st2 = generate_subset(s, opt, path);
    CHECK(st2.emitted == st1.emitted);
    const auto back = read_dataset_csv(path);
    REQUIRE(back.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(back[i].sigma == a[i].sigma);
        CHECK(back[i].alpha_hat == a[i].alpha_hat);
    }
    CHECK(std::filesystem::exists(path + ".json"));
    const auto side = read_json(path + ".json");
    CHECK(side["seed"] == 77);
    CHECK(side["spec"]["id"] == 2);

    opt.test_set = true;
    GenStats st3;
    generate_points(s, opt, &st3);
    CHECK(st3.attempted == 10 * 10);
    std::filesystem::remove(path);
    std::filesystem::remove(path + ".json");
}

TEST_CASE("train/validation split is disjoint, exhaustive and deterministic") {
    std::vector<VolPoint> rows(100);
    for (int i = 0; i < 100; ++i) rows[i].sigma = i;
    const auto [tr, va] = split_train_validation(rows, 0.2, 3);
    CHECK(tr.size() == 80);
    CHECK(va.size() == 20);
    std::set<double> all;
    for (const auto& r : tr) all.insert(r.sigma);
    for (const auto& r : va) all.insert(r.sigma);
    CHECK(all.size() == 100);
    const auto again = split_train_validation(rows, 0.2, 3);
    for (std::size_t i = 0; i < 20; ++i) CHECK(again.second[i].sigma == va[i].sigma);
    CHECK(split_train_validation(rows, 0.2, 4).second[0].sigma != va[0].sigma);
    CHECK_THROWS_AS(split_train_validation(rows, 1.0, 3), Error);
}

TEST_CASE("CSV reader rejects malformed input") {
    const std::string path = tmp_path("bad.csv");
    write_file_atomic(path, "alpha_hat,beta\n1,2\n");
    CHECK_THROWS_AS(read_dataset_csv(path), Error);
    write_file_atomic(path, dataset_csv_header() + "\n1,2,3,4,5,6,7\n");
    CHECK_THROWS_AS(read_dataset_csv(path), Error);
    write_file_atomic(path, dataset_csv_header() + "\n1,2,3,4,5,6,7,8\n");
    CHECK(read_dataset_csv(path).size() == 1);
    std::filesystem::remove(path);
    try {
        read_dataset_csv(path);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Io);
    }
}

TEST_CASE("subset spec JSON round trip") {
    SubsetSpec s = subset_spec(3);
    s.n_surfaces = 17;
    s.mc.n_paths = 4096;
    nlohmann::json j = s;
    const SubsetSpec t = j.get<SubsetSpec>();
    CHECK(t.n_surfaces == 17);
    CHECK(t.mc.n_paths == 4096);
    CHECK(t.date_buckets.size() == 20);
    CHECK(t.beta.lo == 0.05);
}
