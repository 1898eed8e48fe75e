#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>

#include "ctperf/progression.hpp"
#include "doctest.h"
#include "oracle.hpp"
#include "test_helpers.hpp"

using namespace ctperf;
using doctest::Approx;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Volume3<double> field(std::vector<double> cbf) {
    Volume3<double> v({static_cast<int>(cbf.size()), 1, 1}, 0.0);
    v.data = std::move(cbf);
    return v;
}

Mask3 core_at(const Volume3<double>& cbf, double t,
              const std::optional<TreatmentEvent>& event = std::nullopt,
              double normal = 50.0) {
    Volume3<double> normal_map(cbf.shape, normal);
    return evolve(cbf, SurvivalModel{}, t, event, normal_map).core_mask;
}

}  // namespace

TEST_SUITE_BEGIN("progression");

TEST_CASE("survival budget anchors and curve") {
    CHECK(survival_time(20.0) == kInf);
    CHECK(survival_time(15.0) == kInf);  // the upper knee is already immortal
    CHECK(survival_time(5.0) == Approx(30.0));
    CHECK(survival_time(10.0) == Approx(30.0));
    // halfway up the knee in log space: 30 * sqrt(150/30)
    CHECK(survival_time(12.5) == Approx(67.08203932499369).epsilon(1e-12));
    CHECK(survival_time(14.999999) == Approx(150.0).epsilon(1e-4));
    for (double cbf = 10.0; cbf < 15.0; cbf += 0.25)
        CHECK(survival_time(cbf) == Approx(oracle::survival_minutes(cbf)).epsilon(1e-12));
    // non-decreasing in flow
    double prev = 0.0;
    for (double cbf = 0.0; cbf < 16.0; cbf += 0.1) {
        const double t = survival_time(cbf);
        CHECK(t >= prev);
        prev = t;
    }
    CHECK_THROWS_AS(survival_time(-1.0), std::invalid_argument);
}

TEST_CASE("survival model validation") {
    CHECK_THROWS_AS(survival_time(5.0, {15.0, 15.0, 30.0, 150.0}), std::invalid_argument);
    CHECK_THROWS_AS(survival_time(5.0, {15.0, 10.0, 0.0, 150.0}), std::invalid_argument);
    CHECK_THROWS_AS(survival_time(5.0, {15.0, 10.0, 150.0, 30.0}), std::invalid_argument);
    // a custom but consistent model works
    CHECK(survival_time(5.0, {20.0, 10.0, 60.0, 240.0}) == Approx(60.0));
}

TEST_CASE("reperfusion fraction table") {
    auto f = default_reperfusion_fractions();
    CHECK(f.at(Mtici::grade0) == 0.0);
    CHECK(f.at(Mtici::grade1) == 0.1);
    CHECK(f.at(Mtici::grade2a) == 0.4);
    CHECK(f.at(Mtici::grade2b) == 0.7);
    CHECK(f.at(Mtici::grade2c) == 0.9);
    CHECK(f.at(Mtici::grade3) == 1.0);

    TreatmentEvent ok{60.0, Mtici::grade2b};
    CHECK_NOTHROW(validate_event(ok));
    TreatmentEvent negative{-1.0, Mtici::grade3};
    CHECK_THROWS_AS(validate_event(negative), std::invalid_argument);
    TreatmentEvent missing = ok;
    missing.reperfusion_fraction.erase(Mtici::grade2c);
    CHECK_THROWS_AS(validate_event(missing), std::invalid_argument);
    TreatmentEvent out_of_range = ok;
    out_of_range.reperfusion_fraction[Mtici::grade3] = 1.5;
    CHECK_THROWS_AS(validate_event(out_of_range), std::invalid_argument);
    TreatmentEvent decreasing = ok;
    decreasing.reperfusion_fraction[Mtici::grade2b] = 0.2;  // below grade2a
    CHECK_THROWS_AS(validate_event(decreasing), std::invalid_argument);
}

TEST_CASE("uniform critical flow dies exactly on schedule") {
    auto cbf = field({5.0, 5.0, 5.0});
    CHECK(th::count(core_at(cbf, 0.0)) == 0);
    CHECK(th::count(core_at(cbf, 29.9)) == 0);
    CHECK(th::count(core_at(cbf, 30.0)) == 3);  // budget spent counts as dead
    CHECK(th::count(core_at(cbf, 31.0)) == 3);
}

TEST_CASE("voxels die in flow order") {
    auto cbf = field({5.0, 12.5, 14.0, 20.0});
    auto dead = [&](double t) {
        auto m = core_at(cbf, t);
        return std::vector<int>{m.data[0], m.data[1], m.data[2], m.data[3]};
    };
    CHECK(dead(29.0) == std::vector<int>{0, 0, 0, 0});
    CHECK(dead(30.0) == std::vector<int>{1, 0, 0, 0});
    CHECK(dead(67.0) == std::vector<int>{1, 0, 0, 0});
    CHECK(dead(67.1) == std::vector<int>{1, 1, 0, 0});
    const double t14 = oracle::survival_minutes(14.0);
    CHECK(dead(t14 - 0.5) == std::vector<int>{1, 1, 0, 0});
    CHECK(dead(t14 + 0.5) == std::vector<int>{1, 1, 1, 0});
    CHECK(dead(100000.0) == std::vector<int>{1, 1, 1, 0});
}

TEST_CASE("full recanalization halts progression") {
    auto cbf = field({5.0, 5.0});
    TreatmentEvent event{10.0, Mtici::grade3};
    CHECK(th::count(core_at(cbf, 120.0, event)) == 0);
    CHECK(th::count(core_at(cbf, 100000.0, event)) == 0);
    // a futile recanalization changes nothing
    TreatmentEvent futile{10.0, Mtici::grade0};
    CHECK(th::count(core_at(cbf, 29.9, futile)) == 0);
    CHECK(th::count(core_at(cbf, 30.0, futile)) == 2);
}

TEST_CASE("partial reperfusion stretches the remaining budget") {
    // flow 11 dies at T(11); treated at 20 min with grade 1 the flow becomes
    // 14.9 and the unspent budget share drains at the slower rate
    const double t_base = oracle::survival_minutes(11.0);
    const double restored = 11.0 + 0.1 * (50.0 - 11.0);
    const double t_restored = oracle::survival_minutes(restored);
    const double death = 20.0 + (1.0 - 20.0 / t_base) * t_restored;
    auto cbf = field({11.0});
    TreatmentEvent event{20.0, Mtici::grade1};
    CHECK(th::count(core_at(cbf, death - 1.0, event)) == 0);
    CHECK(th::count(core_at(cbf, death + 1.0, event)) == 1);
    // sanity on the arithmetic itself
    CHECK(t_base == Approx(41.391854191064875));
    CHECK(restored == Approx(14.9));
}

TEST_CASE("dead tissue stays dead through recanalization") {
    auto cbf = field({12.0});
    const double t_death = oracle::survival_minutes(12.0);  // about 57.1 min
    TreatmentEvent late{60.0, Mtici::grade3};
    REQUIRE(t_death < 60.0);
    CHECK(th::count(core_at(cbf, 120.0, late)) == 1);
    TreatmentEvent in_time{50.0, Mtici::grade3};
    CHECK(th::count(core_at(cbf, 120.0, in_time)) == 0);
}

TEST_CASE("events cannot postdate the evaluation time") {
    auto cbf = field({5.0});
    Volume3<double> normal(cbf.shape, 50.0);
    TreatmentEvent event{50.0, Mtici::grade3};
    CHECK_THROWS_AS(evolve(cbf, SurvivalModel{}, 40.0, event, normal),
                    std::invalid_argument);
    CHECK_THROWS_AS(progression_trajectory(cbf, SurvivalModel{}, 40.0, 10.0, event,
                                           normal, {2.0, 2.0, 2.0}),
                    std::invalid_argument);
}

TEST_CASE("final infarct composition") {
    Mask3 core({3, 1, 1}, 0), lesion({3, 1, 1}, 0);
    core.at(0, 0, 0) = 1;
    lesion.at(1, 0, 0) = 1;
    lesion.at(2, 0, 0) = 1;
    auto reperfused = final_infarct(core, lesion, true);
    CHECK(reperfused.data == core.data);
    auto untreated = final_infarct(core, lesion, false);
    CHECK(th::count(untreated) == 3);  // union keeps stray core voxels
    CHECK(th::subset(reperfused, untreated));
    Mask3 none({3, 1, 1}, 0);
    CHECK(th::count(final_infarct(none, none, false)) == 0);
}

TEST_CASE("trajectory sampling ladder") {
    CHECK(trajectory_times(120.0, 10.0) ==
          std::vector<double>{0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120});
    CHECK(trajectory_times(0.0, 10.0) == std::vector<double>{0.0});
    CHECK(trajectory_times(25.0, 10.0) == std::vector<double>{0, 10, 20, 25});
    CHECK(trajectory_times(30.0, 10.0) == std::vector<double>{0, 10, 20, 30});
    CHECK(trajectory_times(25.0, 40.0) == std::vector<double>{0, 25});
    CHECK_THROWS_AS(trajectory_times(10.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(trajectory_times(-5.0, 10.0), std::invalid_argument);
}

TEST_CASE("trajectories grow and treatment flattens them") {
    auto cbf = field({5.0, 12.5});
    Volume3<double> normal(cbf.shape, 50.0);
    auto rows = progression_trajectory(cbf, SurvivalModel{}, 120.0, 30.0, std::nullopt,
                                       normal, {2.0, 2.0, 2.0});
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].core_ml == 0.0);
    CHECK(rows[1].core_ml == Approx(0.008));  // the 5 ml/100g/min voxel at 30 min
    CHECK(rows[3].core_ml == Approx(0.016));  // both dead by 90 min
    for (std::size_t i = 1; i < rows.size(); ++i)
        CHECK(rows[i].core_ml >= rows[i - 1].core_ml);

    TreatmentEvent event{10.0, Mtici::grade3};
    auto treated = progression_trajectory(cbf, SurvivalModel{}, 120.0, 30.0, event,
                                          normal, {2.0, 2.0, 2.0});
    for (const auto& row : treated) CHECK(row.core_ml == 0.0);
}

TEST_SUITE_END();
