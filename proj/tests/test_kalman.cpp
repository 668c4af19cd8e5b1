#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "maptrack/kalman.hpp"
#include "oracles.hpp"

using namespace maptrack;

namespace {

bool symmetric_psd(const Matrix6d& m) {
    if (((m - m.transpose()).array().abs() > 1e-9).any()) return false;
    const Eigen::SelfAdjointEigenSolver<Matrix6d> solver(m);
    return solver.eigenvalues().minCoeff() > -1e-9;
}

}  // namespace

TEST_CASE("init_state centers the detection with zero velocity") {
    const NoiseConfig noise;
    auto s = init_state(BoundingBox{0, 0, 10, 20}, noise);
    Vector6d expected;
    expected << 5, 10, 10, 20, 0, 0;
    CHECK(s.mean == expected);
    CHECK(s.smoothed_velocity == Eigen::Vector2d::Zero());

    s = init_state(BoundingBox{100, 50, 30, 60}, noise);
    expected << 115, 80, 30, 60, 0, 0;
    CHECK(s.mean == expected);
    CHECK(symmetric_psd(s.covariance));
}

TEST_CASE("predict advances position by velocity and keeps size") {
    const NoiseConfig noise;
    KalmanTrackState s = init_state(BoundingBox{0, 0, 10, 20}, noise);
    s.mean << 5, 10, 10, 20, 2, -1;
    const auto next = predict(s, noise);
    Vector6d expected;
    expected << 7, 9, 10, 20, 2, -1;
    CHECK(next.mean == expected);

    // Stationary: position unchanged, covariance trace strictly grows.
    s.mean << 5, 10, 10, 20, 0, 0;
    const auto stationary = predict(s, noise);
    CHECK(stationary.mean.head<4>() == s.mean.head<4>());
    CHECK(stationary.covariance.trace() > s.covariance.trace());
}

TEST_CASE("two unit predicts equal one predict with doubled interval in the mean") {
    NoiseConfig noise;
    KalmanTrackState s = init_state(BoundingBox{30, 40, 12, 24}, noise);
    s.mean(4) = 3.5;
    s.mean(5) = -1.25;
    const auto twice = predict(predict(s, noise), noise);
    NoiseConfig doubled = noise;
    doubled.frame_interval = 2.0;
    const auto once = predict(s, doubled);
    CHECK(twice.mean.isApprox(once.mean, 1e-12));
}

TEST_CASE("deformation ratio is detected area over predicted area") {
    CHECK(deformation_ratio(BoundingBox{0, 0, 10, 10}, BoundingBox{0, 0, 20, 10}) ==
          Catch::Approx(2.0));
    CHECK(deformation_ratio(BoundingBox{3, 4, 7, 9}, BoundingBox{3, 4, 7, 9}) ==
          Catch::Approx(1.0));
    CHECK(deformation_ratio(BoundingBox{0, 0, 10, 10}, BoundingBox{0, 0, 6.5, 10}) ==
          Catch::Approx(0.65));
}

TEST_CASE("covariance multiplier bands match the published coefficient sets") {
    const NoiseConfig noise;
    const auto normal = [&](double d) {
        return covariance_multiplier(d, TrackClass::kNormalOrTentative, noise);
    };
    const auto predicted = [&](double d) {
        return covariance_multiplier(d, TrackClass::kPredicted, noise);
    };
    CHECK(normal(1.35) == 9.0);
    CHECK(normal(0.5) == 15.0);
    CHECK(normal(1.0) == 1.0);
    CHECK(predicted(1.0) == 1.0);
    CHECK(predicted(1.25) == 3.0);
    CHECK_THROWS_AS(normal(0.0), std::invalid_argument);
    CHECK_THROWS_AS(normal(-1.0), std::invalid_argument);

    NoiseConfig frozen = noise;
    frozen.adaptive_covariance = false;
    CHECK(covariance_multiplier(0.5, TrackClass::kNormalOrTentative, frozen) == 1.0);
}

TEST_CASE("covariance multiplier agrees with the interval table on random input") {
    const NoiseConfig noise;
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> dist(0.01, 2.5);
    for (int k = 0; k < 1000; ++k) {
        const double d = dist(rng);
        CHECK(covariance_multiplier(d, TrackClass::kNormalOrTentative, noise) ==
              oracles::band_table(d, 15, 9, 6));
        CHECK(covariance_multiplier(d, TrackClass::kPredicted, noise) ==
              oracles::band_table(d, 9, 6, 3));
    }
}

TEST_CASE("smooth velocity is the momentum mix of previous and instantaneous") {
    NoiseConfig noise;  // beta = 0.9
    const Eigen::Vector2d v = smooth_velocity({1, 0}, {0, 0}, {3, 0}, noise);
    CHECK(v(0) == Catch::Approx(1.2));
    CHECK(v(1) == Catch::Approx(0.0));

    // Constant displacement converges geometrically to the displacement rate.
    Eigen::Vector2d smoothed(0, 0);
    Eigen::Vector2d center(0, 0);
    for (int k = 1; k <= 200; ++k) {
        const Eigen::Vector2d next = center + Eigen::Vector2d(2, 0);
        smoothed = smooth_velocity(smoothed, center, next, noise);
        center = next;
        CHECK(smoothed(0) == Catch::Approx(2.0 * (1.0 - std::pow(0.9, k))).margin(1e-12));
    }
    CHECK(smoothed(0) == Catch::Approx(2.0).epsilon(1e-6));

    // Momentum disabled reduces to the raw displacement rate.
    noise.momentum_beta = 0.0;
    const Eigen::Vector2d raw = smooth_velocity({5, 5}, {0, 0}, {1, 1}, noise);
    CHECK(raw(0) == Catch::Approx(1.0));
    CHECK(raw(1) == Catch::Approx(1.0));
}

TEST_CASE("smooth velocity norm is bounded by its inputs") {
    const NoiseConfig noise;
    std::mt19937 rng(43);
    std::uniform_real_distribution<double> dist(-20.0, 20.0);
    for (int k = 0; k < 1000; ++k) {
        const Eigen::Vector2d prev(dist(rng), dist(rng));
        const Eigen::Vector2d c0(dist(rng), dist(rng));
        const Eigen::Vector2d c1(dist(rng), dist(rng));
        const Eigen::Vector2d v = smooth_velocity(prev, c0, c1, noise);
        const double instantaneous = (c1 - c0).norm();
        CHECK(v.norm() <= std::max(prev.norm(), instantaneous) + 1e-9);
    }
}

TEST_CASE("update with measurement equal to prediction leaves position in place") {
    const NoiseConfig noise;
    KalmanTrackState s = init_state(BoundingBox{100, 100, 20, 40}, noise);
    s = predict(s, noise);
    const BoundingBox measurement = s.box();
    const auto posterior = update(s, measurement, 1.0, noise);
    CHECK(posterior.mean.head<4>().isApprox(s.mean.head<4>(), 1e-12));
    CHECK(symmetric_psd(posterior.covariance));
}

TEST_CASE("larger multiplier keeps the posterior closer to the prediction") {
    const NoiseConfig noise;
    KalmanTrackState s = init_state(BoundingBox{100, 100, 20, 40}, noise);
    s = predict(s, noise);
    const BoundingBox offset_measurement{s.box().left + 6, s.box().top - 4, 20, 40};

    const auto with_1 = update(s, offset_measurement, 1.0, noise);
    const auto with_15 = update(s, offset_measurement, 15.0, noise);
    const double dev_1 = (with_1.mean.head<2>() - s.mean.head<2>()).norm();
    const double dev_15 = (with_15.mean.head<2>() - s.mean.head<2>()).norm();
    CHECK(dev_15 < dev_1);

    // Monotone non-increasing deviation over a multiplier sweep.
    double prev = 1e18;
    for (double multiplier : {1.0, 3.0, 6.0, 9.0, 15.0, 40.0}) {
        const auto posterior = update(s, offset_measurement, multiplier, noise);
        const double dev = (posterior.mean.head<2>() - s.mean.head<2>()).norm();
        CHECK(dev <= prev + 1e-12);
        prev = dev;
    }
}

TEST_CASE("update contracts covariance of measured dimensions") {
    const NoiseConfig noise;
    KalmanTrackState s = init_state(BoundingBox{10, 10, 30, 60}, noise);
    s = predict(s, noise);
    const auto posterior = update(s, s.box(), 1.0, noise);
    CHECK(posterior.covariance.topLeftCorner<4, 4>().trace() <
          s.covariance.topLeftCorner<4, 4>().trace());
}

TEST_CASE("update overwrites velocity with the momentum measurement") {
    NoiseConfig noise;
    KalmanTrackState s = init_state(BoundingBox{0, 0, 10, 20}, noise);
    // One predict with zero velocity then a detection displaced by (4, 2):
    // instantaneous velocity (4, 2), smoothed = 0.1 * instantaneous.
    s = predict(s, noise);
    const auto posterior = update(s, BoundingBox{4, 2, 10, 20}, 1.0, noise);
    CHECK(posterior.mean(4) == Catch::Approx(0.4));
    CHECK(posterior.mean(5) == Catch::Approx(0.2));
    CHECK(posterior.smoothed_velocity(0) == Catch::Approx(0.4));
}

TEST_CASE("predict/update loop locks onto a constant-velocity target") {
    const NoiseConfig noise;
    const Eigen::Vector2d velocity(1.0, 0.5);
    const double w = 24, h = 48;
    Eigen::Vector2d center(100, 100);
    KalmanTrackState s = init_state(BoundingBox::from_center(center(0), center(1), w, h), noise);
    double final_error = 1e18;
    for (int frame = 1; frame <= 10; ++frame) {
        center += velocity;
        s = predict(s, noise);
        s = update(s, BoundingBox::from_center(center(0), center(1), w, h), 1.0, noise);
        final_error = (s.mean.head<2>() - center).norm();
    }
    CHECK(final_error < 0.5);
}

TEST_CASE("a corrupt state surfaces as a singular-innovation error") {
    const NoiseConfig noise;
    KalmanTrackState s = init_state(BoundingBox{10, 10, 30, 60}, noise);
    s.covariance = -1e6 * Matrix6d::Identity();  // not a valid covariance
    CHECK_THROWS_AS(update(s, BoundingBox{10, 10, 30, 60}, 1.0, noise), std::runtime_error);
}

TEST_CASE("size stays positive over random predict/update cycles") {
    const NoiseConfig noise;
    std::mt19937 rng(47);
    std::uniform_real_distribution<double> jump(-30.0, 30.0);
    std::uniform_real_distribution<double> size(1.0, 80.0);
    KalmanTrackState s = init_state(BoundingBox{50, 50, 20, 40}, noise);
    for (int k = 0; k < 10000; ++k) {
        s = predict(s, noise);
        const BoundingBox measurement{s.mean(0) + jump(rng), s.mean(1) + jump(rng), size(rng),
                                      size(rng)};
        const double multiplier =
            oracles::band_table(deformation_ratio(s.box(), measurement), 15, 9, 6);
        s = update(s, measurement, multiplier, noise);
        REQUIRE(s.mean(2) > 0.0);
        REQUIRE(s.mean(3) > 0.0);
        REQUIRE(s.covariance.diagonal().minCoeff() >= 0.0);
    }
}
