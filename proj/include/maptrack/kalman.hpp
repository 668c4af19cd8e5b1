#pragma once

#include <Eigen/Dense>
#include <array>
#include <stdexcept>

#include "maptrack/geometry.hpp"

namespace maptrack {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Which coefficient set the adaptive measurement covariance uses.
enum class TrackClass { kNormalOrTentative, kPredicted };

struct CovarianceCoefficients {
    double coef1;  // strongest deformation
    double coef2;
    double coef3;  // mildest deformation
};

struct NoiseConfig {
    // Measurement stds for (x, y, w, h), as fractions of the current box height.
    std::array<double, 4> measurement_std_weights{1.0 / 20, 1.0 / 20, 1.0 / 20, 1.0 / 20};
    // Per-frame process stds for (x, y, w, h, vx, vy), as fractions of box height.
    std::array<double, 6> process_std_weights{1.0 / 20, 1.0 / 20, 1.0 / 20,
                                              1.0 / 20, 1.0 / 160, 1.0 / 160};
    CovarianceCoefficients normal_coefs{15.0, 9.0, 6.0};
    CovarianceCoefficients predicted_coefs{9.0, 6.0, 3.0};
    double momentum_beta = 0.9;   // in [0, 1)
    double frame_interval = 1.0;  // frames
    // When false the measurement covariance is never scaled (multiplier = 1).
    bool adaptive_covariance = true;
};

/// State of one tracked box: mean (cx, cy, w, h, vx, vy), covariance, and the
/// momentum-smoothed velocity measurement carried between frames.
struct KalmanTrackState {
    Vector6d mean = Vector6d::Zero();
    Matrix6d covariance = Matrix6d::Zero();
    Eigen::Vector2d smoothed_velocity = Eigen::Vector2d::Zero();

    BoundingBox box() const {
        return BoundingBox::from_center(mean(0), mean(1), mean(2), mean(3));
    }
};

namespace detail {
inline constexpr double kMinBoxSide = 1e-2;  // px; keeps w, h positive
}

/// Fresh state centred on a detection with zero velocity. Initial stds are
/// proportional to box height: 2h/20 for position, h/10 for size, 10h/20
/// for velocity.
inline KalmanTrackState init_state(const BoundingBox& detection_box, const NoiseConfig&) {
    KalmanTrackState s;
    s.mean << detection_box.center_x(), detection_box.center_y(),
        detection_box.width, detection_box.height, 0.0, 0.0;
    const double h = detection_box.height;
    Vector6d std;
    std << 2.0 * h / 20, 2.0 * h / 20, h / 10, h / 10, 10.0 * h / 20, 10.0 * h / 20;
    s.covariance = std.array().square().matrix().asDiagonal();
    return s;
}

/// Constant-velocity prediction: position advances by velocity, size stays put
/// in the mean, covariance grows by process noise scaled to the current height.
inline KalmanTrackState predict(const KalmanTrackState& state, const NoiseConfig& noise) {
    const double dt = noise.frame_interval;
    Matrix6d transition = Matrix6d::Identity();
    transition(0, 4) = dt;
    transition(1, 5) = dt;

    const double h = state.mean(3);
    Vector6d q;
    for (int i = 0; i < 6; ++i) q(i) = noise.process_std_weights[i] * h;

    KalmanTrackState out = state;
    out.mean = transition * state.mean;
    out.covariance = transition * state.covariance * transition.transpose();
    out.covariance += Matrix6d(q.array().square().matrix().asDiagonal());
    return out;
}

/// Degree of deformation: detected box area over predicted box area.
inline double deformation_ratio(const BoundingBox& predicted_box, const BoundingBox& detected_box) {
    return detected_box.area() / predicted_box.area();
}

/// Piecewise measurement-covariance multiplier over the deformation ratio.
/// The undeformed band [0.8, 1.2] leaves the measurement covariance untouched;
/// boundary points fall into the milder band.
inline double covariance_multiplier(double d, TrackClass track_class, const NoiseConfig& noise) {
    if (!(d > 0.0)) throw std::invalid_argument("deformation ratio must be positive");
    if (!noise.adaptive_covariance) return 1.0;
    const CovarianceCoefficients& c =
        track_class == TrackClass::kPredicted ? noise.predicted_coefs : noise.normal_coefs;
    if (d < 0.6) return c.coef1;
    if (d < 0.7) return c.coef2;
    if (d < 0.8) return c.coef3;
    if (d <= 1.2) return 1.0;
    if (d <= 1.3) return c.coef3;
    if (d <= 1.4) return c.coef2;
    return c.coef1;
}

/// Momentum-smoothed velocity measurement:
/// v = beta * prev + (1 - beta) * (det_center - prev_center) / dt.
inline Eigen::Vector2d smooth_velocity(const Eigen::Vector2d& prev_smoothed,
                                       const Eigen::Vector2d& prev_center,
                                       const Eigen::Vector2d& det_center,
                                       const NoiseConfig& noise) {
    const Eigen::Vector2d instantaneous = (det_center - prev_center) / noise.frame_interval;
    return noise.momentum_beta * prev_smoothed + (1.0 - noise.momentum_beta) * instantaneous;
}

/// Measurement update of (x, y, w, h) with covariance multiplier applied to R.
/// Velocity is not part of the measurement model; the posterior mean velocity
/// is overwritten with the momentum-smoothed displacement measurement.
/// Expects `state` to have gone through predict() this frame.
inline KalmanTrackState update(const KalmanTrackState& state, const BoundingBox& detected_box,
                               double multiplier, const NoiseConfig& noise) {
    using Matrix4d = Eigen::Matrix4d;
    using Matrix46 = Eigen::Matrix<double, 4, 6>;

    Matrix46 observation = Matrix46::Zero();
    observation(0, 0) = observation(1, 1) = observation(2, 2) = observation(3, 3) = 1.0;

    const double h = state.mean(3);
    Eigen::Vector4d r_std;
    for (int i = 0; i < 4; ++i) r_std(i) = noise.measurement_std_weights[i] * h;
    const Matrix4d measurement_cov =
        multiplier * Matrix4d(r_std.array().square().matrix().asDiagonal());

    Eigen::Vector4d z;
    z << detected_box.center_x(), detected_box.center_y(), detected_box.width,
        detected_box.height;

    const Matrix4d innovation_cov =
        observation * state.covariance * observation.transpose() + measurement_cov;
    const Eigen::LLT<Matrix4d> llt(innovation_cov);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("singular innovation covariance in Kalman update");
    }
    const Eigen::Matrix<double, 6, 4> gain =
        llt.solve(observation * state.covariance).transpose();

    KalmanTrackState out = state;
    out.mean = state.mean + gain * (z - observation * state.mean);

    // Joseph form keeps the posterior covariance symmetric PSD.
    const Matrix6d identity_minus_kh = Matrix6d::Identity() - gain * observation;
    out.covariance = identity_minus_kh * state.covariance * identity_minus_kh.transpose() +
                     gain * measurement_cov * gain.transpose();
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();

    const double dt = noise.frame_interval;
    const Eigen::Vector2d prev_center(state.mean(0) - state.mean(4) * dt,
                                      state.mean(1) - state.mean(5) * dt);
    const Eigen::Vector2d det_center(detected_box.center_x(), detected_box.center_y());
    const Eigen::Vector2d v =
        smooth_velocity(state.smoothed_velocity, prev_center, det_center, noise);
    out.mean(4) = v(0);
    out.mean(5) = v(1);
    out.smoothed_velocity = v;

    out.mean(2) = std::max(out.mean(2), detail::kMinBoxSide);
    out.mean(3) = std::max(out.mean(3), detail::kMinBoxSide);
    return out;
}

}  // namespace maptrack
