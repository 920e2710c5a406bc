#pragma once

// Fiber and satellite-to-ground links mapped to (T, eps) channel points.

#include <functional>
#include <utility>
#include <vector>

#include "cvtele/resource.hpp"

namespace cvtele {

struct FiberModel {
  double loss_db_per_km = 0.16;
  double eps_slope = 5.3e-5;  // per km
  double eps_intercept = 6e-4;
  void validate() const;
};

struct SatelliteModel {
  double altitude_km = 500.0;
  double ground_height_km = 0.0;
  double r_sat_cm = 15.0;
  double r_gs_cm = 50.0;
  std::vector<std::pair<double, double>> anchor_points{{500.0, 0.06}, {1460.0, 0.002}};  // (L km, mean T)
  std::pair<double, double> eps_range{0.014, 0.015};
  void validate() const;
};

struct ChannelPoint {
  double distance_km = 0.0;
  ChannelParams params;
};

inline constexpr double kEarthRadiusKm = 6371.0;

/// T = 10^(-loss L / 10), eps = slope L + intercept.
ChannelPoint fiber_channel(double L_km, const FiberModel& m = {});

/// Log-linear interpolation of T between anchors; eps linear over the anchored
/// span. Throws std::out_of_range outside the anchors.
ChannelPoint satellite_channel(double L_km, const SatelliteModel& m = {});

/// Slant range on a spherical Earth for a satellite at the model altitude.
double zenith_to_range(double zenith_deg, const SatelliteModel& m = {});

struct FadingNode {
  double T = 1.0;
  double weight = 1.0;
};

/// Distribution of the instantaneous transmissivity around a mean value,
/// given as quadrature nodes with weights summing to one.
class FadingModel {
 public:
  virtual ~FadingModel() = default;
  virtual std::vector<FadingNode> distribution(double mean_T) const = 0;
};

class PointMassFading final : public FadingModel {
 public:
  std::vector<FadingNode> distribution(double mean_T) const override { return {{mean_T, 1.0}}; }
};

/// E_T[f(T)] over the fading distribution.
double fading_average(const FadingModel& model, double mean_T, const std::function<double(double)>& f);

}  // namespace cvtele
