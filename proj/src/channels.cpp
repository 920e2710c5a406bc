#include "cvtele/channels.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace cvtele {

void FiberModel::validate() const {
  if (!(loss_db_per_km >= 0.0) || !(eps_slope >= 0.0) || !(eps_intercept >= 0.0))
    throw std::invalid_argument("fiber model constants must be non-negative");
}

void SatelliteModel::validate() const {
  if (!(altitude_km > 0.0) || !(ground_height_km >= 0.0) || ground_height_km >= altitude_km)
    throw std::invalid_argument("satellite altitude must exceed the ground height");
  if (anchor_points.size() < 2) throw std::invalid_argument("satellite model needs at least two anchor points");
  for (std::size_t i = 0; i < anchor_points.size(); ++i) {
    const auto [L, T] = anchor_points[i];
    if (!(T > 0.0 && T <= 1.0)) throw std::invalid_argument("anchor transmissivity must lie in (0, 1]");
    if (i > 0 && !(L > anchor_points[i - 1].first && T < anchor_points[i - 1].second))
      throw std::invalid_argument("anchor distances must increase and transmissivities decrease");
  }
  if (!(eps_range.first >= 0.0 && eps_range.second >= 0.0))
    throw std::invalid_argument("satellite excess noise must be non-negative");
}

ChannelPoint fiber_channel(double L_km, const FiberModel& m) {
  m.validate();
  if (!(L_km > 0.0)) throw std::invalid_argument("fiber length must be positive");
  ChannelPoint p;
  p.distance_km = L_km;
  p.params.T = std::pow(10.0, -m.loss_db_per_km * L_km / 10.0);
  p.params.eps = m.eps_slope * L_km + m.eps_intercept;
  return p;
}

ChannelPoint satellite_channel(double L_km, const SatelliteModel& m) {
  m.validate();
  const auto& a = m.anchor_points;
  const double L0 = a.front().first, L1 = a.back().first;
  if (!(L_km >= L0 && L_km <= L1)) {
    std::ostringstream os;
    os << "satellite range " << L_km << " km is outside the anchored span [" << L0 << ", " << L1 << "]";
    throw std::out_of_range(os.str());
  }
  ChannelPoint p;
  p.distance_km = L_km;
  std::size_t k = 1;
  while (k + 1 < a.size() && L_km > a[k].first) ++k;
  const auto [La, Ta] = a[k - 1];
  const auto [Lb, Tb] = a[k];
  if (L_km == La) {
    p.params.T = Ta;
  } else if (L_km == Lb) {
    p.params.T = Tb;
  } else {
    const double u = (L_km - La) / (Lb - La);
    p.params.T = std::exp((1.0 - u) * std::log(Ta) + u * std::log(Tb));
  }
  const double v = (L_km - L0) / (L1 - L0);
  p.params.eps = L_km == L1 ? m.eps_range.second : (1.0 - v) * m.eps_range.first + v * m.eps_range.second;
  return p;
}

double zenith_to_range(double zenith_deg, const SatelliteModel& m) {
  if (!(zenith_deg >= 0.0 && zenith_deg < 90.0)) throw std::invalid_argument("zenith angle must lie in [0, 90)");
  const double H = m.altitude_km - m.ground_height_km;
  const double Re = kEarthRadiusKm + m.ground_height_km;
  const double c = std::cos(zenith_deg * std::numbers::pi / 180.0);
  return std::sqrt(Re * Re * c * c + H * H + 2.0 * Re * H) - Re * c;
}

double fading_average(const FadingModel& model, double mean_T, const std::function<double(double)>& f) {
  double sum = 0.0, wsum = 0.0;
  for (const FadingNode& n : model.distribution(mean_T)) {
    if (!(n.T > 0.0 && n.T <= 1.0) || !(n.weight >= 0.0))
      throw std::invalid_argument("fading node outside (0, 1] or with negative weight");
    sum += n.weight * f(n.T);
    wsum += n.weight;
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw std::invalid_argument("fading weights must sum to one");
  return sum;
}

}  // namespace cvtele
