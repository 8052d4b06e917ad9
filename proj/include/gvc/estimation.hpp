#pragma once

#include "gvc/geometry.hpp"

#include <map>
#include <span>
#include <stdexcept>

namespace gvc {

class InconsistentMeasurement : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A position fix of `subject`; the true position lies in
/// position + noise_bound (noise_bound centered at the origin).
struct Measurement {
  int subject = -1;
  Vector position;
  Ellipsoid noise_bound;
};

/// Set a measurement guarantees to contain the subject.
Ellipsoid measurement_set(const Measurement& m);

/// One agent's set-valued estimates of every neighbor it has seen.
struct EstimateBank {
  int owner = -1;
  std::map<int, Ellipsoid> estimates;
  /// Physical extent plus policy margin, centered at the origin.
  Ellipsoid margin;

  EstimateBank(int owner, Ellipsoid margin);
};

/// Grows an estimate by one step of neighbor motion.
Ellipsoid predict(const Ellipsoid& e, double motion_bound);

/// Bounds prior ∩ measurement_set(meas) with the member of
///   Q(rho) = rho Q_prior + (1 - rho) Q_meas     (Q = shape^{-1})
/// of smallest trace. rho is picked on a 64-point grid and refined by
/// golden-section search.
Ellipsoid fuse(const Ellipsoid& prior, const Measurement& meas);

/// Bound on e + margin with e's center kept.
Ellipsoid apply_margin(const Ellipsoid& e, const Ellipsoid& margin);

/// Trace of the fused shape for one rho, or a negative value when that
/// family member is empty (intersection certified empty).
double fusion_trace(const Ellipsoid& prior, const Ellipsoid& meas_set, double rho);

/// predict every estimate by its neighbor's motion bound, then fuse (or
/// initialize from) this tick's measurements. Neighbors without a
/// measurement are predicted only.
template <typename MotionBound>
void update_bank(EstimateBank& bank, std::span<const Measurement> measurements, MotionBound&& motion_bound) {
  for (auto& [id, e] : bank.estimates) e = predict(e, motion_bound(id));
  for (const auto& m : measurements) {
    if (m.subject == bank.owner) throw InvalidArgument("update_bank: self-measurement");
    auto it = bank.estimates.find(m.subject);
    if (it == bank.estimates.end()) {
      bank.estimates.emplace(m.subject, measurement_set(m));
      continue;
    }
    try {
      it->second = fuse(it->second, m);
    } catch (const InconsistentMeasurement&) {
      it->second = measurement_set(m);
    }
  }
}

}  // namespace gvc
