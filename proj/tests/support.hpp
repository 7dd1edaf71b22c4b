#pragma once

// Reference computations written independently of the library, plus
// small fixtures shared by the test files.

#include "lmj/scenarios.hpp"

#include <complex>
#include <vector>

namespace lmj::testing {

using Cplx = std::complex<double>;

// Planar chain positions with complex arithmetic: joint i sits at the
// accumulated tip of links 0..i-1.
struct ChainOracle {
  std::vector<Cplx> joints;  // joint axis positions
  std::vector<double> headings;

  ChainOracle(const ChainModel& chain, const VecX& q) {
    Cplx p(chain.base.x, chain.base.y);
    double phi = chain.base.theta;
    for (std::size_t i = 0; i < chain.dof(); ++i) {
      phi += q[static_cast<Eigen::Index>(i)];
      joints.push_back(p);
      headings.push_back(phi);
      p += std::polar(chain.link_lengths[i], phi);
    }
  }
  Cplx along(std::size_t link, double s) const { return joints[link] + std::polar(s, headings[link]); }
  Cplx point(const ChainModel& chain, std::size_t idx) const {
    const auto& ip = chain.interaction_points[idx];
    return along(ip.link, ip.offset);
  }
};

inline VecX random_config(const ChainModel& chain, const FailureSpec& failure, Rng& rng) {
  VecX q(static_cast<Eigen::Index>(chain.dof()));
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    const auto it = failure.locks.find(i);
    q[static_cast<Eigen::Index>(i)] = it != failure.locks.end()
                                          ? it->second
                                          : uniform(rng, chain.joint_limits[i].lo, chain.joint_limits[i].hi);
  }
  return q;
}

inline VecX random_vector(std::size_t n, double scale, Rng& rng) {
  VecX v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = uniform(rng, -scale, scale);
  return v;
}

/// Two-link arm l = (1, 1) in a horizontal plane with unit masses.
inline ChainModel unit_two_link(bool with_gravity = false) {
  ChainModel c = two_link_chain(1.0, 1.0);
  if (!with_gravity) c.gravity = Vec2::Zero();
  return c;
}

/// Single horizontal link in a vertical plane: l = 1, m = 1, rod inertia.
inline ChainModel single_link(double gravity = 0.0) {
  ChainModel c;
  c.link_lengths = {1.0};
  c.link_masses = {1.0};
  c.link_inertias = {1.0 / 12.0};
  c.joint_limits = {{-kPi, kPi}};
  c.velocity_limits = {10.0};
  c.torque_limits = {100.0};
  c.friction = {{0.0, 0.0}};
  c.interaction_points = {{"a", 0, 0.25}, {"b", 0, 0.5}, {std::string(kEndEffector), 0, 1.0}};
  c.gravity = {0.0, -gravity};
  return c;
}

// Kinetic plus potential energy from the oracle geometry; M comes from
// the link parameters and CoM velocities by finite differences of position.
inline double potential_energy(const ChainModel& chain, const VecX& q) {
  ChainOracle o(chain, q);
  double pe = 0.0;
  for (std::size_t b = 0; b < chain.dof(); ++b) {
    const Cplx c = o.along(b, 0.5 * chain.link_lengths[b]);
    pe -= chain.link_masses[b] * (chain.gravity.x() * c.real() + chain.gravity.y() * c.imag());
  }
  return pe;
}

// Kinetic energy from the link CoM velocities, differentiated by hand:
// d/dt of l e^{i phi} is i phi_dot l e^{i phi}.
inline double kinetic_energy(const ChainModel& chain, const VecX& q, const VecX& qd) {
  ChainOracle o(chain, q);
  const Cplx I(0.0, 1.0);
  double ke = 0.0;
  double omega = 0.0;
  Cplx v_joint(0.0, 0.0);  // velocity of the current link's proximal joint
  for (std::size_t k = 0; k < chain.dof(); ++k) {
    omega += qd[static_cast<Eigen::Index>(k)];
    const double l = chain.link_lengths[k];
    const Cplx v_com = v_joint + I * omega * std::polar(0.5 * l, o.headings[k]);
    ke += 0.5 * chain.link_masses[k] * std::norm(v_com) + 0.5 * chain.link_inertias[k] * omega * omega;
    v_joint += I * omega * std::polar(l, o.headings[k]);
  }
  return ke;
}

}  // namespace lmj::testing
