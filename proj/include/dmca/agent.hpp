#pragma once

#include <cstdint>

#include "dmca/geom.hpp"

namespace dmca {

using AgentId = std::int32_t;

/// Full kinematic + intent state of one disk robot.
///
/// The observable part (p, v, r) is what any nearby robot can sense; the
/// hidden part (g, v_pref, psi) is private intent, obtainable only through a
/// granted communication link.
struct AgentState {
    Vec2 p;                ///< position (m)
    Vec2 v;                ///< velocity (m/s)
    double psi = 0.0;      ///< heading (rad), wrapped to (-pi, pi]
    double r = 0.2;        ///< radius (m), > 0
    double v_pref = 1.0;   ///< preferred speed (m/s), > 0
    Vec2 g;                ///< goal (m)
    AgentId id = 0;
};

/// Ego agent's own 4-vector input: [d_goal, v_pref, psi_rel, r].
struct EgoInput {
    double d_goal = 0.0;   ///< distance to own goal (m)
    double v_pref = 0.0;
    double psi_rel = 0.0;  ///< heading relative to the frame x-axis (rad)
    double r = 0.0;
};

/// One neighbor's observable 7-vector in the ego frame:
/// [p_rel.x, p_rel.y, v_rel.x, v_rel.y, r_j, d_a, r_sum].
struct NeighborObs {
    Vec2 p_rel;            ///< neighbor position in ego frame (m)
    Vec2 v_rel;            ///< neighbor velocity rotated into ego frame (m/s)
    double r_j = 0.0;      ///< neighbor radius (m)
    double d_a = 0.0;      ///< center-to-center distance (m)
    double r_sum = 0.0;    ///< r_i + r_j (m)
};

/// The intent fields a neighbor transmits over a granted link.
struct HiddenState {
    Vec2 g;
    double v_pref = 0.0;
    double psi = 0.0;
};

/// Communicated 3-vector: [|g_j - p_i|, v_pref_j - v_pref_i, wrap(psi_j - psi_i)].
struct CommState {
    double d_goal_j = 0.0;
    double dv_pref = 0.0;
    double dpsi = 0.0;
};

/// Unicycle control input: commanded speed and heading.
struct Action {
    double speed = 0.0;    ///< m/s, in [0, v_pref]
    double psi_cmd = 0.0;  ///< rad
};

/// Ego frame: origin at the agent's position, x-axis toward its goal.
/// Degenerate at-goal case (|g - p| < 1e-9) falls back to the heading.
inline Frame ego_frame(const AgentState& ego) {
    Vec2 d = ego.g - ego.p;
    Frame f;
    f.origin = ego.p;
    f.angle = (d.norm() < 1e-9) ? ego.psi : std::atan2(d.y, d.x);
    return f;
}

inline EgoInput ego_input(const AgentState& ego) {
    Frame f = ego_frame(ego);
    EgoInput in;
    in.d_goal = (ego.g - ego.p).norm();
    in.v_pref = ego.v_pref;
    in.psi_rel = (in.d_goal < 1e-9) ? 0.0 : wrap_angle(ego.psi - f.angle);
    in.r = ego.r;
    return in;
}

/// Neighbor observable state expressed in the ego frame.
inline NeighborObs to_ego_frame(const AgentState& ego, const AgentState& nb) {
    Frame f = ego_frame(ego);
    NeighborObs o;
    o.p_rel = f.to_frame(nb.p);
    o.v_rel = f.vec_to_frame(nb.v);
    o.r_j = nb.r;
    o.d_a = (nb.p - ego.p).norm();
    o.r_sum = ego.r + nb.r;
    return o;
}

/// The ego agent's own observable state as a sequence token (p_rel = 0,
/// d_a = 0, r_sum = 2r).
inline NeighborObs ego_self_obs(const AgentState& ego) {
    Frame f = ego_frame(ego);
    NeighborObs o;
    o.p_rel = {0.0, 0.0};
    o.v_rel = f.vec_to_frame(ego.v);
    o.r_j = ego.r;
    o.d_a = 0.0;
    o.r_sum = 2.0 * ego.r;
    return o;
}

/// Communicated state derived from a neighbor's hidden state.
inline CommState comm_state(const AgentState& ego, const HiddenState& nb_hidden) {
    CommState c;
    c.d_goal_j = (nb_hidden.g - ego.p).norm();
    c.dv_pref = nb_hidden.v_pref - ego.v_pref;
    c.dpsi = wrap_angle(nb_hidden.psi - ego.psi);
    return c;
}

} // namespace dmca
