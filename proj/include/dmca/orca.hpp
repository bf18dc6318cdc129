#pragma once

#include <cmath>
#include <vector>

#include "dmca/agent.hpp"
#include "dmca/world.hpp"

namespace dmca {

/// Velocity-space constraint; permitted side is {v : (v - point) . normal >= 0}.
struct HalfPlane {
    Vec2 point;  ///< a point on the boundary line (m/s)
    Vec2 normal; ///< unit normal toward the permitted side
};

struct OrcaConfig {
    double tau = 5.0;          ///< collision-avoidance time horizon (s)
    double dt = 0.1;           ///< step used by the overlap fallback (s)
    double tiebreak = 1e-3;    ///< preferred-velocity rotation (rad), sign keyed on id parity
};

namespace detail_orca {
inline constexpr double kEps = 1e-10;

inline Vec2 boundary_dir(const HalfPlane& h) { return {h.normal.y, -h.normal.x}; }

/// Optimize along the boundary of constraint `i` subject to constraints
/// 0..i-1 and speed <= radius. Returns false when infeasible.
inline bool lp1(const std::vector<HalfPlane>& hs, std::size_t i, double radius,
                const Vec2& opt, bool dir_opt, Vec2& result) {
    const Vec2 p = hs[i].point;
    const Vec2 d = boundary_dir(hs[i]);
    const double dot_pd = p.dot(d);
    const double disc = dot_pd * dot_pd + radius * radius - p.norm_sq();
    if (disc < 0.0) return false; // max-speed circle misses this line
    const double sq = std::sqrt(disc);
    double t_left = -dot_pd - sq;
    double t_right = -dot_pd + sq;

    for (std::size_t j = 0; j < i; ++j) {
        const double denom = d.dot(hs[j].normal);
        const double num = (hs[j].point - p).dot(hs[j].normal);
        if (std::abs(denom) <= kEps) {
            if ((p - hs[j].point).dot(hs[j].normal) < 0.0) return false;
            continue;
        }
        const double t = num / denom;
        if (denom > 0.0) {
            t_left = std::max(t_left, t);
        } else {
            t_right = std::min(t_right, t);
        }
        if (t_left > t_right) return false;
    }

    if (dir_opt) {
        result = (opt.dot(d) > 0.0) ? p + t_right * d : p + t_left * d;
    } else {
        double t = d.dot(opt - p);
        t = std::clamp(t, t_left, t_right);
        result = p + t * d;
    }
    return true;
}

/// Incremental LP: velocity closest to `opt` (or farthest along it when
/// dir_opt) satisfying all half-planes and |v| <= radius. Returns hs.size()
/// on success, otherwise the index of the first infeasible constraint.
inline std::size_t lp2(const std::vector<HalfPlane>& hs, double radius, const Vec2& opt,
                       bool dir_opt, Vec2& result) {
    if (dir_opt) {
        result = opt * radius; // opt is a unit direction
    } else if (opt.norm_sq() > radius * radius) {
        result = opt.normalized() * radius;
    } else {
        result = opt;
    }
    for (std::size_t i = 0; i < hs.size(); ++i) {
        if ((result - hs[i].point).dot(hs[i].normal) < 0.0) {
            const Vec2 saved = result;
            if (!lp1(hs, i, radius, opt, dir_opt, result)) {
                result = saved;
                return i;
            }
        }
    }
    return hs.size();
}

/// Infeasible fallback: minimize the maximum constraint violation over the
/// relaxable constraints (the first `n_fixed` half-planes stay hard).
inline void lp3(const std::vector<HalfPlane>& hs, std::size_t n_fixed,
                std::size_t begin, double radius, Vec2& result) {
    double depth = 0.0;
    for (std::size_t i = begin; i < hs.size(); ++i) {
        if ((hs[i].point - result).dot(hs[i].normal) > depth) {
            std::vector<HalfPlane> proj(hs.begin(),
                                        hs.begin() + static_cast<std::ptrdiff_t>(n_fixed));
            const Vec2 di = boundary_dir(hs[i]);
            for (std::size_t j = n_fixed; j < i; ++j) {
                const Vec2 dj = boundary_dir(hs[j]);
                HalfPlane h;
                const double determinant = di.det(dj);
                if (std::abs(determinant) <= kEps) {
                    if (di.dot(dj) > 0.0) continue; // same direction
                    h.point = 0.5 * (hs[i].point + hs[j].point);
                } else {
                    h.point = hs[i].point +
                              (dj.det(hs[i].point - hs[j].point) / determinant) * di;
                }
                const Vec2 dir = (dj - di).normalized();
                h.normal = {-dir.y, dir.x};
                proj.push_back(h);
            }
            const Vec2 saved = result;
            if (lp2(proj, radius, hs[i].normal, true, result) < proj.size()) {
                result = saved;
            }
            depth = (hs[i].point - result).dot(hs[i].normal);
        }
    }
}
} // namespace detail_orca

/// Reciprocal collision-avoidance half-plane for one neighbor: the permitted
/// velocities after the ego takes its share of the minimal relative-velocity
/// change u that escapes the tau-truncated velocity-obstacle cone.
/// `responsibility` is 0.5 against reciprocating agents, 1.0 against
/// non-reacting bodies (static obstacles).
inline HalfPlane orca_halfplane(const AgentState& ego, const AgentState& nb, double tau,
                                double dt = 0.1, double responsibility = 0.5) {
    const Vec2 rel_p = nb.p - ego.p;
    const Vec2 rel_v = ego.v - nb.v;
    const double dist_sq = rel_p.norm_sq();
    const double comb_r = ego.r + nb.r;
    const double comb_r_sq = comb_r * comb_r;

    Vec2 u, normal;
    if (dist_sq > comb_r_sq) {
        const double inv_tau = 1.0 / tau;
        const Vec2 w = rel_v - inv_tau * rel_p; // from cutoff center to rel_v
        const double w_len_sq = w.norm_sq();
        const double dot1 = w.dot(rel_p);
        if (dot1 < 0.0 && dot1 * dot1 > comb_r_sq * w_len_sq) {
            // closest to the cutoff arc
            const double w_len = std::sqrt(w_len_sq);
            const Vec2 unit_w = w * (1.0 / w_len);
            u = (comb_r * inv_tau - w_len) * unit_w;
            normal = unit_w;
        } else {
            // closest to one of the cone legs
            const double leg = std::sqrt(dist_sq - comb_r_sq);
            Vec2 dir;
            if (rel_p.det(w) > 0.0) {
                dir = Vec2(rel_p.x * leg - rel_p.y * comb_r,
                           rel_p.x * comb_r + rel_p.y * leg) * (1.0 / dist_sq);
            } else {
                dir = Vec2(rel_p.x * leg + rel_p.y * comb_r,
                           -rel_p.x * comb_r + rel_p.y * leg) * (-1.0 / dist_sq);
            }
            u = rel_v.dot(dir) * dir - rel_v;
            normal = {-dir.y, dir.x};
        }
    } else {
        // already overlapping: separate over one step
        const double inv_dt = 1.0 / dt;
        const Vec2 w = rel_v - inv_dt * rel_p;
        const double w_len = w.norm();
        const Vec2 unit_w = w_len > detail_orca::kEps ? w * (1.0 / w_len)
                                                      : (-rel_p).normalized();
        u = (comb_r * inv_dt - w_len) * unit_w;
        normal = unit_w;
    }
    return HalfPlane{ego.v + responsibility * u, normal};
}

/// Velocity closest to the preferred velocity (unit vector toward the goal
/// times v_pref, clamped to v_max) that satisfies every neighbor half-plane
/// and |v| <= v_max; falls back to minimizing the maximum violation when the
/// half-planes are jointly infeasible. Obstacle half-planes (from `obstacles`)
/// stay hard in the fallback. A deterministic preferred-velocity rotation
/// keyed on id parity breaks exact symmetry.
inline Vec2 orca_velocity(const AgentState& ego, const std::vector<AgentState>& nbs,
                          double tau, double v_max,
                          const std::vector<AgentState>& obstacles = {},
                          const OrcaConfig& cfg = {}) {
    std::vector<HalfPlane> hs;
    hs.reserve(nbs.size() + obstacles.size());
    for (const auto& ob : obstacles)
        hs.push_back(orca_halfplane(ego, ob, tau, cfg.dt, 1.0));
    const std::size_t n_fixed = hs.size();
    for (const auto& nb : nbs)
        hs.push_back(orca_halfplane(ego, nb, tau, cfg.dt, 0.5));

    Vec2 to_goal = ego.g - ego.p;
    Vec2 pref{0.0, 0.0};
    if (to_goal.norm() > 1e-12) {
        double speed = std::min(ego.v_pref, v_max);
        double spin = (ego.id % 2 == 0) ? cfg.tiebreak : -cfg.tiebreak;
        pref = rotate(to_goal.normalized() * speed, spin);
    }

    Vec2 v;
    std::size_t fail = detail_orca::lp2(hs, v_max, pref, false, v);
    if (fail < hs.size()) detail_orca::lp3(hs, n_fixed, fail, v_max, v);
    return v;
}

/// Convert a holonomic ORCA velocity to a unicycle action: command the
/// velocity's heading; when the turn exceeds what max_dpsi allows this step,
/// command the speed projected onto the achievable heading (never negative).
inline Action orca_action(const AgentState& ego, const Vec2& v, double max_dpsi) {
    const double speed_des = v.norm();
    if (speed_des < 1e-9) return Action{0.0, ego.psi};
    const double psi_des = std::atan2(v.y, v.x);
    const double turn = wrap_angle(psi_des - ego.psi);
    const double residual = std::abs(turn) - max_dpsi;
    double speed = speed_des;
    if (residual > 0.0) speed = std::max(0.0, speed_des * std::cos(residual));
    return Action{std::min(speed, ego.v_pref), psi_des};
}

/// One full ORCA planning cycle for every active agent in the world.
inline std::vector<std::pair<AgentId, Action>> orca_plan(const World& world,
                                                         const OrcaConfig& cfg = {}) {
    std::vector<std::pair<AgentId, Action>> actions;
    for (std::size_t i = 0; i < world.n_agents(); ++i) {
        AgentId id = static_cast<AgentId>(i);
        if (!world.is_active(id)) continue;
        std::vector<AgentState> nbs, obs;
        for (AgentId j : world.neighbors(id)) {
            if (world.is_obstacle_id(j)) {
                obs.push_back(world.body_state(j));
            } else {
                nbs.push_back(world.body_state(j));
            }
        }
        const AgentState& a = world.agents[i];
        Vec2 v = orca_velocity(a, nbs, cfg.tau, a.v_pref, obs,
                               OrcaConfig{cfg.tau, world.config.dt, cfg.tiebreak});
        actions.emplace_back(id, orca_action(a, v, world.config.max_dpsi));
    }
    return actions;
}

} // namespace dmca
