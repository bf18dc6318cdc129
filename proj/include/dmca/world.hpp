#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dmca/agent.hpp"

namespace dmca {

struct WorldConfig {
    double dt = 0.1;           ///< step duration (s)
    double r_neighbor = 3.0;   ///< sensing radius (m)
    double goal_tol = 0.2;     ///< goal-reach tolerance (m)
    double max_dpsi = kPi / 6; ///< max heading change per step (rad)
    int t_max = 500;           ///< episode cap (steps)
    double lambda_comm = 0.0;  ///< communication penalty weight
};

enum class AgentStatus : std::uint8_t { Active = 0, AtGoal = 1, Collided = 2 };

inline const char* to_string(AgentStatus s) {
    switch (s) {
        case AgentStatus::Active: return "active";
        case AgentStatus::AtGoal: return "at_goal";
        default: return "collided";
    }
}

struct ObstacleDisk {
    Vec2 center;
    double radius = 0.0;
};

/// Per-agent outcome of one step.
struct AgentEvent {
    bool reached_goal = false;
    bool collided = false;
    double d_min = std::numeric_limits<double>::infinity(); ///< surface clearance to closest body (m)
    int n_links = 0;      ///< communication links requested this step
    double reward = 0.0;  ///< includes the -lambda * n_links term
};

struct StepOutcome {
    std::vector<AgentEvent> events; ///< indexed by agent id
    bool done = false;
};

/// Per-agent set of requested neighbor ids for one planning cycle.
struct LinkDecisions {
    std::vector<std::vector<AgentId>> requests; ///< indexed by agent id
};

/// Sparse reward with communication penalty: 1.0 on reaching the goal,
/// -0.25 on collision, -0.1 + d_min/2 when clearance drops below 0.2 m,
/// 0 otherwise; -lambda * n_l is additive with every case.
inline double reward_for(bool reached_goal, bool collided, double d_min,
                         int n_links, double lambda_comm) {
    double base = 0.0;
    if (reached_goal) {
        base = 1.0;
    } else if (collided) {
        base = -0.25;
    } else if (d_min < 0.2) {
        base = -0.1 + d_min / 2.0;
    }
    return base - lambda_comm * static_cast<double>(n_links);
}

/// 2D world of disk agents and static disk obstacles under unicycle
/// kinematics. Agent ids equal their index in `agents`; obstacles are
/// addressed as pseudo-agents with ids agents.size()..agents.size()+k-1.
class World {
public:
    WorldConfig config;
    std::vector<AgentState> agents;
    std::vector<ObstacleDisk> obstacles;
    std::vector<AgentStatus> status;
    int t = 0;

    World() = default;
    World(WorldConfig cfg, std::vector<AgentState> ags,
          std::vector<ObstacleDisk> obs = {})
        : config(cfg), agents(std::move(ags)), obstacles(std::move(obs)) {
        for (std::size_t i = 0; i < agents.size(); ++i)
            agents[i].id = static_cast<AgentId>(i);
        status.assign(agents.size(), AgentStatus::Active);
        links_this_step_.assign(agents.size(), {});
    }

    std::size_t n_agents() const { return agents.size(); }
    std::size_t n_bodies() const { return agents.size() + obstacles.size(); }
    bool is_obstacle_id(AgentId id) const {
        return id >= static_cast<AgentId>(agents.size());
    }

    bool is_active(AgentId id) const {
        return status[check_agent(id)] == AgentStatus::Active;
    }

    bool all_inactive() const {
        return std::none_of(status.begin(), status.end(), [](AgentStatus s) {
            return s == AgentStatus::Active;
        });
    }

    bool done() const {
        return t >= config.t_max || all_inactive();
    }

    /// Observable state of any body (agent or obstacle pseudo-agent).
    AgentState body_state(AgentId id) const {
        if (id < static_cast<AgentId>(agents.size())) return agents[id];
        std::size_t k = static_cast<std::size_t>(id) - agents.size();
        if (k >= obstacles.size()) throw std::out_of_range("unknown body id " + std::to_string(id));
        AgentState s;
        s.p = obstacles[k].center;
        s.v = {0.0, 0.0};
        s.psi = 0.0;
        s.r = obstacles[k].radius;
        s.v_pref = 1.0; // placeholder; obstacles never expose hidden state
        s.g = obstacles[k].center;
        s.id = id;
        return s;
    }

    /// Ids of sensed bodies: active agents strictly within r_neighbor, plus
    /// static obstacles as zero-velocity pseudo-agents.
    std::vector<AgentId> neighbors(AgentId i) const {
        check_agent(i);
        std::vector<AgentId> out;
        const Vec2 pi = agents[i].p;
        for (std::size_t j = 0; j < agents.size(); ++j) {
            if (static_cast<AgentId>(j) == i) continue;
            if (status[j] != AgentStatus::Active) continue;
            if ((agents[j].p - pi).norm() < config.r_neighbor) {
                out.push_back(static_cast<AgentId>(j));
            }
        }
        for (std::size_t k = 0; k < obstacles.size(); ++k) {
            if ((obstacles[k].center - pi).norm() < config.r_neighbor) {
                out.push_back(static_cast<AgentId>(agents.size() + k));
            }
        }
        return out;
    }

    /// Request-reply exchange executed within a single planning cycle.
    /// Returns, per agent, the (observable, hidden) pair for each granted
    /// link; replies reflect the state at the start of the step. Records the
    /// link counts consumed by the next step()'s reward.
    std::vector<std::vector<std::pair<NeighborObs, HiddenState>>>
    exchange(const LinkDecisions& links) {
        if (links.requests.size() != agents.size())
            throw std::invalid_argument("exchange: one request set per agent required");
        std::vector<std::vector<std::pair<NeighborObs, HiddenState>>> replies(agents.size());
        for (std::size_t i = 0; i < agents.size(); ++i) {
            links_this_step_[i].clear();
            if (links.requests[i].empty()) continue;
            auto nbrs = neighbors(static_cast<AgentId>(i));
            for (AgentId j : links.requests[i]) {
                if (is_obstacle_id(j) ||
                    std::find(nbrs.begin(), nbrs.end(), j) == nbrs.end()) {
                    throw std::invalid_argument(
                        "exchange: agent " + std::to_string(i) +
                        " requested non-neighbor " + std::to_string(j));
                }
                NeighborObs obs = to_ego_frame(agents[i], agents[j]);
                HiddenState h{agents[j].g, agents[j].v_pref, agents[j].psi};
                replies[i].emplace_back(obs, h);
            }
            links_this_step_[i] = links.requests[i];
        }
        return replies;
    }

    /// Link ids recorded by the last exchange() since the last step().
    const std::vector<std::vector<AgentId>>& pending_links() const {
        return links_this_step_;
    }

    /// Advance one step: clamp-steer headings, integrate positions, absorb
    /// goal arrivals and collisions, and assign rewards to the agents that
    /// were active on entry.
    StepOutcome step(const std::vector<std::pair<AgentId, Action>>& actions) {
        std::vector<bool> was_active(agents.size());
        std::vector<bool> has_action(agents.size(), false);
        for (std::size_t i = 0; i < agents.size(); ++i)
            was_active[i] = status[i] == AgentStatus::Active;

        for (const auto& [id, act] : actions) {
            check_agent(id);
            if (!was_active[id])
                throw std::invalid_argument("step: action for inactive agent " + std::to_string(id));
            if (has_action[id])
                throw std::invalid_argument("step: duplicate action for agent " + std::to_string(id));
            has_action[id] = true;
            AgentState& a = agents[id];
            double dpsi = std::clamp(wrap_angle(act.psi_cmd - a.psi),
                                     -config.max_dpsi, config.max_dpsi);
            a.psi = wrap_angle(a.psi + dpsi);
            double speed = std::clamp(act.speed, 0.0, a.v_pref);
            a.v = {speed * std::cos(a.psi), speed * std::sin(a.psi)};
            a.p += a.v * config.dt;
        }
        for (std::size_t i = 0; i < agents.size(); ++i) {
            if (was_active[i] && !has_action[i])
                throw std::invalid_argument("step: missing action for active agent " + std::to_string(i));
            if (!was_active[i]) agents[i].v = {0.0, 0.0};
        }

        StepOutcome out;
        out.events.resize(agents.size());

        // Goal arrivals absorb before collision checks.
        for (std::size_t i = 0; i < agents.size(); ++i) {
            if (!was_active[i]) continue;
            if ((agents[i].p - agents[i].g).norm() <= config.goal_tol) {
                status[i] = AgentStatus::AtGoal;
                agents[i].v = {0.0, 0.0};
                out.events[i].reached_goal = true;
            }
        }

        for (const auto& [a, b] : detect_collisions()) {
            for (AgentId id : {a, b}) {
                if (!is_obstacle_id(id) && status[id] == AgentStatus::Active) {
                    status[id] = AgentStatus::Collided;
                    agents[id].v = {0.0, 0.0};
                    out.events[id].collided = true;
                }
            }
        }

        for (std::size_t i = 0; i < agents.size(); ++i)
            out.events[i].d_min = clearance(static_cast<AgentId>(i));

        for (std::size_t i = 0; i < agents.size(); ++i) {
            if (!was_active[i]) continue;
            AgentEvent& e = out.events[i];
            e.n_links = static_cast<int>(links_this_step_[i].size());
            e.reward = reward_for(e.reached_goal, e.collided, e.d_min,
                                  e.n_links, config.lambda_comm);
        }

        for (auto& l : links_this_step_) l.clear();
        ++t;
        out.done = done();
        return out;
    }

    /// All unordered body pairs with center distance < r_i + r_j
    /// (agent-agent and agent-obstacle).
    std::vector<std::pair<AgentId, AgentId>> detect_collisions() const {
        std::vector<std::pair<AgentId, AgentId>> pairs;
        for (std::size_t i = 0; i < agents.size(); ++i) {
            for (std::size_t j = i + 1; j < agents.size(); ++j) {
                if ((agents[i].p - agents[j].p).norm() < agents[i].r + agents[j].r)
                    pairs.emplace_back(static_cast<AgentId>(i), static_cast<AgentId>(j));
            }
            for (std::size_t k = 0; k < obstacles.size(); ++k) {
                if ((agents[i].p - obstacles[k].center).norm() <
                    agents[i].r + obstacles[k].radius)
                    pairs.emplace_back(static_cast<AgentId>(i),
                                       static_cast<AgentId>(agents.size() + k));
            }
        }
        return pairs;
    }

    /// Surface clearance from agent i to the closest other body.
    double clearance(AgentId i) const {
        check_agent(i);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < agents.size(); ++j) {
            if (static_cast<AgentId>(j) == i) continue;
            best = std::min(best, (agents[i].p - agents[j].p).norm() -
                                      agents[i].r - agents[j].r);
        }
        for (const auto& o : obstacles) {
            best = std::min(best, (agents[i].p - o.center).norm() -
                                      agents[i].r - o.radius);
        }
        return best;
    }

private:
    std::size_t check_agent(AgentId id) const {
        if (id < 0 || id >= static_cast<AgentId>(agents.size()))
            throw std::out_of_range("unknown agent id " + std::to_string(id));
        return static_cast<std::size_t>(id);
    }

    std::vector<std::vector<AgentId>> links_this_step_;
};

} // namespace dmca
