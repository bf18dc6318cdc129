#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmca/world.hpp"

namespace dmca {

/// Per-step record of one episode, one line per (t, agent).
///
/// Line format (whitespace-separated, doubles printed with 17 significant
/// digits so identical runs produce byte-identical files):
///   C dt r_neighbor goal_tol max_dpsi t_max lambda_comm
///   A id px py psi r v_pref gx gy          (initial state, one per agent)
///   O cx cy r                              (one per static obstacle)
///   S t id px py vx vy psi speed psi_cmd reward status links
/// S lines hold the post-step state; `links` is a comma-separated list of the
/// neighbor ids whose hidden state this agent requested during the step, or
/// `-` when none.
struct EpisodeLog {
    struct AgentSpec {
        AgentId id = 0;
        Vec2 p0;
        double psi0 = 0.0;
        double r = 0.0;
        double v_pref = 0.0;
        Vec2 g;
    };
    struct StepRecord {
        int t = 0;
        AgentId id = 0;
        Vec2 p;
        Vec2 v;
        double psi = 0.0;
        double speed = 0.0;
        double psi_cmd = 0.0;
        double reward = 0.0;
        AgentStatus status = AgentStatus::Active;
        std::vector<AgentId> links;
    };

    WorldConfig config;
    std::vector<AgentSpec> agents;
    std::vector<ObstacleDisk> obstacles;
    std::vector<StepRecord> records;

    static EpisodeLog start(const World& w) {
        EpisodeLog log;
        log.config = w.config;
        for (const auto& a : w.agents)
            log.agents.push_back({a.id, a.p, a.psi, a.r, a.v_pref, a.g});
        log.obstacles = w.obstacles;
        return log;
    }

    /// Append the post-step snapshot. `actions` and `links` are indexed by
    /// agent id; inactive agents log zero action and their recorded links.
    void append(const World& w, const StepOutcome& out,
                const std::vector<Action>& actions,
                const std::vector<std::vector<AgentId>>& links) {
        for (std::size_t i = 0; i < w.agents.size(); ++i) {
            StepRecord rec;
            rec.t = w.t; // step() already incremented; records are 1-based
            rec.id = static_cast<AgentId>(i);
            rec.p = w.agents[i].p;
            rec.v = w.agents[i].v;
            rec.psi = w.agents[i].psi;
            rec.speed = actions[i].speed;
            rec.psi_cmd = actions[i].psi_cmd;
            rec.reward = out.events[i].reward;
            rec.status = w.status[i];
            rec.links = links[i];
            records.push_back(std::move(rec));
        }
    }

    void write(std::ostream& os) const {
        os << "C " << fmt(config.dt) << ' ' << fmt(config.r_neighbor) << ' '
           << fmt(config.goal_tol) << ' ' << fmt(config.max_dpsi) << ' '
           << config.t_max << ' ' << fmt(config.lambda_comm) << '\n';
        for (const auto& a : agents) {
            os << "A " << a.id << ' ' << fmt(a.p0.x) << ' ' << fmt(a.p0.y) << ' '
               << fmt(a.psi0) << ' ' << fmt(a.r) << ' ' << fmt(a.v_pref) << ' '
               << fmt(a.g.x) << ' ' << fmt(a.g.y) << '\n';
        }
        for (const auto& o : obstacles) {
            os << "O " << fmt(o.center.x) << ' ' << fmt(o.center.y) << ' '
               << fmt(o.radius) << '\n';
        }
        for (const auto& r : records) {
            os << "S " << r.t << ' ' << r.id << ' ' << fmt(r.p.x) << ' '
               << fmt(r.p.y) << ' ' << fmt(r.v.x) << ' ' << fmt(r.v.y) << ' '
               << fmt(r.psi) << ' ' << fmt(r.speed) << ' ' << fmt(r.psi_cmd)
               << ' ' << fmt(r.reward) << ' ' << to_string(r.status) << ' ';
            if (r.links.empty()) {
                os << '-';
            } else {
                for (std::size_t k = 0; k < r.links.size(); ++k)
                    os << (k ? "," : "") << r.links[k];
            }
            os << '\n';
        }
    }

    void save(const std::string& path) const {
        std::ofstream f(path);
        if (!f) throw std::runtime_error("cannot open " + path + " for writing");
        write(f);
    }

    static EpisodeLog parse(std::istream& is) {
        EpisodeLog log;
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ls(line);
            std::string tag;
            ls >> tag;
            if (tag == "C") {
                ls >> log.config.dt >> log.config.r_neighbor >> log.config.goal_tol >>
                    log.config.max_dpsi >> log.config.t_max >> log.config.lambda_comm;
            } else if (tag == "A") {
                AgentSpec a;
                ls >> a.id >> a.p0.x >> a.p0.y >> a.psi0 >> a.r >> a.v_pref >> a.g.x >> a.g.y;
                log.agents.push_back(a);
            } else if (tag == "O") {
                ObstacleDisk o;
                ls >> o.center.x >> o.center.y >> o.radius;
                log.obstacles.push_back(o);
            } else if (tag == "S") {
                StepRecord r;
                std::string status, links;
                ls >> r.t >> r.id >> r.p.x >> r.p.y >> r.v.x >> r.v.y >> r.psi >>
                    r.speed >> r.psi_cmd >> r.reward >> status >> links;
                r.status = status == "active"    ? AgentStatus::Active
                           : status == "at_goal" ? AgentStatus::AtGoal
                                                 : AgentStatus::Collided;
                if (links != "-") {
                    std::istringstream lls(links);
                    std::string tok;
                    while (std::getline(lls, tok, ','))
                        r.links.push_back(static_cast<AgentId>(std::stoi(tok)));
                }
                log.records.push_back(std::move(r));
            } else {
                throw std::runtime_error("episode log: unknown record tag '" + tag + "'");
            }
            if (!ls && !ls.eof())
                throw std::runtime_error("episode log: malformed line: " + line);
        }
        return log;
    }

    static EpisodeLog load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot open " + path);
        return parse(f);
    }

    /// Sum of logged rewards for one agent (episode return).
    double total_reward(AgentId id) const {
        double s = 0.0;
        for (const auto& r : records)
            if (r.id == id) s += r.reward;
        return s;
    }

private:
    static std::string fmt(double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }
};

} // namespace dmca
