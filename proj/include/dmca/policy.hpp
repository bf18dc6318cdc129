#pragma once

#include <array>
#include <numeric>

#include "dmca/agent.hpp"
#include "dmca/layers.hpp"
#include "dmca/optim.hpp"
#include "dmca/params.hpp"

namespace dmca {

/// One discrete action: a speed fraction of v_pref and a heading offset.
struct ActionSpec {
    double speed_frac = 0.0;
    double dpsi = 0.0;
};

/// Default 11-action set: stop plus speeds {1.0, 0.5} x v_pref crossed with
/// heading offsets {0, +-pi/12, +-pi/6}.
inline std::vector<ActionSpec> default_action_set() {
    std::vector<ActionSpec> a;
    a.push_back({0.0, 0.0});
    for (double f : {1.0, 0.5})
        for (double o : {0.0, kPi / 12, -kPi / 12, kPi / 6, -kPi / 6})
            a.push_back({f, o});
    return a;
}

struct PolicyConfig {
    std::size_t heads = 20;        ///< encoder attention heads
    std::size_t d_k = 128;         ///< per-token Key/Query projection width
    std::size_t d_v = 256;         ///< per-token Value projection width
    std::size_t enc_out = 256;     ///< e_o width (encoder output projection)
    std::size_t comm_hidden = 64;  ///< comm selector hidden width (two layers)
    std::size_t lstm_hidden = 64;  ///< e_c width
    std::array<std::size_t, 4> nav = {1024, 512, 512, 256};
    std::vector<ActionSpec> actions = default_action_set();
    tg::real gumbel_tau = tg::real(1);

    std::size_t n_actions() const { return actions.size(); }
    std::size_t nav_input() const { return 4 + enc_out + lstm_hidden; }
};

struct PolicyOutput {
    std::vector<double> action_probs; ///< length-A simplex
    double value = 0.0;
    std::vector<double> link_probs;   ///< per-neighbor p_link
    std::vector<int> link_samples;    ///< per-neighbor {0,1}
};

enum class DecisionMode { Sample, Greedy };

/// Action-distribution + value tensors of one forward pass.
struct NavHeads {
    tg::Tensor logits; ///< B x A
    tg::Tensor value;  ///< B x 1
};

/// The navigation-with-selective-communication network: a 20-head attention
/// observation encoder, a per-neighbor link-prediction MLP (7 -> 64 -> 64 -> 2),
/// an LSTM communication aggregator, and a 1024-512-512-256 navigation trunk
/// with scalar value and discrete action heads.
class Policy {
public:
    Policy(const PolicyConfig& cfg, Rng rng) : cfg_(cfg) {
        using namespace tg;
        store_.add("enc.wq", xavier_uniform(7, cfg.heads * cfg.d_k, rng));
        store_.add("enc.bq", Tensor::zeros(1, cfg.heads * cfg.d_k));
        store_.add("enc.wk", xavier_uniform(7, cfg.heads * cfg.d_k, rng));
        store_.add("enc.bk", Tensor::zeros(1, cfg.heads * cfg.d_k));
        store_.add("enc.wv", xavier_uniform(7, cfg.heads * cfg.d_v, rng));
        store_.add("enc.bv", Tensor::zeros(1, cfg.heads * cfg.d_v));
        store_.add("enc.wo", xavier_uniform(cfg.heads * cfg.d_v, cfg.enc_out, rng));
        store_.add("enc.bo", Tensor::zeros(1, cfg.enc_out));
        store_.add("comm.w1", xavier_uniform(7, cfg.comm_hidden, rng));
        store_.add("comm.b1", Tensor::zeros(1, cfg.comm_hidden));
        store_.add("comm.w2", xavier_uniform(cfg.comm_hidden, cfg.comm_hidden, rng));
        store_.add("comm.b2", Tensor::zeros(1, cfg.comm_hidden));
        store_.add("comm.w3", xavier_uniform(cfg.comm_hidden, 2, rng));
        store_.add("comm.b3", Tensor::zeros(1, 2));
        {
            LstmParams lp = make_lstm_params(10, cfg.lstm_hidden, rng);
            store_.add("lstm.wx", lp.Wx);
            store_.add("lstm.wh", lp.Wh);
            store_.add("lstm.b", lp.b);
        }
        std::size_t in = cfg.nav_input();
        for (std::size_t l = 0; l < 4; ++l) {
            store_.add("nav.w" + std::to_string(l + 1), xavier_uniform(in, cfg.nav[l], rng));
            store_.add("nav.b" + std::to_string(l + 1), Tensor::zeros(1, cfg.nav[l]));
            in = cfg.nav[l];
        }
        store_.add("value.w", xavier_uniform(cfg.nav[3], 1, rng));
        store_.add("value.b", Tensor::zeros(1, 1));
        store_.add("act.w", xavier_uniform(cfg.nav[3], cfg.n_actions(), rng));
        store_.add("act.b", Tensor::zeros(1, cfg.n_actions()));
        wire();
    }

    const PolicyConfig& config() const { return cfg_; }
    tg::ParamStore& params() { return store_; }
    const tg::ParamStore& params() const { return store_; }

    /// Deep copy (independent parameter buffers).
    Policy clone() const {
        Policy p(*this);
        p.store_ = store_.clone();
        p.wire();
        return p;
    }

    void copy_values_from(const Policy& other) { store_.copy_values_from(other.store_); }

    // ---- checkpointing ----

    void save(const std::string& path) const {
        tg::ParamStore out;
        tg::Tensor acts = tg::Tensor::zeros(cfg_.actions.size(), 2);
        for (std::size_t i = 0; i < cfg_.actions.size(); ++i) {
            acts.at(i, 0) = static_cast<tg::real>(cfg_.actions[i].speed_frac);
            acts.at(i, 1) = static_cast<tg::real>(cfg_.actions[i].dpsi);
        }
        out.add("manifest.actions", acts);
        out.add("manifest.dims",
                tg::Tensor::row({static_cast<tg::real>(cfg_.heads),
                                 static_cast<tg::real>(cfg_.d_k),
                                 static_cast<tg::real>(cfg_.d_v),
                                 static_cast<tg::real>(cfg_.enc_out),
                                 static_cast<tg::real>(cfg_.comm_hidden),
                                 static_cast<tg::real>(cfg_.lstm_hidden)}));
        out.add("manifest.nav",
                tg::Tensor::row({static_cast<tg::real>(cfg_.nav[0]),
                                 static_cast<tg::real>(cfg_.nav[1]),
                                 static_cast<tg::real>(cfg_.nav[2]),
                                 static_cast<tg::real>(cfg_.nav[3])}));
        out.add("manifest.tau", tg::Tensor::scalar(cfg_.gumbel_tau));
        for (const auto& [name, t] : store_.items()) out.add(name, t);
        tg::save(out, path);
    }

    static Policy load(const std::string& path) {
        tg::ParamStore in = tg::load(path);
        PolicyConfig cfg;
        const tg::Tensor& dims = in.get("manifest.dims");
        cfg.heads = static_cast<std::size_t>(dims.at(0, 0));
        cfg.d_k = static_cast<std::size_t>(dims.at(0, 1));
        cfg.d_v = static_cast<std::size_t>(dims.at(0, 2));
        cfg.enc_out = static_cast<std::size_t>(dims.at(0, 3));
        cfg.comm_hidden = static_cast<std::size_t>(dims.at(0, 4));
        cfg.lstm_hidden = static_cast<std::size_t>(dims.at(0, 5));
        const tg::Tensor& nav = in.get("manifest.nav");
        for (std::size_t l = 0; l < 4; ++l)
            cfg.nav[l] = static_cast<std::size_t>(nav.at(0, l));
        cfg.gumbel_tau = in.get("manifest.tau").item();
        const tg::Tensor& acts = in.get("manifest.actions");
        cfg.actions.clear();
        for (std::size_t i = 0; i < acts.rows(); ++i)
            cfg.actions.push_back({static_cast<double>(acts.at(i, 0)),
                                   static_cast<double>(acts.at(i, 1))});

        Policy p(cfg, Rng(0));
        tg::ParamStore fresh;
        for (const auto& [name, t] : p.store_.items()) {
            tg::Tensor& lt = in.get(name); // throws naming a missing tensor
            if (lt.rows() != t.rows() || lt.cols() != t.cols())
                throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
            fresh.add(name, lt);
        }
        p.store_ = std::move(fresh);
        p.wire();
        return p;
    }

    // ---- observation encoding ----

    /// Stack [ego_tok, nb_toks...] into an (n+1) x 7 constant token matrix.
    static tg::Tensor obs_tokens(const NeighborObs& ego_tok,
                                 const std::vector<NeighborObs>& nb_toks) {
        tg::Tensor x = tg::Tensor::zeros(1 + nb_toks.size(), 7);
        auto put = [&x](std::size_t r, const NeighborObs& o) {
            x.at(r, 0) = static_cast<tg::real>(o.p_rel.x);
            x.at(r, 1) = static_cast<tg::real>(o.p_rel.y);
            x.at(r, 2) = static_cast<tg::real>(o.v_rel.x);
            x.at(r, 3) = static_cast<tg::real>(o.v_rel.y);
            x.at(r, 4) = static_cast<tg::real>(o.r_j);
            x.at(r, 5) = static_cast<tg::real>(o.d_a);
            x.at(r, 6) = static_cast<tg::real>(o.r_sum);
        };
        put(0, ego_tok);
        for (std::size_t i = 0; i < nb_toks.size(); ++i) put(i + 1, nb_toks[i]);
        return x;
    }

    /// Pre-projection head context of the ego token (1 x heads*d_v).
    tg::Tensor encode_context_t(tg::Tape* tape, const NeighborObs& ego_tok,
                                const std::vector<NeighborObs>& nb_toks) const {
        return tg::mha_ego_context(tape, obs_tokens(ego_tok, nb_toks), enc_);
    }

    /// Fixed-length observation encoding e_o (1 x 256): the ego token's row
    /// of the multi-head attention over [ego, neighbors...].
    tg::Tensor encode_observation_t(tg::Tape* tape, const NeighborObs& ego_tok,
                                    const std::vector<NeighborObs>& nb_toks) const {
        return tg::dense(tape, encode_context_t(tape, ego_tok, nb_toks), enc_.Wo, enc_.bo);
    }

    std::vector<double> encode_observation(const NeighborObs& ego_tok,
                                           const std::vector<NeighborObs>& nb_toks) const {
        tg::Tensor e = encode_observation_t(nullptr, ego_tok, nb_toks);
        return std::vector<double>(e.values().begin(), e.values().end());
    }

    // ---- communication selection ----

    static tg::Tensor comm_token(const NeighborObs& o) {
        return tg::Tensor::row({static_cast<tg::real>(o.p_rel.x),
                                static_cast<tg::real>(o.p_rel.y),
                                static_cast<tg::real>(o.v_rel.x),
                                static_cast<tg::real>(o.v_rel.y),
                                static_cast<tg::real>(o.r_j),
                                static_cast<tg::real>(o.d_a),
                                static_cast<tg::real>(o.r_sum)});
    }

    /// Link-prediction logits (1 x 2, pre-softmax); class 0 means "link".
    tg::Tensor link_logits_t(tg::Tape* tape, const tg::Tensor& tok) const {
        tg::Tensor h1 = tg::relu(tape, tg::dense(tape, tok, c1w_, c1b_));
        tg::Tensor h2 = tg::relu(tape, tg::dense(tape, h1, c2w_, c2b_));
        return tg::dense(tape, h2, c3w_, c3b_);
    }

    double link_prob(const NeighborObs& o) const {
        tg::Tensor lg = link_logits_t(nullptr, comm_token(o));
        tg::Tensor p = tg::softmax_rows(nullptr, lg);
        return static_cast<double>(p.at(0, 0));
    }

    /// Per-neighbor independent link decisions. Sample mode draws a hard
    /// Gumbel-Softmax; greedy mode links iff p_link >= 0.5. When `noises` is
    /// non-null the Gumbel draws are stored there for exact replay.
    std::pair<std::vector<double>, std::vector<int>>
    select_links(const std::vector<NeighborObs>& nb_toks, DecisionMode mode, Rng& rng,
                 std::vector<std::array<tg::real, 2>>* noises = nullptr) const {
        std::vector<double> probs;
        std::vector<int> samples;
        probs.reserve(nb_toks.size());
        samples.reserve(nb_toks.size());
        for (const auto& o : nb_toks) {
            tg::Tensor lg = link_logits_t(nullptr, comm_token(o));
            tg::Tensor p = tg::softmax_rows(nullptr, lg);
            probs.push_back(static_cast<double>(p.at(0, 0)));
            if (mode == DecisionMode::Greedy) {
                samples.push_back(probs.back() >= 0.5 ? 1 : 0);
                if (noises) noises->push_back({tg::real(0), tg::real(0)});
            } else {
                auto noise = tg::draw_gumbel_noise(rng, 2);
                tg::Tensor y = tg::gumbel_softmax_noise(nullptr, lg, cfg_.gumbel_tau,
                                                        noise, /*hard=*/true);
                samples.push_back(y.at(0, 0) == tg::real(1) ? 1 : 0);
                if (noises) noises->push_back({noise[0], noise[1]});
            }
        }
        return {std::move(probs), std::move(samples)};
    }

    // ---- communication aggregation ----

    static tg::Tensor comm_pair_token(const NeighborObs& o, const CommState& c) {
        return tg::Tensor::row({static_cast<tg::real>(o.p_rel.x),
                                static_cast<tg::real>(o.p_rel.y),
                                static_cast<tg::real>(o.v_rel.x),
                                static_cast<tg::real>(o.v_rel.y),
                                static_cast<tg::real>(o.r_j),
                                static_cast<tg::real>(o.d_a),
                                static_cast<tg::real>(o.r_sum),
                                static_cast<tg::real>(c.d_goal_j),
                                static_cast<tg::real>(c.dv_pref),
                                static_cast<tg::real>(c.dpsi)});
    }

    /// Feed the granted (observable, communicated) pairs through the LSTM in
    /// order of decreasing d_a (closest neighbor last); e_c is the final
    /// hidden state, or a zero vector when no links were granted. Optional
    /// per-pair scalar gates multiply each LSTM input (straight-through
    /// training path).
    tg::Tensor aggregate_comm_t(tg::Tape* tape,
                                const std::vector<std::pair<NeighborObs, CommState>>& pairs,
                                const std::vector<tg::Tensor>* gates = nullptr) const {
        tg::Tensor h = tg::Tensor::zeros(1, cfg_.lstm_hidden);
        if (pairs.empty()) return h;
        std::vector<std::size_t> order(pairs.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&pairs](std::size_t a, std::size_t b) {
            return pairs[a].first.d_a > pairs[b].first.d_a;
        });
        tg::Tensor c = tg::Tensor::zeros(1, cfg_.lstm_hidden);
        for (std::size_t k : order) {
            tg::Tensor x = comm_pair_token(pairs[k].first, pairs[k].second);
            if (gates) x = tg::scale_by(tape, x, (*gates)[k]);
            auto [h2, c2] = tg::lstm_step(tape, x, h, c, lstm_);
            h = h2;
            c = c2;
        }
        return h;
    }

    std::vector<double>
    aggregate_comm(const std::vector<std::pair<NeighborObs, CommState>>& pairs) const {
        tg::Tensor h = aggregate_comm_t(nullptr, pairs);
        return std::vector<double>(h.values().begin(), h.values().end());
    }

    // ---- navigation ----

    static tg::Tensor ego_row(const EgoInput& e) {
        return tg::Tensor::row({static_cast<tg::real>(e.d_goal),
                                static_cast<tg::real>(e.v_pref),
                                static_cast<tg::real>(e.psi_rel),
                                static_cast<tg::real>(e.r)});
    }

    /// Navigation trunk + heads over a batch of assembled input rows
    /// (B x (4 + 256 + 64)).
    NavHeads nav_heads_t(tg::Tape* tape, const tg::Tensor& x) const {
        tg::Tensor h = x;
        h = tg::relu(tape, tg::dense(tape, h, nw_[0], nb_[0]));
        h = tg::relu(tape, tg::dense(tape, h, nw_[1], nb_[1]));
        h = tg::relu(tape, tg::dense(tape, h, nw_[2], nb_[2]));
        h = tg::relu(tape, tg::dense(tape, h, nw_[3], nb_[3]));
        NavHeads out;
        out.logits = tg::dense(tape, h, aw_, ab_);
        out.value = tg::dense(tape, h, vw_, vb_);
        return out;
    }

    /// Batched output projection of stacked encoder contexts (B x heads*d_v).
    tg::Tensor enc_project_t(tg::Tape* tape, const tg::Tensor& ctx_rows) const {
        return tg::dense(tape, ctx_rows, enc_.Wo, enc_.bo);
    }

    /// Full single-step forward: distribution over actions plus value.
    /// `ego_tok` is the agent's own observable token (ego_self_obs).
    PolicyOutput forward(const EgoInput& ego, const NeighborObs& ego_tok,
                         const std::vector<NeighborObs>& nb_toks,
                         const std::vector<std::pair<NeighborObs, CommState>>& comm_pairs) const {
        tg::Tensor eo = encode_observation_t(nullptr, ego_tok, nb_toks);
        tg::Tensor ec = aggregate_comm_t(nullptr, comm_pairs);
        tg::Tensor x = tg::concat_cols(nullptr, {ego_row(ego), eo, ec});
        NavHeads heads = nav_heads_t(nullptr, x);
        tg::Tensor probs = tg::softmax_rows(nullptr, heads.logits);
        PolicyOutput out;
        out.action_probs.assign(probs.values().begin(), probs.values().end());
        out.value = static_cast<double>(heads.value.item());
        return out;
    }

    /// Map a chosen index to a control: speed fraction times v_pref, heading
    /// offset relative to the current heading.
    Action act(const PolicyOutput& out, DecisionMode mode, Rng& rng, double v_pref,
               double psi) const {
        std::size_t idx = 0;
        if (mode == DecisionMode::Greedy) {
            for (std::size_t i = 1; i < out.action_probs.size(); ++i)
                if (out.action_probs[i] > out.action_probs[idx]) idx = i;
        } else {
            double u = rng.uniform();
            double acc = 0.0;
            idx = out.action_probs.size() - 1;
            for (std::size_t i = 0; i < out.action_probs.size(); ++i) {
                acc += out.action_probs[i];
                if (u < acc) {
                    idx = i;
                    break;
                }
            }
        }
        return action_from_index(idx, v_pref, psi);
    }

    Action action_from_index(std::size_t idx, double v_pref, double psi) const {
        const ActionSpec& a = cfg_.actions.at(idx);
        return Action{a.speed_frac * v_pref, wrap_angle(psi + a.dpsi)};
    }

    const tg::MhaParams& encoder_params() const { return enc_; }
    const tg::LstmParams& lstm_params() const { return lstm_; }

private:
    void wire() {
        enc_.Wq = store_.get("enc.wq");
        enc_.bq = store_.get("enc.bq");
        enc_.Wk = store_.get("enc.wk");
        enc_.bk = store_.get("enc.bk");
        enc_.Wv = store_.get("enc.wv");
        enc_.bv = store_.get("enc.bv");
        enc_.Wo = store_.get("enc.wo");
        enc_.bo = store_.get("enc.bo");
        enc_.heads = cfg_.heads;
        c1w_ = store_.get("comm.w1");
        c1b_ = store_.get("comm.b1");
        c2w_ = store_.get("comm.w2");
        c2b_ = store_.get("comm.b2");
        c3w_ = store_.get("comm.w3");
        c3b_ = store_.get("comm.b3");
        lstm_.Wx = store_.get("lstm.wx");
        lstm_.Wh = store_.get("lstm.wh");
        lstm_.b = store_.get("lstm.b");
        for (std::size_t l = 0; l < 4; ++l) {
            nw_[l] = store_.get("nav.w" + std::to_string(l + 1));
            nb_[l] = store_.get("nav.b" + std::to_string(l + 1));
        }
        vw_ = store_.get("value.w");
        vb_ = store_.get("value.b");
        aw_ = store_.get("act.w");
        ab_ = store_.get("act.b");
    }

    PolicyConfig cfg_;
    tg::ParamStore store_;
    tg::MhaParams enc_;
    tg::Tensor c1w_, c1b_, c2w_, c2b_, c3w_, c3b_;
    tg::LstmParams lstm_;
    std::array<tg::Tensor, 4> nw_, nb_;
    tg::Tensor vw_, vb_, aw_, ab_;
};

} // namespace dmca
