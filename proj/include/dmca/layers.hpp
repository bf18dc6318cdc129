#pragma once

#include <algorithm>
#include <cmath>

#include "dmca/rng.hpp"
#include "dmca/tensor.hpp"

namespace dmca::tg {

inline Tensor dense(Tape* tape, const Tensor& x, const Tensor& w, const Tensor& b) {
    return add_rowvec(tape, matmul(tape, x, w), b);
}

/// Glorot-uniform init: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
inline Tensor xavier_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
    Tensor t = Tensor::zeros(rows, cols);
    real a = static_cast<real>(std::sqrt(6.0 / static_cast<double>(rows + cols)));
    for (std::size_t i = 0; i < t.size(); ++i)
        t.data()[i] = static_cast<real>(rng.uniform(-a, a));
    return t;
}

/// Scaled dot-product attention: softmax(Q K^T / sqrt(d_k)) V.
/// Each output row is a convex combination of V rows.
inline Tensor attention(Tape* tape, const Tensor& q, const Tensor& k, const Tensor& v) {
    if (q.cols() != k.cols())
        throw std::invalid_argument("attention: Q/K width mismatch");
    if (k.rows() != v.rows())
        throw std::invalid_argument("attention: K/V length mismatch");
    real inv = real(1) / std::sqrt(static_cast<real>(k.cols()));
    Tensor scores = scale(tape, matmul_nt(tape, q, k), inv);
    Tensor weights = softmax_rows(tape, scores);
    return matmul(tape, weights, v);
}

/// Parameters of one multi-head attention block. Heads live side by side as
/// column blocks: Wq, Wk are d_in x (heads*d_k), Wv is d_in x (heads*d_v),
/// Wo is (heads*d_v) x d_out.
struct MhaParams {
    Tensor Wq, bq, Wk, bk, Wv, bv, Wo, bo;
    std::size_t heads = 1;

    std::size_t d_k() const { return Wq.cols() / heads; }
    std::size_t d_v() const { return Wv.cols() / heads; }
};

inline MhaParams make_mha_params(std::size_t d_in, std::size_t heads, std::size_t d_k,
                                 std::size_t d_v, std::size_t d_out, Rng& rng) {
    MhaParams p;
    p.heads = heads;
    p.Wq = xavier_uniform(d_in, heads * d_k, rng);
    p.bq = Tensor::zeros(1, heads * d_k);
    p.Wk = xavier_uniform(d_in, heads * d_k, rng);
    p.bk = Tensor::zeros(1, heads * d_k);
    p.Wv = xavier_uniform(d_in, heads * d_v, rng);
    p.bv = Tensor::zeros(1, heads * d_v);
    p.Wo = xavier_uniform(heads * d_v, d_out, rng);
    p.bo = Tensor::zeros(1, d_out);
    return p;
}

/// Reference multi-head attention over a full sequence, composed from tape
/// primitives: Concat(head_1..head_h) Wo with head_i = attention of the
/// per-head projection slices.
inline Tensor multi_head_attention(Tape* tape, const Tensor& x, const MhaParams& p) {
    if (x.cols() != p.Wq.rows())
        throw std::invalid_argument("multi_head_attention: input width mismatch");
    Tensor q = dense(tape, x, p.Wq, p.bq);
    Tensor k = dense(tape, x, p.Wk, p.bk);
    Tensor v = dense(tape, x, p.Wv, p.bv);
    std::size_t dk = p.d_k(), dv = p.d_v();
    std::vector<Tensor> heads;
    heads.reserve(p.heads);
    for (std::size_t h = 0; h < p.heads; ++h) {
        Tensor qh = slice_cols(tape, q, h * dk, (h + 1) * dk);
        Tensor kh = slice_cols(tape, k, h * dk, (h + 1) * dk);
        Tensor vh = slice_cols(tape, v, h * dv, (h + 1) * dv);
        heads.push_back(attention(tape, qh, kh, vh));
    }
    Tensor cat = concat_cols(tape, heads);
    return dense(tape, cat, p.Wo, p.bo);
}

/// Fused per-head attention for the first (ego) row only: projects the
/// sequence, attends with the ego token's query, and returns the concatenated
/// head outputs (1 x heads*d_v) *before* the Wo projection. One tape node
/// with a hand-written backward; the policy's hot path. Applying Wo/bo to the
/// result reproduces row 0 of multi_head_attention exactly.
inline Tensor mha_ego_context(Tape* tape, const Tensor& x, const MhaParams& p) {
    if (x.cols() != p.Wq.rows())
        throw std::invalid_argument("mha_ego_context: input width mismatch");
    const std::size_t s = x.rows(), din = x.cols();
    const std::size_t H = p.heads, dk = p.d_k(), dv = p.d_v();
    const std::size_t HK = H * dk, HV = H * dv;

    // q0 = x[0]*Wq + bq; K = x*Wk + bk; V = x*Wv + bv
    Tensor q0 = Tensor::zeros(1, HK);
    std::copy(p.bq.data(), p.bq.data() + HK, q0.data());
    gemm_acc(q0.data(), x.data(), p.Wq.data(), 1, din, HK);
    Tensor kmat = Tensor::zeros(s, HK);
    for (std::size_t r = 0; r < s; ++r)
        std::copy(p.bk.data(), p.bk.data() + HK, kmat.data() + r * HK);
    gemm_acc(kmat.data(), x.data(), p.Wk.data(), s, din, HK);
    Tensor vmat = Tensor::zeros(s, HV);
    for (std::size_t r = 0; r < s; ++r)
        std::copy(p.bv.data(), p.bv.data() + HV, vmat.data() + r * HV);
    gemm_acc(vmat.data(), x.data(), p.Wv.data(), s, din, HV);

    Tensor alpha = Tensor::zeros(H, s); // attention weights per head
    Tensor ctx = Tensor::zeros(1, HV);  // concatenated head outputs
    const real inv = real(1) / std::sqrt(static_cast<real>(dk));
    for (std::size_t h = 0; h < H; ++h) {
        real mx = -std::numeric_limits<real>::infinity();
        for (std::size_t j = 0; j < s; ++j) {
            real e = 0;
            const real* krow = kmat.data() + j * HK + h * dk;
            const real* qh = q0.data() + h * dk;
            for (std::size_t d = 0; d < dk; ++d) e += qh[d] * krow[d];
            e *= inv;
            alpha.at(h, j) = e;
            mx = std::max(mx, e);
        }
        real sum = 0;
        for (std::size_t j = 0; j < s; ++j) {
            real e = std::exp(alpha.at(h, j) - mx);
            alpha.at(h, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < s; ++j) {
            alpha.at(h, j) /= sum;
            const real* vrow = vmat.data() + j * HV + h * dv;
            real a = alpha.at(h, j);
            real* c = ctx.data() + h * dv;
            for (std::size_t d = 0; d < dv; ++d) c[d] += a * vrow[d];
        }
    }

    if (detail::track(tape, {&x, &p.Wq, &p.bq, &p.Wk, &p.bk, &p.Wv, &p.bv})) {
        ctx.set_requires_grad();
        Tensor X = x, Q0 = q0, K = kmat, V = vmat, AL = alpha, CTX = ctx;
        MhaParams P = p;
        tape->record([X, Q0, K, V, AL, CTX, P]() mutable {
            if (!CTX.has_grad()) return;
            const std::size_t s = X.rows(), din = X.cols();
            const std::size_t H = P.heads, dk = P.d_k(), dv = P.d_v();
            const std::size_t HK = H * dk, HV = H * dv;
            const real inv = real(1) / std::sqrt(static_cast<real>(dk));
            const real* dctx = CTX.grad_ref().data();

            std::vector<real> dq0(HK, 0), dK(s * HK, 0), dV(s * HV, 0);
            std::vector<real> dalpha(s), de(s);
            for (std::size_t h = 0; h < H; ++h) {
                // through ctx_h = sum_j alpha_j V_h[j]
                for (std::size_t j = 0; j < s; ++j) {
                    const real* vrow = V.data() + j * HV + h * dv;
                    real* dvrow = dV.data() + j * HV + h * dv;
                    const real* dc = dctx + h * dv;
                    real a = AL.at(h, j), da = 0;
                    for (std::size_t d = 0; d < dv; ++d) {
                        da += dc[d] * vrow[d];
                        dvrow[d] += a * dc[d];
                    }
                    dalpha[j] = da;
                }
                // softmax backward
                real dot = 0;
                for (std::size_t j = 0; j < s; ++j) dot += dalpha[j] * AL.at(h, j);
                for (std::size_t j = 0; j < s; ++j)
                    de[j] = (dalpha[j] - dot) * AL.at(h, j) * inv;
                // through e_j = q0_h . K_h[j]
                const real* qh = Q0.data() + h * dk;
                real* dqh = dq0.data() + h * dk;
                for (std::size_t j = 0; j < s; ++j) {
                    const real* krow = K.data() + j * HK + h * dk;
                    real* dkrow = dK.data() + j * HK + h * dk;
                    for (std::size_t d = 0; d < dk; ++d) {
                        dqh[d] += de[j] * krow[d];
                        dkrow[d] += de[j] * qh[d];
                    }
                }
            }

            if (P.Wq.requires_grad())
                gemm_tn_acc(P.Wq.grad().data(), X.data(), dq0.data(), 1, din, HK);
            if (P.bq.requires_grad()) {
                auto& g = P.bq.grad();
                for (std::size_t j = 0; j < HK; ++j) g[j] += dq0[j];
            }
            if (P.Wk.requires_grad())
                gemm_tn_acc(P.Wk.grad().data(), X.data(), dK.data(), s, din, HK);
            if (P.bk.requires_grad()) {
                auto& g = P.bk.grad();
                for (std::size_t r = 0; r < s; ++r)
                    for (std::size_t j = 0; j < HK; ++j) g[j] += dK[r * HK + j];
            }
            if (P.Wv.requires_grad())
                gemm_tn_acc(P.Wv.grad().data(), X.data(), dV.data(), s, din, HV);
            if (P.bv.requires_grad()) {
                auto& g = P.bv.grad();
                for (std::size_t r = 0; r < s; ++r)
                    for (std::size_t j = 0; j < HV; ++j) g[j] += dV[r * HV + j];
            }
            if (X.requires_grad()) {
                auto& gx = X.grad();
                gemm_nt_acc(gx.data(), dq0.data(), P.Wq.data(), 1, HK, din);
                gemm_nt_acc(gx.data(), dK.data(), P.Wk.data(), s, HK, din);
                gemm_nt_acc(gx.data(), dV.data(), P.Wv.data(), s, HV, din);
            }
        });
    }
    return ctx;
}

/// Row 0 of multi_head_attention via the fused ego-row path.
inline Tensor multi_head_attention_ego(Tape* tape, const Tensor& x, const MhaParams& p) {
    return dense(tape, mha_ego_context(tape, x, p), p.Wo, p.bo);
}

/// LSTM cell parameters; the four gates (input, forget, candidate, output)
/// are packed as column blocks of Wx (d x 4H), Wh (H x 4H), b (1 x 4H).
struct LstmParams {
    Tensor Wx, Wh, b;
    std::size_t hidden() const { return Wh.rows(); }
};

inline LstmParams make_lstm_params(std::size_t d_in, std::size_t hidden, Rng& rng,
                                   real forget_bias = real(1)) {
    LstmParams p;
    p.Wx = xavier_uniform(d_in, 4 * hidden, rng);
    p.Wh = xavier_uniform(hidden, 4 * hidden, rng);
    p.b = Tensor::zeros(1, 4 * hidden);
    for (std::size_t j = 0; j < hidden; ++j) p.b.at(0, hidden + j) = forget_bias;
    return p;
}

/// One gated recurrence step:
///   i,f,o = sigmoid(affine), g = tanh(affine), c' = f.c + i.g, h' = o.tanh(c').
inline std::pair<Tensor, Tensor> lstm_step(Tape* tape, const Tensor& x,
                                           const Tensor& h, const Tensor& c,
                                           const LstmParams& p) {
    const std::size_t H = p.hidden();
    if (x.rows() != 1 || h.rows() != 1 || c.rows() != 1 || h.cols() != H ||
        c.cols() != H || x.cols() != p.Wx.rows())
        throw std::invalid_argument("lstm_step: shape mismatch");

    Tensor z = Tensor::zeros(1, 4 * H);
    std::copy(p.b.data(), p.b.data() + 4 * H, z.data());
    gemm_acc(z.data(), x.data(), p.Wx.data(), 1, x.cols(), 4 * H);
    gemm_acc(z.data(), h.data(), p.Wh.data(), 1, H, 4 * H);

    Tensor gates = Tensor::zeros(1, 4 * H); // [i, f, g, o] post-activation
    for (std::size_t j = 0; j < H; ++j) {
        gates.at(0, j) = real(1) / (real(1) + std::exp(-z.at(0, j)));
        gates.at(0, H + j) = real(1) / (real(1) + std::exp(-z.at(0, H + j)));
        gates.at(0, 2 * H + j) = std::tanh(z.at(0, 2 * H + j));
        gates.at(0, 3 * H + j) = real(1) / (real(1) + std::exp(-z.at(0, 3 * H + j)));
    }
    Tensor c_new = Tensor::zeros(1, H), h_new = Tensor::zeros(1, H);
    Tensor tc = Tensor::zeros(1, H);
    for (std::size_t j = 0; j < H; ++j) {
        c_new.at(0, j) = gates.at(0, H + j) * c.at(0, j) + gates.at(0, j) * gates.at(0, 2 * H + j);
        tc.at(0, j) = std::tanh(c_new.at(0, j));
        h_new.at(0, j) = gates.at(0, 3 * H + j) * tc.at(0, j);
    }

    if (detail::track(tape, {&x, &h, &c, &p.Wx, &p.Wh, &p.b})) {
        h_new.set_requires_grad();
        c_new.set_requires_grad();
        Tensor X = x, Hprev = h, Cprev = c, G = gates, TC = tc, HN = h_new, CN = c_new;
        LstmParams P = p;
        tape->record([X, Hprev, Cprev, G, TC, HN, CN, P]() mutable {
            if (!HN.has_grad() && !CN.has_grad()) return;
            const std::size_t H = P.hidden();
            std::vector<real> dz(4 * H, 0);
            for (std::size_t j = 0; j < H; ++j) {
                real dh = HN.has_grad() ? HN.grad_ref()[j] : real(0);
                real dc = CN.has_grad() ? CN.grad_ref()[j] : real(0);
                real i = G.at(0, j), f = G.at(0, H + j);
                real g = G.at(0, 2 * H + j), o = G.at(0, 3 * H + j);
                real tc = TC.at(0, j);
                real dcc = dc + dh * o * (real(1) - tc * tc);
                dz[j] = dcc * g * i * (real(1) - i);
                dz[H + j] = dcc * Cprev.at(0, j) * f * (real(1) - f);
                dz[2 * H + j] = dcc * i * (real(1) - g * g);
                dz[3 * H + j] = dh * tc * o * (real(1) - o);
                if (Cprev.requires_grad()) Cprev.grad()[j] += dcc * f;
            }
            if (P.Wx.requires_grad())
                gemm_tn_acc(P.Wx.grad().data(), X.data(), dz.data(), 1, X.cols(), 4 * H);
            if (P.Wh.requires_grad())
                gemm_tn_acc(P.Wh.grad().data(), Hprev.data(), dz.data(), 1, H, 4 * H);
            if (P.b.requires_grad()) {
                auto& g = P.b.grad();
                for (std::size_t j = 0; j < 4 * H; ++j) g[j] += dz[j];
            }
            if (X.requires_grad())
                gemm_nt_acc(X.grad().data(), dz.data(), P.Wx.data(), 1, 4 * H, X.cols());
            if (Hprev.requires_grad())
                gemm_nt_acc(Hprev.grad().data(), dz.data(), P.Wh.data(), 1, 4 * H, H);
        });
    }
    return {h_new, c_new};
}

/// Gumbel-Softmax with explicit noise: y = softmax((logits + noise) / tau).
/// With hard=true the forward value is one-hot(argmax y) and the backward
/// pass uses the soft y (straight-through estimator).
inline Tensor gumbel_softmax_noise(Tape* tape, const Tensor& logits, real tau,
                                   const std::vector<real>& noise, bool hard) {
    if (tau <= real(0)) throw std::invalid_argument("gumbel_softmax: tau must be > 0");
    if (logits.rows() != 1 || noise.size() != logits.cols())
        throw std::invalid_argument("gumbel_softmax: logits must be 1 x n with matching noise");
    const std::size_t n = logits.cols();
    std::vector<real> soft(n);
    real mx = -std::numeric_limits<real>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
        soft[j] = (logits.at(0, j) + noise[j]) / tau;
        mx = std::max(mx, soft[j]);
    }
    real sum = 0;
    for (std::size_t j = 0; j < n; ++j) {
        soft[j] = std::exp(soft[j] - mx);
        sum += soft[j];
    }
    for (std::size_t j = 0; j < n; ++j) soft[j] /= sum;

    Tensor out = Tensor::zeros(1, n);
    if (hard) {
        std::size_t arg = 0;
        for (std::size_t j = 1; j < n; ++j)
            if (soft[j] > soft[arg]) arg = j;
        out.at(0, arg) = real(1);
    } else {
        std::copy(soft.begin(), soft.end(), out.data());
    }

    if (detail::track(tape, {&logits})) {
        out.set_requires_grad();
        Tensor L = logits, O = out;
        tape->record([L, O, soft, tau]() mutable {
            if (!O.has_grad()) return;
            const auto& d = O.grad_ref();
            auto& g = L.grad();
            real dot = 0;
            for (std::size_t j = 0; j < soft.size(); ++j) dot += d[j] * soft[j];
            for (std::size_t j = 0; j < soft.size(); ++j)
                g[j] += (d[j] - dot) * soft[j] / tau;
        });
    }
    return out;
}

inline std::vector<real> draw_gumbel_noise(Rng& rng, std::size_t n) {
    std::vector<real> noise(n);
    for (auto& v : noise) v = static_cast<real>(rng.gumbel());
    return noise;
}

inline Tensor gumbel_softmax(Tape* tape, const Tensor& logits, real tau, Rng& rng,
                             bool hard) {
    return gumbel_softmax_noise(tape, logits, tau,
                                draw_gumbel_noise(rng, logits.cols()), hard);
}

} // namespace dmca::tg
