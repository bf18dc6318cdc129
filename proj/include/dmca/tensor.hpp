#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dmca::tg {

#ifdef DMCA_REAL32
using real = float;
#else
using real = double;
#endif

struct TensorData {
    std::size_t rows = 0, cols = 0;
    std::vector<real> value;
    std::vector<real> grad; ///< empty until backward touches it
    bool requires_grad = false;
};

/// Shared handle to an n-d (rank <= 2) numeric array with a gradient slot.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::size_t rows, std::size_t cols) {
        Tensor t;
        t.d_ = std::make_shared<TensorData>();
        t.d_->rows = rows;
        t.d_->cols = cols;
        t.d_->value.assign(rows * cols, real(0));
        return t;
    }

    static Tensor scalar(real v) {
        Tensor t = zeros(1, 1);
        t.d_->value[0] = v;
        return t;
    }

    static Tensor row(const std::vector<real>& vals) {
        Tensor t = zeros(1, vals.size());
        t.d_->value = vals;
        return t;
    }

    static Tensor from(std::size_t rows, std::size_t cols, std::vector<real> vals) {
        if (vals.size() != rows * cols)
            throw std::invalid_argument("Tensor::from: data length does not match shape");
        Tensor t;
        t.d_ = std::make_shared<TensorData>();
        t.d_->rows = rows;
        t.d_->cols = cols;
        t.d_->value = std::move(vals);
        return t;
    }

    bool defined() const { return static_cast<bool>(d_); }
    std::size_t rows() const { return d_->rows; }
    std::size_t cols() const { return d_->cols; }
    std::size_t size() const { return d_->value.size(); }

    real* data() { return d_->value.data(); }
    const real* data() const { return d_->value.data(); }
    std::vector<real>& values() { return d_->value; }
    const std::vector<real>& values() const { return d_->value; }

    real at(std::size_t r, std::size_t c) const { return d_->value[r * d_->cols + c]; }
    real& at(std::size_t r, std::size_t c) { return d_->value[r * d_->cols + c]; }
    real item() const {
        if (size() != 1) throw std::logic_error("item() on non-scalar tensor");
        return d_->value[0];
    }

    bool requires_grad() const { return d_->requires_grad; }
    Tensor& set_requires_grad(bool on = true) {
        d_->requires_grad = on;
        return *this;
    }

    bool has_grad() const { return !d_->grad.empty(); }
    std::vector<real>& grad() {
        ensure_grad();
        return d_->grad;
    }
    const std::vector<real>& grad_ref() const { return d_->grad; }
    void ensure_grad() {
        if (d_->grad.empty()) d_->grad.assign(d_->value.size(), real(0));
    }
    void zero_grad() {
        if (!d_->grad.empty()) d_->grad.assign(d_->value.size(), real(0));
    }

    bool same_data(const Tensor& o) const { return d_ == o.d_; }

private:
    std::shared_ptr<TensorData> d_;
};

// ---- dense kernels (row-major, contiguous inner loops) ----

/// C += A * B
inline void gemm_acc(real* C, const real* A, const real* B, std::size_t m,
                     std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const real* a = A + i * k;
        real* c = C + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            real av = a[p];
            if (av == real(0)) continue;
            const real* b = B + p * n;
            for (std::size_t j = 0; j < n; ++j) c[j] += av * b[j];
        }
    }
}

/// C += A * B^T  (A: m x k, B: n x k)
inline void gemm_nt_acc(real* C, const real* A, const real* B, std::size_t m,
                        std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const real* a = A + i * k;
        real* c = C + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const real* b = B + j * k;
            real s = 0;
            for (std::size_t p = 0; p < k; ++p) s += a[p] * b[p];
            c[j] += s;
        }
    }
}

/// C += A^T * B  (A: m x k, B: m x n, C: k x n)
inline void gemm_tn_acc(real* C, const real* A, const real* B, std::size_t m,
                        std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const real* a = A + i * k;
        const real* b = B + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            real av = a[p];
            if (av == real(0)) continue;
            real* c = C + p * n;
            for (std::size_t j = 0; j < n; ++j) c[j] += av * b[j];
        }
    }
}

/// Recorded operation graph for one forward pass. Nodes are appended in
/// creation order (a topological order); backward() visits them in reverse
/// exactly once.
class Tape {
public:
    void record(std::function<void()> backward_fn) {
        nodes_.push_back(std::move(backward_fn));
    }

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

    /// Seed d(loss)/d(loss) = 1 and run all recorded backward functions in
    /// reverse order, accumulating into the .grad of every reachable tensor.
    void backward(Tensor loss) {
        if (loss.size() != 1)
            throw std::invalid_argument("backward: loss must be a scalar tensor");
        loss.grad()[0] += real(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    }

private:
    std::vector<std::function<void()>> nodes_;
};

namespace detail {
inline bool track(const Tape* tape, std::initializer_list<const Tensor*> ins) {
    if (!tape) return false;
    for (const Tensor* t : ins)
        if (t->requires_grad()) return true;
    return false;
}
} // namespace detail

// ---- primitive operations ----

inline Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner extents mismatch (" +
                                    std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.rows()) + ")");
    Tensor out = Tensor::zeros(a.rows(), b.cols());
    gemm_acc(out.data(), a.data(), b.data(), a.rows(), a.cols(), b.cols());
    if (detail::track(tape, {&a, &b})) {
        out.set_requires_grad();
        Tensor A = a, B = b, O = out;
        tape->record([A, B, O]() mutable {
            if (!O.has_grad()) return;
            const real* d = O.grad_ref().data();
            if (A.requires_grad())
                gemm_nt_acc(A.grad().data(), d, B.data(), A.rows(), B.cols(), A.cols());
            if (B.requires_grad())
                gemm_tn_acc(B.grad().data(), A.data(), d, A.rows(), A.cols(), B.cols());
        });
    }
    return out;
}

/// a * b^T without materializing the transpose.
inline Tensor matmul_nt(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.cols() != b.cols())
        throw std::invalid_argument("matmul_nt: inner extents mismatch");
    Tensor out = Tensor::zeros(a.rows(), b.rows());
    gemm_nt_acc(out.data(), a.data(), b.data(), a.rows(), a.cols(), b.rows());
    if (detail::track(tape, {&a, &b})) {
        out.set_requires_grad();
        Tensor A = a, B = b, O = out;
        tape->record([A, B, O]() mutable {
            if (!O.has_grad()) return;
            const real* d = O.grad_ref().data();
            if (A.requires_grad())
                gemm_acc(A.grad().data(), d, B.data(), A.rows(), B.rows(), A.cols());
            if (B.requires_grad())
                gemm_tn_acc(B.grad().data(), d, A.data(), A.rows(), B.rows(), A.cols());
        });
    }
    return out;
}

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

inline Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor out = Tensor::zeros(a.rows(), a.cols());
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = a.data()[i] + b.data()[i];
    if (detail::track(tape, {&a, &b})) {
        out.set_requires_grad();
        Tensor A = a, B = b, O = out;
        tape->record([A, B, O]() mutable {
            if (!O.has_grad()) return;
            const auto& d = O.grad_ref();
            if (A.requires_grad()) {
                auto& g = A.grad();
                for (std::size_t i = 0; i < d.size(); ++i) g[i] += d[i];
            }
            if (B.requires_grad()) {
                auto& g = B.grad();
                for (std::size_t i = 0; i < d.size(); ++i) g[i] += d[i];
            }
        });
    }
    return out;
}

inline Tensor sub(Tape* tape, const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    Tensor out = Tensor::zeros(a.rows(), a.cols());
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = a.data()[i] - b.data()[i];
    if (detail::track(tape, {&a, &b})) {
        out.set_requires_grad();
        Tensor A = a, B = b, O = out;
        tape->record([A, B, O]() mutable {
            if (!O.has_grad()) return;
            const auto& d = O.grad_ref();
            if (A.requires_grad()) {
                auto& g = A.grad();
                for (std::size_t i = 0; i < d.size(); ++i) g[i] += d[i];
            }
            if (B.requires_grad()) {
                auto& g = B.grad();
                for (std::size_t i = 0; i < d.size(); ++i) g[i] -= d[i];
            }
        });
    }
    return out;
}

inline Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    Tensor out = Tensor::zeros(a.rows(), a.cols());
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = a.data()[i] * b.data()[i];
    if (detail::track(tape, {&a, &b})) {
        out.set_requires_grad();
        Tensor A = a, B = b, O = out;
        tape->record([A, B, O]() mutable {
            if (!O.has_grad()) return;
            const auto& d = O.grad_ref();
            if (A.requires_grad()) {
                auto& g = A.grad();
                for (std::size_t i = 0; i < d.size(); ++i) g[i] += d[i] * B.data()[i];
            }
            if (B.requires_grad()) {
                auto& g = B.grad();
                for (std::size_t i = 0; i < d.size(); ++i) g[i] += d[i] * A.data()[i];
            }
        });
    }
    return out;
}

inline Tensor scale(Tape* tape, const Tensor& a, real s) {
    Tensor out = Tensor::zeros(a.rows(), a.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a.data()[i] * s;
    if (detail::track(tape, {&a})) {
        out.set_requires_grad();
        Tensor A = a, O = out;
        tape->record([A, O, s]() mutable {
            if (!O.has_grad()) return;
            const auto& d = O.grad_ref();
            auto& g = A.grad();
            for (std::size_t i = 0; i < d.size(); ++i) g[i] += d[i] * s;
        });
    }
    return out;
}

/// X (m x n) + b broadcast over rows (b: 1 x n).
inline Tensor add_rowvec(Tape* tape, const Tensor& x, const Tensor& b) {
    if (b.rows() != 1 || b.cols() != x.cols())
        throw std::invalid_argument("add_rowvec: bias must be 1 x cols(x)");
    Tensor out = Tensor::zeros(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c)
            out.at(r, c) = x.at(r, c) + b.at(0, c);
    if (detail::track(tape, {&x, &b})) {
        out.set_requires_grad();
        Tensor X = x, B = b, O = out;
        tape->record([X, B, O]() mutable {
            if (!O.has_grad()) return;
            const auto& d = O.grad_ref();
            if (X.requires_grad()) {
                auto& g = X.grad();
                for (std::size_t i = 0; i < d.size(); ++i) g[i] += d[i];
            }
            if (B.requires_grad()) {
                auto& g = B.grad();
                std::size_t n = X.cols();
                for (std::size_t r = 0; r < X.rows(); ++r)
                    for (std::size_t c = 0; c < n; ++c) g[c] += d[r * n + c];
            }
        });
    }
    return out;
}

template <typename Fwd, typename Dfwd>
inline Tensor unary_elemwise(Tape* tape, const Tensor& a, Fwd f, Dfwd df) {
    Tensor out = Tensor::zeros(a.rows(), a.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = f(a.data()[i]);
    if (detail::track(tape, {&a})) {
        out.set_requires_grad();
        Tensor A = a, O = out;
        tape->record([A, O, df]() mutable {
            if (!O.has_grad()) return;
            const auto& d = O.grad_ref();
            auto& g = A.grad();
            for (std::size_t i = 0; i < d.size(); ++i)
                g[i] += d[i] * df(A.data()[i], O.data()[i]);
        });
    }
    return out;
}

inline Tensor relu(Tape* tape, const Tensor& a) {
    return unary_elemwise(
        tape, a, [](real v) { return v > real(0) ? v : real(0); },
        [](real v, real) { return v > real(0) ? real(1) : real(0); });
}

inline Tensor tanh_op(Tape* tape, const Tensor& a) {
    return unary_elemwise(
        tape, a, [](real v) { return std::tanh(v); },
        [](real, real y) { return real(1) - y * y; });
}

inline Tensor sigmoid(Tape* tape, const Tensor& a) {
    return unary_elemwise(
        tape, a, [](real v) { return real(1) / (real(1) + std::exp(-v)); },
        [](real, real y) { return y * (real(1) - y); });
}

inline Tensor log_op(Tape* tape, const Tensor& a) {
    return unary_elemwise(
        tape, a, [](real v) { return std::log(v); },
        [](real v, real) { return real(1) / v; });
}

/// Row-wise softmax, stabilized by max subtraction.
inline Tensor softmax_rows(Tape* tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        real mx = -std::numeric_limits<real>::infinity();
        for (std::size_t c = 0; c < x.cols(); ++c) mx = std::max(mx, x.at(r, c));
        real sum = 0;
        for (std::size_t c = 0; c < x.cols(); ++c) {
            real e = std::exp(x.at(r, c) - mx);
            out.at(r, c) = e;
            sum += e;
        }
        for (std::size_t c = 0; c < x.cols(); ++c) out.at(r, c) /= sum;
    }
    if (detail::track(tape, {&x})) {
        out.set_requires_grad();
        Tensor X = x, O = out;
        tape->record([X, O]() mutable {
            if (!O.has_grad()) return;
            const auto& d = O.grad_ref();
            auto& g = X.grad();
            std::size_t n = X.cols();
            for (std::size_t r = 0; r < X.rows(); ++r) {
                real dot = 0;
                for (std::size_t c = 0; c < n; ++c)
                    dot += d[r * n + c] * O.data()[r * n + c];
                for (std::size_t c = 0; c < n; ++c)
                    g[r * n + c] += (d[r * n + c] - dot) * O.data()[r * n + c];
            }
        });
    }
    return out;
}

/// Row-wise log-softmax (stable log of softmax).
inline Tensor log_softmax_rows(Tape* tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        real mx = -std::numeric_limits<real>::infinity();
        for (std::size_t c = 0; c < x.cols(); ++c) mx = std::max(mx, x.at(r, c));
        real sum = 0;
        for (std::size_t c = 0; c < x.cols(); ++c) sum += std::exp(x.at(r, c) - mx);
        real lse = mx + std::log(sum);
        for (std::size_t c = 0; c < x.cols(); ++c) out.at(r, c) = x.at(r, c) - lse;
    }
    if (detail::track(tape, {&x})) {
        out.set_requires_grad();
        Tensor X = x, O = out;
        tape->record([X, O]() mutable {
            if (!O.has_grad()) return;
            const auto& d = O.grad_ref();
            auto& g = X.grad();
            std::size_t n = X.cols();
            for (std::size_t r = 0; r < X.rows(); ++r) {
                real dsum = 0;
                for (std::size_t c = 0; c < n; ++c) dsum += d[r * n + c];
                for (std::size_t c = 0; c < n; ++c)
                    g[r * n + c] += d[r * n + c] - std::exp(O.data()[r * n + c]) * dsum;
            }
        });
    }
    return out;
}

/// Columns [c0, c1) as a copy.
inline Tensor slice_cols(Tape* tape, const Tensor& x, std::size_t c0, std::size_t c1) {
    if (c0 > c1 || c1 > x.cols()) throw std::invalid_argument("slice_cols: bad range");
    Tensor out = Tensor::zeros(x.rows(), c1 - c0);
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = c0; c < c1; ++c) out.at(r, c - c0) = x.at(r, c);
    if (detail::track(tape, {&x})) {
        out.set_requires_grad();
        Tensor X = x, O = out;
        tape->record([X, O, c0]() mutable {
            if (!O.has_grad()) return;
            auto& g = X.grad();
            const auto& d = O.grad_ref();
            for (std::size_t r = 0; r < O.rows(); ++r)
                for (std::size_t c = 0; c < O.cols(); ++c)
                    g[r * X.cols() + c0 + c] += d[r * O.cols() + c];
        });
    }
    return out;
}

/// Single row as a 1 x n copy.
inline Tensor slice_row(Tape* tape, const Tensor& x, std::size_t r) {
    if (r >= x.rows()) throw std::invalid_argument("slice_row: row out of range");
    Tensor out = Tensor::zeros(1, x.cols());
    for (std::size_t c = 0; c < x.cols(); ++c) out.at(0, c) = x.at(r, c);
    if (detail::track(tape, {&x})) {
        out.set_requires_grad();
        Tensor X = x, O = out;
        tape->record([X, O, r]() mutable {
            if (!O.has_grad()) return;
            auto& g = X.grad();
            const auto& d = O.grad_ref();
            for (std::size_t c = 0; c < O.cols(); ++c) g[r * X.cols() + c] += d[c];
        });
    }
    return out;
}

/// Horizontal concatenation of tensors with equal row counts.
inline Tensor concat_cols(Tape* tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
    std::size_t rows = parts[0].rows(), cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
        cols += p.cols();
    }
    Tensor out = Tensor::zeros(rows, cols);
    std::size_t off = 0;
    for (const auto& p : parts) {
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < p.cols(); ++c)
                out.at(r, off + c) = p.at(r, c);
        off += p.cols();
    }
    bool need = false;
    for (const auto& p : parts) need = need || (tape && p.requires_grad());
    if (need) {
        out.set_requires_grad();
        std::vector<Tensor> P = parts;
        Tensor O = out;
        tape->record([P, O]() mutable {
            if (!O.has_grad()) return;
            const auto& d = O.grad_ref();
            std::size_t off = 0;
            for (auto& p : P) {
                if (p.requires_grad()) {
                    auto& g = p.grad();
                    for (std::size_t r = 0; r < p.rows(); ++r)
                        for (std::size_t c = 0; c < p.cols(); ++c)
                            g[r * p.cols() + c] += d[r * O.cols() + off + c];
                }
                off += p.cols();
            }
        });
    }
    return out;
}

/// Vertical concatenation (equal column counts).
inline Tensor concat_rows(Tape* tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
    std::size_t cols = parts[0].cols(), rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != cols) throw std::invalid_argument("concat_rows: col mismatch");
        rows += p.rows();
    }
    Tensor out = Tensor::zeros(rows, cols);
    std::size_t off = 0;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < p.size(); ++i) out.data()[off + i] = p.data()[i];
        off += p.size();
    }
    bool need = false;
    for (const auto& p : parts) need = need || (tape && p.requires_grad());
    if (need) {
        out.set_requires_grad();
        std::vector<Tensor> P = parts;
        Tensor O = out;
        tape->record([P, O]() mutable {
            if (!O.has_grad()) return;
            const auto& d = O.grad_ref();
            std::size_t off = 0;
            for (auto& p : P) {
                if (p.requires_grad()) {
                    auto& g = p.grad();
                    for (std::size_t i = 0; i < p.size(); ++i) g[i] += d[off + i];
                }
                off += p.size();
            }
        });
    }
    return out;
}

/// Sum of all entries as a 1x1 tensor.
inline Tensor sum_all(Tape* tape, const Tensor& x) {
    real s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x.data()[i];
    Tensor out = Tensor::scalar(s);
    if (detail::track(tape, {&x})) {
        out.set_requires_grad();
        Tensor X = x, O = out;
        tape->record([X, O]() mutable {
            if (!O.has_grad()) return;
            real d = O.grad_ref()[0];
            auto& g = X.grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += d;
        });
    }
    return out;
}

/// Row sums as an m x 1 tensor.
inline Tensor sum_rows(Tape* tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.rows(), 1);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        real s = 0;
        for (std::size_t c = 0; c < x.cols(); ++c) s += x.at(r, c);
        out.at(r, 0) = s;
    }
    if (detail::track(tape, {&x})) {
        out.set_requires_grad();
        Tensor X = x, O = out;
        tape->record([X, O]() mutable {
            if (!O.has_grad()) return;
            const auto& d = O.grad_ref();
            auto& g = X.grad();
            for (std::size_t r = 0; r < X.rows(); ++r)
                for (std::size_t c = 0; c < X.cols(); ++c)
                    g[r * X.cols() + c] += d[r];
        });
    }
    return out;
}

/// Multiply every entry by a 1x1 scalar tensor.
inline Tensor scale_by(Tape* tape, const Tensor& x, const Tensor& s) {
    if (s.size() != 1) throw std::invalid_argument("scale_by: s must be scalar");
    Tensor out = Tensor::zeros(x.rows(), x.cols());
    real sv = s.item();
    for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = x.data()[i] * sv;
    if (detail::track(tape, {&x, &s})) {
        out.set_requires_grad();
        Tensor X = x, S = s, O = out;
        tape->record([X, S, O]() mutable {
            if (!O.has_grad()) return;
            const auto& d = O.grad_ref();
            if (X.requires_grad()) {
                auto& g = X.grad();
                real sv = S.item();
                for (std::size_t i = 0; i < d.size(); ++i) g[i] += d[i] * sv;
            }
            if (S.requires_grad()) {
                real acc = 0;
                for (std::size_t i = 0; i < d.size(); ++i) acc += d[i] * X.data()[i];
                S.grad()[0] += acc;
            }
        });
    }
    return out;
}

/// Pick one column entry per row: out[r, 0] = x[r, idx[r]].
inline Tensor gather_cols(Tape* tape, const Tensor& x, const std::vector<std::size_t>& idx) {
    if (idx.size() != x.rows()) throw std::invalid_argument("gather_cols: one index per row");
    Tensor out = Tensor::zeros(x.rows(), 1);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        if (idx[r] >= x.cols()) throw std::invalid_argument("gather_cols: index out of range");
        out.at(r, 0) = x.at(r, idx[r]);
    }
    if (detail::track(tape, {&x})) {
        out.set_requires_grad();
        Tensor X = x, O = out;
        std::vector<std::size_t> I = idx;
        tape->record([X, O, I]() mutable {
            if (!O.has_grad()) return;
            auto& g = X.grad();
            const auto& d = O.grad_ref();
            for (std::size_t r = 0; r < X.rows(); ++r) g[r * X.cols() + I[r]] += d[r];
        });
    }
    return out;
}

/// Single element (r, c) as a scalar tensor.
inline Tensor elem(Tape* tape, const Tensor& x, std::size_t r, std::size_t c) {
    if (r >= x.rows() || c >= x.cols()) throw std::invalid_argument("elem: out of range");
    Tensor out = Tensor::scalar(x.at(r, c));
    if (detail::track(tape, {&x})) {
        out.set_requires_grad();
        Tensor X = x, O = out;
        tape->record([X, O, r, c]() mutable {
            if (!O.has_grad()) return;
            X.grad()[r * X.cols() + c] += O.grad_ref()[0];
        });
    }
    return out;
}

} // namespace dmca::tg
