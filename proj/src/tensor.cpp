#include "vda/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vda/errors.hpp"

namespace vda {

namespace {

Tape* g_active_tape = nullptr;

bool trackable(const Tensor& t) {
    return t.is_parameter() || t.tracked();
}

void check_finite(const Tensor& t, const char* op) {
    if (!t.all_finite()) throw NumericError(std::string(op) + ": non-finite input");
}

}  // namespace

// ---------------------------------------------------------------- Tensor

Tensor::Tensor(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(std::make_shared<std::vector<double>>(rows * cols, 0.0)) {}

Tensor::Tensor(std::size_t n) : Tensor(1, n) {}

Tensor Tensor::vector(std::vector<double> values) {
    Tensor t;
    t.rows_ = 1;
    t.cols_ = values.size();
    t.values_ = std::make_shared<std::vector<double>>(std::move(values));
    return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    if (values.size() != rows * cols)
        throw ArgumentError("Tensor::matrix: value count does not match shape");
    Tensor t;
    t.rows_ = rows;
    t.cols_ = cols;
    t.values_ = std::make_shared<std::vector<double>>(std::move(values));
    return t;
}

Tensor Tensor::scalar(double v) {
    return vector({v});
}

double Tensor::item() const {
    if (!is_scalar()) throw ArgumentError("Tensor::item: tensor is not scalar");
    return (*values_)[0];
}

std::vector<double>& Tensor::grad() {
    if (!grad_) throw StateError("Tensor::grad: no gradient buffer");
    return *grad_;
}

const std::vector<double>& Tensor::grad() const {
    if (!grad_) throw StateError("Tensor::grad: no gradient buffer");
    return *grad_;
}

void Tensor::ensure_grad() {
    if (!grad_) grad_ = std::make_shared<std::vector<double>>(size(), 0.0);
}

void Tensor::zero_grad() {
    if (grad_) std::fill(grad_->begin(), grad_->end(), 0.0);
}

void Tensor::set_parameter() {
    parameter_ = true;
    ensure_grad();
}

bool Tensor::all_finite() const {
    for (double v : *values_)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor Tensor::detached() const {
    Tensor t = *this;
    t.parameter_ = false;
    t.tracked_ = false;
    t.grad_ = nullptr;
    return t;
}

NoGrad::NoGrad() : saved_(g_active_tape) {
    g_active_tape = nullptr;
}

NoGrad::~NoGrad() {
    g_active_tape = saved_;
}

// ------------------------------------------------------------------ Tape

Tape::Tape() : previous_(g_active_tape) {
    g_active_tape = this;
}

Tape::~Tape() {
    g_active_tape = previous_;
}

Tape* Tape::active() {
    return g_active_tape;
}

void Tape::record(std::function<void()> backward_step) {
    nodes_.push_back(std::move(backward_step));
}

void Tape::backward(Tensor& loss) {
    if (!loss.is_scalar()) throw ArgumentError("backward: loss must be scalar");
    if (!loss.tracked()) throw ArgumentError("backward: loss is not on the tape");
    loss.grad()[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    nodes_.clear();
}

void backward(Tensor& loss) {
    if (!Tape::active()) throw StateError("backward: no active tape");
    Tape::active()->backward(loss);
}

// --------------------------------------------------------------- kernels

namespace {

// Prepares the result of an op over the given inputs; returns true when the
// op must be recorded.
bool setup(Tensor& out, std::initializer_list<const Tensor*> inputs) {
    if (!Tape::active()) return false;
    for (const Tensor* t : inputs) {
        if (trackable(*t)) {
            out.mark_tracked();
            return true;
        }
    }
    return false;
}

void record(std::function<void()> fn) {
    Tape::active()->record(std::move(fn));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    const bool bias = b.rows() == 1 && a.rows() > 1 && b.cols() == a.cols();
    if (!bias && (a.rows() != b.rows() || a.cols() != b.cols()))
        throw ArgumentError("add: shape mismatch");
    Tensor out(a.rows(), a.cols());
    const std::size_t n = a.size(), c = a.cols();
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[bias ? i % c : i];
    if (setup(out, {&a, &b})) {
        record([a = a, b = b, out = out, bias, n, c]() mutable {
            const auto& g = out.grad();
            if (trackable(a)) {
                auto& ga = a.grad();
                for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
            }
            if (trackable(b)) {
                auto& gb = b.grad();
                for (std::size_t i = 0; i < n; ++i) gb[bias ? i % c : i] += g[i];
            }
        });
    }
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ArgumentError("sub: shape mismatch");
    Tensor out(a.rows(), a.cols());
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
    if (setup(out, {&a, &b})) {
        record([a = a, b = b, out = out, n]() mutable {
            const auto& g = out.grad();
            if (trackable(a))
                for (std::size_t i = 0; i < n; ++i) a.grad()[i] += g[i];
            if (trackable(b))
                for (std::size_t i = 0; i < n; ++i) b.grad()[i] -= g[i];
        });
    }
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    const bool rowb = b.rows() == 1 && a.rows() > 1 && b.cols() == a.cols();
    if (!rowb && (a.rows() != b.rows() || a.cols() != b.cols()))
        throw ArgumentError("mul: shape mismatch");
    Tensor out(a.rows(), a.cols());
    const std::size_t n = a.size(), c = a.cols();
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[rowb ? i % c : i];
    if (setup(out, {&a, &b})) {
        record([a = a, b = b, out = out, rowb, n, c]() mutable {
            const auto& g = out.grad();
            if (trackable(a))
                for (std::size_t i = 0; i < n; ++i) a.grad()[i] += g[i] * b[rowb ? i % c : i];
            if (trackable(b))
                for (std::size_t i = 0; i < n; ++i) b.grad()[rowb ? i % c : i] += g[i] * a[i];
        });
    }
    return out;
}

Tensor scale(const Tensor& a, double c) {
    Tensor out(a.rows(), a.cols());
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * c;
    if (setup(out, {&a})) {
        record([a = a, out = out, c, n]() mutable {
            const auto& g = out.grad();
            for (std::size_t i = 0; i < n; ++i) a.grad()[i] += g[i] * c;
        });
    }
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) throw ArgumentError("matmul: inner dimensions differ");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out(m, n);
    {
        const double* pa = a.data();
        const double* pb = b.data();
        double* pc = out.data();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
                const double av = pa[i * k + p];
                const double* pbrow = pb + p * n;
                double* pcrow = pc + i * n;
                for (std::size_t j = 0; j < n; ++j) pcrow[j] += av * pbrow[j];
            }
    }
    if (setup(out, {&a, &b})) {
        record([a = a, b = b, out = out, m, k, n]() mutable {
            const double* g = out.grad().data();
            if (trackable(a)) {
                // dA += G * B^T
                double* ga = a.grad().data();
                const double* pb = b.data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        double acc = 0;
                        const double* grow = g + i * n;
                        const double* brow = pb + p * n;
                        for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                        ga[i * k + p] += acc;
                    }
            }
            if (trackable(b)) {
                // dB += A^T * G
                double* gb = b.grad().data();
                const double* pa = a.data();
                for (std::size_t i = 0; i < m; ++i) {
                    const double* grow = g + i * n;
                    for (std::size_t p = 0; p < k; ++p) {
                        const double av = pa[i * k + p];
                        double* gbrow = gb + p * n;
                        for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
                    }
                }
            }
        });
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    Tensor out(n, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
    if (setup(out, {&a})) {
        record([a = a, out = out, m, n]() mutable {
            const auto& g = out.grad();
            auto& ga = a.grad();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
        });
    }
    return out;
}

Tensor relu(const Tensor& a) {
    Tensor out(a.rows(), a.cols());
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] > 0 ? a[i] : 0.0;
    if (setup(out, {&a})) {
        record([a = a, out = out, n]() mutable {
            const auto& g = out.grad();
            for (std::size_t i = 0; i < n; ++i)
                if (a[i] > 0) a.grad()[i] += g[i];
        });
    }
    return out;
}

Tensor softmax(const Tensor& a) {
    check_finite(a, "softmax");
    const std::size_t m = a.rows(), n = a.cols();
    Tensor out(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        double mx = a.at(i, 0);
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, a.at(i, j));
        double z = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const double e = std::exp(a.at(i, j) - mx);
            out.at(i, j) = e;
            z += e;
        }
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) /= z;
    }
    if (setup(out, {&a})) {
        record([a = a, out = out, m, n]() mutable {
            // dx = p * (g - <g, p>) per row
            const auto& g = out.grad();
            auto& ga = a.grad();
            for (std::size_t i = 0; i < m; ++i) {
                double dot = 0;
                for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * out.at(i, j);
                for (std::size_t j = 0; j < n; ++j)
                    ga[i * n + j] += out.at(i, j) * (g[i * n + j] - dot);
            }
        });
    }
    return out;
}

Tensor log_floor(const Tensor& a) {
    Tensor out(a.rows(), a.cols());
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) out[i] = std::log(std::max(a[i], kProbFloor));
    if (setup(out, {&a})) {
        record([a = a, out = out, n]() mutable {
            const auto& g = out.grad();
            for (std::size_t i = 0; i < n; ++i)
                if (a[i] > kProbFloor) a.grad()[i] += g[i] / a[i];
        });
    }
    return out;
}

Tensor layer_norm(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    Tensor out(m, n);
    std::vector<double> inv_std(m);
    for (std::size_t i = 0; i < m; ++i) {
        double mu = 0;
        for (std::size_t j = 0; j < n; ++j) mu += a.at(i, j);
        mu /= static_cast<double>(n);
        double var = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = a.at(i, j) - mu;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double s = 1.0 / std::sqrt(var + kLayerNormEps);
        inv_std[i] = s;
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) = (a.at(i, j) - mu) * s;
    }
    if (setup(out, {&a})) {
        record([a = a, out = out, inv_std = std::move(inv_std), m, n]() mutable {
            const auto& g = out.grad();
            auto& ga = a.grad();
            const double dn = static_cast<double>(n);
            for (std::size_t i = 0; i < m; ++i) {
                double gmean = 0, gymean = 0;
                for (std::size_t j = 0; j < n; ++j) {
                    gmean += g[i * n + j];
                    gymean += g[i * n + j] * out.at(i, j);
                }
                gmean /= dn;
                gymean /= dn;
                for (std::size_t j = 0; j < n; ++j)
                    ga[i * n + j] +=
                        inv_std[i] * (g[i * n + j] - gmean - out.at(i, j) * gymean);
            }
        });
    }
    return out;
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
    const std::size_t d = table.cols();
    for (int id : ids)
        if (id < 0 || static_cast<std::size_t>(id) >= table.rows())
            throw ArgumentError("embedding_lookup: id out of range: " + std::to_string(id));
    Tensor out(ids.size(), d);
    for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) out.at(i, j) = table.at(ids[i], j);
    if (setup(out, {&table})) {
        record([table = table, out = out, ids, d]() mutable {
            const auto& g = out.grad();
            auto& gt = table.grad();
            for (std::size_t i = 0; i < ids.size(); ++i)
                for (std::size_t j = 0; j < d; ++j)
                    gt[static_cast<std::size_t>(ids[i]) * d + j] += g[i * d + j];
        });
    }
    return out;
}

Tensor row(const Tensor& a, std::size_t r) {
    if (r >= a.rows()) throw ArgumentError("row: index out of range");
    const std::size_t n = a.cols();
    Tensor out(1, n);
    for (std::size_t j = 0; j < n; ++j) out[j] = a.at(r, j);
    if (setup(out, {&a})) {
        record([a = a, out = out, r, n]() mutable {
            const auto& g = out.grad();
            for (std::size_t j = 0; j < n; ++j) a.grad()[r * n + j] += g[j];
        });
    }
    return out;
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t n) {
    if (start + n > a.cols()) throw ArgumentError("slice_cols: range out of bounds");
    const std::size_t m = a.rows();
    Tensor out(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) = a.at(i, start + j);
    if (setup(out, {&a})) {
        record([a = a, out = out, start, m, n]() mutable {
            const auto& g = out.grad();
            auto& ga = a.grad();
            const std::size_t ac = a.cols();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) ga[i * ac + start + j] += g[i * n + j];
        });
    }
    return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ArgumentError("concat_cols: no parts");
    const std::size_t m = parts[0].rows();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.rows() != m) throw ArgumentError("concat_cols: row counts differ");
        total += p.cols();
    }
    Tensor out(m, total);
    std::size_t off = 0;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < p.cols(); ++j) out.at(i, off + j) = p.at(i, j);
        off += p.cols();
    }
    bool track = false;
    if (Tape::active())
        for (const auto& p : parts)
            if (trackable(p)) track = true;
    if (track) {
        out.mark_tracked();
        record([parts = parts, out = out, m, total]() mutable {
            const auto& g = out.grad();
            std::size_t off = 0;
            for (auto& p : parts) {
                if (trackable(p)) {
                    auto& gp = p.grad();
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < p.cols(); ++j)
                            gp[i * p.cols() + j] += g[i * total + off + j];
                }
                off += p.cols();
            }
        });
    }
    return out;
}

Tensor sum(const Tensor& a) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i];
    Tensor out = Tensor::scalar(s);
    if (setup(out, {&a})) {
        record([a = a, out = out]() mutable {
            const double g = out.grad()[0];
            for (std::size_t i = 0; i < a.size(); ++i) a.grad()[i] += g;
        });
    }
    return out;
}

Tensor mean(const Tensor& a) {
    return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor cross_entropy(const Tensor& logits, std::size_t label) {
    if (logits.rows() != 1) throw ArgumentError("cross_entropy: logits must be a vector");
    const std::size_t c = logits.cols();
    if (label >= c) throw ArgumentError("cross_entropy: label out of range");
    check_finite(logits, "cross_entropy");
    double mx = logits[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits[j]);
    double z = 0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(logits[j] - mx);
    const double lse = mx + std::log(z);
    Tensor out = Tensor::scalar(lse - logits[label]);
    if (setup(out, {&logits})) {
        record([logits = logits, out = out, label, mx, z, c]() mutable {
            // d/dlogits = softmax(logits) - onehot(label)
            const double g = out.grad()[0];
            auto& gl = logits.grad();
            for (std::size_t j = 0; j < c; ++j) {
                double p = std::exp(logits[j] - mx) / z;
                gl[j] += g * (p - (j == label ? 1.0 : 0.0));
            }
        });
    }
    return out;
}

Tensor sym_kl(const Tensor& logits_p, const Tensor& logits_q) {
    if (logits_p.rows() != 1 || logits_q.rows() != 1 || logits_p.cols() != logits_q.cols())
        throw ArgumentError("sym_kl: logit vectors must share shape");
    check_finite(logits_p, "sym_kl");
    check_finite(logits_q, "sym_kl");
    Tensor p = softmax(logits_p);
    Tensor q = softmax(logits_q);
    // KL(p||q) + KL(q||p) = sum((p - q) * (log p - log q))
    return sum(mul(sub(p, q), sub(log_floor(p), log_floor(q))));
}

}  // namespace vda
