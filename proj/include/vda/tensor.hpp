#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace vda {

// Dense 64-bit float array, rank 1 or 2, with optional gradient storage.
// Copies share the underlying buffers (value semantics over shared state),
// which is what lets tape closures hold cheap handles to operands.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols);            // zero-filled matrix
    explicit Tensor(std::size_t n);                        // zero-filled vector
    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    static Tensor scalar(double v);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return rows_ * cols_; }
    bool is_scalar() const { return size() == 1; }
    bool is_vector() const { return rows_ == 1; }

    double& at(std::size_t r, std::size_t c) { return (*values_)[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return (*values_)[r * cols_ + c]; }
    double& operator[](std::size_t i) { return (*values_)[i]; }
    double operator[](std::size_t i) const { return (*values_)[i]; }
    double item() const;

    std::vector<double>& values() { return *values_; }
    const std::vector<double>& values() const { return *values_; }
    double* data() { return values_->data(); }
    const double* data() const { return values_->data(); }

    bool has_grad() const { return grad_ != nullptr; }
    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    void ensure_grad();       // allocate (zeroed) grad buffer if absent
    void zero_grad();

    // Marks this tensor as a trainable leaf: ops involving it are recorded
    // on the active tape and backward() accumulates into its grad buffer.
    void set_parameter();
    bool is_parameter() const { return parameter_; }
    bool tracked() const { return tracked_; }
    void mark_tracked() { tracked_ = true; ensure_grad(); }

    bool all_finite() const;

    // Copy sharing the value buffer but stripped of parameter/tape status;
    // ops treat it as a constant.
    Tensor detached() const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::shared_ptr<std::vector<double>> values_;
    std::shared_ptr<std::vector<double>> grad_;
    bool parameter_ = false;
    bool tracked_ = false;  // participates in the active tape
};

// Define-by-run gradient tape. Rebuilt on every forward pass; single
// threaded, externally synchronized. At most one tape is active at a time.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();
    void record(std::function<void()> backward_step);
    std::size_t node_count() const { return nodes_.size(); }

    // Seeds the root with grad 1, runs recorded steps in reverse order and
    // clears the tape. Root must be scalar and recorded on this tape.
    void backward(Tensor& loss);

private:
    std::vector<std::function<void()>> nodes_;
    Tape* previous_ = nullptr;
};

// Runs backward on the active tape. Argument error if loss is not a scalar
// or no tape is active.
void backward(Tensor& loss);

// Suspends tape recording for the lifetime of the scope.
class NoGrad {
public:
    NoGrad();
    ~NoGrad();
    NoGrad(const NoGrad&) = delete;
    NoGrad& operator=(const NoGrad&) = delete;

private:
    Tape* saved_;
};

// --- kernels (all recorded on the active tape when operands are tracked) ---

Tensor add(const Tensor& a, const Tensor& b);        // same shape, or b is a row bias
Tensor sub(const Tensor& a, const Tensor& b);        // same shape
Tensor mul(const Tensor& a, const Tensor& b);        // elementwise, or b is a row vector
Tensor scale(const Tensor& a, double c);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor softmax(const Tensor& a);                     // row-wise, max-subtracted
Tensor log_floor(const Tensor& a);                   // log(max(x, 1e-12))
Tensor layer_norm(const Tensor& a);                  // row-wise, variance floor 1e-5, no affine
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);
Tensor row(const Tensor& a, std::size_t r);
Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t n);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor sum(const Tensor& a);                         // scalar
Tensor mean(const Tensor& a);                        // scalar

// -log softmax(logits)[label] via fused log-sum-exp; logits is a vector.
Tensor cross_entropy(const Tensor& logits, std::size_t label);

// Symmetric KL divergence between softmax(logits_p) and softmax(logits_q),
// probabilities floored at 1e-12 before the log. Composed from taped
// primitives, so gradients flow into both logit vectors.
Tensor sym_kl(const Tensor& logits_p, const Tensor& logits_q);

constexpr double kLayerNormEps = 1e-5;
constexpr double kProbFloor = 1e-12;

}  // namespace vda
