#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "infotime/errors.hpp"

namespace infotime::numcore {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense 64-bit float tensor with shared, reference-counted storage.
///
/// A Tensor is a cheap-to-copy handle; copies alias the same buffer. The
/// gradient buffer is allocated lazily on first access and always matches
/// the value shape. Tensors produced by ops while a Tape is active are
/// marked grad-connected so backward() can reach them.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor from(Shape shape, std::vector<double> values);
    static Tensor scalar(double value);
    /// Leaf parameter: requires_grad = true.
    static Tensor param(Shape shape, std::vector<double> values);

    bool defined() const { return static_cast<bool>(d_); }
    const Shape& shape() const { return d_->shape; }
    std::size_t rank() const { return d_->shape.size(); }
    std::size_t numel() const { return d_->values.size(); }
    std::size_t dim(std::size_t i) const { return d_->shape.at(i); }

    // A Tensor is a handle: const applies to the handle, not the shared
    // buffers, so accessors below stay const like shared_ptr's. The
    // rvalue overloads are deleted: a span must not outlive its handle.
    std::span<double> values() const& { return d_->values; }
    std::span<double> values() const&& = delete;
    double* data() const& { return d_->values.data(); }
    double* data() const&& = delete;

    /// Value of a scalar tensor.
    double item() const;

    bool requires_grad() const { return d_->requires_grad; }
    bool grad_connected() const { return d_->grad_connected; }
    /// True if backward should propagate into this tensor.
    bool needs_grad() const { return d_->requires_grad || d_->grad_connected; }
    void mark_grad_connected() const { d_->grad_connected = true; }

    bool has_grad() const { return !d_->grad.empty(); }
    /// Gradient buffer; allocated zero-filled on first access.
    std::span<double> grad() const;
    std::span<const double> grad_view() const { return d_->grad; }
    void zero_grad() const;
    /// Drop the gradient buffer entirely.
    void clear_grad() const { d_->grad.clear(); }

    /// Deep copy of the values as a fresh leaf with no gradient link.
    Tensor detach() const;

    /// Identity of the underlying storage (for optimizer bookkeeping).
    const void* id() const { return d_.get(); }

private:
    struct Data {
        Shape shape;
        std::vector<double> values;
        std::vector<double> grad;
        bool requires_grad = false;
        bool grad_connected = false;
    };
    std::shared_ptr<Data> d_;

    explicit Tensor(std::shared_ptr<Data> d) : d_(std::move(d)) {}
    static Tensor make(Shape shape, std::vector<double> values, bool requires_grad);
};

/// Reverse-mode tape: records one node per primitive application, in
/// execution order, which is already a topological order of the graph.
class Tape {
public:
    /// Record a node. `output` is the tensor the op produced; `backward`
    /// reads output.grad and accumulates into the inputs' grads.
    void record(Tensor output, std::function<void()> backward);

    /// Reverse sweep from a scalar loss. Seeds d(loss)/d(loss) = 1 and
    /// visits nodes exactly once in reverse recording order. Gradient
    /// buffers of non-parameter intermediates are released as soon as
    /// they have been consumed, so repeated backward calls accumulate
    /// exactly one extra pass into the leaves.
    void backward(const Tensor& loss);

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    struct Node {
        Tensor output;
        std::function<void()> backward;
    };
    std::vector<Node> nodes_;
};

/// The tape ops currently record to, if any. Thread-local: each training
/// context runs on its own thread with its own tape.
Tape* active_tape();

/// RAII scope that installs a fresh tape as the active one.
class TapeScope {
public:
    TapeScope();
    ~TapeScope();
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

    Tape& tape() { return tape_; }

private:
    Tape tape_;
    Tape* previous_;
};

/// RAII scope that disables recording (inference / frozen submodules).
class NoGradScope {
public:
    NoGradScope();
    ~NoGradScope();
    NoGradScope(const NoGradScope&) = delete;
    NoGradScope& operator=(const NoGradScope&) = delete;

private:
    Tape* previous_;
};

} // namespace infotime::numcore
