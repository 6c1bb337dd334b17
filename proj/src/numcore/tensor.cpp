#include "infotime/numcore/tensor.hpp"

#include <numeric>
#include <sstream>

namespace infotime::numcore {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor Tensor::make(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != values.size())
        throw ShapeError("tensor: shape " + shape_str(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
    auto d = std::make_shared<Data>();
    d->shape = std::move(shape);
    d->values = std::move(values);
    d->requires_grad = requires_grad;
    return Tensor(std::move(d));
}

Tensor Tensor::zeros(Shape shape) {
    std::size_t n = shape_numel(shape);
    return make(std::move(shape), std::vector<double>(n, 0.0), false);
}

Tensor Tensor::full(Shape shape, double value) {
    std::size_t n = shape_numel(shape);
    return make(std::move(shape), std::vector<double>(n, value), false);
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
    return make(std::move(shape), std::move(values), false);
}

Tensor Tensor::scalar(double value) {
    return make({1}, {value}, false);
}

Tensor Tensor::param(Shape shape, std::vector<double> values) {
    return make(std::move(shape), std::move(values), true);
}

double Tensor::item() const {
    if (numel() != 1)
        throw ContractError("item: tensor " + shape_str(shape()) + " is not a scalar");
    return d_->values[0];
}

std::span<double> Tensor::grad() const {
    if (d_->grad.empty()) d_->grad.assign(d_->values.size(), 0.0);
    return d_->grad;
}

void Tensor::zero_grad() const {
    d_->grad.assign(d_->values.size(), 0.0);
}

Tensor Tensor::detach() const {
    return make(d_->shape, d_->values, false);
}

void Tape::record(Tensor output, std::function<void()> backward) {
    nodes_.push_back({std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw ContractError("backward: loss must be a scalar");
    Tensor seed = loss;
    seed.grad()[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (it->output.has_grad()) it->backward();
        if (!it->output.requires_grad()) it->output.clear_grad();
    }
}

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape* active_tape() { return g_active_tape; }

TapeScope::TapeScope() : previous_(g_active_tape) { g_active_tape = &tape_; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = previous_; }

} // namespace infotime::numcore
