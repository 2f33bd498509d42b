#include "irts/tensor.hpp"

#include <cmath>
#include <sstream>

namespace irts {

namespace {
Precision g_precision = Precision::f64;
int g_threads = 1;
}  // namespace

Precision precision() { return g_precision; }
void set_precision(Precision p) { g_precision = p; }

int num_threads() { return g_threads; }
void set_threads(int n) { g_threads = n < 1 ? 1 : n; }

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_size(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<Real> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size())
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str());
}

Tensor Tensor::scalar(Real v) { return Tensor({}, {v}); }

Tensor Tensor::zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<std::size_t> shape, Real v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
}

bool Tensor::all_finite() const {
    for (Real v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::fill(Real v) {
    for (auto& x : data_) x = v;
}

void Tensor::quantize() {
    if (g_precision == Precision::f32)
        for (auto& x : data_) x = static_cast<Real>(static_cast<float>(x));
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << "]";
    return os.str();
}

}  // namespace irts
