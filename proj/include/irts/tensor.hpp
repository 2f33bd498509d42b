#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace irts {

using Real = double;

enum class Precision { f64, f32 };

// Global numeric mode. f32 quantizes every freshly computed node value to
// single precision; all storage stays double so serialization is uniform.
Precision precision();
void set_precision(Precision p);

// Worker count for the parallel kernels. Every parallel loop assigns whole
// output cells to one thread, so results are bitwise identical for any count.
int num_threads();
void set_threads(int n);

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<Real> data);
    static Tensor scalar(Real v);
    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, Real v);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::size_t ndim() const { return shape_.size(); }
    std::size_t extent(std::size_t d) const { return shape_.at(d); }

    Real* data() { return data_.data(); }
    const Real* data() const { return data_.data(); }
    Real& operator[](std::size_t i) { return data_[i]; }
    Real operator[](std::size_t i) const { return data_[i]; }

    // 2-D / 3-D accessors, row-major.
    Real& at2(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    Real at2(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    Real& at3(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    Real at3(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const;
    void fill(Real v);

    // Rounds every element through float when the global mode is f32.
    void quantize();

    std::string shape_str() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<Real> data_;
};

inline std::size_t shape_size(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (auto e : s) n *= e;
    return n;
}

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace irts
