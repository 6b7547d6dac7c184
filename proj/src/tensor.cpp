#include "lsg/tensor.hpp"

#include <cmath>
#include <sstream>

#include "lsg/errors.hpp"

namespace lsg {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {
    for (std::size_t d : shape_)
        if (d == 0) throw shape_error("tensor extents must be positive");
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    for (std::size_t d : shape_)
        if (d == 0) throw shape_error("tensor extents must be positive");
    if (shape_product(shape_) != data_.size())
        throw shape_error("shape/data size mismatch: product(shape)=" +
                          std::to_string(shape_product(shape_)) + " vs data length " +
                          std::to_string(data_.size()));
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
    Tensor t(std::move(shape));
    for (double& x : t.data_) x = v;
    return t;
}

std::size_t Tensor::rows() const {
    if (rank() == 2) return shape_[0];
    if (rank() == 1) return 1;
    throw shape_error("rows(): tensor is rank " + std::to_string(rank()));
}

std::size_t Tensor::cols() const {
    if (rank() == 2) return shape_[1];
    if (rank() == 1) return shape_[0];
    throw shape_error("cols(): tensor is rank " + std::to_string(rank()));
}

double Tensor::item() const {
    if (size() != 1)
        throw contract_error("item(): tensor has " + std::to_string(size()) + " elements");
    return data_[0];
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << 'x';
        os << shape_[i];
    }
    os << ']';
    return os.str();
}

} // namespace lsg
