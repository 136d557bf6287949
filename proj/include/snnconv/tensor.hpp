#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

namespace snnconv {

/// Dense row-major array of doubles, rank 1-4. The file format and every
/// simulation loop depend on the row-major layout.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<double> d);

    static Tensor zeros(std::vector<std::size_t> s);
    static Tensor from_vector(std::vector<double> d);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    // rank-2 access
    double& at2(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double at2(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    // rank-3 access (c, h, w)
    double& at3(std::size_t c, std::size_t y, std::size_t x) {
        return data[(c * shape[1] + y) * shape[2] + x];
    }
    double at3(std::size_t c, std::size_t y, std::size_t x) const {
        return data[(c * shape[1] + y) * shape[2] + x];
    }

    bool all_finite() const;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);

/// Standard matrix product of rank-2 tensors, row-major.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Zero-padded cross-correlation. input: c_in x h x w, kernels:
/// c_out x c_in x kh x kw. Output height = (h + 2p - kh) / stride + 1.
Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride, int padding);

/// Elementwise max(0, x).
Tensor relu(const Tensor& x);

/// Mean over non-overlapping window x window patches; h, w must divide.
Tensor avgpool2d(const Tensor& input, int window);

}  // namespace snnconv
