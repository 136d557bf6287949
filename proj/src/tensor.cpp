#include "snnconv/tensor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "snnconv/errors.hpp"

namespace snnconv {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
    if (shape_product(shape) != data.size()) {
        throw DimensionError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_string(shape));
    }
}

Tensor Tensor::zeros(std::vector<std::size_t> s) {
    std::size_t n = shape_product(s);
    return Tensor(std::move(s), std::vector<double>(n, 0.0));
}

Tensor Tensor::from_vector(std::vector<double> d) {
    std::vector<std::size_t> s{d.size()};
    return Tensor(std::move(s), std::move(d));
}

bool Tensor::all_finite() const {
    return std::all_of(data.begin(), data.end(),
                       [](double v) { return std::isfinite(v); });
}

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw DimensionError("matmul expects rank-2 tensors, got " +
                             shape_string(a.shape) + " and " + shape_string(b.shape));
    }
    if (a.shape[1] != b.shape[0]) {
        throw DimensionError("matmul inner dimensions differ: " +
                             shape_string(a.shape) + " vs " + shape_string(b.shape));
    }
    Tensor out = Tensor::zeros({a.shape[0], b.shape[1]});
    Eigen::Map<const RowMat> ma(a.data.data(), static_cast<Eigen::Index>(a.shape[0]),
                                static_cast<Eigen::Index>(a.shape[1]));
    Eigen::Map<const RowMat> mb(b.data.data(), static_cast<Eigen::Index>(b.shape[0]),
                                static_cast<Eigen::Index>(b.shape[1]));
    Eigen::Map<RowMat> mo(out.data.data(), static_cast<Eigen::Index>(out.shape[0]),
                          static_cast<Eigen::Index>(out.shape[1]));
    mo.noalias() = ma * mb;
    return out;
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride, int padding) {
    if (input.rank() != 3 || kernels.rank() != 4) {
        throw DimensionError("conv2d expects c_in x h x w input and c_out x c_in x kh x kw kernels");
    }
    const std::size_t c_in = input.shape[0], h = input.shape[1], w = input.shape[2];
    const std::size_t c_out = kernels.shape[0], kh = kernels.shape[2], kw = kernels.shape[3];
    if (kernels.shape[1] != c_in) {
        throw DimensionError("conv2d channel mismatch: input " + shape_string(input.shape) +
                             ", kernels " + shape_string(kernels.shape));
    }
    if (stride < 1) throw DimensionError("conv2d stride must be positive");
    if (padding < 0) throw DimensionError("conv2d padding must be non-negative");
    const long ph = static_cast<long>(h) + 2 * padding;
    const long pw = static_cast<long>(w) + 2 * padding;
    if (ph < static_cast<long>(kh) || pw < static_cast<long>(kw)) {
        throw DimensionError("conv2d kernel " + shape_string(kernels.shape) +
                             " larger than padded input " + shape_string(input.shape));
    }
    const std::size_t oh = static_cast<std::size_t>((ph - static_cast<long>(kh)) / stride + 1);
    const std::size_t ow = static_cast<std::size_t>((pw - static_cast<long>(kw)) / stride + 1);

    Tensor out = Tensor::zeros({c_out, oh, ow});
    for (std::size_t co = 0; co < c_out; ++co) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (std::size_t ci = 0; ci < c_in; ++ci) {
                    for (std::size_t ky = 0; ky < kh; ++ky) {
                        const long iy = static_cast<long>(oy) * stride + static_cast<long>(ky) - padding;
                        if (iy < 0 || iy >= static_cast<long>(h)) continue;
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const long ix = static_cast<long>(ox) * stride + static_cast<long>(kx) - padding;
                            if (ix < 0 || ix >= static_cast<long>(w)) continue;
                            acc += input.at3(ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) *
                                   kernels.data[((co * c_in + ci) * kh + ky) * kw + kx];
                        }
                    }
                }
                out.at3(co, oy, ox) = acc;
            }
        }
    }
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data) v = std::max(0.0, v);
    return out;
}

Tensor avgpool2d(const Tensor& input, int window) {
    if (input.rank() != 3) {
        throw DimensionError("avgpool2d expects c x h x w input, got " + shape_string(input.shape));
    }
    if (window < 1) throw DimensionError("avgpool2d window must be positive");
    const std::size_t c = input.shape[0], h = input.shape[1], w = input.shape[2];
    const std::size_t uw = static_cast<std::size_t>(window);
    if (h % uw != 0 || w % uw != 0) {
        throw DimensionError("avgpool2d window " + std::to_string(window) +
                             " does not divide input " + shape_string(input.shape));
    }
    const std::size_t oh = h / uw, ow = w / uw;
    Tensor out = Tensor::zeros({c, oh, ow});
    const double inv = 1.0 / (static_cast<double>(uw) * static_cast<double>(uw));
    for (std::size_t ci = 0; ci < c; ++ci) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (std::size_t dy = 0; dy < uw; ++dy)
                    for (std::size_t dx = 0; dx < uw; ++dx)
                        acc += input.at3(ci, oy * uw + dy, ox * uw + dx);
                out.at3(ci, oy, ox) = acc * inv;
            }
        }
    }
    return out;
}

}  // namespace snnconv
