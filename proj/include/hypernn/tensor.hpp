#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace hypernn {

/// Dense multidimensional array of doubles in row-major order.
/// Rank 0 is a scalar holding exactly one element.
class Tensor {
public:
    Tensor() : shape_{}, data_{0.0} {}

    static Tensor scalar(double v);
    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor filled(std::vector<std::size_t> shape, double v);
    static Tensor from_data(std::vector<std::size_t> shape, std::vector<double> data);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    double operator[](std::size_t flat) const { return data_[flat]; }
    double& operator[](std::size_t flat) { return data_[flat]; }

    double at(std::span<const std::size_t> idx) const;
    double& at(std::span<const std::size_t> idx);
    double at(std::initializer_list<std::size_t> idx) const;
    double& at(std::initializer_list<std::size_t> idx);

    /// Row-major strides, one per axis.
    std::vector<std::size_t> strides() const;

    bool all_finite() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::size_t shape_product(std::span<const std::size_t> shape);

/// Contraction C_{p,q}(a, b): sums over axis p of a against axis q of b.
/// Output axes are the remaining axes of a followed by the remaining axes of b.
Tensor contract(const Tensor& a, const Tensor& b, std::size_t p, std::size_t q);

/// Axis permutation: perm[s] is the destination position of source axis s.
Tensor permute(const Tensor& a, std::span<const std::size_t> perm);
Tensor permute(const Tensor& a, std::initializer_list<std::size_t> perm);

/// Merges axes p and p+1 into one axis of size shape[p]*shape[p+1] with the
/// merged index i*R + j, R = shape[p+1]. Row-major data is untouched.
Tensor reshape_merge(const Tensor& a, std::size_t p);

/// Inverse of reshape_merge: splits axis p of size s0*s1 back into (s0, s1).
Tensor reshape_split(const Tensor& a, std::size_t p, std::size_t s0, std::size_t s1);

/// Metadata-only reshape; the new shape must have the same element count.
Tensor reshape(const Tensor& a, std::vector<std::size_t> shape);

Tensor concat(std::span<const Tensor> tensors, std::size_t axis);

/// Extracts the slice [lo, lo+len) along the given axis.
Tensor slice_axis(const Tensor& a, std::size_t axis, std::size_t lo, std::size_t len);

/// Elementwise application of a scalar function; shape preserved.
Tensor broadcast_apply(const std::function<double(double)>& f, const Tensor& a);

/// Elementwise sum; b may also be a suffix of a's shape, in which case it is
/// broadcast along the leading axes (the bias rule).
Tensor add(const Tensor& a, const Tensor& b);

enum class Padding { valid, same };

Padding padding_from_string(const std::string& s);
std::string to_string(Padding p);

/// Output spatial size for one axis given the padding mode.
std::size_t conv_output_size(std::size_t n, std::size_t l, std::size_t stride, Padding pad);

/// Channels-last k-dimensional cross-correlation, k in {1,2,3}.
/// x: (b, n1..nk, C), w: (L1..Lk, C, F) -> (b, m1..mk, F).
/// "same" zero-pads with the extra padding placed after (floor before, ceil after).
Tensor conv_kd(const Tensor& x, const Tensor& w, std::span<const std::size_t> strides,
               Padding pad);

/// Gradient of conv_kd w.r.t. its input, given the upstream gradient g.
Tensor conv_kd_grad_input(const Tensor& g, const Tensor& w, std::span<const std::size_t> x_shape,
                          std::span<const std::size_t> strides, Padding pad);

/// Gradient of conv_kd w.r.t. its kernel.
Tensor conv_kd_grad_kernel(const Tensor& x, const Tensor& g, std::span<const std::size_t> w_shape,
                           std::span<const std::size_t> strides, Padding pad);

// Binary container: magic "HXTN", u32 version, u64 rank, u64 dims (all LE),
// then f64 payload in row-major order.
void save_tensor(std::ostream& os, const Tensor& t);
Tensor load_tensor(std::istream& is);
void save_tensor_file(const std::string& path, const Tensor& t);
Tensor load_tensor_file(const std::string& path);

/// Debug text form: shape line then flat values.
std::string to_text(const Tensor& t);

}  // namespace hypernn
