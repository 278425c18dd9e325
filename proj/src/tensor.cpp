#include "hypernn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace hypernn {

std::size_t shape_product(std::span<const std::size_t> shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

Tensor Tensor::scalar(double v) {
    Tensor t;
    t.data_ = {v};
    return t;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    return filled(std::move(shape), 0.0);
}

Tensor Tensor::filled(std::vector<std::size_t> shape, double v) {
    for (std::size_t d : shape)
        if (d == 0) throw std::invalid_argument("tensor: zero-sized axis");
    Tensor t;
    t.data_.assign(shape_product(shape), v);
    t.shape_ = std::move(shape);
    return t;
}

Tensor Tensor::from_data(std::vector<std::size_t> shape, std::vector<double> data) {
    if (shape_product(shape) != data.size())
        throw std::invalid_argument("tensor: data length does not match shape");
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
}

std::vector<std::size_t> Tensor::strides() const {
    std::vector<std::size_t> s(shape_.size());
    std::size_t acc = 1;
    for (std::size_t d = shape_.size(); d-- > 0;) {
        s[d] = acc;
        acc *= shape_[d];
    }
    return s;
}

namespace {

std::size_t flat_index(std::span<const std::size_t> shape, std::span<const std::size_t> idx) {
    if (idx.size() != shape.size()) throw std::invalid_argument("tensor: index rank mismatch");
    std::size_t flat = 0;
    for (std::size_t d = 0; d < shape.size(); ++d) {
        if (idx[d] >= shape[d]) throw std::out_of_range("tensor: index out of range");
        flat = flat * shape[d] + idx[d];
    }
    return flat;
}

// Advances a multi-index in row-major (odometer) order; false past the end.
bool next_index(std::span<const std::size_t> shape, std::vector<std::size_t>& idx) {
    for (std::size_t d = shape.size(); d-- > 0;) {
        if (++idx[d] < shape[d]) return true;
        idx[d] = 0;
    }
    return false;
}

}  // namespace

double Tensor::at(std::span<const std::size_t> idx) const {
    return data_[flat_index(shape_, idx)];
}

double& Tensor::at(std::span<const std::size_t> idx) {
    return data_[flat_index(shape_, idx)];
}

double Tensor::at(std::initializer_list<std::size_t> idx) const {
    return at(std::span<const std::size_t>(idx.begin(), idx.size()));
}

double& Tensor::at(std::initializer_list<std::size_t> idx) {
    return at(std::span<const std::size_t>(idx.begin(), idx.size()));
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor contract(const Tensor& a, const Tensor& b, std::size_t p, std::size_t q) {
    if (p >= a.rank()) throw std::invalid_argument("contract: axis p out of range");
    if (q >= b.rank()) throw std::invalid_argument("contract: axis q out of range");
    if (a.shape()[p] != b.shape()[q])
        throw std::invalid_argument("contract: dimension mismatch at contracted axes");

    const std::size_t c = a.shape()[p];
    const auto sa = a.strides();
    const auto sb = b.strides();

    std::vector<std::size_t> out_shape;
    out_shape.reserve(a.rank() + b.rank() - 2);
    for (std::size_t d = 0; d < a.rank(); ++d)
        if (d != p) out_shape.push_back(a.shape()[d]);
    for (std::size_t d = 0; d < b.rank(); ++d)
        if (d != q) out_shape.push_back(b.shape()[d]);

    // Base offsets of every (a minus p) and (b minus q) position, row-major.
    auto bases = [](const Tensor& t, std::size_t skip, std::span<const std::size_t> str) {
        std::vector<std::size_t> shp;
        for (std::size_t d = 0; d < t.rank(); ++d)
            if (d != skip) shp.push_back(t.shape()[d]);
        std::vector<std::size_t> out(shape_product(shp), 0);
        std::vector<std::size_t> idx(shp.size(), 0);
        std::size_t n = 0;
        do {
            std::size_t off = 0, k = 0;
            for (std::size_t d = 0; d < t.rank(); ++d)
                if (d != skip) off += idx[k++] * str[d];
            out[n++] = off;
        } while (next_index(shp, idx));
        return out;
    };

    const auto base_a = bases(a, p, sa);
    const auto base_b = bases(b, q, sb);
    const std::size_t step_a = sa[p];
    const std::size_t step_b = sb[q];

    Tensor out = Tensor::zeros(out_shape);
    auto od = out.data();
    auto ad = a.data();
    auto bd = b.data();
    std::size_t n = 0;
    for (std::size_t ia : base_a) {
        for (std::size_t ib : base_b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < c; ++i) acc += ad[ia + i * step_a] * bd[ib + i * step_b];
            od[n++] = acc;
        }
    }
    return out;
}

Tensor permute(const Tensor& a, std::span<const std::size_t> perm) {
    const std::size_t r = a.rank();
    if (perm.size() != r) throw std::invalid_argument("permute: wrong permutation length");
    std::vector<bool> seen(r, false);
    for (std::size_t d : perm) {
        if (d >= r || seen[d]) throw std::invalid_argument("permute: not a bijection on axes");
        seen[d] = true;
    }

    std::vector<std::size_t> out_shape(r);
    for (std::size_t s = 0; s < r; ++s) out_shape[perm[s]] = a.shape()[s];

    Tensor out = Tensor::zeros(out_shape);
    const auto so = out.strides();
    std::vector<std::size_t> idx(r, 0);
    auto od = out.data();
    auto ad = a.data();
    std::size_t flat = 0;
    if (a.size() == 0) return out;
    do {
        std::size_t off = 0;
        for (std::size_t s = 0; s < r; ++s) off += idx[s] * so[perm[s]];
        od[off] = ad[flat++];
    } while (next_index(a.shape(), idx));
    return out;
}

Tensor permute(const Tensor& a, std::initializer_list<std::size_t> perm) {
    return permute(a, std::span<const std::size_t>(perm.begin(), perm.size()));
}

Tensor reshape_merge(const Tensor& a, std::size_t p) {
    if (p + 1 >= a.rank()) throw std::invalid_argument("reshape_merge: axis out of range");
    std::vector<std::size_t> shape(a.shape().begin(), a.shape().end());
    shape[p] *= shape[p + 1];
    shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(p) + 1);
    return Tensor::from_data(std::move(shape), std::vector<double>(a.data().begin(), a.data().end()));
}

Tensor reshape_split(const Tensor& a, std::size_t p, std::size_t s0, std::size_t s1) {
    if (p >= a.rank()) throw std::invalid_argument("reshape_split: axis out of range");
    if (a.shape()[p] != s0 * s1)
        throw std::invalid_argument("reshape_split: sizes do not factor the axis");
    std::vector<std::size_t> shape(a.shape().begin(), a.shape().end());
    shape[p] = s0;
    shape.insert(shape.begin() + static_cast<std::ptrdiff_t>(p) + 1, s1);
    return Tensor::from_data(std::move(shape), std::vector<double>(a.data().begin(), a.data().end()));
}

Tensor reshape(const Tensor& a, std::vector<std::size_t> shape) {
    if (shape_product(shape) != a.size())
        throw std::invalid_argument("reshape: element count mismatch");
    return Tensor::from_data(std::move(shape), std::vector<double>(a.data().begin(), a.data().end()));
}

Tensor concat(std::span<const Tensor> tensors, std::size_t axis) {
    if (tensors.empty()) throw std::invalid_argument("concat: empty tensor list");
    const std::size_t r = tensors[0].rank();
    if (axis >= r) throw std::invalid_argument("concat: axis out of range");
    std::size_t total = 0;
    for (const Tensor& t : tensors) {
        if (t.rank() != r) throw std::invalid_argument("concat: rank mismatch");
        for (std::size_t d = 0; d < r; ++d)
            if (d != axis && t.shape()[d] != tensors[0].shape()[d])
                throw std::invalid_argument("concat: shape mismatch off the concat axis");
        total += t.shape()[axis];
    }

    std::vector<std::size_t> out_shape(tensors[0].shape().begin(), tensors[0].shape().end());
    out_shape[axis] = total;
    Tensor out = Tensor::zeros(out_shape);

    // Copy block-wise: outer = axes before `axis`, block = axis row * inner.
    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= out_shape[d];
    for (std::size_t d = axis + 1; d < r; ++d) inner *= out_shape[d];

    const std::size_t out_row = total * inner;
    std::size_t col_off = 0;
    for (const Tensor& t : tensors) {
        const std::size_t rows = t.shape()[axis];
        for (std::size_t o = 0; o < outer; ++o)
            std::copy_n(t.data().data() + o * rows * inner, rows * inner,
                        out.data().data() + o * out_row + col_off * inner);
        col_off += rows;
    }
    return out;
}

Tensor slice_axis(const Tensor& a, std::size_t axis, std::size_t lo, std::size_t len) {
    if (axis >= a.rank()) throw std::invalid_argument("slice_axis: axis out of range");
    if (lo + len > a.shape()[axis]) throw std::out_of_range("slice_axis: slice out of range");
    std::vector<std::size_t> out_shape(a.shape().begin(), a.shape().end());
    out_shape[axis] = len;
    Tensor out = Tensor::zeros(out_shape);

    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= a.shape()[d];
    for (std::size_t d = axis + 1; d < a.rank(); ++d) inner *= a.shape()[d];
    const std::size_t in_row = a.shape()[axis] * inner;
    for (std::size_t o = 0; o < outer; ++o)
        std::copy_n(a.data().data() + o * in_row + lo * inner, len * inner,
                    out.data().data() + o * len * inner);
    return out;
}

Tensor broadcast_apply(const std::function<double(double)>& f, const Tensor& a) {
    Tensor out = a;
    for (double& v : out.data()) v = f(v);
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (b.rank() > a.rank()) throw std::invalid_argument("add: second operand has higher rank");
    const std::size_t lead = a.rank() - b.rank();
    for (std::size_t d = 0; d < b.rank(); ++d)
        if (a.shape()[lead + d] != b.shape()[d])
            throw std::invalid_argument("add: second operand is not a suffix of the first's shape");
    Tensor out = a;
    const std::size_t bn = b.size();
    auto od = out.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) od[i] += bd[i % bn];
    return out;
}

Padding padding_from_string(const std::string& s) {
    if (s == "valid") return Padding::valid;
    if (s == "same") return Padding::same;
    throw std::invalid_argument("unknown padding mode: " + s);
}

std::string to_string(Padding p) { return p == Padding::valid ? "valid" : "same"; }

std::size_t conv_output_size(std::size_t n, std::size_t l, std::size_t stride, Padding pad) {
    if (stride == 0) throw std::invalid_argument("conv: non-positive stride");
    if (pad == Padding::same) return (n + stride - 1) / stride;
    if (l > n) throw std::invalid_argument("conv: kernel larger than input");
    return (n - l) / stride + 1;
}

namespace {

struct ConvGeom {
    std::size_t k;                       // spatial rank
    std::size_t batch, cin, cout;        // b, C, F
    std::vector<std::size_t> n, l, m;    // input, kernel, output spatial dims
    std::vector<std::size_t> pad_before; // zero for valid
    std::vector<std::size_t> sx, sw, so; // row-major strides of x, w, out
};

ConvGeom conv_geometry(std::span<const std::size_t> x_shape, std::span<const std::size_t> w_shape,
                       std::span<const std::size_t> strides, Padding pad) {
    if (x_shape.size() < 3 || x_shape.size() > 5)
        throw std::invalid_argument("conv: input rank must be k+2 with k in {1,2,3}");
    const std::size_t k = x_shape.size() - 2;
    if (w_shape.size() != k + 2) throw std::invalid_argument("conv: kernel rank mismatch");
    if (strides.size() != k) throw std::invalid_argument("conv: strides length mismatch");
    if (x_shape[k + 1] != w_shape[k])
        throw std::invalid_argument("conv: input channel count does not match kernel");

    ConvGeom g;
    g.k = k;
    g.batch = x_shape[0];
    g.cin = x_shape[k + 1];
    g.cout = w_shape[k + 1];
    for (std::size_t d = 0; d < k; ++d) {
        g.n.push_back(x_shape[1 + d]);
        g.l.push_back(w_shape[d]);
        g.m.push_back(conv_output_size(g.n[d], g.l[d], strides[d], pad));
        if (pad == Padding::same) {
            const std::size_t span = (g.m[d] - 1) * strides[d] + g.l[d];
            g.pad_before.push_back(span > g.n[d] ? (span - g.n[d]) / 2 : 0);
        } else {
            g.pad_before.push_back(0);
        }
    }

    auto row_major = [](std::span<const std::size_t> shp) {
        std::vector<std::size_t> s(shp.size());
        std::size_t acc = 1;
        for (std::size_t d = shp.size(); d-- > 0;) {
            s[d] = acc;
            acc *= shp[d];
        }
        return s;
    };
    g.sx = row_major(x_shape);
    g.sw = row_major(w_shape);
    std::vector<std::size_t> out_shape{g.batch};
    out_shape.insert(out_shape.end(), g.m.begin(), g.m.end());
    out_shape.push_back(g.cout);
    g.so = row_major(out_shape);
    return g;
}

}  // namespace

Tensor conv_kd(const Tensor& x, const Tensor& w, std::span<const std::size_t> strides,
               Padding pad) {
    const ConvGeom g = conv_geometry(x.shape(), w.shape(), strides, pad);

    std::vector<std::size_t> out_shape{g.batch};
    out_shape.insert(out_shape.end(), g.m.begin(), g.m.end());
    out_shape.push_back(g.cout);
    Tensor out = Tensor::zeros(out_shape);

    auto xd = x.data();
    auto wd = w.data();
    auto od = out.data();

    std::vector<std::size_t> p(g.k, 0);   // output spatial position
    std::vector<std::size_t> o(g.k, 0);   // kernel offset
    std::vector<std::ptrdiff_t> q(g.k);   // input spatial position (may fall in padding)

    for (std::size_t b = 0; b < g.batch; ++b) {
        std::fill(p.begin(), p.end(), 0);
        do {
            std::size_t out_base = b * g.so[0];
            for (std::size_t d = 0; d < g.k; ++d) out_base += p[d] * g.so[1 + d];
            std::fill(o.begin(), o.end(), 0);
            do {
                bool inside = true;
                std::size_t x_base = b * g.sx[0];
                for (std::size_t d = 0; d < g.k; ++d) {
                    q[d] = static_cast<std::ptrdiff_t>(p[d] * strides[d] + o[d]) -
                           static_cast<std::ptrdiff_t>(g.pad_before[d]);
                    if (q[d] < 0 || q[d] >= static_cast<std::ptrdiff_t>(g.n[d])) {
                        inside = false;
                        break;
                    }
                    x_base += static_cast<std::size_t>(q[d]) * g.sx[1 + d];
                }
                if (!inside) continue;
                std::size_t w_base = 0;
                for (std::size_t d = 0; d < g.k; ++d) w_base += o[d] * g.sw[d];
                for (std::size_t c = 0; c < g.cin; ++c) {
                    const double xv = xd[x_base + c];
                    const std::size_t wb = w_base + c * g.cout;
                    for (std::size_t f = 0; f < g.cout; ++f)
                        od[out_base + f] += xv * wd[wb + f];
                }
            } while (next_index(g.l, o));
        } while (next_index(g.m, p));
    }
    return out;
}

Tensor conv_kd_grad_input(const Tensor& g_up, const Tensor& w, std::span<const std::size_t> x_shape,
                          std::span<const std::size_t> strides, Padding pad) {
    const ConvGeom g = conv_geometry(x_shape, w.shape(), strides, pad);
    Tensor gx = Tensor::zeros(std::vector<std::size_t>(x_shape.begin(), x_shape.end()));

    auto gd = g_up.data();
    auto wd = w.data();
    auto xd = gx.data();

    std::vector<std::size_t> p(g.k, 0);
    std::vector<std::size_t> o(g.k, 0);
    std::vector<std::ptrdiff_t> q(g.k);

    for (std::size_t b = 0; b < g.batch; ++b) {
        std::fill(p.begin(), p.end(), 0);
        do {
            std::size_t out_base = b * g.so[0];
            for (std::size_t d = 0; d < g.k; ++d) out_base += p[d] * g.so[1 + d];
            std::fill(o.begin(), o.end(), 0);
            do {
                bool inside = true;
                std::size_t x_base = b * g.sx[0];
                for (std::size_t d = 0; d < g.k; ++d) {
                    q[d] = static_cast<std::ptrdiff_t>(p[d] * strides[d] + o[d]) -
                           static_cast<std::ptrdiff_t>(g.pad_before[d]);
                    if (q[d] < 0 || q[d] >= static_cast<std::ptrdiff_t>(g.n[d])) {
                        inside = false;
                        break;
                    }
                    x_base += static_cast<std::size_t>(q[d]) * g.sx[1 + d];
                }
                if (!inside) continue;
                std::size_t w_base = 0;
                for (std::size_t d = 0; d < g.k; ++d) w_base += o[d] * g.sw[d];
                for (std::size_t c = 0; c < g.cin; ++c) {
                    const std::size_t wb = w_base + c * g.cout;
                    double acc = 0.0;
                    for (std::size_t f = 0; f < g.cout; ++f)
                        acc += gd[out_base + f] * wd[wb + f];
                    xd[x_base + c] += acc;
                }
            } while (next_index(g.l, o));
        } while (next_index(g.m, p));
    }
    return gx;
}

Tensor conv_kd_grad_kernel(const Tensor& x, const Tensor& g_up, std::span<const std::size_t> w_shape,
                           std::span<const std::size_t> strides, Padding pad) {
    const ConvGeom g = conv_geometry(x.shape(), w_shape, strides, pad);
    Tensor gw = Tensor::zeros(std::vector<std::size_t>(w_shape.begin(), w_shape.end()));

    auto xd = x.data();
    auto gd = g_up.data();
    auto wd = gw.data();

    std::vector<std::size_t> p(g.k, 0);
    std::vector<std::size_t> o(g.k, 0);
    std::vector<std::ptrdiff_t> q(g.k);

    for (std::size_t b = 0; b < g.batch; ++b) {
        std::fill(p.begin(), p.end(), 0);
        do {
            std::size_t out_base = b * g.so[0];
            for (std::size_t d = 0; d < g.k; ++d) out_base += p[d] * g.so[1 + d];
            std::fill(o.begin(), o.end(), 0);
            do {
                bool inside = true;
                std::size_t x_base = b * g.sx[0];
                for (std::size_t d = 0; d < g.k; ++d) {
                    q[d] = static_cast<std::ptrdiff_t>(p[d] * strides[d] + o[d]) -
                           static_cast<std::ptrdiff_t>(g.pad_before[d]);
                    if (q[d] < 0 || q[d] >= static_cast<std::ptrdiff_t>(g.n[d])) {
                        inside = false;
                        break;
                    }
                    x_base += static_cast<std::size_t>(q[d]) * g.sx[1 + d];
                }
                if (!inside) continue;
                std::size_t w_base = 0;
                for (std::size_t d = 0; d < g.k; ++d) w_base += o[d] * g.sw[d];
                for (std::size_t c = 0; c < g.cin; ++c) {
                    const double xv = xd[x_base + c];
                    const std::size_t wb = w_base + c * g.cout;
                    for (std::size_t f = 0; f < g.cout; ++f)
                        wd[wb + f] += xv * gd[out_base + f];
                }
            } while (next_index(g.l, o));
        } while (next_index(g.m, p));
    }
    return gw;
}

namespace {

constexpr char kTensorMagic[4] = {'H', 'X', 'T', 'N'};
constexpr std::uint32_t kTensorVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    if (!is) throw std::runtime_error("tensor load: truncated header");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw std::runtime_error("tensor load: truncated header");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
}

}  // namespace

void save_tensor(std::ostream& os, const Tensor& t) {
    os.write(kTensorMagic, 4);
    write_u32(os, kTensorVersion);
    write_u64(os, t.rank());
    for (std::size_t d : t.shape()) write_u64(os, d);
    static_assert(sizeof(double) == 8);
    for (double v : t.data()) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        write_u64(os, bits);
    }
}

Tensor load_tensor(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kTensorMagic, 4) != 0)
        throw std::runtime_error("tensor load: bad magic");
    const std::uint32_t version = read_u32(is);
    if (version != kTensorVersion)
        throw std::runtime_error("tensor load: unsupported version " + std::to_string(version));
    const std::uint64_t rank = read_u64(is);
    if (rank > 64) throw std::runtime_error("tensor load: implausible rank");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(read_u64(is));
    std::vector<double> data(shape_product(shape));
    for (double& v : data) {
        std::uint64_t bits = read_u64(is);
        std::memcpy(&v, &bits, 8);
    }
    return Tensor::from_data(std::move(shape), std::move(data));
}

void save_tensor_file(const std::string& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    save_tensor(os, t);
}

Tensor load_tensor_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for reading: " + path);
    return load_tensor(is);
}

std::string to_text(const Tensor& t) {
    std::ostringstream os;
    os.precision(17);
    os << "shape";
    for (std::size_t d : t.shape()) os << ' ' << d;
    os << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) os << t[i] << '\n';
    return os.str();
}

}  // namespace hypernn
