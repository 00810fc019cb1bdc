#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace opticnet {

/// Dense 4-D array, layout (n, h, w, c), row-major with c fastest.
/// The same container stores convolution weights as (kh, kw, in_c, out_c).
template <class T>
struct Tensor {
    static_assert(std::is_floating_point_v<T>);

    std::array<int, 4> dims{1, 1, 1, 1};
    std::vector<T> data;

    Tensor() : data(1, T(0)) {}
    Tensor(int n, int h, int w, int c) : dims{n, h, w, c} {
        if (n < 1 || h < 1 || w < 1 || c < 1) {
            throw std::invalid_argument("tensor dims must all be >= 1, got " +
                                        shape_str(n, h, w, c));
        }
        data.assign(static_cast<size_t>(n) * h * w * c, T(0));
    }

    int n() const { return dims[0]; }
    int h() const { return dims[1]; }
    int w() const { return dims[2]; }
    int c() const { return dims[3]; }
    size_t size() const { return data.size(); }

    T& at(int i, int j, int k, int l) {
        return data[((static_cast<size_t>(i) * dims[1] + j) * dims[2] + k) * dims[3] + l];
    }
    const T& at(int i, int j, int k, int l) const {
        return data[((static_cast<size_t>(i) * dims[1] + j) * dims[2] + k) * dims[3] + l];
    }

    bool same_shape(const Tensor& o) const { return dims == o.dims; }
    bool is_scalar() const { return size() == 1; }

    std::string shape_str() const { return shape_str(dims[0], dims[1], dims[2], dims[3]); }

    static std::string shape_str(int n, int h, int w, int c) {
        std::ostringstream os;
        os << "(" << n << "," << h << "," << w << "," << c << ")";
        return os.str();
    }

    static Tensor zeros(int n, int h, int w, int c) { return Tensor(n, h, w, c); }

    static Tensor full(int n, int h, int w, int c, T v) {
        Tensor t(n, h, w, c);
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }

    static Tensor ones(int n, int h, int w, int c) { return full(n, h, w, c, T(1)); }

    static Tensor scalar(T v) { return full(1, 1, 1, 1, v); }

    /// Uniform random in [lo, hi), deterministic for a seed.
    static Tensor uniform(int n, int h, int w, int c, uint64_t seed, T lo = T(-1), T hi = T(1)) {
        Tensor t(n, h, w, c);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<T> dist(lo, hi);
        for (auto& v : t.data) v = dist(rng);
        return t;
    }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    T sum() const { return std::accumulate(data.begin(), data.end(), T(0)); }
};

template <class T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
    }
}

}  // namespace opticnet
