#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace icf {

// Shape of a rank-4 feature map, NCHW.
struct Shape4 {
    int64_t n = 0, c = 0, h = 0, w = 0;

    int64_t numel() const { return n * c * h * w; }
    bool operator==(const Shape4&) const = default;
    std::string str() const;
};

// Dense rank-4 tensor, row-major NCHW: index = ((n*C + c)*H + h)*W + w.
// Value semantics; immutable by convention once an operation returns it.
template <class T>
struct Tensor4 {
    Shape4 shape;
    std::vector<T> data;

    Tensor4() = default;
    explicit Tensor4(Shape4 s);

    static Tensor4 zeros(Shape4 s) { return Tensor4(s); }
    static Tensor4 full(Shape4 s, T value);

    int64_t numel() const { return shape.numel(); }

    int64_t index(int64_t n, int64_t c, int64_t y, int64_t x) const {
        return ((n * shape.c + c) * shape.h + y) * shape.w + x;
    }
    T& at(int64_t n, int64_t c, int64_t y, int64_t x) { return data[index(n, c, y, x)]; }
    const T& at(int64_t n, int64_t c, int64_t y, int64_t x) const { return data[index(n, c, y, x)]; }
};

using Tensor = Tensor4<float>;
using DTensor = Tensor4<double>;

// 64-bit seed for reproducible initialization. Identical seed => identical tensors.
struct Seed {
    uint64_t value = 0;
};

// splitmix64 finalizer; the whole deterministic-generation story is built on it.
uint64_t mix64(uint64_t z);

// Seed for the index-th parameter tensor derived from a base seed.
Seed sub_seed(Seed base, uint64_t index);

template <class T>
Tensor4<T> concat_channels(const Tensor4<T>& a, const Tensor4<T>& b);

template <class T>
std::vector<Tensor4<T>> split_channels(const Tensor4<T>& t, int64_t parts);

template <class T>
Tensor4<T> ew_add(const Tensor4<T>& a, const Tensor4<T>& b);

template <class T>
Tensor4<T> ew_mul(const Tensor4<T>& a, const Tensor4<T>& b);

template <class T>
Tensor4<T> impulse(Shape4 dims, int64_t n, int64_t c, int64_t y, int64_t x);

// Counter-based splitmix64 generator mapped to [lo, hi) via the top 24 bits.
// Bit-exact contract documented in docs/FORMATS.md.
Tensor seeded_uniform(Shape4 dims, float lo, float hi, Seed seed);

template <class T>
bool all_finite(const Tensor4<T>& t);

DTensor widen(const Tensor& t);
Tensor narrow(const DTensor& t);

}  // namespace icf
