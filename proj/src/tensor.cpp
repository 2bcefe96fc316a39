#include "icf/tensor.hpp"

#include <cmath>

namespace icf {

std::string Shape4::str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
}

namespace {

int64_t checked_numel(Shape4 s) {
    if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1)
        throw std::invalid_argument("tensor dims must all be >= 1, got " + s.str());
    return s.numel();
}

void require_same_shape(const char* op, Shape4 a, Shape4 b) {
    if (a == b) return;
    const char* axis = a.n != b.n ? "n" : a.c != b.c ? "c" : a.h != b.h ? "h" : "w";
    throw std::invalid_argument(std::string(op) + ": shape mismatch on " + axis + ": " + a.str() +
                                " vs " + b.str());
}

}  // namespace

template <class T>
Tensor4<T>::Tensor4(Shape4 s) : shape(s), data(static_cast<size_t>(checked_numel(s)), T(0)) {}

template <class T>
Tensor4<T> Tensor4<T>::full(Shape4 s, T value) {
    Tensor4 t(s);
    std::fill(t.data.begin(), t.data.end(), value);
    return t;
}

uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace {
constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;
}

Seed sub_seed(Seed base, uint64_t index) {
    return Seed{mix64(base.value + (index + 1) * kGolden)};
}

template <class T>
Tensor4<T> concat_channels(const Tensor4<T>& a, const Tensor4<T>& b) {
    if (a.shape.n != b.shape.n)
        throw std::invalid_argument("concat_channels: batch mismatch on n: " + a.shape.str() +
                                    " vs " + b.shape.str());
    if (a.shape.h != b.shape.h)
        throw std::invalid_argument("concat_channels: spatial mismatch on h: " + a.shape.str() +
                                    " vs " + b.shape.str());
    if (a.shape.w != b.shape.w)
        throw std::invalid_argument("concat_channels: spatial mismatch on w: " + a.shape.str() +
                                    " vs " + b.shape.str());

    Tensor4<T> out({a.shape.n, a.shape.c + b.shape.c, a.shape.h, a.shape.w});
    const int64_t plane = a.shape.h * a.shape.w;
    for (int64_t n = 0; n < a.shape.n; ++n) {
        T* dst = out.data.data() + n * out.shape.c * plane;
        const T* pa = a.data.data() + n * a.shape.c * plane;
        const T* pb = b.data.data() + n * b.shape.c * plane;
        std::copy(pa, pa + a.shape.c * plane, dst);
        std::copy(pb, pb + b.shape.c * plane, dst + a.shape.c * plane);
    }
    return out;
}

template <class T>
std::vector<Tensor4<T>> split_channels(const Tensor4<T>& t, int64_t parts) {
    if (parts < 1 || t.shape.c % parts != 0)
        throw std::invalid_argument("split_channels: c=" + std::to_string(t.shape.c) +
                                    " not divisible by parts=" + std::to_string(parts));
    const int64_t cs = t.shape.c / parts;
    const int64_t plane = t.shape.h * t.shape.w;
    std::vector<Tensor4<T>> out;
    out.reserve(static_cast<size_t>(parts));
    for (int64_t p = 0; p < parts; ++p) {
        Tensor4<T> piece({t.shape.n, cs, t.shape.h, t.shape.w});
        for (int64_t n = 0; n < t.shape.n; ++n) {
            const T* src = t.data.data() + (n * t.shape.c + p * cs) * plane;
            std::copy(src, src + cs * plane, piece.data.data() + n * cs * plane);
        }
        out.push_back(std::move(piece));
    }
    return out;
}

template <class T>
Tensor4<T> ew_add(const Tensor4<T>& a, const Tensor4<T>& b) {
    require_same_shape("ew_add", a.shape, b.shape);
    Tensor4<T> out(a.shape);
    for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
    return out;
}

template <class T>
Tensor4<T> ew_mul(const Tensor4<T>& a, const Tensor4<T>& b) {
    require_same_shape("ew_mul", a.shape, b.shape);
    Tensor4<T> out(a.shape);
    for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
    return out;
}

template <class T>
Tensor4<T> impulse(Shape4 dims, int64_t n, int64_t c, int64_t y, int64_t x) {
    Tensor4<T> out(dims);
    auto check = [](const char* axis, int64_t i, int64_t limit) {
        if (i < 0 || i >= limit)
            throw std::invalid_argument(std::string("impulse: index out of bounds on ") + axis +
                                        " (" + std::to_string(i) + " not in [0," +
                                        std::to_string(limit) + "))");
    };
    check("n", n, dims.n);
    check("c", c, dims.c);
    check("h", y, dims.h);
    check("w", x, dims.w);
    out.at(n, c, y, x) = T(1);
    return out;
}

Tensor seeded_uniform(Shape4 dims, float lo, float hi, Seed seed) {
    if (!(lo < hi))
        throw std::invalid_argument("seeded_uniform: lo must be < hi, got lo=" +
                                    std::to_string(lo) + " hi=" + std::to_string(hi));
    Tensor out(dims);
    const double span = static_cast<double>(hi) - static_cast<double>(lo);
    for (int64_t i = 0; i < out.numel(); ++i) {
        const uint64_t word = mix64(seed.value + (static_cast<uint64_t>(i) + 1) * kGolden);
        const double frac = static_cast<double>(word >> 40) * (1.0 / 16777216.0);
        float v = static_cast<float>(static_cast<double>(lo) + span * frac);
        if (v >= hi) v = std::nextafterf(hi, lo);  // f32 rounding can land on hi
        out.data[static_cast<size_t>(i)] = v;
    }
    return out;
}

template <class T>
bool all_finite(const Tensor4<T>& t) {
    for (T v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}

DTensor widen(const Tensor& t) {
    DTensor out(t.shape);
    for (size_t i = 0; i < t.data.size(); ++i) out.data[i] = static_cast<double>(t.data[i]);
    return out;
}

Tensor narrow(const DTensor& t) {
    Tensor out(t.shape);
    for (size_t i = 0; i < t.data.size(); ++i) out.data[i] = static_cast<float>(t.data[i]);
    return out;
}

template struct Tensor4<float>;
template struct Tensor4<double>;

template Tensor4<float> concat_channels(const Tensor4<float>&, const Tensor4<float>&);
template Tensor4<double> concat_channels(const Tensor4<double>&, const Tensor4<double>&);
template std::vector<Tensor4<float>> split_channels(const Tensor4<float>&, int64_t);
template std::vector<Tensor4<double>> split_channels(const Tensor4<double>&, int64_t);
template Tensor4<float> ew_add(const Tensor4<float>&, const Tensor4<float>&);
template Tensor4<double> ew_add(const Tensor4<double>&, const Tensor4<double>&);
template Tensor4<float> ew_mul(const Tensor4<float>&, const Tensor4<float>&);
template Tensor4<double> ew_mul(const Tensor4<double>&, const Tensor4<double>&);
template Tensor4<float> impulse<float>(Shape4, int64_t, int64_t, int64_t, int64_t);
template Tensor4<double> impulse<double>(Shape4, int64_t, int64_t, int64_t, int64_t);
template bool all_finite(const Tensor4<float>&);
template bool all_finite(const Tensor4<double>&);

}  // namespace icf
