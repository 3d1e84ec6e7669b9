#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "adir/errors.hpp"

namespace adir {

// H x W x C raster of doubles, stored as channel planes: data[(c*H + y)*W + x].
// Clean images live in [0,1]; intermediate diffusion states may leave that range.
struct ImageTensor {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    ImageTensor() = default;
    ImageTensor(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c), data(static_cast<size_t>(h) * w * c, fill) {
        if (h <= 0 || w <= 0 || c <= 0) throw ParameterError("ImageTensor dims must be positive");
    }

    size_t size() const { return data.size(); }

    double& at(int y, int x, int c) { return data[(static_cast<size_t>(c) * height + y) * width + x]; }
    double at(int y, int x, int c) const { return data[(static_cast<size_t>(c) * height + y) * width + x]; }

    double* plane(int c) { return data.data() + static_cast<size_t>(c) * height * width; }
    const double* plane(int c) const { return data.data() + static_cast<size_t>(c) * height * width; }

    bool same_shape(const ImageTensor& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
    std::string shape_str() const {
        return std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(channels);
    }
};

inline void require_same_shape(const ImageTensor& a, const ImageTensor& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": " + a.shape_str() + " vs " + b.shape_str());
}

inline bool all_finite(const ImageTensor& t) {
    for (double v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}

// out = a*x + b*y, elementwise
inline ImageTensor lin_comb(double a, const ImageTensor& x, double b, const ImageTensor& y) {
    require_same_shape(x, y, "lin_comb");
    ImageTensor out(x.height, x.width, x.channels);
    for (size_t i = 0; i < x.size(); ++i) out.data[i] = a * x.data[i] + b * y.data[i];
    return out;
}

inline ImageTensor scaled(const ImageTensor& x, double a) {
    ImageTensor out = x;
    for (double& v : out.data) v *= a;
    return out;
}

inline void add_scaled_inplace(ImageTensor& dst, double a, const ImageTensor& x) {
    require_same_shape(dst, x, "add_scaled");
    for (size_t i = 0; i < dst.size(); ++i) dst.data[i] += a * x.data[i];
}

inline double dot(const ImageTensor& a, const ImageTensor& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

inline double sq_norm(const ImageTensor& a) { return dot(a, a); }

inline double sq_dist(const ImageTensor& a, const ImageTensor& b) {
    require_same_shape(a, b, "sq_dist");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return s;
}

inline double max_abs_diff(const ImageTensor& a, const ImageTensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

inline ImageTensor clamp01(const ImageTensor& x) {
    ImageTensor out = x;
    for (double& v : out.data) v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return out;
}

} // namespace adir
