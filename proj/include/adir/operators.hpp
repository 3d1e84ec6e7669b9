#pragma once

#include <memory>
#include <string>
#include <vector>

#include "adir/rng.hpp"
#include "adir/tensor.hpp"

namespace adir {

struct Shape {
    int height = 0;
    int width = 0;
    int channels = 0;
    bool operator==(const Shape&) const = default;
    std::string str() const {
        return std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(channels);
    }
};

inline Shape shape_of(const ImageTensor& t) { return {t.height, t.width, t.channels}; }

// Linear measurement operator with an exact adjoint under the Euclidean
// inner product: <apply(u), v> == <u, adjoint(v)> for all u, v.
class LinearOperator {
public:
    virtual ~LinearOperator() = default;
    virtual ImageTensor apply(const ImageTensor& x) const = 0;
    virtual ImageTensor adjoint(const ImageTensor& v) const = 0;
    virtual std::string name() const = 0;
    Shape input_shape() const { return in_; }
    Shape output_shape() const { return out_; }

protected:
    LinearOperator(Shape in, Shape out) : in_(in), out_(out) {}
    void check_in(const ImageTensor& x) const {
        if (shape_of(x) != in_) throw ShapeError(name() + " apply: got " + x.shape_str() + ", want " + in_.str());
    }
    void check_out(const ImageTensor& v) const {
        if (shape_of(v) != out_) throw ShapeError(name() + " adjoint: got " + v.shape_str() + ", want " + out_.str());
    }
    Shape in_, out_;
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;

// reflect-101 index folding: -1 -> 1, n -> n-2 (no edge repetition)
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

OperatorPtr identity_op(Shape s);

// K x K convolution, reflect boundary, same-size output. kernel is row-major.
OperatorPtr blur_op(const std::vector<double>& kernel, int K, Shape s);
OperatorPtr uniform_blur_op(int K, Shape s);

// Separable 1D convolution (rows then columns) with an explicit tap anchor:
// out[p] = sum_j k[j] * in[reflect(p + j - anchor)].
OperatorPtr separable_blur_op(const std::vector<double>& taps, int anchor, Shape s);

// Keep every stride-th pixel starting at (0,0); adjoint inserts zeros.
OperatorPtr decimate_op(int stride, Shape s);

// Elementwise binary mask; entries must be 0 or 1. Self-adjoint, idempotent.
OperatorPtr mask_op(const ImageTensor& mask);

// Applies ops front to back; adjoint is the reversed chain of adjoints.
OperatorPtr compose_op(std::vector<OperatorPtr> ops);

// Bicubic antialias (a = -0.5, support 4*stride, taps normalized to sum 1)
// followed by stride-gamma decimation. Input dims must divide by gamma.
OperatorPtr make_sr_operator(int gamma, Shape in_shape);

// The 4*gamma bicubic tap vector used by make_sr_operator (exposed for tests).
std::vector<double> bicubic_antialias_taps(int gamma);

struct Observation {
    ImageTensor y;
    OperatorPtr op;
    double sigma = 0.0;
    uint64_t seed = 0;
};

// y = A x + sigma * z with z standard normal from seed; sigma = 0 is noiseless.
Observation degrade(const ImageTensor& x, OperatorPtr A, double sigma, uint64_t seed);

// Plain interpolating bicubic resize (Catmull-Rom, reflect boundary). Used to
// bring observations and retrieval queries to a working resolution; this is a
// resampler, not a LinearOperator.
ImageTensor bicubic_resize(const ImageTensor& img, int out_h, int out_w);

} // namespace adir
