#include "adir/operators.hpp"

#include <cmath>
#include <utility>

namespace adir {

namespace {

class IdentityOp final : public LinearOperator {
public:
    explicit IdentityOp(Shape s) : LinearOperator(s, s) {}
    ImageTensor apply(const ImageTensor& x) const override {
        check_in(x);
        return x;
    }
    ImageTensor adjoint(const ImageTensor& v) const override {
        check_out(v);
        return v;
    }
    std::string name() const override { return "identity"; }
};

class BlurOp final : public LinearOperator {
public:
    BlurOp(std::vector<double> kernel, int K, Shape s)
        : LinearOperator(s, s), k_(std::move(kernel)), K_(K), c_(K / 2) {
        if (K < 1 || static_cast<int>(k_.size()) != K * K) throw ParameterError("blur kernel size mismatch");
    }
    ImageTensor apply(const ImageTensor& x) const override {
        check_in(x);
        ImageTensor out(in_.height, in_.width, in_.channels);
        for (int c = 0; c < in_.channels; ++c) {
            const double* ip = x.plane(c);
            double* op = out.plane(c);
            for (int y = 0; y < in_.height; ++y)
                for (int xx = 0; xx < in_.width; ++xx) {
                    double acc = 0.0;
                    for (int dy = 0; dy < K_; ++dy) {
                        int sy = reflect_index(y + dy - c_, in_.height);
                        for (int dx = 0; dx < K_; ++dx) {
                            int sx = reflect_index(xx + dx - c_, in_.width);
                            acc += k_[dy * K_ + dx] * ip[sy * in_.width + sx];
                        }
                    }
                    op[y * in_.width + xx] = acc;
                }
        }
        return out;
    }
    ImageTensor adjoint(const ImageTensor& v) const override {
        check_out(v);
        ImageTensor out(in_.height, in_.width, in_.channels, 0.0);
        for (int c = 0; c < in_.channels; ++c) {
            const double* vp = v.plane(c);
            double* op = out.plane(c);
            for (int y = 0; y < in_.height; ++y)
                for (int xx = 0; xx < in_.width; ++xx) {
                    double val = vp[y * in_.width + xx];
                    for (int dy = 0; dy < K_; ++dy) {
                        int sy = reflect_index(y + dy - c_, in_.height);
                        for (int dx = 0; dx < K_; ++dx) {
                            int sx = reflect_index(xx + dx - c_, in_.width);
                            op[sy * in_.width + sx] += k_[dy * K_ + dx] * val;
                        }
                    }
                }
        }
        return out;
    }
    std::string name() const override { return "blur" + std::to_string(K_) + "x" + std::to_string(K_); }

private:
    std::vector<double> k_;
    int K_, c_;
};

// rows pass then columns pass; adjoint reverses the passes and scatters
class SeparableBlurOp final : public LinearOperator {
public:
    SeparableBlurOp(std::vector<double> taps, int anchor, Shape s)
        : LinearOperator(s, s), k_(std::move(taps)), anchor_(anchor) {
        if (k_.empty()) throw ParameterError("separable blur needs taps");
    }

    ImageTensor apply(const ImageTensor& x) const override {
        check_in(x);
        ImageTensor tmp = conv_rows(x, false);
        return conv_cols(tmp, false);
    }
    ImageTensor adjoint(const ImageTensor& v) const override {
        check_out(v);
        ImageTensor tmp = conv_cols(v, true);
        return conv_rows(tmp, true);
    }
    std::string name() const override { return "sepblur" + std::to_string(k_.size()); }

private:
    ImageTensor conv_rows(const ImageTensor& src, bool transpose) const {
        ImageTensor out(src.height, src.width, src.channels, 0.0);
        int n = src.width;
        int taps = static_cast<int>(k_.size());
        for (int c = 0; c < src.channels; ++c)
            for (int y = 0; y < src.height; ++y) {
                const double* ip = src.plane(c) + y * src.width;
                double* op = out.plane(c) + y * src.width;
                for (int xx = 0; xx < n; ++xx) {
                    if (!transpose) {
                        double acc = 0.0;
                        for (int j = 0; j < taps; ++j) acc += k_[j] * ip[reflect_index(xx + j - anchor_, n)];
                        op[xx] = acc;
                    } else {
                        double val = ip[xx];
                        for (int j = 0; j < taps; ++j) op[reflect_index(xx + j - anchor_, n)] += k_[j] * val;
                    }
                }
            }
        return out;
    }
    ImageTensor conv_cols(const ImageTensor& src, bool transpose) const {
        ImageTensor out(src.height, src.width, src.channels, 0.0);
        int n = src.height;
        int w = src.width;
        int taps = static_cast<int>(k_.size());
        for (int c = 0; c < src.channels; ++c) {
            const double* ip = src.plane(c);
            double* op = out.plane(c);
            for (int y = 0; y < n; ++y)
                for (int xx = 0; xx < w; ++xx) {
                    if (!transpose) {
                        double acc = 0.0;
                        for (int j = 0; j < taps; ++j) acc += k_[j] * ip[reflect_index(y + j - anchor_, n) * w + xx];
                        op[y * w + xx] = acc;
                    } else {
                        double val = ip[y * w + xx];
                        for (int j = 0; j < taps; ++j) op[reflect_index(y + j - anchor_, n) * w + xx] += k_[j] * val;
                    }
                }
        }
        return out;
    }

    std::vector<double> k_;
    int anchor_;
};

class DecimateOp final : public LinearOperator {
public:
    DecimateOp(int stride, Shape s)
        : LinearOperator(s, Shape{s.height / stride, s.width / stride, s.channels}), stride_(stride) {
        if (stride < 1) throw ParameterError("decimate stride must be >= 1");
        if (s.height % stride != 0 || s.width % stride != 0)
            throw ParameterError("decimate: dims " + s.str() + " not divisible by stride " + std::to_string(stride));
    }
    ImageTensor apply(const ImageTensor& x) const override {
        check_in(x);
        ImageTensor out(out_.height, out_.width, out_.channels);
        for (int c = 0; c < out_.channels; ++c)
            for (int y = 0; y < out_.height; ++y)
                for (int xx = 0; xx < out_.width; ++xx)
                    out.at(y, xx, c) = x.at(y * stride_, xx * stride_, c);
        return out;
    }
    ImageTensor adjoint(const ImageTensor& v) const override {
        check_out(v);
        ImageTensor out(in_.height, in_.width, in_.channels, 0.0);
        for (int c = 0; c < out_.channels; ++c)
            for (int y = 0; y < out_.height; ++y)
                for (int xx = 0; xx < out_.width; ++xx)
                    out.at(y * stride_, xx * stride_, c) = v.at(y, xx, c);
        return out;
    }
    std::string name() const override { return "decimate" + std::to_string(stride_); }

private:
    int stride_;
};

class MaskOp final : public LinearOperator {
public:
    explicit MaskOp(ImageTensor mask) : LinearOperator(shape_of(mask), shape_of(mask)), m_(std::move(mask)) {
        for (double v : m_.data)
            if (v != 0.0 && v != 1.0) throw ParameterError("mask entries must be 0 or 1");
    }
    ImageTensor apply(const ImageTensor& x) const override {
        check_in(x);
        ImageTensor out = x;
        for (size_t i = 0; i < out.size(); ++i) out.data[i] *= m_.data[i];
        return out;
    }
    ImageTensor adjoint(const ImageTensor& v) const override {
        check_out(v);
        return apply(v); // self-adjoint
    }
    std::string name() const override { return "mask"; }

private:
    ImageTensor m_;
};

class ComposeOp final : public LinearOperator {
public:
    explicit ComposeOp(std::vector<OperatorPtr> ops)
        : LinearOperator(ops.front()->input_shape(), ops.back()->output_shape()), ops_(std::move(ops)) {
        for (size_t i = 1; i < ops_.size(); ++i)
            if (ops_[i]->input_shape() != ops_[i - 1]->output_shape())
                throw ShapeError("compose: stage " + std::to_string(i) + " expects " + ops_[i]->input_shape().str() +
                                 " but previous produces " + ops_[i - 1]->output_shape().str());
    }
    ImageTensor apply(const ImageTensor& x) const override {
        check_in(x);
        ImageTensor cur = x;
        for (const auto& op : ops_) cur = op->apply(cur);
        return cur;
    }
    ImageTensor adjoint(const ImageTensor& v) const override {
        check_out(v);
        ImageTensor cur = v;
        for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) cur = (*it)->adjoint(cur);
        return cur;
    }
    std::string name() const override {
        std::string n = "compose(";
        for (size_t i = 0; i < ops_.size(); ++i) n += (i ? "," : "") + ops_[i]->name();
        return n + ")";
    }

private:
    std::vector<OperatorPtr> ops_;
};

double bicubic_weight(double x) { // Catmull-Rom, a = -0.5
    constexpr double a = -0.5;
    x = std::abs(x);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

} // namespace

OperatorPtr identity_op(Shape s) { return std::make_shared<IdentityOp>(s); }

OperatorPtr blur_op(const std::vector<double>& kernel, int K, Shape s) {
    return std::make_shared<BlurOp>(kernel, K, s);
}

OperatorPtr uniform_blur_op(int K, Shape s) {
    if (K < 1 || K % 2 == 0) throw ParameterError("uniform blur needs odd K >= 1");
    std::vector<double> k(static_cast<size_t>(K) * K, 1.0 / double(K * K));
    return blur_op(k, K, s);
}

OperatorPtr separable_blur_op(const std::vector<double>& taps, int anchor, Shape s) {
    return std::make_shared<SeparableBlurOp>(taps, anchor, s);
}

OperatorPtr decimate_op(int stride, Shape s) { return std::make_shared<DecimateOp>(stride, s); }

OperatorPtr mask_op(const ImageTensor& mask) { return std::make_shared<MaskOp>(mask); }

OperatorPtr compose_op(std::vector<OperatorPtr> ops) {
    if (ops.empty()) throw ParameterError("compose needs at least one operator");
    return std::make_shared<ComposeOp>(std::move(ops));
}

std::vector<double> bicubic_antialias_taps(int gamma) {
    int n = 4 * gamma;
    std::vector<double> taps(n);
    double center = (n - 1) / 2.0;
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
        taps[j] = bicubic_weight((j - center) / double(gamma));
        sum += taps[j];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

OperatorPtr make_sr_operator(int gamma, Shape in_shape) {
    if (gamma != 2 && gamma != 4 && gamma != 8) throw ParameterError("SR scale must be 2, 4, or 8");
    if (in_shape.height % gamma != 0 || in_shape.width % gamma != 0)
        throw ParameterError("SR: dims " + in_shape.str() + " not divisible by " + std::to_string(gamma));
    // anchor 3*gamma/2 centers the 4*gamma taps of low-res pixel i on input
    // coordinate gamma*i + (gamma-1)/2 after stride-gamma decimation
    auto blur = separable_blur_op(bicubic_antialias_taps(gamma), 3 * gamma / 2, in_shape);
    auto dec = decimate_op(gamma, in_shape);
    return compose_op({blur, dec});
}

Observation degrade(const ImageTensor& x, OperatorPtr A, double sigma, uint64_t seed) {
    if (sigma < 0.0) throw ParameterError("degrade: sigma must be >= 0");
    ImageTensor y = A->apply(x);
    if (sigma > 0.0) {
        RandomStream rs(seed);
        for (double& v : y.data) v += sigma * rs.normal();
    }
    return Observation{std::move(y), std::move(A), sigma, seed};
}

ImageTensor bicubic_resize(const ImageTensor& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw ParameterError("bicubic_resize: bad output dims");
    double sy = double(img.height) / out_h;
    double sx = double(img.width) / out_w;
    ImageTensor out(out_h, out_w, img.channels);
    for (int c = 0; c < img.channels; ++c) {
        const double* ip = img.plane(c);
        double* op = out.plane(c);
        for (int y = 0; y < out_h; ++y) {
            double fy = (y + 0.5) * sy - 0.5;
            int y0 = static_cast<int>(std::floor(fy));
            double wy[4];
            for (int j = 0; j < 4; ++j) wy[j] = bicubic_weight(fy - (y0 - 1 + j));
            for (int xx = 0; xx < out_w; ++xx) {
                double fx = (xx + 0.5) * sx - 0.5;
                int x0 = static_cast<int>(std::floor(fx));
                double wx[4];
                for (int j = 0; j < 4; ++j) wx[j] = bicubic_weight(fx - (x0 - 1 + j));
                double acc = 0.0, wsum = 0.0;
                for (int j = 0; j < 4; ++j) {
                    int yy = reflect_index(y0 - 1 + j, img.height);
                    for (int i = 0; i < 4; ++i) {
                        int xi = reflect_index(x0 - 1 + i, img.width);
                        double w = wy[j] * wx[i];
                        acc += w * ip[yy * img.width + xi];
                        wsum += w;
                    }
                }
                op[y * out_w + xx] = acc / wsum;
            }
        }
    }
    return out;
}

} // namespace adir
