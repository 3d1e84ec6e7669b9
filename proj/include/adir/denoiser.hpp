#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "adir/rng.hpp"
#include "adir/schedule.hpp"
#include "adir/tensor.hpp"

namespace adir {

// Fixed residual conv topology; widths are construction-time constants.
// Default: 4 blocks at 32 channels with a 64-dim sinusoidal timestep embedding.
struct DenoiserArch {
    int in_channels = 3;
    int hidden = 32;
    int blocks = 4;
    int temb_dim = 64;
    int image_size = 32;
    bool operator==(const DenoiserArch&) const = default;
};

// Schedule the weights were trained against; carried in checkpoints.
struct ScheduleSpec {
    int T = 200;
    ScheduleKind kind = ScheduleKind::Linear;
    double beta_start = 1e-4;
    double beta_end = 0.02;
};

inline DiffusionSchedule make_schedule(const ScheduleSpec& s) {
    return make_schedule(s.T, s.kind, s.beta_start, s.beta_end);
}

template <class S>
struct ConvLayer {
    int out_ch = 0, in_ch = 0;
    std::vector<S> w; // [out][in][3][3]
    std::vector<S> b; // [out]
};

template <class S>
struct LinearLayer {
    int out_ch = 0, in_ch = 0;
    std::vector<S> w; // [out][in]
    std::vector<S> b; // [out]
};

template <class S>
struct BlockWeights {
    LinearLayer<S> temb;
    ConvLayer<S> conv1, conv2;
};

template <class S>
struct NetWeights {
    ConvLayer<S> conv_in;
    std::vector<BlockWeights<S>> blocks;
    ConvLayer<S> conv_out;
};

template <class S>
struct DenoiserParamsT {
    DenoiserArch arch;
    ScheduleSpec sched_meta;
    NetWeights<S> layers;
    NetWeights<S> ema_shadow;
    int64_t step_count = 0;
    std::vector<std::pair<std::string, std::string>> provenance;
};

using DenoiserParams = DenoiserParamsT<float>;

// Visits every weight array in a fixed order: f(name, vector<S>&, row_dim, col_dim).
template <class S, class F>
void for_each_array(NetWeights<S>& net, F&& f) {
    f("conv_in.w", net.conv_in.w);
    f("conv_in.b", net.conv_in.b);
    for (size_t k = 0; k < net.blocks.size(); ++k) {
        std::string p = "block" + std::to_string(k) + ".";
        f(p + "temb.w", net.blocks[k].temb.w);
        f(p + "temb.b", net.blocks[k].temb.b);
        f(p + "conv1.w", net.blocks[k].conv1.w);
        f(p + "conv1.b", net.blocks[k].conv1.b);
        f(p + "conv2.w", net.blocks[k].conv2.w);
        f(p + "conv2.b", net.blocks[k].conv2.b);
    }
    f("conv_out.w", net.conv_out.w);
    f("conv_out.b", net.conv_out.b);
}

template <class S>
std::vector<std::vector<S>*> array_ptrs(NetWeights<S>& n) {
    std::vector<std::vector<S>*> out;
    for_each_array(n, [&](const std::string&, std::vector<S>& v) { out.push_back(&v); });
    return out;
}

template <class S>
std::vector<const std::vector<S>*> array_ptrs(const NetWeights<S>& n) {
    std::vector<const std::vector<S>*> out;
    for_each_array(const_cast<NetWeights<S>&>(n),
                   [&](const std::string&, std::vector<S>& v) { out.push_back(&v); });
    return out;
}

namespace detail {

// ---- conv kernels (zero padding, 3x3, correlation convention) ----

template <class S>
void conv3x3(const S* in, int cin, int H, int W, const S* w, const S* b, S* out, int cout) {
    const int HW = H * W;
    for (int co = 0; co < cout; ++co) {
        S* op = out + static_cast<size_t>(co) * HW;
        const S bias = b[co];
        for (int i = 0; i < HW; ++i) op[i] = bias;
        for (int ci = 0; ci < cin; ++ci) {
            const S* ip = in + static_cast<size_t>(ci) * HW;
            const S* wp = w + (static_cast<size_t>(co) * cin + ci) * 9;
            for (int dy = -1; dy <= 1; ++dy) {
                const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                for (int dx = -1; dx <= 1; ++dx) {
                    const S wv = wp[(dy + 1) * 3 + (dx + 1)];
                    const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                    for (int y = y0; y < y1; ++y) {
                        const S* irow = ip + (y + dy) * W + dx;
                        S* orow = op + y * W;
                        for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
                    }
                }
            }
        }
    }
}

template <class S>
void conv3x3_grad_input(const S* dout, int cout, int H, int W, const S* w, int cin, S* din) {
    const int HW = H * W;
    std::fill(din, din + static_cast<size_t>(cin) * HW, S(0));
    for (int co = 0; co < cout; ++co) {
        const S* gp = dout + static_cast<size_t>(co) * HW;
        for (int ci = 0; ci < cin; ++ci) {
            S* dp = din + static_cast<size_t>(ci) * HW;
            const S* wp = w + (static_cast<size_t>(co) * cin + ci) * 9;
            for (int dy = -1; dy <= 1; ++dy) {
                // din[y+dy][x+dx] += w * dout[y][x]  ==  din[y'][x'] += w * dout[y'-dy][x'-dx]
                const int y0 = std::max(0, dy), y1 = std::min(H, H + dy);
                for (int dx = -1; dx <= 1; ++dx) {
                    const S wv = wp[(dy + 1) * 3 + (dx + 1)];
                    const int x0 = std::max(0, dx), x1 = std::min(W, W + dx);
                    for (int y = y0; y < y1; ++y) {
                        const S* grow = gp + (y - dy) * W - dx;
                        S* drow = dp + y * W;
                        for (int x = x0; x < x1; ++x) drow[x] += wv * grow[x];
                    }
                }
            }
        }
    }
}

template <class S>
void conv3x3_grad_weights(const S* dout, int cout, int H, int W, const S* in, int cin, S* dw, S* db) {
    const int HW = H * W;
    for (int co = 0; co < cout; ++co) {
        const S* gp = dout + static_cast<size_t>(co) * HW;
        S bs = 0;
        for (int i = 0; i < HW; ++i) bs += gp[i];
        db[co] += bs;
        for (int ci = 0; ci < cin; ++ci) {
            const S* ip = in + static_cast<size_t>(ci) * HW;
            S* wp = dw + (static_cast<size_t>(co) * cin + ci) * 9;
            for (int dy = -1; dy <= 1; ++dy) {
                const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                for (int dx = -1; dx <= 1; ++dx) {
                    const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                    S acc = 0;
                    for (int y = y0; y < y1; ++y) {
                        const S* irow = ip + (y + dy) * W + dx;
                        const S* grow = gp + y * W;
                        for (int x = x0; x < x1; ++x) acc += grow[x] * irow[x];
                    }
                    wp[(dy + 1) * 3 + (dx + 1)] += acc;
                }
            }
        }
    }
}

template <class S>
inline S silu(S x) {
    S sg = S(1) / (S(1) + std::exp(-x));
    return x * sg;
}

template <class S>
inline S silu_deriv(S x) {
    S sg = S(1) / (S(1) + std::exp(-x));
    return sg * (S(1) + x * (S(1) - sg));
}

} // namespace detail

inline std::vector<double> sinusoidal_embedding(int t, int dim) {
    int half = dim / 2;
    std::vector<double> e(dim, 0.0);
    for (int j = 0; j < half; ++j) {
        double freq = half > 1 ? std::exp(-std::log(10000.0) * double(j) / double(half - 1)) : 1.0;
        e[2 * j] = std::sin(t * freq);
        e[2 * j + 1] = std::cos(t * freq);
    }
    return e;
}

template <class S>
struct ForwardCache {
    std::vector<std::vector<S>> hs; // block inputs; hs[0] = conv_in output, hs[blocks] = last residual sum
    std::vector<std::vector<S>> as; // pre-activations conv1(h) + temb
    std::vector<std::vector<S>> us; // silu(a)
    std::vector<S> x;               // network input
    std::vector<S> z;               // silu(hs[blocks])
    std::vector<S> temb;
};

template <class S>
NetWeights<S> zero_like(const NetWeights<S>& src) {
    NetWeights<S> g = src;
    for_each_array(g, [](const std::string&, std::vector<S>& v) { std::fill(v.begin(), v.end(), S(0)); });
    return g;
}

template <class S>
NetWeights<S> make_net_weights(const DenoiserArch& a) {
    NetWeights<S> n;
    auto conv = [](int out_ch, int in_ch) {
        ConvLayer<S> c;
        c.out_ch = out_ch;
        c.in_ch = in_ch;
        c.w.assign(static_cast<size_t>(out_ch) * in_ch * 9, S(0));
        c.b.assign(out_ch, S(0));
        return c;
    };
    n.conv_in = conv(a.hidden, a.in_channels);
    n.blocks.resize(a.blocks);
    for (auto& blk : n.blocks) {
        blk.temb.out_ch = a.hidden;
        blk.temb.in_ch = a.temb_dim;
        blk.temb.w.assign(static_cast<size_t>(a.hidden) * a.temb_dim, S(0));
        blk.temb.b.assign(a.hidden, S(0));
        blk.conv1 = conv(a.hidden, a.hidden);
        blk.conv2 = conv(a.hidden, a.hidden);
    }
    n.conv_out = conv(a.in_channels, a.hidden);
    return n;
}

// He fan-in init; conv_out stays zero so the untrained model predicts eps = 0.
template <class S>
DenoiserParamsT<S> init_denoiser(const DenoiserArch& arch, uint64_t seed) {
    DenoiserParamsT<S> p;
    p.arch = arch;
    p.layers = make_net_weights<S>(arch);
    RandomStream rs(seed);
    auto fill_conv = [&](ConvLayer<S>& c) {
        double sd = std::sqrt(2.0 / double(c.in_ch * 9));
        for (auto& w : c.w) w = static_cast<S>(sd * rs.normal());
    };
    fill_conv(p.layers.conv_in);
    for (auto& blk : p.layers.blocks) {
        double sd = std::sqrt(2.0 / double(blk.temb.in_ch));
        for (auto& w : blk.temb.w) w = static_cast<S>(sd * rs.normal());
        fill_conv(blk.conv1);
        fill_conv(blk.conv2);
    }
    // conv_out left zero-initialized
    p.ema_shadow = p.layers;
    p.step_count = 0;
    return p;
}

template <class S>
void net_forward(const NetWeights<S>& net, const DenoiserArch& arch, const std::vector<S>& x, int H, int W, int t,
                 std::vector<S>& out, ForwardCache<S>* cache) {
    const int HW = H * W;
    const int ch = arch.hidden;
    std::vector<double> temb_d = sinusoidal_embedding(t, arch.temb_dim);
    std::vector<S> temb(temb_d.begin(), temb_d.end());

    std::vector<S> h(static_cast<size_t>(ch) * HW);
    detail::conv3x3(x.data(), arch.in_channels, H, W, net.conv_in.w.data(), net.conv_in.b.data(), h.data(), ch);

    if (cache) {
        cache->x = x;
        cache->temb = temb;
        cache->hs.assign(arch.blocks + 1, {});
        cache->as.assign(arch.blocks, {});
        cache->us.assign(arch.blocks, {});
        cache->hs[0] = h;
    }

    std::vector<S> a(static_cast<size_t>(ch) * HW), u(a.size()), v(a.size());
    for (int k = 0; k < arch.blocks; ++k) {
        const auto& blk = net.blocks[k];
        detail::conv3x3(h.data(), ch, H, W, blk.conv1.w.data(), blk.conv1.b.data(), a.data(), ch);
        for (int c = 0; c < ch; ++c) {
            S tp = blk.temb.b[c];
            const S* wr = blk.temb.w.data() + static_cast<size_t>(c) * arch.temb_dim;
            for (int d = 0; d < arch.temb_dim; ++d) tp += wr[d] * temb[d];
            S* ap = a.data() + static_cast<size_t>(c) * HW;
            for (int i = 0; i < HW; ++i) ap[i] += tp;
        }
        for (size_t i = 0; i < a.size(); ++i) u[i] = detail::silu(a[i]);
        detail::conv3x3(u.data(), ch, H, W, blk.conv2.w.data(), blk.conv2.b.data(), v.data(), ch);
        for (size_t i = 0; i < h.size(); ++i) h[i] += v[i];
        if (cache) {
            cache->as[k] = a;
            cache->us[k] = u;
            cache->hs[k + 1] = h;
        }
    }

    std::vector<S> z(h.size());
    for (size_t i = 0; i < h.size(); ++i) z[i] = detail::silu(h[i]);
    if (cache) cache->z = z;

    out.resize(static_cast<size_t>(arch.in_channels) * HW);
    detail::conv3x3(z.data(), ch, H, W, net.conv_out.w.data(), net.conv_out.b.data(), out.data(), arch.in_channels);
}

// Backprop of dout through the net. Accumulates parameter gradients into
// *grads (if non-null) and writes the input gradient into *dx (if non-null).
template <class S>
void net_backward(const NetWeights<S>& net, const DenoiserArch& arch, const ForwardCache<S>& cache, int H, int W,
                  const std::vector<S>& dout, NetWeights<S>* grads, std::vector<S>* dx) {
    const int HW = H * W;
    const int ch = arch.hidden;

    std::vector<S> dz(static_cast<size_t>(ch) * HW);
    detail::conv3x3_grad_input(dout.data(), arch.in_channels, H, W, net.conv_out.w.data(), ch, dz.data());
    if (grads)
        detail::conv3x3_grad_weights(dout.data(), arch.in_channels, H, W, cache.z.data(), ch,
                                     grads->conv_out.w.data(), grads->conv_out.b.data());

    std::vector<S> dh(dz.size());
    const auto& hlast = cache.hs[arch.blocks];
    for (size_t i = 0; i < dh.size(); ++i) dh[i] = dz[i] * detail::silu_deriv(hlast[i]);

    std::vector<S> du(dh.size()), da(dh.size()), dtmp(dh.size());
    for (int k = arch.blocks - 1; k >= 0; --k) {
        const auto& blk = net.blocks[k];
        // residual: h_{k+1} = h_k + conv2(silu(conv1(h_k) + temb))
        detail::conv3x3_grad_input(dh.data(), ch, H, W, blk.conv2.w.data(), ch, du.data());
        if (grads)
            detail::conv3x3_grad_weights(dh.data(), ch, H, W, cache.us[k].data(), ch,
                                         grads->blocks[k].conv2.w.data(), grads->blocks[k].conv2.b.data());
        const auto& a = cache.as[k];
        for (size_t i = 0; i < da.size(); ++i) da[i] = du[i] * detail::silu_deriv(a[i]);
        if (grads) {
            auto& gb = grads->blocks[k];
            for (int c = 0; c < ch; ++c) {
                const S* dap = da.data() + static_cast<size_t>(c) * HW;
                S s = 0;
                for (int i = 0; i < HW; ++i) s += dap[i];
                gb.temb.b[c] += s;
                S* wr = gb.temb.w.data() + static_cast<size_t>(c) * arch.temb_dim;
                for (int d = 0; d < arch.temb_dim; ++d) wr[d] += s * cache.temb[d];
            }
        }
        detail::conv3x3_grad_input(da.data(), ch, H, W, blk.conv1.w.data(), ch, dtmp.data());
        if (grads)
            detail::conv3x3_grad_weights(da.data(), ch, H, W, cache.hs[k].data(), ch,
                                         grads->blocks[k].conv1.w.data(), grads->blocks[k].conv1.b.data());
        for (size_t i = 0; i < dh.size(); ++i) dh[i] += dtmp[i];
    }

    if (grads)
        detail::conv3x3_grad_weights(dh.data(), ch, H, W, cache.x.data(), arch.in_channels,
                                     grads->conv_in.w.data(), grads->conv_in.b.data());
    if (dx) {
        dx->resize(static_cast<size_t>(arch.in_channels) * HW);
        detail::conv3x3_grad_input(dh.data(), ch, H, W, net.conv_in.w.data(), arch.in_channels, dx->data());
    }
}

template <class S>
std::vector<S> to_scalar_buf(const ImageTensor& img) {
    std::vector<S> v(img.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = static_cast<S>(img.data[i]);
    return v;
}

template <class S>
ImageTensor from_scalar_buf(const std::vector<S>& v, int h, int w, int c) {
    ImageTensor img(h, w, c);
    for (size_t i = 0; i < v.size(); ++i) img.data[i] = static_cast<double>(v[i]);
    return img;
}

template <class S>
void check_input_shape(const DenoiserParamsT<S>& p, const ImageTensor& x) {
    if (x.channels != p.arch.in_channels)
        throw ShapeError("denoiser expects " + std::to_string(p.arch.in_channels) + " channels, got " +
                         std::to_string(x.channels));
}

template <class S>
ImageTensor eps_predict(const DenoiserParamsT<S>& p, const ImageTensor& x_t, int t, bool use_ema) {
    check_input_shape(p, x_t);
    auto x = to_scalar_buf<S>(x_t);
    std::vector<S> out;
    net_forward(use_ema ? p.ema_shadow : p.layers, p.arch, x, x_t.height, x_t.width, t, out, (ForwardCache<S>*)nullptr);
    return from_scalar_buf(out, x_t.height, x_t.width, x_t.channels);
}

template <class S>
struct LossGrad {
    double loss = 0.0;
    NetWeights<S> grads;
};

// d l_simple / d theta at x_t = forward_sample(x0, t, eps); raw weights.
template <class S>
LossGrad<S> loss_gradient(const DenoiserParamsT<S>& p, const ImageTensor& x0, int t, const NoiseDraw& eps,
                          const DiffusionSchedule& sched) {
    check_input_shape(p, x0);
    ImageTensor x_t = forward_sample(x0, t, eps, sched);
    auto x = to_scalar_buf<S>(x_t);
    ForwardCache<S> cache;
    std::vector<S> pred;
    net_forward(p.layers, p.arch, x, x0.height, x0.width, t, pred, &cache);

    LossGrad<S> out;
    out.grads = zero_like(p.layers);
    std::vector<S> dout(pred.size());
    double loss = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        double r = static_cast<double>(pred[i]) - eps.values.data[i];
        loss += r * r;
        dout[i] = static_cast<S>(2.0 * r);
    }
    out.loss = loss;
    net_backward(p.layers, p.arch, cache, x0.height, x0.width, dout, &out.grads, (std::vector<S>*)nullptr);
    return out;
}

// J^T * cotangent where J = d eps_predict / d x_t (raw weights).
template <class S>
ImageTensor input_gradient(const DenoiserParamsT<S>& p, const ImageTensor& x_t, int t, const ImageTensor& cotangent,
                           bool use_ema = false) {
    check_input_shape(p, x_t);
    require_same_shape(x_t, cotangent, "input_gradient");
    auto x = to_scalar_buf<S>(x_t);
    ForwardCache<S> cache;
    std::vector<S> pred;
    const auto& net = use_ema ? p.ema_shadow : p.layers;
    net_forward(net, p.arch, x, x_t.height, x_t.width, t, pred, &cache);
    auto dout = to_scalar_buf<S>(cotangent);
    std::vector<S> dx;
    net_backward(net, p.arch, cache, x_t.height, x_t.width, dout, (NetWeights<S>*)nullptr, &dx);
    return from_scalar_buf(dx, x_t.height, x_t.width, x_t.channels);
}

template <class S>
struct AdamState {
    NetWeights<S> m, v;
};

template <class S>
AdamState<S> make_adam_state(const DenoiserParamsT<S>& p) {
    return AdamState<S>{zero_like(p.layers), zero_like(p.layers)};
}

// Bias-corrected Adam, beta1=0.9 beta2=0.999 eps=1e-8; increments step_count.
template <class S>
void adam_step(DenoiserParamsT<S>& p, const NetWeights<S>& grads, double lr, AdamState<S>& st) {
    if (!(lr > 0.0)) throw ParameterError("adam: lr must be > 0");
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const int64_t t = p.step_count + 1;
    const double c1 = 1.0 - std::pow(b1, double(t));
    const double c2 = 1.0 - std::pow(b2, double(t));
    auto wp = array_ptrs(p.layers);
    auto gp = array_ptrs(grads);
    auto mp = array_ptrs(st.m);
    auto vp = array_ptrs(st.v);
    for (size_t a = 0; a < wp.size(); ++a) {
        std::vector<S>& wv = *wp[a];
        const std::vector<S>& gv = *gp[a];
        std::vector<S>& mv = *mp[a];
        std::vector<S>& vv = *vp[a];
        for (size_t i = 0; i < wv.size(); ++i) {
            double gi = static_cast<double>(gv[i]);
            double m = b1 * static_cast<double>(mv[i]) + (1.0 - b1) * gi;
            double v = b2 * static_cast<double>(vv[i]) + (1.0 - b2) * gi * gi;
            mv[i] = static_cast<S>(m);
            vv[i] = static_cast<S>(v);
            wv[i] = static_cast<S>(static_cast<double>(wv[i]) - lr * (m / c1) / (std::sqrt(v / c2) + eps));
        }
    }
    p.step_count = t;
}

// shadow <- rate*shadow + (1-rate)*weights
template <class S>
void ema_update(DenoiserParamsT<S>& p, double rate) {
    if (rate < 0.0 || rate >= 1.0) throw ParameterError("ema rate must be in [0,1)");
    auto sp = array_ptrs(p.ema_shadow);
    auto wp = array_ptrs(p.layers);
    for (size_t a = 0; a < sp.size(); ++a) {
        std::vector<S>& sh = *sp[a];
        const std::vector<S>& wv = *wp[a];
        for (size_t i = 0; i < sh.size(); ++i)
            sh[i] = static_cast<S>(rate * static_cast<double>(sh[i]) + (1.0 - rate) * static_cast<double>(wv[i]));
    }
}

struct TrainConfig {
    double learning_rate = 1e-4;
    double ema_rate = 0.95;
    int batch_size = 8;
    int iterations = 0;
    uint64_t seed = 0;
};

template <class S>
struct TrainResult {
    DenoiserParamsT<S> params;
    std::vector<double> loss_curve; // mean batch l_simple per iteration
};

} // namespace adir
