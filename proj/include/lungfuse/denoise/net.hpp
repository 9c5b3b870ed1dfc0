#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "lungfuse/core/error.hpp"
#include "lungfuse/core/rng.hpp"
#include "lungfuse/imgcore/image.hpp"

namespace lungfuse {

/// One stage of a convolutional net. Convolutions are 3x3, stride 1, with
/// half-sample mirror padding; pool is 2x2 mean; upsample is 2x nearest.
struct LayerSpec {
    enum class Kind { conv, relu, pool, upsample, sigmoid };
    Kind kind = Kind::relu;
    int in_ch = 0;
    int out_ch = 0;

    static LayerSpec conv(int in, int out) { return {Kind::conv, in, out}; }
    static LayerSpec relu() { return {Kind::relu}; }
    static LayerSpec pool() { return {Kind::pool}; }
    static LayerSpec upsample() { return {Kind::upsample}; }
    static LayerSpec sigmoid() { return {Kind::sigmoid}; }

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

inline std::string to_string(const LayerSpec& l) {
    switch (l.kind) {
        case LayerSpec::Kind::conv: return "conv:" + std::to_string(l.in_ch) + ":" + std::to_string(l.out_ch);
        case LayerSpec::Kind::relu: return "relu";
        case LayerSpec::Kind::pool: return "pool";
        case LayerSpec::Kind::upsample: return "up";
        case LayerSpec::Kind::sigmoid: return "sigmoid";
    }
    return "?";
}

inline LayerSpec parse_layer(const std::string& s) {
    if (s == "relu") return LayerSpec::relu();
    if (s == "pool") return LayerSpec::pool();
    if (s == "up") return LayerSpec::upsample();
    if (s == "sigmoid") return LayerSpec::sigmoid();
    if (s.rfind("conv:", 0) == 0) {
        const auto colon = s.find(':', 5);
        if (colon != std::string::npos) {
            try {
                return LayerSpec::conv(std::stoi(s.substr(5, colon - 5)), std::stoi(s.substr(colon + 1)));
            } catch (const std::exception&) {
            }
        }
    }
    throw FormatError("unknown layer '" + s + "'", 0);
}

struct ConvNetSpec {
    std::vector<LayerSpec> layers;

    /// conv(1->8) relu pool conv(8->16) relu pool conv(16->16) relu up conv(16->8) relu up conv(8->1) sigmoid
    static ConvNetSpec default_autoencoder() {
        using L = LayerSpec;
        return {{L::conv(1, 8), L::relu(), L::pool(), L::conv(8, 16), L::relu(), L::pool(), L::conv(16, 16), L::relu(),
                 L::upsample(), L::conv(16, 8), L::relu(), L::upsample(), L::conv(8, 1), L::sigmoid()}};
    }

    /// Spatial size must be divisible by this (2^pools).
    int size_multiple() const {
        int pools = 0, m = 1;
        for (const auto& l : layers)
            if (l.kind == LayerSpec::Kind::pool) m = 1 << ++pools;
        return m;
    }

    void validate() const {
        if (layers.empty()) throw ContractError("ConvNetSpec: no layers");
        int channels = 1, scale = 0;
        for (const auto& l : layers) {
            if (l.kind == LayerSpec::Kind::conv) {
                if (l.in_ch != channels || l.out_ch < 1)
                    throw ContractError("ConvNetSpec: channel chain broken at " + to_string(l) + " (have " +
                                        std::to_string(channels) + " channels)");
                channels = l.out_ch;
            } else if (l.kind == LayerSpec::Kind::pool) {
                ++scale;
            } else if (l.kind == LayerSpec::Kind::upsample) {
                --scale;
            }
        }
        if (channels != 1) throw ContractError("ConvNetSpec: output must have one channel");
        if (scale != 0) throw ContractError("ConvNetSpec: pools and upsamples must balance");
    }

    friend bool operator==(const ConvNetSpec&, const ConvNetSpec&) = default;
};

struct ConvWeights {
    int out_ch = 0;
    int in_ch = 0;
    std::vector<double> kernel;  // [out][in][3][3]
    std::vector<double> bias;    // [out]

    double& k(int o, int i, int ky, int kx) { return kernel[((static_cast<std::size_t>(o) * in_ch + i) * 3 + ky) * 3 + kx]; }
    double k(int o, int i, int ky, int kx) const {
        return kernel[((static_cast<std::size_t>(o) * in_ch + i) * 3 + ky) * 3 + kx];
    }
};

/// One ConvWeights per conv layer, in layer order. Also used for gradients.
struct NetWeights {
    std::vector<ConvWeights> convs;

    static NetWeights zeros_like(const ConvNetSpec& spec) {
        NetWeights w;
        for (const auto& l : spec.layers)
            if (l.kind == LayerSpec::Kind::conv)
                w.convs.push_back({l.out_ch, l.in_ch, std::vector<double>(static_cast<std::size_t>(l.out_ch) * l.in_ch * 9, 0.0),
                                   std::vector<double>(l.out_ch, 0.0)});
        return w;
    }

    /// Uniform(-s, s) with s = sqrt(6 / (fan_in + fan_out)); zero biases.
    static NetWeights glorot(const ConvNetSpec& spec, std::uint64_t seed) {
        NetWeights w = zeros_like(spec);
        Rng rng(seed);
        for (auto& c : w.convs) {
            const double s = std::sqrt(6.0 / (9.0 * c.in_ch + 9.0 * c.out_ch));
            for (double& v : c.kernel) v = rng.uniform(-s, s);
        }
        return w;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& c : convs) n += c.kernel.size() + c.bias.size();
        return n;
    }

    /// Visits every scalar parameter in a fixed order.
    template <class F>
    void for_each(F&& fn) {
        for (auto& c : convs) {
            for (double& v : c.kernel) fn(v);
            for (double& v : c.bias) fn(v);
        }
    }

    bool all_finite() const {
        for (const auto& c : convs) {
            for (double v : c.kernel)
                if (!std::isfinite(v)) return false;
            for (double v : c.bias)
                if (!std::isfinite(v)) return false;
        }
        return true;
    }

    friend bool operator==(const NetWeights& a, const NetWeights& b) {
        if (a.convs.size() != b.convs.size()) return false;
        for (std::size_t i = 0; i < a.convs.size(); ++i)
            if (a.convs[i].kernel != b.convs[i].kernel || a.convs[i].bias != b.convs[i].bias) return false;
        return true;
    }

    void check_matches(const ConvNetSpec& spec) const {
        std::size_t i = 0;
        for (const auto& l : spec.layers) {
            if (l.kind != LayerSpec::Kind::conv) continue;
            if (i >= convs.size() || convs[i].in_ch != l.in_ch || convs[i].out_ch != l.out_ch ||
                convs[i].kernel.size() != static_cast<std::size_t>(l.in_ch) * l.out_ch * 9 ||
                convs[i].bias.size() != static_cast<std::size_t>(l.out_ch))
                throw ContractError("NetWeights: shapes do not match the network spec");
            ++i;
        }
        if (i != convs.size()) throw ContractError("NetWeights: layer count does not match the network spec");
    }
};

/// Channels x height x width activation volume.
struct Tensor {
    int c = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int channels, int height, int width)
        : c(channels), h(height), w(width), v(static_cast<std::size_t>(channels) * height * width, 0.0) {}

    double& at(int ch, int y, int x) { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
    double at(int ch, int y, int x) const { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
    double* plane(int ch) { return v.data() + static_cast<std::size_t>(ch) * h * w; }
    const double* plane(int ch) const { return v.data() + static_cast<std::size_t>(ch) * h * w; }
};

namespace net_detail {

/// Half-sample mirror padding by one pixel: index -1 -> 0, n -> n-1.
inline Tensor pad1(const Tensor& t) {
    Tensor p(t.c, t.h + 2, t.w + 2);
    for (int ch = 0; ch < t.c; ++ch)
        for (int y = -1; y <= t.h; ++y) {
            const int sy = std::clamp(y, 0, t.h - 1);
            for (int x = -1; x <= t.w; ++x) p.at(ch, y + 1, x + 1) = t.at(ch, sy, std::clamp(x, 0, t.w - 1));
        }
    return p;
}

inline Tensor unpad1(const Tensor& p) {
    Tensor t(p.c, p.h - 2, p.w - 2);
    for (int ch = 0; ch < p.c; ++ch)
        for (int y = -1; y <= t.h; ++y) {
            const int sy = std::clamp(y, 0, t.h - 1);
            for (int x = -1; x <= t.w; ++x) t.at(ch, sy, std::clamp(x, 0, t.w - 1)) += p.at(ch, y + 1, x + 1);
        }
    return t;
}

inline Tensor conv_forward(const Tensor& in, const ConvWeights& wt) {
    const Tensor p = pad1(in);
    Tensor out(wt.out_ch, in.h, in.w);
    for (int o = 0; o < wt.out_ch; ++o) {
        double* dst = out.plane(o);
        std::fill(dst, dst + static_cast<std::size_t>(in.h) * in.w, wt.bias[o]);
        for (int i = 0; i < wt.in_ch; ++i) {
            const double* src = p.plane(i);
            for (int ky = 0; ky < 3; ++ky)
                for (int kx = 0; kx < 3; ++kx) {
                    const double k = wt.k(o, i, ky, kx);
                    for (int y = 0; y < in.h; ++y) {
                        const double* s = src + static_cast<std::size_t>(y + ky) * p.w + kx;
                        double* d = dst + static_cast<std::size_t>(y) * in.w;
                        for (int x = 0; x < in.w; ++x) d[x] += k * s[x];
                    }
                }
        }
    }
    return out;
}

/// Accumulates kernel/bias gradients into `g` and returns the input gradient.
inline Tensor conv_backward(const Tensor& in, const ConvWeights& wt, const Tensor& dout, ConvWeights& g) {
    const Tensor p = pad1(in);
    Tensor dp(in.c, in.h + 2, in.w + 2);
    for (int o = 0; o < wt.out_ch; ++o) {
        const double* dy = dout.plane(o);
        double bsum = 0.0;
        for (std::size_t n = 0; n < static_cast<std::size_t>(in.h) * in.w; ++n) bsum += dy[n];
        g.bias[o] += bsum;
        for (int i = 0; i < wt.in_ch; ++i) {
            const double* src = p.plane(i);
            double* dsrc = dp.plane(i);
            for (int ky = 0; ky < 3; ++ky)
                for (int kx = 0; kx < 3; ++kx) {
                    const double k = wt.k(o, i, ky, kx);
                    double acc = 0.0;
                    for (int y = 0; y < in.h; ++y) {
                        const double* s = src + static_cast<std::size_t>(y + ky) * p.w + kx;
                        double* ds = dsrc + static_cast<std::size_t>(y + ky) * p.w + kx;
                        const double* d = dy + static_cast<std::size_t>(y) * in.w;
                        for (int x = 0; x < in.w; ++x) {
                            acc += d[x] * s[x];
                            ds[x] += k * d[x];
                        }
                    }
                    g.k(o, i, ky, kx) += acc;
                }
        }
    }
    return unpad1(dp);
}

inline Tensor pool_forward(const Tensor& in) {
    Tensor out(in.c, in.h / 2, in.w / 2);
    for (int ch = 0; ch < in.c; ++ch)
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x)
                out.at(ch, y, x) = 0.25 * (in.at(ch, 2 * y, 2 * x) + in.at(ch, 2 * y, 2 * x + 1) +
                                           in.at(ch, 2 * y + 1, 2 * x) + in.at(ch, 2 * y + 1, 2 * x + 1));
    return out;
}

inline Tensor pool_backward(const Tensor& dout) {
    Tensor din(dout.c, dout.h * 2, dout.w * 2);
    for (int ch = 0; ch < din.c; ++ch)
        for (int y = 0; y < din.h; ++y)
            for (int x = 0; x < din.w; ++x) din.at(ch, y, x) = 0.25 * dout.at(ch, y / 2, x / 2);
    return din;
}

inline Tensor upsample_forward(const Tensor& in) {
    Tensor out(in.c, in.h * 2, in.w * 2);
    for (int ch = 0; ch < in.c; ++ch)
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x) out.at(ch, y, x) = in.at(ch, y / 2, x / 2);
    return out;
}

inline Tensor upsample_backward(const Tensor& dout) {
    Tensor din(dout.c, dout.h / 2, dout.w / 2);
    for (int ch = 0; ch < dout.c; ++ch)
        for (int y = 0; y < dout.h; ++y)
            for (int x = 0; x < dout.w; ++x) din.at(ch, y / 2, x / 2) += dout.at(ch, y, x);
    return din;
}

}  // namespace net_detail

/// Activations of every layer; acts[0] is the input, acts[i+1] the output of layer i.
struct ForwardTrace {
    std::vector<Tensor> acts;

    ImageGray output_image() const {
        const Tensor& t = acts.back();
        return ImageGray(t.w, t.h, t.v);
    }
};

inline void check_input(const ConvNetSpec& spec, const ImageGray& img) {
    img.validate();
    const int m = spec.size_multiple();
    if (img.width % m != 0 || img.height % m != 0)
        throw ContractError("denoiser input " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                            " must have dimensions divisible by " + std::to_string(m));
}

inline ForwardTrace forward_trace(const ConvNetSpec& spec, const NetWeights& w, const ImageGray& img) {
    check_input(spec, img);
    ForwardTrace tr;
    Tensor x(1, img.height, img.width);
    x.v = img.data;
    tr.acts.push_back(std::move(x));
    std::size_t conv_i = 0;
    for (const auto& l : spec.layers) {
        const Tensor& in = tr.acts.back();
        Tensor out;
        switch (l.kind) {
            case LayerSpec::Kind::conv: out = net_detail::conv_forward(in, w.convs.at(conv_i++)); break;
            case LayerSpec::Kind::relu:
                out = in;
                for (double& v : out.v) v = v > 0.0 ? v : 0.0;
                break;
            case LayerSpec::Kind::pool: out = net_detail::pool_forward(in); break;
            case LayerSpec::Kind::upsample: out = net_detail::upsample_forward(in); break;
            case LayerSpec::Kind::sigmoid:
                out = in;
                for (double& v : out.v) v = 1.0 / (1.0 + std::exp(-v));
                break;
        }
        tr.acts.push_back(std::move(out));
    }
    return tr;
}

inline ImageGray forward(const ConvNetSpec& spec, const NetWeights& w, const ImageGray& img) {
    return forward_trace(spec, w, img).output_image();
}

inline double loss_mse(const ImageGray& pred, const ImageGray& target) {
    require_same_dims(pred, target, "loss_mse");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data[i] - target.data[i];
        s += d * d;
    }
    return s / static_cast<double>(pred.size());
}

/// Backpropagates MSE(forward(img), target); gradients are added into `grad`.
/// Returns the loss.
inline double backward_into(const ConvNetSpec& spec, const NetWeights& w, const ImageGray& img, const ImageGray& target,
                            NetWeights& grad) {
    const ForwardTrace tr = forward_trace(spec, w, img);
    const Tensor& pred = tr.acts.back();
    require_same_dims(img, target, "backward");
    const double n = static_cast<double>(pred.v.size());
    Tensor d(pred.c, pred.h, pred.w);
    double loss = 0.0;
    for (std::size_t i = 0; i < pred.v.size(); ++i) {
        const double diff = pred.v[i] - target.data[i];
        loss += diff * diff;
        d.v[i] = 2.0 * diff / n;
    }
    std::size_t conv_i = w.convs.size();
    for (std::size_t li = spec.layers.size(); li-- > 0;) {
        const auto& l = spec.layers[li];
        const Tensor& in = tr.acts[li];
        const Tensor& out = tr.acts[li + 1];
        switch (l.kind) {
            case LayerSpec::Kind::conv:
                --conv_i;
                d = net_detail::conv_backward(in, w.convs[conv_i], d, grad.convs[conv_i]);
                break;
            case LayerSpec::Kind::relu:
                for (std::size_t i = 0; i < d.v.size(); ++i)
                    if (!(in.v[i] > 0.0)) d.v[i] = 0.0;
                break;
            case LayerSpec::Kind::pool: d = net_detail::pool_backward(d); break;
            case LayerSpec::Kind::upsample: d = net_detail::upsample_backward(d); break;
            case LayerSpec::Kind::sigmoid:
                for (std::size_t i = 0; i < d.v.size(); ++i) d.v[i] *= out.v[i] * (1.0 - out.v[i]);
                break;
        }
    }
    return loss / n;
}

inline NetWeights backward(const ConvNetSpec& spec, const NetWeights& w, const ImageGray& img, const ImageGray& target) {
    NetWeights grad = NetWeights::zeros_like(spec);
    backward_into(spec, w, img, target, grad);
    return grad;
}

/// Mirror-pads to the network's size multiple, runs the net and crops back.
inline ImageGray denoise(const ConvNetSpec& spec, const NetWeights& w, const ImageGray& img) {
    img.validate();
    const int m = spec.size_multiple();
    const int pw = (img.width + m - 1) / m * m, ph = (img.height + m - 1) / m * m;
    if (pw == img.width && ph == img.height) return forward(spec, w, img);
    ImageGray padded(pw, ph);
    for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x) {
            const int sx = x < img.width ? x : 2 * img.width - 1 - x;
            const int sy = y < img.height ? y : 2 * img.height - 1 - y;
            padded.at(x, y) = img.at(std::clamp(sx, 0, img.width - 1), std::clamp(sy, 0, img.height - 1));
        }
    const ImageGray full = forward(spec, w, padded);
    ImageGray out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) out.at(x, y) = full.at(x, y);
    return out;
}

}  // namespace lungfuse
