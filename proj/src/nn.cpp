#include "rfadv/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>

#include "rfadv/errors.hpp"
#include "rfadv/parallel.hpp"

namespace rfadv {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Vectorizable micro-kernels; restrict lets the compiler assume no overlap.
inline void axpy(double* __restrict dst, const double* __restrict src, double k, int n) {
    for (int i = 0; i < n; ++i)
        dst[i] += k * src[i];
}

// Eight independent partial sums: breaks the FMA dependency chain and gives
// the vectorizer straight lanes. The summation order is fixed by the code,
// so results stay deterministic.
inline double dotp(const double* __restrict a, const double* __restrict b, int n) {
    double s[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    int i = 0;
    for (; i + 8 <= n; i += 8)
        for (int l = 0; l < 8; ++l)
            s[l] += a[i + l] * b[i + l];
    double tail = 0.0;
    for (; i < n; ++i)
        tail += a[i] * b[i];
    return ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7])) + tail;
}

struct ShapeCache final : LayerCache {
    std::vector<int> in_shape;
};

struct TensorCache final : LayerCache {
    Tensor x;
};

struct SoftmaxCache final : LayerCache {
    Tensor p;
};

template <typename C>
const C& cache_as(const LayerCache& c) {
    return static_cast<const C&>(c);
}

void check_rank(const Tensor& x, std::size_t rank, const char* who) {
    if (x.shape.size() != rank)
        throw InputError(std::string(who) + ": unexpected input rank");
}

} // namespace

// ---- InputScale ----

Tensor InputScale::forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const {
    Tensor out = x;
    for (double& v : out.data)
        v = gain_ * (v - shift_);
    if (cache)
        *cache = std::make_unique<LayerCache>();
    return out;
}

Tensor InputScale::backward(const Tensor& grad_out, const LayerCache&, std::vector<Tensor>*) const {
    Tensor dx = grad_out;
    for (double& v : dx.data)
        v *= gain_;
    return dx;
}

// ---- Reshape ----

std::vector<int> Reshape::output_shape(const std::vector<int>& in) const {
    if (Tensor::count(in) != Tensor::count(to_))
        throw InputError("reshape: element count mismatch");
    return to_;
}

Tensor Reshape::forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const {
    (void)output_shape(x.shape);
    if (cache) {
        auto c = std::make_unique<ShapeCache>();
        c->in_shape = x.shape;
        *cache = std::move(c);
    }
    return Tensor(to_, x.data);
}

Tensor Reshape::backward(const Tensor& grad_out, const LayerCache& cache,
                         std::vector<Tensor>*) const {
    return Tensor(cache_as<ShapeCache>(cache).in_shape, grad_out.data);
}

// ---- Transpose2 ----

std::vector<int> Transpose2::output_shape(const std::vector<int>& in) const {
    if (in.size() != 2)
        throw InputError("transpose2: need a 2-D input");
    return {in[1], in[0]};
}

namespace {
Tensor transpose2(const Tensor& x) {
    const int r = x.shape[0], c = x.shape[1];
    Tensor out({c, r});
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            out[static_cast<std::int64_t>(j) * r + i] = x[static_cast<std::int64_t>(i) * c + j];
    return out;
}
} // namespace

Tensor Transpose2::forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const {
    check_rank(x, 2, "transpose2");
    if (cache)
        *cache = std::make_unique<LayerCache>();
    return transpose2(x);
}

Tensor Transpose2::backward(const Tensor& grad_out, const LayerCache&, std::vector<Tensor>*) const {
    return transpose2(grad_out);
}

// ---- Flatten ----

std::vector<int> Flatten::output_shape(const std::vector<int>& in) const {
    return {static_cast<int>(Tensor::count(in))};
}

Tensor Flatten::forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const {
    if (cache) {
        auto c = std::make_unique<ShapeCache>();
        c->in_shape = x.shape;
        *cache = std::move(c);
    }
    return Tensor(output_shape(x.shape), x.data);
}

Tensor Flatten::backward(const Tensor& grad_out, const LayerCache& cache,
                         std::vector<Tensor>*) const {
    return Tensor(cache_as<ShapeCache>(cache).in_shape, grad_out.data);
}

// ---- Conv2D ----

Conv2D::Conv2D(int kh, int kw, int cin, int cout)
    : kh_(kh), kw_(kw), cin_(cin), cout_(cout), kernel_({kh, kw, cin, cout}), bias_({cout}) {
    if (kh < 1 || kw < 1 || cin < 1 || cout < 1)
        throw ConfigError("conv2d: bad geometry");
}

std::vector<int> Conv2D::output_shape(const std::vector<int>& in) const {
    if (in.size() != 3 || in[2] != cin_)
        throw InputError("conv2d: expected [H, W, Cin] input");
    int ho = in[0] - kh_ + 1;
    int wo = in[1] - kw_ + 1;
    if (ho < 1 || wo < 1)
        throw ConfigError("conv2d: input smaller than kernel");
    return {ho, wo, cout_};
}

void Conv2D::init_params(Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(kh_) * kw_ * cin_);
    for (double& v : kernel_.data)
        v = rng.uniform(-bound, bound);
    std::fill(bias_.data.begin(), bias_.data.end(), 0.0);
}

namespace {

// Channels-last tensors are repacked to one plane per channel so the hot
// loops run contiguously along the width axis and vectorize.
std::vector<double> to_planes(const double* hwc, int h, int w, int c) {
    std::vector<double> out(static_cast<std::size_t>(c) * h * w);
    for (int ci = 0; ci < c; ++ci) {
        double* plane = out.data() + static_cast<std::size_t>(ci) * h * w;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                plane[static_cast<std::size_t>(y) * w + x] =
                    hwc[(static_cast<std::size_t>(y) * w + x) * c + ci];
    }
    return out;
}

void from_planes(const std::vector<double>& planes, double* hwc, int h, int w, int c) {
    for (int ci = 0; ci < c; ++ci) {
        const double* plane = planes.data() + static_cast<std::size_t>(ci) * h * w;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                hwc[(static_cast<std::size_t>(y) * w + x) * c + ci] =
                    plane[static_cast<std::size_t>(y) * w + x];
    }
}

} // namespace

Tensor Conv2D::forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const {
    auto os = output_shape(x.shape);
    const int H = x.shape[0], W = x.shape[1];
    const int ho = os[0], wo = os[1];
    Tensor out(os);

    std::vector<double> in_p = to_planes(x.data.data(), H, W, cin_);
    std::vector<double> out_p(static_cast<std::size_t>(cout_) * ho * wo);
    for (int co = 0; co < cout_; ++co)
        std::fill_n(out_p.begin() + static_cast<std::ptrdiff_t>(co) * ho * wo,
                    static_cast<std::size_t>(ho) * wo, bias_[co]);

    // output row stays hot across the whole (ci, kh, kw) reduction
    const double* kd = kernel_.data.data();
    for (int co = 0; co < cout_; ++co) {
        double* oplane = out_p.data() + static_cast<std::size_t>(co) * ho * wo;
        for (int h = 0; h < ho; ++h) {
            double* orow = oplane + static_cast<std::size_t>(h) * wo;
            for (int ci = 0; ci < cin_; ++ci) {
                const double* iplane = in_p.data() + static_cast<std::size_t>(ci) * H * W;
                for (int kh = 0; kh < kh_; ++kh) {
                    const double* irow = iplane + static_cast<std::size_t>(h + kh) * W;
                    for (int kw = 0; kw < kw_; ++kw) {
                        const double k =
                            kd[((static_cast<std::size_t>(kh) * kw_ + kw) * cin_ + ci) * cout_ + co];
                        axpy(orow, irow + kw, k, wo);
                    }
                }
            }
        }
    }
    from_planes(out_p, out.data.data(), ho, wo, cout_);

    if (cache) {
        auto c = std::make_unique<TensorCache>();
        c->x = x;
        *cache = std::move(c);
    }
    return out;
}

Tensor Conv2D::backward(const Tensor& grad_out, const LayerCache& cache,
                        std::vector<Tensor>* param_grads) const {
    const Tensor& x = cache_as<TensorCache>(cache).x;
    const int H = x.shape[0], W = x.shape[1];
    const int ho = grad_out.shape[0], wo = grad_out.shape[1];

    Tensor dx(x.shape);
    Tensor& dk = (*param_grads)[0];
    Tensor& db = (*param_grads)[1];

    std::vector<double> in_p = to_planes(x.data.data(), H, W, cin_);
    std::vector<double> g_p = to_planes(grad_out.data.data(), ho, wo, cout_);
    std::vector<double> dx_p(static_cast<std::size_t>(cin_) * H * W, 0.0);

    // grad row and a sliding window of input/output rows stay cache-hot;
    // the 49 kernel-gradient accumulators live in a local block
    const double* kd = kernel_.data.data();
    double* dkd = dk.data.data();
    std::vector<double> kacc(static_cast<std::size_t>(kh_) * kw_);
    for (int co = 0; co < cout_; ++co) {
        const double* gplane = g_p.data() + static_cast<std::size_t>(co) * ho * wo;
        for (int ci = 0; ci < cin_; ++ci) {
            const double* iplane = in_p.data() + static_cast<std::size_t>(ci) * H * W;
            double* dplane = dx_p.data() + static_cast<std::size_t>(ci) * H * W;
            std::fill(kacc.begin(), kacc.end(), 0.0);
            for (int h = 0; h < ho; ++h) {
                const double* grow = gplane + static_cast<std::size_t>(h) * wo;
                for (int kh = 0; kh < kh_; ++kh) {
                    const double* irow = iplane + static_cast<std::size_t>(h + kh) * W;
                    double* drow = dplane + static_cast<std::size_t>(h + kh) * W;
                    for (int kw = 0; kw < kw_; ++kw) {
                        kacc[static_cast<std::size_t>(kh) * kw_ + kw] += dotp(grow, irow + kw, wo);
                        const double k =
                            kd[((static_cast<std::size_t>(kh) * kw_ + kw) * cin_ + ci) * cout_ + co];
                        axpy(drow + kw, grow, k, wo);
                    }
                }
            }
            for (int kh = 0; kh < kh_; ++kh)
                for (int kw = 0; kw < kw_; ++kw)
                    dkd[((static_cast<std::size_t>(kh) * kw_ + kw) * cin_ + ci) * cout_ + co] +=
                        kacc[static_cast<std::size_t>(kh) * kw_ + kw];
        }
        double bacc = 0.0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(ho) * wo; ++i)
            bacc += gplane[i];
        db[co] += bacc;
    }
    from_planes(dx_p, dx.data.data(), H, W, cin_);
    return dx;
}

// ---- ReLU ----

Tensor ReLU::forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const {
    Tensor out = x;
    for (double& v : out.data)
        v = v > 0.0 ? v : 0.0;
    if (cache) {
        auto c = std::make_unique<TensorCache>();
        c->x = x;
        *cache = std::move(c);
    }
    return out;
}

Tensor ReLU::backward(const Tensor& grad_out, const LayerCache& cache, std::vector<Tensor>*) const {
    const Tensor& x = cache_as<TensorCache>(cache).x;
    Tensor dx = grad_out;
    for (std::int64_t i = 0; i < dx.size(); ++i)
        if (!(x[i] > 0.0))
            dx[i] = 0.0;
    return dx;
}

// ---- AvgPool2D ----

std::vector<int> AvgPool2D::output_shape(const std::vector<int>& in) const {
    if (in.size() != 3)
        throw InputError("avgpool2d: expected [H, W, C] input");
    if (in[0] < ph_ || in[1] < pw_)
        throw ConfigError("avgpool2d: input smaller than pool window");
    return {in[0] / ph_, in[1] / pw_, in[2]};
}

Tensor AvgPool2D::forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const {
    auto os = output_shape(x.shape);
    const int W = x.shape[1], C = x.shape[2];
    const int ho = os[0], wo = os[1];
    Tensor out(os);
    const double inv = 1.0 / (static_cast<double>(ph_) * pw_);
    for (int h = 0; h < ho; ++h)
        for (int w = 0; w < wo; ++w)
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int dy = 0; dy < ph_; ++dy)
                    for (int dx = 0; dx < pw_; ++dx)
                        acc += x[(static_cast<std::int64_t>(h * ph_ + dy) * W + (w * pw_ + dx)) * C + c];
                out[(static_cast<std::int64_t>(h) * wo + w) * C + c] = acc * inv;
            }
    if (cache) {
        auto c = std::make_unique<ShapeCache>();
        c->in_shape = x.shape;
        *cache = std::move(c);
    }
    return out;
}

Tensor AvgPool2D::backward(const Tensor& grad_out, const LayerCache& cache,
                           std::vector<Tensor>*) const {
    const auto& in_shape = cache_as<ShapeCache>(cache).in_shape;
    const int W = in_shape[1], C = in_shape[2];
    const int ho = grad_out.shape[0], wo = grad_out.shape[1];
    Tensor dx(in_shape);
    const double inv = 1.0 / (static_cast<double>(ph_) * pw_);
    for (int h = 0; h < ho; ++h)
        for (int w = 0; w < wo; ++w)
            for (int c = 0; c < C; ++c) {
                double g = grad_out[(static_cast<std::int64_t>(h) * wo + w) * C + c] * inv;
                for (int dy = 0; dy < ph_; ++dy)
                    for (int dx2 = 0; dx2 < pw_; ++dx2)
                        dx[(static_cast<std::int64_t>(h * ph_ + dy) * W + (w * pw_ + dx2)) * C + c] = g;
            }
    return dx;
}

// ---- GlobalAvgPool1D ----

std::vector<int> GlobalAvgPool1D::output_shape(const std::vector<int>& in) const {
    if (in.size() != 2)
        throw InputError("gap1d: expected [T, H] input");
    return {in[1]};
}

Tensor GlobalAvgPool1D::forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const {
    check_rank(x, 2, "gap1d");
    const int T = x.shape[0], H = x.shape[1];
    Tensor out({H});
    for (int t = 0; t < T; ++t)
        for (int h = 0; h < H; ++h)
            out[h] += x[static_cast<std::int64_t>(t) * H + h];
    for (int h = 0; h < H; ++h)
        out[h] /= static_cast<double>(T);
    if (cache) {
        auto c = std::make_unique<ShapeCache>();
        c->in_shape = x.shape;
        *cache = std::move(c);
    }
    return out;
}

Tensor GlobalAvgPool1D::backward(const Tensor& grad_out, const LayerCache& cache,
                                 std::vector<Tensor>*) const {
    const auto& in_shape = cache_as<ShapeCache>(cache).in_shape;
    const int T = in_shape[0], H = in_shape[1];
    Tensor dx(in_shape);
    const double inv = 1.0 / static_cast<double>(T);
    for (int t = 0; t < T; ++t)
        for (int h = 0; h < H; ++h)
            dx[static_cast<std::int64_t>(t) * H + h] = grad_out[h] * inv;
    return dx;
}

// ---- Dense ----

Dense::Dense(int in, int out) : in_(in), out_(out), w_({out, in}), b_({out}) {
    if (in < 1 || out < 1)
        throw ConfigError("dense: bad geometry");
}

std::vector<int> Dense::output_shape(const std::vector<int>& in) const {
    if (in.size() != 1 || in[0] != in_)
        throw InputError("dense: expected [in] input");
    return {out_};
}

void Dense::init_params(Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(in_));
    for (double& v : w_.data)
        v = rng.uniform(-bound, bound);
    std::fill(b_.data.begin(), b_.data.end(), 0.0);
}

Tensor Dense::forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const {
    (void)output_shape(x.shape);
    Tensor out({out_});
    const double* xd = x.data.data();
    for (int o = 0; o < out_; ++o)
        out[o] = b_[o] + dotp(w_.data.data() + static_cast<std::int64_t>(o) * in_, xd, in_);
    if (cache) {
        auto c = std::make_unique<TensorCache>();
        c->x = x;
        *cache = std::move(c);
    }
    return out;
}

Tensor Dense::backward(const Tensor& grad_out, const LayerCache& cache,
                       std::vector<Tensor>* param_grads) const {
    const Tensor& x = cache_as<TensorCache>(cache).x;
    Tensor dx({in_});
    Tensor& dw = (*param_grads)[0];
    Tensor& db = (*param_grads)[1];
    const double* xd = x.data.data();
    double* dxd = dx.data.data();
    for (int o = 0; o < out_; ++o) {
        const double g = grad_out[o];
        axpy(dw.data.data() + static_cast<std::int64_t>(o) * in_, xd, g, in_);
        axpy(dxd, w_.data.data() + static_cast<std::int64_t>(o) * in_, g, in_);
        db[o] += g;
    }
    return dx;
}

// ---- Softmax ----

Tensor Softmax::forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const {
    check_rank(x, 1, "softmax");
    Tensor p = x;
    double mx = *std::max_element(p.data.begin(), p.data.end());
    double sum = 0.0;
    for (double& v : p.data) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : p.data)
        v /= sum;
    if (cache) {
        auto c = std::make_unique<SoftmaxCache>();
        c->p = p;
        *cache = std::move(c);
    }
    return p;
}

Tensor Softmax::backward(const Tensor& grad_out, const LayerCache& cache,
                         std::vector<Tensor>*) const {
    const Tensor& p = cache_as<SoftmaxCache>(cache).p;
    double dot = 0.0;
    for (std::int64_t i = 0; i < p.size(); ++i)
        dot += grad_out[i] * p[i];
    Tensor dx(p.shape);
    for (std::int64_t i = 0; i < p.size(); ++i)
        dx[i] = p[i] * (grad_out[i] - dot);
    return dx;
}

// ---- LSTM ----

namespace {

struct LSTMCache final : LayerCache {
    Tensor x;            // [T, in]
    std::vector<double> gates; // [T, 4H] post-activation: i f g o
    std::vector<double> c;     // [T, H]
    std::vector<double> tanh_c; // [T, H]
    std::vector<double> h;     // [T, H]
};

struct GRUCache final : LayerCache {
    Tensor x;             // [T, in]
    std::vector<double> z;  // [T, H]
    std::vector<double> r;  // [T, H]
    std::vector<double> hh; // [T, H] candidate
    std::vector<double> q;  // [T, H] r . h_prev
    std::vector<double> h;  // [T, H]
};

} // namespace

LSTMLayer::LSTMLayer(int in, int hidden)
    : in_(in), hidden_(hidden), wx_({4 * hidden, in}), wh_({4 * hidden, hidden}), b_({4 * hidden}) {
    if (in < 1 || hidden < 1)
        throw ConfigError("lstm: bad geometry");
}

std::vector<int> LSTMLayer::output_shape(const std::vector<int>& in) const {
    if (in.size() != 2 || in[1] != in_)
        throw InputError("lstm: expected [T, in] input");
    return {in[0], hidden_};
}

void LSTMLayer::init_params(Rng& rng) {
    double bx = 1.0 / std::sqrt(static_cast<double>(in_));
    for (double& v : wx_.data)
        v = rng.uniform(-bx, bx);
    double bh = 1.0 / std::sqrt(static_cast<double>(hidden_));
    for (double& v : wh_.data)
        v = rng.uniform(-bh, bh);
    std::fill(b_.data.begin(), b_.data.end(), 0.0);
    // forget gate opens at init so state integrates over the sequence
    std::fill(b_.data.begin() + hidden_, b_.data.begin() + 2 * hidden_, 1.0);
}

Tensor LSTMLayer::forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const {
    (void)output_shape(x.shape);
    const int T = x.shape[0];
    const int H = hidden_;
    Tensor out({T, H});

    auto c = std::make_unique<LSTMCache>();
    c->gates.assign(static_cast<std::size_t>(T) * 4 * H, 0.0);
    c->c.assign(static_cast<std::size_t>(T) * H, 0.0);
    c->tanh_c.assign(static_cast<std::size_t>(T) * H, 0.0);
    c->h.assign(static_cast<std::size_t>(T) * H, 0.0);

    std::vector<double> a(static_cast<std::size_t>(4) * H);
    const std::vector<double> zeros(static_cast<std::size_t>(H), 0.0);
    for (int t = 0; t < T; ++t) {
        const double* xt = x.data.data() + static_cast<std::int64_t>(t) * in_;
        const double* hprev = t > 0 ? c->h.data() + static_cast<std::size_t>(t - 1) * H : zeros.data();
        const double* cprev = t > 0 ? c->c.data() + static_cast<std::size_t>(t - 1) * H : zeros.data();

        for (int r = 0; r < 4 * H; ++r)
            a[static_cast<std::size_t>(r)] =
                b_[r] + dotp(wx_.data.data() + static_cast<std::int64_t>(r) * in_, xt, in_) +
                dotp(wh_.data.data() + static_cast<std::int64_t>(r) * H, hprev, H);

        double* gt = c->gates.data() + static_cast<std::size_t>(t) * 4 * H;
        double* ct = c->c.data() + static_cast<std::size_t>(t) * H;
        double* tct = c->tanh_c.data() + static_cast<std::size_t>(t) * H;
        double* ht = c->h.data() + static_cast<std::size_t>(t) * H;
        for (int j = 0; j < H; ++j) {
            double gi = sigmoid(a[static_cast<std::size_t>(j)]);
            double gf = sigmoid(a[static_cast<std::size_t>(H + j)]);
            double gg = std::tanh(a[static_cast<std::size_t>(2 * H + j)]);
            double go = sigmoid(a[static_cast<std::size_t>(3 * H + j)]);
            gt[j] = gi;
            gt[H + j] = gf;
            gt[2 * H + j] = gg;
            gt[3 * H + j] = go;
            ct[j] = gf * cprev[j] + gi * gg;
            tct[j] = std::tanh(ct[j]);
            ht[j] = go * tct[j];
            out[static_cast<std::int64_t>(t) * H + j] = ht[j];
        }
    }

    if (cache) {
        c->x = x;
        *cache = std::move(c);
    }
    return out;
}

Tensor LSTMLayer::backward(const Tensor& grad_out, const LayerCache& cache,
                           std::vector<Tensor>* param_grads) const {
    const auto& cc = cache_as<LSTMCache>(cache);
    const int T = cc.x.shape[0];
    const int H = hidden_;

    Tensor dx(cc.x.shape);
    Tensor& dwx = (*param_grads)[0];
    Tensor& dwh = (*param_grads)[1];
    Tensor& db = (*param_grads)[2];

    std::vector<double> dh_next(static_cast<std::size_t>(H), 0.0);
    std::vector<double> dc_next(static_cast<std::size_t>(H), 0.0);
    std::vector<double> da(static_cast<std::size_t>(4) * H);
    const std::vector<double> zeros(static_cast<std::size_t>(H), 0.0);

    for (int t = T - 1; t >= 0; --t) {
        const double* gt = cc.gates.data() + static_cast<std::size_t>(t) * 4 * H;
        const double* tct = cc.tanh_c.data() + static_cast<std::size_t>(t) * H;
        const double* cprev = t > 0 ? cc.c.data() + static_cast<std::size_t>(t - 1) * H : zeros.data();
        const double* hprev = t > 0 ? cc.h.data() + static_cast<std::size_t>(t - 1) * H : zeros.data();
        const double* xt = cc.x.data.data() + static_cast<std::int64_t>(t) * in_;

        for (int j = 0; j < H; ++j) {
            double gi = gt[j], gf = gt[H + j], gg = gt[2 * H + j], go = gt[3 * H + j];
            double dh = grad_out[static_cast<std::int64_t>(t) * H + j] + dh_next[static_cast<std::size_t>(j)];
            double dc = dc_next[static_cast<std::size_t>(j)] + dh * go * (1.0 - tct[j] * tct[j]);
            double do_ = dh * tct[j];
            double di = dc * gg;
            double dg = dc * gi;
            double df = dc * cprev[j];
            dc_next[static_cast<std::size_t>(j)] = dc * gf;
            da[static_cast<std::size_t>(j)] = di * gi * (1.0 - gi);
            da[static_cast<std::size_t>(H + j)] = df * gf * (1.0 - gf);
            da[static_cast<std::size_t>(2 * H + j)] = dg * (1.0 - gg * gg);
            da[static_cast<std::size_t>(3 * H + j)] = do_ * go * (1.0 - go);
        }

        double* dxt = dx.data.data() + static_cast<std::int64_t>(t) * in_;
        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        for (int r = 0; r < 4 * H; ++r) {
            const double g = da[static_cast<std::size_t>(r)];
            axpy(dwx.data.data() + static_cast<std::int64_t>(r) * in_, xt, g, in_);
            axpy(dxt, wx_.data.data() + static_cast<std::int64_t>(r) * in_, g, in_);
            axpy(dwh.data.data() + static_cast<std::int64_t>(r) * H, hprev, g, H);
            axpy(dh_next.data(), wh_.data.data() + static_cast<std::int64_t>(r) * H, g, H);
            db[r] += g;
        }
    }
    return dx;
}

// ---- GRU ----

GRULayer::GRULayer(int in, int hidden)
    : in_(in), hidden_(hidden), wx_({3 * hidden, in}), wh_({3 * hidden, hidden}), b_({3 * hidden}) {
    if (in < 1 || hidden < 1)
        throw ConfigError("gru: bad geometry");
}

std::vector<int> GRULayer::output_shape(const std::vector<int>& in) const {
    if (in.size() != 2 || in[1] != in_)
        throw InputError("gru: expected [T, in] input");
    return {in[0], hidden_};
}

void GRULayer::init_params(Rng& rng) {
    double bx = 1.0 / std::sqrt(static_cast<double>(in_));
    for (double& v : wx_.data)
        v = rng.uniform(-bx, bx);
    double bh = 1.0 / std::sqrt(static_cast<double>(hidden_));
    for (double& v : wh_.data)
        v = rng.uniform(-bh, bh);
    std::fill(b_.data.begin(), b_.data.end(), 0.0);
}

Tensor GRULayer::forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const {
    (void)output_shape(x.shape);
    const int T = x.shape[0];
    const int H = hidden_;
    Tensor out({T, H});

    auto c = std::make_unique<GRUCache>();
    c->z.assign(static_cast<std::size_t>(T) * H, 0.0);
    c->r.assign(static_cast<std::size_t>(T) * H, 0.0);
    c->hh.assign(static_cast<std::size_t>(T) * H, 0.0);
    c->q.assign(static_cast<std::size_t>(T) * H, 0.0);
    c->h.assign(static_cast<std::size_t>(T) * H, 0.0);

    std::vector<double> u(static_cast<std::size_t>(3) * H);
    const std::vector<double> zeros(static_cast<std::size_t>(H), 0.0);
    for (int t = 0; t < T; ++t) {
        const double* xt = x.data.data() + static_cast<std::int64_t>(t) * in_;
        const double* hprev = t > 0 ? c->h.data() + static_cast<std::size_t>(t - 1) * H : zeros.data();

        // u = Wx x + b for all three gates
        for (int r = 0; r < 3 * H; ++r)
            u[static_cast<std::size_t>(r)] =
                b_[r] + dotp(wx_.data.data() + static_cast<std::int64_t>(r) * in_, xt, in_);

        double* zt = c->z.data() + static_cast<std::size_t>(t) * H;
        double* rt = c->r.data() + static_cast<std::size_t>(t) * H;
        double* qt = c->q.data() + static_cast<std::size_t>(t) * H;
        double* hht = c->hh.data() + static_cast<std::size_t>(t) * H;
        double* ht = c->h.data() + static_cast<std::size_t>(t) * H;

        // update and reset gates see h_prev directly
        for (int j = 0; j < H; ++j) {
            double az = u[static_cast<std::size_t>(j)] +
                        dotp(wh_.data.data() + static_cast<std::int64_t>(j) * H, hprev, H);
            double ar = u[static_cast<std::size_t>(H + j)] +
                        dotp(wh_.data.data() + static_cast<std::int64_t>(H + j) * H, hprev, H);
            zt[j] = sigmoid(az);
            rt[j] = sigmoid(ar);
            qt[j] = rt[j] * hprev[j];
        }
        // candidate sees the reset-scaled state
        for (int j = 0; j < H; ++j) {
            double an = u[static_cast<std::size_t>(2 * H + j)] +
                        dotp(wh_.data.data() + static_cast<std::int64_t>(2 * H + j) * H, qt, H);
            hht[j] = std::tanh(an);
            ht[j] = zt[j] * hprev[j] + (1.0 - zt[j]) * hht[j];
            out[static_cast<std::int64_t>(t) * H + j] = ht[j];
        }
    }

    if (cache) {
        c->x = x;
        *cache = std::move(c);
    }
    return out;
}

Tensor GRULayer::backward(const Tensor& grad_out, const LayerCache& cache,
                          std::vector<Tensor>* param_grads) const {
    const auto& cc = cache_as<GRUCache>(cache);
    const int T = cc.x.shape[0];
    const int H = hidden_;

    Tensor dx(cc.x.shape);
    Tensor& dwx = (*param_grads)[0];
    Tensor& dwh = (*param_grads)[1];
    Tensor& db = (*param_grads)[2];

    std::vector<double> dh_next(static_cast<std::size_t>(H), 0.0);
    std::vector<double> dan(static_cast<std::size_t>(H));
    std::vector<double> daz(static_cast<std::size_t>(H));
    std::vector<double> dar(static_cast<std::size_t>(H));
    std::vector<double> dq(static_cast<std::size_t>(H));
    const std::vector<double> zeros(static_cast<std::size_t>(H), 0.0);

    for (int t = T - 1; t >= 0; --t) {
        const double* zt = cc.z.data() + static_cast<std::size_t>(t) * H;
        const double* rt = cc.r.data() + static_cast<std::size_t>(t) * H;
        const double* qt = cc.q.data() + static_cast<std::size_t>(t) * H;
        const double* hht = cc.hh.data() + static_cast<std::size_t>(t) * H;
        const double* hprev = t > 0 ? cc.h.data() + static_cast<std::size_t>(t - 1) * H : zeros.data();
        const double* xt = cc.x.data.data() + static_cast<std::int64_t>(t) * in_;

        // dh -> candidate / update-gate pre-activations, and the direct
        // pass-through to h_prev
        std::vector<double> dh_prev(static_cast<std::size_t>(H), 0.0);
        for (int j = 0; j < H; ++j) {
            double dh = grad_out[static_cast<std::int64_t>(t) * H + j] + dh_next[static_cast<std::size_t>(j)];
            double dz = dh * (hprev[j] - hht[j]);
            double dhh = dh * (1.0 - zt[j]);
            dh_prev[static_cast<std::size_t>(j)] += dh * zt[j];
            dan[static_cast<std::size_t>(j)] = dhh * (1.0 - hht[j] * hht[j]);
            daz[static_cast<std::size_t>(j)] = dz * zt[j] * (1.0 - zt[j]);
        }
        // through the candidate's recurrent term: an_j = u_n + Wh_n(j,:) q
        std::fill(dq.begin(), dq.end(), 0.0);
        for (int j = 0; j < H; ++j) {
            const double g = dan[static_cast<std::size_t>(j)];
            axpy(dwh.data.data() + static_cast<std::int64_t>(2 * H + j) * H, qt, g, H);
            axpy(dq.data(), wh_.data.data() + static_cast<std::int64_t>(2 * H + j) * H, g, H);
        }
        for (int j = 0; j < H; ++j) {
            double dr = dq[static_cast<std::size_t>(j)] * hprev[j];
            dh_prev[static_cast<std::size_t>(j)] += dq[static_cast<std::size_t>(j)] * rt[j];
            dar[static_cast<std::size_t>(j)] = dr * rt[j] * (1.0 - rt[j]);
        }
        // update/reset recurrent terms
        for (int j = 0; j < H; ++j) {
            const double gz = daz[static_cast<std::size_t>(j)];
            const double gr = dar[static_cast<std::size_t>(j)];
            axpy(dwh.data.data() + static_cast<std::int64_t>(j) * H, hprev, gz, H);
            axpy(dwh.data.data() + static_cast<std::int64_t>(H + j) * H, hprev, gr, H);
            axpy(dh_prev.data(), wh_.data.data() + static_cast<std::int64_t>(j) * H, gz, H);
            axpy(dh_prev.data(), wh_.data.data() + static_cast<std::int64_t>(H + j) * H, gr, H);
        }
        // input-side terms for all gates
        double* dxt = dx.data.data() + static_cast<std::int64_t>(t) * in_;
        for (int r = 0; r < 3 * H; ++r) {
            double g;
            if (r < H)
                g = daz[static_cast<std::size_t>(r)];
            else if (r < 2 * H)
                g = dar[static_cast<std::size_t>(r - H)];
            else
                g = dan[static_cast<std::size_t>(r - 2 * H)];
            axpy(dwx.data.data() + static_cast<std::int64_t>(r) * in_, xt, g, in_);
            axpy(dxt, wx_.data.data() + static_cast<std::int64_t>(r) * in_, g, in_);
            db[r] += g;
        }
        dh_next = dh_prev;
    }
    return dx;
}

// ---- Model ----

Tensor Model::forward(const Tensor& x) const {
    if (x.shape != input_shape_)
        throw InputError("model: input shape mismatch");
    Tensor cur = x;
    for (const auto& l : layers_)
        cur = l->forward(cur, nullptr);
    return cur;
}

int Model::predict(const Tensor& x) const {
    Tensor p = forward(x);
    int best = 0;
    for (std::int64_t i = 1; i < p.size(); ++i)
        if (p[i] > p[best])
            best = static_cast<int>(i);
    return best;
}

double cross_entropy(const Tensor& probs, int label) {
    if (label < 0 || label >= static_cast<int>(probs.size()))
        throw InputError("cross_entropy: label out of range");
    return -std::log(std::max(probs[label], kProbClamp));
}

Model::Gradients Model::backward(const Tensor& x, int label) const {
    if (x.shape != input_shape_)
        throw InputError("model: input shape mismatch");
    if (label < 0 || label >= n_classes_)
        throw InputError("model: label out of range");

    std::vector<std::unique_ptr<LayerCache>> caches(layers_.size());
    Tensor cur = x;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        cur = layers_[i]->forward(cur, &caches[i]);

    Gradients out;
    out.probs = cur;
    out.loss = cross_entropy(cur, label);
    out.per_layer.resize(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i)
        for (const Tensor* p : static_cast<const Layer&>(*layers_[i]).params())
            out.per_layer[i].emplace_back(p->shape);

    // d loss / d probs; the clamp zeroes the gradient when the probability
    // has bottomed out.
    Tensor g(cur.shape);
    double pl = cur[label];
    if (pl > kProbClamp)
        g[label] = -1.0 / pl;

    for (std::size_t i = layers_.size(); i-- > 0;)
        g = layers_[i]->backward(g, *caches[i], &out.per_layer[i]);
    out.input = std::move(g);
    return out;
}

std::vector<std::pair<std::string, Tensor*>> Model::named_params() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        auto ps = layers_[i]->params();
        auto names = layers_[i]->param_names();
        for (std::size_t j = 0; j < ps.size(); ++j) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "L%02zu.", i);
            out.emplace_back(std::string(buf) + names[j], ps[j]);
        }
    }
    return out;
}

std::vector<std::pair<std::string, const Tensor*>> Model::named_params() const {
    std::vector<std::pair<std::string, const Tensor*>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        auto ps = static_cast<const Layer&>(*layers_[i]).params();
        auto names = layers_[i]->param_names();
        for (std::size_t j = 0; j < ps.size(); ++j) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "L%02zu.", i);
            out.emplace_back(std::string(buf) + names[j], ps[j]);
        }
    }
    return out;
}

PresetKind preset_kind_from_string(const std::string& s) {
    if (s == "cnn")
        return PresetKind::cnn;
    if (s == "lstm")
        return PresetKind::lstm;
    if (s == "gru")
        return PresetKind::gru;
    throw ConfigError("unknown model kind: " + s);
}

std::string to_string(PresetKind k) {
    switch (k) {
    case PresetKind::cnn:
        return "cnn";
    case PresetKind::lstm:
        return "lstm";
    case PresetKind::gru:
        return "gru";
    }
    throw ConfigError("unknown model kind");
}

namespace {
int scaled(int base, double scale) {
    return std::max(1, static_cast<int>(std::lround(base * scale)));
}
// Input conditioning constants for [0,1] min-max-scaled spectrograms.
constexpr double kInputShift = 0.5;
constexpr double kInputGain = 4.0;
} // namespace

Model build_preset(PresetKind kind, std::vector<int> input_shape, int n_classes, double scale,
                   uint64_t seed) {
    if (!(scale > 0.0) || scale > 1.0)
        throw ConfigError("build_preset: scale must lie in (0, 1]");
    if (input_shape.size() != 2)
        throw ConfigError("build_preset: expected a 2-D spectrogram input shape");
    if (n_classes < 2)
        throw ConfigError("build_preset: need at least 2 classes");

    Model m(input_shape, n_classes);
    m.kind = to_string(kind);
    m.scale = scale;
    m.init_seed = seed;

    std::vector<int> shape = input_shape;
    auto push = [&](std::unique_ptr<Layer> l) {
        shape = l->output_shape(shape);
        m.add(std::move(l));
    };

    push(std::make_unique<InputScale>(kInputShift, kInputGain));

    if (kind == PresetKind::cnn) {
        int c1 = scaled(8, scale), c2 = scaled(16, scale), c3 = scaled(32, scale);
        push(std::make_unique<Reshape>(std::vector<int>{input_shape[0], input_shape[1], 1}));
        push(std::make_unique<Conv2D>(7, 7, 1, c1));
        push(std::make_unique<ReLU>());
        push(std::make_unique<Conv2D>(7, 7, c1, c2));
        push(std::make_unique<ReLU>());
        push(std::make_unique<Conv2D>(7, 7, c2, c3));
        push(std::make_unique<ReLU>());
        // global spatial average: one feature per channel
        push(std::make_unique<AvgPool2D>(shape[0], shape[1]));
        push(std::make_unique<Flatten>());
        push(std::make_unique<Dense>(shape[0], n_classes));
        push(std::make_unique<Softmax>());
    } else {
        int h = scaled(256, scale);
        push(std::make_unique<Transpose2>());
        if (kind == PresetKind::lstm) {
            push(std::make_unique<LSTMLayer>(shape[1], h));
            push(std::make_unique<LSTMLayer>(h, h));
        } else {
            push(std::make_unique<GRULayer>(shape[1], h));
            push(std::make_unique<GRULayer>(h, h));
        }
        push(std::make_unique<GlobalAvgPool1D>());
        push(std::make_unique<Dense>(h, n_classes));
        push(std::make_unique<Softmax>());
    }

    Rng rng(derive_seed(seed, "init"));
    for (auto& l : m.layers())
        l->init_params(rng);
    return m;
}

// ---- training ----

Model train(Model model, const SampleSet& data, const TrainConfig& cfg,
            const std::function<void(int, double)>& on_epoch) {
    const std::size_t n = data.x.size();
    if (n == 0 || data.labels.size() != n)
        throw InputError("train: empty or inconsistent dataset");
    for (int l : data.labels)
        if (l < 0 || l >= model.n_classes())
            throw InputError("train: label out of range");
    if (cfg.batch_size < 1)
        throw ConfigError("train: batch size must be >= 1");
    if (!(cfg.learning_rate > 0.0))
        throw ConfigError("train: learning rate must be positive");
    if (cfg.epochs <= 0)
        return model;

    struct ParamRef {
        std::size_t layer;
        std::size_t index;
        Tensor* tensor;
    };
    std::vector<ParamRef> refs;
    for (std::size_t li = 0; li < model.layers().size(); ++li) {
        auto ps = model.layers()[li]->params();
        for (std::size_t pi = 0; pi < ps.size(); ++pi)
            refs.push_back({li, pi, ps[pi]});
    }
    std::vector<std::vector<double>> adam_m(refs.size()), adam_v(refs.size());
    for (std::size_t r = 0; r < refs.size(); ++r) {
        adam_m[r].assign(refs[r].tensor->data.size(), 0.0);
        adam_v[r].assign(refs[r].tensor->data.size(), 0.0);
    }

    Rng shuffle_rng(derive_seed(cfg.seed, "train-shuffle"));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = n - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.uniform_index(i + 1)]);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t count = std::min(n - start, static_cast<std::size_t>(cfg.batch_size));
            std::vector<Model::Gradients> grads(count);
            parallel_for(count, [&](std::size_t s) {
                const std::size_t idx = order[start + s];
                grads[s] = model.backward(data.x[idx], data.labels[idx]);
            });

            double batch_loss = 0.0;
            for (const auto& g : grads)
                batch_loss += g.loss;
            if (!std::isfinite(batch_loss))
                throw NumericError("train: loss diverged at epoch " + std::to_string(epoch));
            loss_sum += batch_loss;

            ++step;
            const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
            const double inv_count = 1.0 / static_cast<double>(count);
            for (std::size_t r = 0; r < refs.size(); ++r) {
                Tensor& theta = *refs[r].tensor;
                auto& m = adam_m[r];
                auto& v = adam_v[r];
                const std::size_t len = theta.data.size();
                for (std::size_t k = 0; k < len; ++k) {
                    double g = 0.0;
                    for (std::size_t s = 0; s < count; ++s)
                        g += grads[s].per_layer[refs[r].layer][refs[r].index][static_cast<std::int64_t>(k)];
                    g *= inv_count;
                    m[k] = cfg.adam_beta1 * m[k] + (1.0 - cfg.adam_beta1) * g;
                    v[k] = cfg.adam_beta2 * v[k] + (1.0 - cfg.adam_beta2) * g * g;
                    theta.data[k] -= cfg.learning_rate * ((m[k] / bc1) / (std::sqrt(v[k] / bc2) + cfg.adam_eps) +
                                                          cfg.weight_decay * theta.data[k]);
                }
            }
        }

        for (const auto& r : refs)
            if (!r.tensor->all_finite())
                throw NumericError("train: non-finite parameters after epoch " + std::to_string(epoch));
        if (on_epoch)
            on_epoch(epoch, loss_sum / static_cast<double>(n));
    }
    return model;
}

} // namespace rfadv
