#include "cdcnn/nncore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cdcnn {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.values()) v = sigmoid(v);
    return out;
}

double apply_activation(Activation act, double x) {
    return act == Activation::Sigmoid ? sigmoid(x) : x;
}

double activation_derivative(Activation act, double y) {
    return act == Activation::Sigmoid ? y * (1.0 - y) : 1.0;
}

namespace {

void check_conv2d_args(const Tensor& input, const std::vector<Conv2DFilter>& filters) {
    if (input.rank() != 3 || input.dim(0) != 2)
        throw std::invalid_argument("conv2d: input must be shaped {2, I, J}");
    if (filters.empty())
        throw std::invalid_argument("conv2d: no filters");
    const std::size_t m = filters.front().rows();
    const std::size_t n = filters.front().cols();
    for (const auto& f : filters) {
        if (f.weights.rank() != 3 || f.weights.dim(2) != 2)
            throw std::invalid_argument("conv2d: filter weights must be shaped {M, N, 2}");
        if (f.rows() != m || f.cols() != n)
            throw std::invalid_argument("conv2d: filters must share one size");
    }
    if (m > input.dim(1) || n > input.dim(2))
        throw std::invalid_argument("conv2d: filter larger than input");
}

void check_conv1d_args(const Tensor& input, const std::vector<Conv1DFilter>& filters) {
    if (input.rank() != 2 || input.dim(0) != 2)
        throw std::invalid_argument("conv1d: input must be shaped {2, T}");
    if (filters.empty())
        throw std::invalid_argument("conv1d: no filters");
    const std::size_t h = filters.front().width();
    for (const auto& f : filters) {
        if (f.weights.rank() != 2 || f.weights.dim(0) != 2)
            throw std::invalid_argument("conv1d: filter weights must be shaped {2, H}");
        if (f.width() != h)
            throw std::invalid_argument("conv1d: filters must share one width");
    }
    if (h > input.dim(1))
        throw std::invalid_argument("conv1d: filter wider than input");
}

}  // namespace

std::vector<Tensor> conv2d_two_channel(const Tensor& input,
                                       const std::vector<Conv2DFilter>& filters,
                                       Activation act) {
    check_conv2d_args(input, filters);
    const std::size_t rows = input.dim(1), cols = input.dim(2);
    const std::size_t m = filters.front().rows(), n = filters.front().cols();
    const std::size_t out_r = rows - m + 1, out_c = cols - n + 1;

    std::vector<Tensor> out;
    out.reserve(filters.size());
    const double* in = input.data();
    for (const auto& f : filters) {
        Tensor c({out_r, out_c});
        const double* w = f.weights.data();
        for (std::size_t p = 0; p < out_r; ++p) {
            for (std::size_t q = 0; q < out_c; ++q) {
                double acc = f.bias;
                for (std::size_t dm = 0; dm < m; ++dm) {
                    const double* row_h = in + (p + dm) * cols + q;
                    const double* row_w = in + rows * cols + (p + dm) * cols + q;
                    const double* wr = w + dm * n * 2;
                    for (std::size_t dn = 0; dn < n; ++dn)
                        acc += wr[dn * 2] * row_h[dn] + wr[dn * 2 + 1] * row_w[dn];
                }
                c.at(p, q) = apply_activation(act, acc);
            }
        }
        out.push_back(std::move(c));
    }
    return out;
}

Tensor avg_pool2d(const Tensor& input, std::size_t window) {
    if (window == 0) throw std::invalid_argument("avg_pool2d: window must be positive");
    if (input.rank() != 2) throw std::invalid_argument("avg_pool2d: input must be a matrix");
    const std::size_t rows = input.dim(0), cols = input.dim(1);
    const std::size_t out_r = (rows + window - 1) / window;
    const std::size_t out_c = (cols + window - 1) / window;

    Tensor out({out_r, out_c});
    for (std::size_t bi = 0; bi < out_r; ++bi) {
        const std::size_t r0 = bi * window, r1 = std::min(r0 + window, rows);
        for (std::size_t bj = 0; bj < out_c; ++bj) {
            const std::size_t c0 = bj * window, c1 = std::min(c0 + window, cols);
            double acc = 0.0;
            for (std::size_t i = r0; i < r1; ++i)
                for (std::size_t j = c0; j < c1; ++j) acc += input.at(i, j);
            out.at(bi, bj) = acc / static_cast<double>((r1 - r0) * (c1 - c0));
        }
    }
    return out;
}

std::vector<Tensor> conv1d_two_row(const Tensor& input,
                                   const std::vector<Conv1DFilter>& filters,
                                   Activation act) {
    check_conv1d_args(input, filters);
    const std::size_t t = input.dim(1);
    const std::size_t h = filters.front().width();
    const std::size_t out_len = t - h + 1;
    const double* e = input.data();
    const double* s = input.data() + t;

    std::vector<Tensor> out;
    out.reserve(filters.size());
    for (const auto& f : filters) {
        Tensor b({out_len});
        const double* we = f.weights.data();
        const double* ws = f.weights.data() + h;
        for (std::size_t n = 0; n < out_len; ++n) {
            double acc = f.bias;
            for (std::size_t dh = 0; dh < h; ++dh)
                acc += we[dh] * e[n + dh] + ws[dh] * s[n + dh];
            b[n] = apply_activation(act, acc);
        }
        out.push_back(std::move(b));
    }
    return out;
}

Tensor avg_pool1d(const Tensor& input, std::size_t window) {
    if (window == 0) throw std::invalid_argument("avg_pool1d: window must be positive");
    if (input.rank() != 1) throw std::invalid_argument("avg_pool1d: input must be a vector");
    const std::size_t len = input.dim(0);
    const std::size_t out_len = (len + window - 1) / window;

    Tensor out({out_len});
    for (std::size_t b = 0; b < out_len; ++b) {
        const std::size_t i0 = b * window, i1 = std::min(i0 + window, len);
        double acc = 0.0;
        for (std::size_t i = i0; i < i1; ++i) acc += input[i];
        out[b] = acc / static_cast<double>(i1 - i0);
    }
    return out;
}

Tensor dense_forward(const Tensor& x, const DenseLayer& layer) {
    if (x.rank() != 1 || x.dim(0) != layer.in_dim())
        throw std::invalid_argument("dense_forward: input length does not match layer");
    const std::size_t out_n = layer.out_dim(), in_n = layer.in_dim();
    Tensor y({out_n});
    const double* w = layer.weights.data();
    const double* xp = x.data();
    for (std::size_t o = 0; o < out_n; ++o) {
        double acc = layer.biases[o];
        const double* wr = w + o * in_n;
        for (std::size_t i = 0; i < in_n; ++i) acc += wr[i] * xp[i];
        y[o] = apply_activation(layer.activation, acc);
    }
    return y;
}

Conv2DGradients conv2d_two_channel_backward(const Tensor& input,
                                            const std::vector<Conv2DFilter>& filters,
                                            Activation act,
                                            const std::vector<Tensor>& outputs,
                                            const std::vector<Tensor>& upstream) {
    check_conv2d_args(input, filters);
    if (outputs.size() != filters.size() || upstream.size() != filters.size())
        throw std::invalid_argument("conv2d backward: per-filter tensor counts differ");
    const std::size_t rows = input.dim(1), cols = input.dim(2);
    const std::size_t m = filters.front().rows(), n = filters.front().cols();
    const std::size_t out_r = rows - m + 1, out_c = cols - n + 1;

    Conv2DGradients g;
    g.input_grad = Tensor(input.shape());
    g.weight_grads.reserve(filters.size());
    g.bias_grads.resize(filters.size(), 0.0);

    const double* in = input.data();
    double* din = g.input_grad.data();
    for (std::size_t k = 0; k < filters.size(); ++k) {
        if (!outputs[k].same_shape(upstream[k]) || outputs[k].dim(0) != out_r ||
            outputs[k].dim(1) != out_c)
            throw std::invalid_argument("conv2d backward: upstream shape mismatch");
        Tensor dw(filters[k].weights.shape());
        double* dwp = dw.data();
        const double* w = filters[k].weights.data();
        double db = 0.0;
        for (std::size_t p = 0; p < out_r; ++p) {
            for (std::size_t q = 0; q < out_c; ++q) {
                const double dz = upstream[k].at(p, q) *
                                  activation_derivative(act, outputs[k].at(p, q));
                if (dz == 0.0) continue;
                db += dz;
                for (std::size_t dm = 0; dm < m; ++dm) {
                    const double* row_h = in + (p + dm) * cols + q;
                    const double* row_w = in + rows * cols + (p + dm) * cols + q;
                    double* din_h = din + (p + dm) * cols + q;
                    double* din_w = din + rows * cols + (p + dm) * cols + q;
                    double* dwr = dwp + dm * n * 2;
                    const double* wr = w + dm * n * 2;
                    for (std::size_t dn = 0; dn < n; ++dn) {
                        dwr[dn * 2] += dz * row_h[dn];
                        dwr[dn * 2 + 1] += dz * row_w[dn];
                        din_h[dn] += dz * wr[dn * 2];
                        din_w[dn] += dz * wr[dn * 2 + 1];
                    }
                }
            }
        }
        g.weight_grads.push_back(std::move(dw));
        g.bias_grads[k] = db;
    }
    return g;
}

Tensor avg_pool2d_backward(std::size_t in_rows, std::size_t in_cols,
                           std::size_t window, const Tensor& upstream) {
    if (window == 0) throw std::invalid_argument("avg_pool2d backward: window must be positive");
    const std::size_t out_r = (in_rows + window - 1) / window;
    const std::size_t out_c = (in_cols + window - 1) / window;
    if (upstream.rank() != 2 || upstream.dim(0) != out_r || upstream.dim(1) != out_c)
        throw std::invalid_argument("avg_pool2d backward: upstream shape mismatch");

    Tensor din({in_rows, in_cols});
    for (std::size_t bi = 0; bi < out_r; ++bi) {
        const std::size_t r0 = bi * window, r1 = std::min(r0 + window, in_rows);
        for (std::size_t bj = 0; bj < out_c; ++bj) {
            const std::size_t c0 = bj * window, c1 = std::min(c0 + window, in_cols);
            const double share =
                upstream.at(bi, bj) / static_cast<double>((r1 - r0) * (c1 - c0));
            for (std::size_t i = r0; i < r1; ++i)
                for (std::size_t j = c0; j < c1; ++j) din.at(i, j) += share;
        }
    }
    return din;
}

Conv1DGradients conv1d_two_row_backward(const Tensor& input,
                                        const std::vector<Conv1DFilter>& filters,
                                        Activation act,
                                        const std::vector<Tensor>& outputs,
                                        const std::vector<Tensor>& upstream) {
    check_conv1d_args(input, filters);
    if (outputs.size() != filters.size() || upstream.size() != filters.size())
        throw std::invalid_argument("conv1d backward: per-filter tensor counts differ");
    const std::size_t t = input.dim(1);
    const std::size_t h = filters.front().width();
    const std::size_t out_len = t - h + 1;

    Conv1DGradients g;
    g.input_grad = Tensor(input.shape());
    g.weight_grads.reserve(filters.size());
    g.bias_grads.resize(filters.size(), 0.0);

    const double* e = input.data();
    const double* s = input.data() + t;
    double* de = g.input_grad.data();
    double* ds = g.input_grad.data() + t;
    for (std::size_t k = 0; k < filters.size(); ++k) {
        if (upstream[k].rank() != 1 || upstream[k].dim(0) != out_len)
            throw std::invalid_argument("conv1d backward: upstream shape mismatch");
        Tensor dw(filters[k].weights.shape());
        double* dwe = dw.data();
        double* dws = dw.data() + h;
        const double* we = filters[k].weights.data();
        const double* ws = filters[k].weights.data() + h;
        double db = 0.0;
        for (std::size_t n = 0; n < out_len; ++n) {
            const double dz =
                upstream[k][n] * activation_derivative(act, outputs[k][n]);
            if (dz == 0.0) continue;
            db += dz;
            for (std::size_t dh = 0; dh < h; ++dh) {
                dwe[dh] += dz * e[n + dh];
                dws[dh] += dz * s[n + dh];
                de[n + dh] += dz * we[dh];
                ds[n + dh] += dz * ws[dh];
            }
        }
        g.weight_grads.push_back(std::move(dw));
        g.bias_grads[k] = db;
    }
    return g;
}

Tensor avg_pool1d_backward(std::size_t in_len, std::size_t window,
                           const Tensor& upstream) {
    if (window == 0) throw std::invalid_argument("avg_pool1d backward: window must be positive");
    const std::size_t out_len = (in_len + window - 1) / window;
    if (upstream.rank() != 1 || upstream.dim(0) != out_len)
        throw std::invalid_argument("avg_pool1d backward: upstream shape mismatch");

    Tensor din({in_len});
    for (std::size_t b = 0; b < out_len; ++b) {
        const std::size_t i0 = b * window, i1 = std::min(i0 + window, in_len);
        const double share = upstream[b] / static_cast<double>(i1 - i0);
        for (std::size_t i = i0; i < i1; ++i) din[i] += share;
    }
    return din;
}

DenseGradients dense_backward(const Tensor& x, const DenseLayer& layer,
                              const Tensor& output, const Tensor& upstream) {
    if (x.rank() != 1 || x.dim(0) != layer.in_dim())
        throw std::invalid_argument("dense_backward: input length does not match layer");
    if (upstream.rank() != 1 || upstream.dim(0) != layer.out_dim() ||
        !output.same_shape(upstream))
        throw std::invalid_argument("dense_backward: upstream shape mismatch");

    const std::size_t out_n = layer.out_dim(), in_n = layer.in_dim();
    DenseGradients g;
    g.weight_grad = Tensor(layer.weights.shape());
    g.bias_grad = Tensor({out_n});
    g.input_grad = Tensor({in_n});

    const double* w = layer.weights.data();
    const double* xp = x.data();
    double* dwp = g.weight_grad.data();
    double* dxp = g.input_grad.data();
    for (std::size_t o = 0; o < out_n; ++o) {
        const double dz =
            upstream[o] * activation_derivative(layer.activation, output[o]);
        g.bias_grad[o] = dz;
        const double* wr = w + o * in_n;
        double* dwr = dwp + o * in_n;
        for (std::size_t i = 0; i < in_n; ++i) {
            dwr[i] = dz * xp[i];
            dxp[i] += dz * wr[i];
        }
    }
    return g;
}

std::vector<double> finite_difference_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> params, double epsilon) {
    if (epsilon <= 0.0)
        throw std::invalid_argument("finite_difference_grad: epsilon must be positive");
    std::vector<double> p(params.begin(), params.end());
    std::vector<double> grad(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double saved = p[i];
        p[i] = saved + epsilon;
        const double up = f(p);
        p[i] = saved - epsilon;
        const double down = f(p);
        p[i] = saved;
        grad[i] = (up - down) / (2.0 * epsilon);
    }
    return grad;
}

double relative_error(double a, double b) {
    const double denom = std::max({std::fabs(a), std::fabs(b), 1e-8});
    return std::fabs(a - b) / denom;
}

double max_relative_error(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("max_relative_error: length mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, relative_error(a[i], b[i]));
    return worst;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over the combined word
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace cdcnn
