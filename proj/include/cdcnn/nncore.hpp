#ifndef CDCNN_NNCORE_HPP
#define CDCNN_NNCORE_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "cdcnn/tensor.hpp"

namespace cdcnn {

enum class Activation { Sigmoid, Identity };

double sigmoid(double x);
Tensor sigmoid(const Tensor& x);
double apply_activation(Activation act, double x);

// Derivative of the activation expressed through its output value y = act(x).
double activation_derivative(Activation act, double y);

/// 2-channel 2D convolution filter: weights shaped {M, N, 2} plus a scalar bias.
/// Channel 0 convolves the home-period matrix, channel 1 the working-period one.
struct Conv2DFilter {
    Tensor weights;
    double bias = 0.0;

    std::size_t rows() const { return weights.dim(0); }
    std::size_t cols() const { return weights.dim(1); }
};

/// 2-row 1D convolution filter: weights shaped {2, H} plus a scalar bias.
/// Row 0 convolves the call profile, row 1 the SMS profile.
struct Conv1DFilter {
    Tensor weights;
    double bias = 0.0;

    std::size_t width() const { return weights.dim(1); }
};

struct DenseLayer {
    Tensor weights;  // {out, in}
    Tensor biases;   // {out}
    Activation activation = Activation::Sigmoid;

    std::size_t out_dim() const { return weights.dim(0); }
    std::size_t in_dim() const { return weights.dim(1); }
};

// Forward passes. Convolutions are valid (no padding), stride 1.

/// Input {2, I, J}; one output matrix {I-M+1, J-N+1} per filter.
std::vector<Tensor> conv2d_two_channel(const Tensor& input,
                                       const std::vector<Conv2DFilter>& filters,
                                       Activation act);

/// Disjoint-block average pooling. Trailing partial blocks are averaged over
/// their actual cell count, so the output is ceil(rows/D) x ceil(cols/D).
Tensor avg_pool2d(const Tensor& input, std::size_t window);

/// Input {2, T}; one output vector {T-H+1} per filter.
std::vector<Tensor> conv1d_two_row(const Tensor& input,
                                   const std::vector<Conv1DFilter>& filters,
                                   Activation act);

Tensor avg_pool1d(const Tensor& input, std::size_t window);

Tensor dense_forward(const Tensor& x, const DenseLayer& layer);

// Backward passes. `output` is the forward result at the same inputs and
// `upstream` the gradient of the loss with respect to it. Parameter gradients
// mirror the parameter shapes; each result also carries the input gradient.

struct Conv2DGradients {
    std::vector<Tensor> weight_grads;
    std::vector<double> bias_grads;
    Tensor input_grad;  // {2, I, J}
};

Conv2DGradients conv2d_two_channel_backward(const Tensor& input,
                                            const std::vector<Conv2DFilter>& filters,
                                            Activation act,
                                            const std::vector<Tensor>& outputs,
                                            const std::vector<Tensor>& upstream);

Tensor avg_pool2d_backward(std::size_t in_rows, std::size_t in_cols,
                           std::size_t window, const Tensor& upstream);

struct Conv1DGradients {
    std::vector<Tensor> weight_grads;
    std::vector<double> bias_grads;
    Tensor input_grad;  // {2, T}
};

Conv1DGradients conv1d_two_row_backward(const Tensor& input,
                                        const std::vector<Conv1DFilter>& filters,
                                        Activation act,
                                        const std::vector<Tensor>& outputs,
                                        const std::vector<Tensor>& upstream);

Tensor avg_pool1d_backward(std::size_t in_len, std::size_t window,
                           const Tensor& upstream);

struct DenseGradients {
    Tensor weight_grad;
    Tensor bias_grad;
    Tensor input_grad;
};

DenseGradients dense_backward(const Tensor& x, const DenseLayer& layer,
                              const Tensor& output, const Tensor& upstream);

/// Central-difference gradient of a scalar function of a flat parameter
/// vector: (f(p+eps) - f(p-eps)) / (2 eps) per coordinate.
std::vector<double> finite_difference_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> params, double epsilon = 1e-5);

/// Relative error denominated by max(|a|, |b|, 1e-8).
double relative_error(double a, double b);
double max_relative_error(std::span<const double> a, std::span<const double> b);

/// Stateless seed derivation for independent deterministic substreams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace cdcnn

#endif
