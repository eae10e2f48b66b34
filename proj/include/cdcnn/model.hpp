#ifndef CDCNN_MODEL_HPP
#define CDCNN_MODEL_HPP

#include <cstdint>
#include <vector>

#include "cdcnn/nncore.hpp"
#include "cdcnn/tensor.hpp"

namespace cdcnn {

inline constexpr std::size_t kHoursPerDay = 24;

/// Architecture hyperparameters for the two-domain network.
struct ModelConfig {
    std::size_t grid_rows = 24;        // location grid I
    std::size_t grid_cols = 24;        // location grid J
    std::size_t loc_filters = 2;       // location filter count
    std::size_t loc_filter_rows = 3;   // location filter height
    std::size_t loc_filter_cols = 3;   // location filter width
    std::size_t loc_pool = 4;          // 2-D pooling window
    std::size_t com_filters = 2;       // communication filter count
    std::size_t com_filter_width = 5;  // 1-D filter length
    std::size_t com_pool = 2;          // 1-D pooling window
    std::size_t fusion_width = 32;
    bool use_balancer = true;

    void validate() const;

    std::size_t loc_conv_rows() const { return grid_rows - loc_filter_rows + 1; }
    std::size_t loc_conv_cols() const { return grid_cols - loc_filter_cols + 1; }
    std::size_t loc_pooled_rows() const { return (loc_conv_rows() + loc_pool - 1) / loc_pool; }
    std::size_t loc_pooled_cols() const { return (loc_conv_cols() + loc_pool - 1) / loc_pool; }
    std::size_t loc_feature_dim() const {
        return loc_filters * loc_pooled_rows() * loc_pooled_cols();
    }
    std::size_t com_conv_len() const { return kHoursPerDay - com_filter_width + 1; }
    std::size_t com_pooled_len() const { return (com_conv_len() + com_pool - 1) / com_pool; }
    std::size_t com_feature_dim() const { return com_filters * com_pooled_len(); }

    std::size_t balanced_loc_dim() const;
    std::size_t balanced_com_dim() const;
    std::size_t fusion_input_dim() const { return balanced_loc_dim() + balanced_com_dim(); }

    bool operator==(const ModelConfig&) const = default;
};

/// Width chains of the dimensionality-balancing subnetwork. The location
/// chain halves layer by layer, the communication chain doubles, and both
/// terminate at the same width.
struct BalancerSpec {
    std::vector<std::size_t> loc_widths;  // starts at the location feature dim
    std::vector<std::size_t> com_widths;  // starts at the communication feature dim
    std::size_t shared_width = 0;
};

/// Requires loc_dim >= com_dim >= 1; callers with the opposite imbalance
/// swap the roles themselves.
BalancerSpec build_balancer(std::size_t loc_dim, std::size_t com_dim);

/// Scalar logistic-regression output: sigmoid(w . x + bias).
struct LogisticHead {
    Tensor weights;  // {in}
    double bias = 0.0;
};

struct LocationParams {
    std::vector<Conv2DFilter> filters;
    std::vector<DenseLayer> balancer;
    std::size_t pool_window = 1;  // architecture constant, not trainable
};

struct CommParams {
    std::vector<Conv1DFilter> filters;
    std::vector<DenseLayer> balancer;
    std::size_t pool_window = 1;
};

struct OutputParams {
    DenseLayer fusion;
    LogisticHead head;
};

/// Full two-domain network parameters. The same struct doubles as the
/// gradient carrier: gradients mirror parameter shapes exactly.
struct CDCNNParams {
    LocationParams loc;
    CommParams com;
    OutputParams out;
};

/// Location-only predictor: location pipeline plus a private logistic head.
struct LNParams {
    LocationParams loc;
    LogisticHead head;
};

/// Communication-only predictor.
struct CNParams {
    CommParams com;
    LogisticHead head;
};

CDCNNParams init_cdcnn(const ModelConfig& config, std::uint64_t seed);
LNParams init_ln(const ModelConfig& config, std::uint64_t seed);
CNParams init_cn(const ModelConfig& config, std::uint64_t seed);

CDCNNParams zeros_like(const CDCNNParams& p);
LNParams zeros_like(const LNParams& p);
CNParams zeros_like(const CNParams& p);

std::size_t param_count(const CDCNNParams& p);
std::size_t param_count(const LNParams& p);
std::size_t param_count(const CNParams& p);

void flatten(const CDCNNParams& p, std::span<double> out);
void flatten(const LNParams& p, std::span<double> out);
void flatten(const CNParams& p, std::span<double> out);
std::vector<double> flatten(const CDCNNParams& p);
std::vector<double> flatten(const LNParams& p);
std::vector<double> flatten(const CNParams& p);

void unflatten(CDCNNParams& p, std::span<const double> in);
void unflatten(LNParams& p, std::span<const double> in);
void unflatten(CNParams& p, std::span<const double> in);

/// out += scale * flatten(p)
void add_scaled(const CDCNNParams& p, double scale, std::span<double> out);
void add_scaled(const LNParams& p, double scale, std::span<double> out);
void add_scaled(const CNParams& p, double scale, std::span<double> out);

void set_zero(CDCNNParams& p);
void set_zero(LNParams& p);
void set_zero(CNParams& p);

// Forward caches hold every intermediate activation needed by backward.

struct DenseChainCache {
    std::vector<Tensor> activations;  // [chain input, layer 1 output, ...]
};

struct LocPipelineCache {
    const Tensor* input = nullptr;
    std::vector<Tensor> conv_out;
    std::vector<Tensor> pooled;
    DenseChainCache balancer;  // activations[0] is the flattened feature vector
};

struct ComPipelineCache {
    const Tensor* input = nullptr;
    std::vector<Tensor> conv_out;
    std::vector<Tensor> pooled;
    DenseChainCache balancer;
};

struct CDCNNCache {
    LocPipelineCache loc;
    ComPipelineCache com;
    Tensor fused_input;
    Tensor fusion_out;
    double output = 0.0;
};

struct LNCache {
    LocPipelineCache loc;
    double output = 0.0;
};

struct CNCache {
    ComPipelineCache com;
    double output = 0.0;
};

/// location input {2, I, J}, communication input {2, 24}; returns a value in
/// (0, 1). Pass a cache to enable a subsequent backward call.
double cdcnn_forward(const CDCNNParams& params, const Tensor& loc_input,
                     const Tensor& com_input, CDCNNCache* cache = nullptr);
double ln_forward(const LNParams& params, const Tensor& loc_input,
                  LNCache* cache = nullptr);
double cn_forward(const CNParams& params, const Tensor& com_input,
                  CNCache* cache = nullptr);

// Backward passes accumulate loss gradients into `grads`, which must mirror
// the parameter shapes (see zeros_like). `upstream` is dLoss/doutput.

void cdcnn_backward(const CDCNNParams& params, const CDCNNCache& cache,
                    double upstream, CDCNNParams& grads);
void ln_backward(const LNParams& params, const LNCache& cache, double upstream,
                 LNParams& grads);
void cn_backward(const CNParams& params, const CNCache& cache, double upstream,
                 CNParams& grads);

CDCNNParams cdcnn_backward(const CDCNNParams& params, const CDCNNCache& cache,
                           double upstream);
LNParams ln_backward(const LNParams& params, const LNCache& cache, double upstream);
CNParams cn_backward(const CNParams& params, const CNCache& cache, double upstream);

/// Assemble a full network from co-trained domain parts; the output
/// subnetwork is freshly initialized from `output_seed`.
CDCNNParams assemble_cdcnn(const ModelConfig& config, const LocationParams& loc,
                           const CommParams& com, std::uint64_t output_seed);

}  // namespace cdcnn

#endif
