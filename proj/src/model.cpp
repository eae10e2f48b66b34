#include "cdcnn/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>

namespace cdcnn {
namespace {

std::size_t floor_log2(std::size_t v) {
    std::size_t r = 0;
    while (v >>= 1) ++r;
    return r;
}

std::size_t ceil_log2(std::size_t v) {
    std::size_t r = floor_log2(v);
    return (std::size_t{1} << r) == v ? r : r + 1;
}

// Visits every trainable scalar of a node in declaration order. The same
// walk drives flatten, unflatten, counting and zeroing, so the canonical
// parameter order is defined in exactly one place.
template <class T, class F>
void walk(T& node, F&& fn) {
    using U = std::remove_const_t<T>;
    if constexpr (std::is_same_v<U, Conv2DFilter> || std::is_same_v<U, Conv1DFilter> ||
                  std::is_same_v<U, LogisticHead>) {
        for (auto& v : node.weights.values()) fn(v);
        fn(node.bias);
    } else if constexpr (std::is_same_v<U, DenseLayer>) {
        for (auto& v : node.weights.values()) fn(v);
        for (auto& v : node.biases.values()) fn(v);
    } else if constexpr (std::is_same_v<U, LocationParams> ||
                         std::is_same_v<U, CommParams>) {
        for (auto& f : node.filters) walk(f, fn);
        for (auto& l : node.balancer) walk(l, fn);
    } else if constexpr (std::is_same_v<U, OutputParams>) {
        walk(node.fusion, fn);
        walk(node.head, fn);
    } else if constexpr (std::is_same_v<U, CDCNNParams>) {
        walk(node.loc, fn);
        walk(node.com, fn);
        walk(node.out, fn);
    } else if constexpr (std::is_same_v<U, LNParams>) {
        walk(node.loc, fn);
        walk(node.head, fn);
    } else if constexpr (std::is_same_v<U, CNParams>) {
        walk(node.com, fn);
        walk(node.head, fn);
    } else {
        static_assert(!sizeof(T*), "walk: unsupported node type");
    }
}

template <class P>
std::size_t count_impl(const P& p) {
    std::size_t n = 0;
    walk(p, [&](const double&) { ++n; });
    return n;
}

template <class P>
void flatten_impl(const P& p, std::span<double> out) {
    std::size_t i = 0;
    walk(p, [&](const double& v) {
        if (i >= out.size()) throw std::invalid_argument("flatten: buffer too small");
        out[i++] = v;
    });
    if (i != out.size()) throw std::invalid_argument("flatten: buffer size mismatch");
}

template <class P>
void unflatten_impl(P& p, std::span<const double> in) {
    std::size_t i = 0;
    walk(p, [&](double& v) {
        if (i >= in.size()) throw std::invalid_argument("unflatten: vector too short");
        v = in[i++];
    });
    if (i != in.size()) throw std::invalid_argument("unflatten: vector size mismatch");
}

template <class P>
void add_scaled_impl(const P& p, double scale, std::span<double> out) {
    std::size_t i = 0;
    walk(p, [&](const double& v) {
        if (i >= out.size()) throw std::invalid_argument("add_scaled: buffer too small");
        out[i++] += scale * v;
    });
    if (i != out.size()) throw std::invalid_argument("add_scaled: buffer size mismatch");
}

template <class P>
void zero_impl(P& p) {
    walk(p, [](double& v) { v = 0.0; });
}

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

// Presence-fraction inputs are sparse (a handful of nonzero cells out of the
// whole grid) and hourly fractions are ~1/24 in magnitude, so fan-in-scaled
// bounds leave conv activations nearly constant across residents. Widening
// the conv init restores input-driven contrast at the pooled features.
constexpr double kConv2DInitGain = 6.0;
constexpr double kConv1DInitGain = 4.0;

// Dense layers see sigmoid outputs, whose mean sits near 0.5 rather than 0.
// A plain fan-scaled init leaves each unit with a large random constant
// offset (the weights dotted with the 0.5 baseline) that saturates it and
// buries the sample-to-sample differences. Widening the weights and setting
// every bias to cancel the baseline keeps pre-activations centered where the
// sigmoid is steep, so the class signal survives the chain at any seed.
constexpr double kDenseInitGain = 3.0;

void fill_uniform(std::mt19937_64& rng, double bound, std::span<double> out) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : out) v = dist(rng);
}

DenseLayer make_dense(std::mt19937_64& rng, std::size_t in, std::size_t out) {
    DenseLayer layer;
    layer.weights = Tensor({out, in});
    layer.biases = Tensor({out});
    layer.activation = Activation::Sigmoid;
    fill_uniform(rng, kDenseInitGain * glorot_bound(in, out), layer.weights.values());
    for (std::size_t j = 0; j < out; ++j) {
        double row_sum = 0.0;
        for (std::size_t i = 0; i < in; ++i) row_sum += layer.weights.at(j, i);
        layer.biases[j] = -0.5 * row_sum;
    }
    return layer;
}

std::vector<DenseLayer> make_chain(std::mt19937_64& rng,
                                   const std::vector<std::size_t>& widths) {
    std::vector<DenseLayer> chain;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i)
        chain.push_back(make_dense(rng, widths[i], widths[i + 1]));
    return chain;
}

LocationParams make_loc(std::mt19937_64& rng, const ModelConfig& c) {
    LocationParams loc;
    loc.pool_window = c.loc_pool;
    const std::size_t area = c.loc_filter_rows * c.loc_filter_cols;
    for (std::size_t k = 0; k < c.loc_filters; ++k) {
        Conv2DFilter f;
        f.weights = Tensor({c.loc_filter_rows, c.loc_filter_cols, 2});
        fill_uniform(rng, kConv2DInitGain * glorot_bound(2 * area, area),
                     f.weights.values());
        loc.filters.push_back(std::move(f));
    }
    if (c.use_balancer)
        loc.balancer = make_chain(
            rng, build_balancer(c.loc_feature_dim(), c.com_feature_dim()).loc_widths);
    return loc;
}

CommParams make_com(std::mt19937_64& rng, const ModelConfig& c) {
    CommParams com;
    com.pool_window = c.com_pool;
    for (std::size_t k = 0; k < c.com_filters; ++k) {
        Conv1DFilter f;
        f.weights = Tensor({2, c.com_filter_width});
        fill_uniform(rng,
                     kConv1DInitGain *
                         glorot_bound(2 * c.com_filter_width, c.com_filter_width),
                     f.weights.values());
        com.filters.push_back(std::move(f));
    }
    if (c.use_balancer)
        com.balancer = make_chain(
            rng, build_balancer(c.loc_feature_dim(), c.com_feature_dim()).com_widths);
    return com;
}

LogisticHead make_head(std::mt19937_64& rng, std::size_t in) {
    LogisticHead head;
    head.weights = Tensor({in});
    fill_uniform(rng, glorot_bound(in, 1), head.weights.values());
    double sum = 0.0;
    for (double w : head.weights.values()) sum += w;
    head.bias = -0.5 * sum;
    return head;
}

OutputParams make_output(std::mt19937_64& rng, const ModelConfig& c) {
    OutputParams out;
    out.fusion = make_dense(rng, c.fusion_input_dim(), c.fusion_width);
    out.head = make_head(rng, c.fusion_width);
    return out;
}

// Flattens the per-filter pooled maps into one feature vector, filter-major.
Tensor concat_features(const std::vector<Tensor>& pooled) {
    std::size_t total = 0;
    for (const auto& t : pooled) total += t.size();
    Tensor features({total});
    std::size_t i = 0;
    for (const auto& t : pooled)
        for (double v : t.values()) features[i++] = v;
    return features;
}

const Tensor& chain_forward(const std::vector<DenseLayer>& chain, Tensor input,
                            DenseChainCache& cache) {
    cache.activations.clear();
    cache.activations.push_back(std::move(input));
    for (const auto& layer : chain)
        cache.activations.push_back(dense_forward(cache.activations.back(), layer));
    return cache.activations.back();
}

// Returns the gradient with respect to the chain input.
Tensor chain_backward(const std::vector<DenseLayer>& chain,
                      const DenseChainCache& cache, Tensor upstream,
                      std::vector<DenseLayer>& grads) {
    for (std::size_t i = chain.size(); i-- > 0;) {
        DenseGradients g = dense_backward(cache.activations[i], chain[i],
                                          cache.activations[i + 1], upstream);
        for (std::size_t j = 0; j < g.weight_grad.size(); ++j)
            grads[i].weights[j] += g.weight_grad[j];
        for (std::size_t j = 0; j < g.bias_grad.size(); ++j)
            grads[i].biases[j] += g.bias_grad[j];
        upstream = std::move(g.input_grad);
    }
    return upstream;
}

const Tensor& loc_forward(const LocationParams& p, const Tensor& input,
                          LocPipelineCache& cache) {
    cache.input = &input;
    cache.conv_out = conv2d_two_channel(input, p.filters, Activation::Sigmoid);
    cache.pooled.clear();
    for (const auto& m : cache.conv_out)
        cache.pooled.push_back(avg_pool2d(m, p.pool_window));
    return chain_forward(p.balancer, concat_features(cache.pooled), cache.balancer);
}

const Tensor& com_forward(const CommParams& p, const Tensor& input,
                          ComPipelineCache& cache) {
    cache.input = &input;
    cache.conv_out = conv1d_two_row(input, p.filters, Activation::Sigmoid);
    cache.pooled.clear();
    for (const auto& v : cache.conv_out)
        cache.pooled.push_back(avg_pool1d(v, p.pool_window));
    return chain_forward(p.balancer, concat_features(cache.pooled), cache.balancer);
}

// Splits a flat feature gradient back into per-map upstream tensors.
std::vector<Tensor> split_feature_grad(const Tensor& grad,
                                       const std::vector<Tensor>& pooled) {
    std::vector<Tensor> parts;
    std::size_t offset = 0;
    for (const auto& t : pooled) {
        Tensor part(t.shape());
        for (std::size_t j = 0; j < t.size(); ++j) part[j] = grad[offset + j];
        offset += t.size();
        parts.push_back(std::move(part));
    }
    return parts;
}

void loc_backward(const LocationParams& p, const LocPipelineCache& cache,
                  Tensor balanced_grad, LocationParams& grads) {
    Tensor feature_grad =
        chain_backward(p.balancer, cache.balancer, std::move(balanced_grad),
                       grads.balancer);
    std::vector<Tensor> pooled_grads = split_feature_grad(feature_grad, cache.pooled);
    std::vector<Tensor> conv_grads;
    for (std::size_t k = 0; k < pooled_grads.size(); ++k)
        conv_grads.push_back(avg_pool2d_backward(cache.conv_out[k].dim(0),
                                                 cache.conv_out[k].dim(1),
                                                 p.pool_window, pooled_grads[k]));
    Conv2DGradients cg = conv2d_two_channel_backward(
        *cache.input, p.filters, Activation::Sigmoid, cache.conv_out, conv_grads);
    for (std::size_t k = 0; k < p.filters.size(); ++k) {
        for (std::size_t j = 0; j < cg.weight_grads[k].size(); ++j)
            grads.filters[k].weights[j] += cg.weight_grads[k][j];
        grads.filters[k].bias += cg.bias_grads[k];
    }
}

void com_backward(const CommParams& p, const ComPipelineCache& cache,
                  Tensor balanced_grad, CommParams& grads) {
    Tensor feature_grad =
        chain_backward(p.balancer, cache.balancer, std::move(balanced_grad),
                       grads.balancer);
    std::vector<Tensor> pooled_grads = split_feature_grad(feature_grad, cache.pooled);
    std::vector<Tensor> conv_grads;
    for (std::size_t k = 0; k < pooled_grads.size(); ++k)
        conv_grads.push_back(avg_pool1d_backward(cache.conv_out[k].dim(0),
                                                 p.pool_window, pooled_grads[k]));
    Conv1DGradients cg = conv1d_two_row_backward(
        *cache.input, p.filters, Activation::Sigmoid, cache.conv_out, conv_grads);
    for (std::size_t k = 0; k < p.filters.size(); ++k) {
        for (std::size_t j = 0; j < cg.weight_grads[k].size(); ++j)
            grads.filters[k].weights[j] += cg.weight_grads[k][j];
        grads.filters[k].bias += cg.bias_grads[k];
    }
}

double head_forward(const LogisticHead& head, const Tensor& x) {
    if (x.size() != head.weights.size())
        throw std::invalid_argument("logistic head: input size mismatch");
    double z = head.bias;
    for (std::size_t i = 0; i < x.size(); ++i) z += head.weights[i] * x[i];
    return sigmoid(z);
}

// Returns the gradient with respect to the head input.
Tensor head_backward(const LogisticHead& head, const Tensor& x, double output,
                     double upstream, LogisticHead& grads) {
    const double dz = upstream * output * (1.0 - output);
    Tensor input_grad({x.size()});
    for (std::size_t i = 0; i < x.size(); ++i) {
        grads.weights[i] += dz * x[i];
        input_grad[i] = dz * head.weights[i];
    }
    grads.bias += dz;
    return input_grad;
}

}  // namespace

void ModelConfig::validate() const {
    auto require = [](bool ok, const char* msg) {
        if (!ok) throw std::invalid_argument(std::string("ModelConfig: ") + msg);
    };
    require(grid_rows >= 1 && grid_cols >= 1, "grid dimensions must be positive");
    require(loc_filters >= 1, "need at least one location filter");
    require(loc_filter_rows >= 1 && loc_filter_cols >= 1,
            "location filter dimensions must be positive");
    require(loc_filter_rows <= grid_rows && loc_filter_cols <= grid_cols,
            "location filter must fit inside the grid");
    require(loc_pool >= 1, "location pool window must be positive");
    require(com_filters >= 1, "need at least one communication filter");
    require(com_filter_width >= 1 && com_filter_width <= kHoursPerDay,
            "communication filter width must be in [1, 24]");
    require(com_pool >= 1, "communication pool window must be positive");
    require(fusion_width >= 1, "fusion width must be positive");
    if (use_balancer)
        require(loc_feature_dim() >= com_feature_dim(),
                "balancer expects the location feature dim to dominate");
}

std::size_t ModelConfig::balanced_loc_dim() const {
    if (!use_balancer) return loc_feature_dim();
    return build_balancer(loc_feature_dim(), com_feature_dim()).shared_width;
}

std::size_t ModelConfig::balanced_com_dim() const {
    if (!use_balancer) return com_feature_dim();
    return build_balancer(loc_feature_dim(), com_feature_dim()).shared_width;
}

BalancerSpec build_balancer(std::size_t loc_dim, std::size_t com_dim) {
    if (com_dim < 1) throw std::invalid_argument("build_balancer: com_dim must be >= 1");
    if (loc_dim < com_dim)
        throw std::invalid_argument(
            "build_balancer: loc_dim must dominate; swap the roles");

    std::size_t shared =
        std::size_t{1} << ((floor_log2(loc_dim) + ceil_log2(com_dim)) / 2);
    // Clamping keeps both chains monotone when the two dims are already close.
    if (shared < com_dim) shared = com_dim;
    if (shared > loc_dim) shared = loc_dim;

    BalancerSpec spec;
    spec.shared_width = shared;
    spec.loc_widths.push_back(loc_dim);
    for (std::size_t w = loc_dim; w > shared;) {
        std::size_t next = w / 2;
        if (next <= shared) next = shared;
        spec.loc_widths.push_back(next);
        w = next;
    }
    spec.com_widths.push_back(com_dim);
    for (std::size_t w = com_dim; w < shared;) {
        std::size_t next = 2 * w;
        if (next >= shared) next = shared;
        spec.com_widths.push_back(next);
        w = next;
    }
    return spec;
}

CDCNNParams init_cdcnn(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    CDCNNParams p;
    p.loc = make_loc(rng, config);
    p.com = make_com(rng, config);
    p.out = make_output(rng, config);
    return p;
}

LNParams init_ln(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    LNParams p;
    p.loc = make_loc(rng, config);
    p.head = make_head(rng, config.balanced_loc_dim());
    return p;
}

CNParams init_cn(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    CNParams p;
    p.com = make_com(rng, config);
    p.head = make_head(rng, config.balanced_com_dim());
    return p;
}

CDCNNParams zeros_like(const CDCNNParams& p) {
    CDCNNParams z = p;
    zero_impl(z);
    return z;
}

LNParams zeros_like(const LNParams& p) {
    LNParams z = p;
    zero_impl(z);
    return z;
}

CNParams zeros_like(const CNParams& p) {
    CNParams z = p;
    zero_impl(z);
    return z;
}

std::size_t param_count(const CDCNNParams& p) { return count_impl(p); }
std::size_t param_count(const LNParams& p) { return count_impl(p); }
std::size_t param_count(const CNParams& p) { return count_impl(p); }

void flatten(const CDCNNParams& p, std::span<double> out) { flatten_impl(p, out); }
void flatten(const LNParams& p, std::span<double> out) { flatten_impl(p, out); }
void flatten(const CNParams& p, std::span<double> out) { flatten_impl(p, out); }

std::vector<double> flatten(const CDCNNParams& p) {
    std::vector<double> v(param_count(p));
    flatten_impl(p, std::span<double>(v));
    return v;
}

std::vector<double> flatten(const LNParams& p) {
    std::vector<double> v(param_count(p));
    flatten_impl(p, std::span<double>(v));
    return v;
}

std::vector<double> flatten(const CNParams& p) {
    std::vector<double> v(param_count(p));
    flatten_impl(p, std::span<double>(v));
    return v;
}

void unflatten(CDCNNParams& p, std::span<const double> in) { unflatten_impl(p, in); }
void unflatten(LNParams& p, std::span<const double> in) { unflatten_impl(p, in); }
void unflatten(CNParams& p, std::span<const double> in) { unflatten_impl(p, in); }

void add_scaled(const CDCNNParams& p, double scale, std::span<double> out) {
    add_scaled_impl(p, scale, out);
}
void add_scaled(const LNParams& p, double scale, std::span<double> out) {
    add_scaled_impl(p, scale, out);
}
void add_scaled(const CNParams& p, double scale, std::span<double> out) {
    add_scaled_impl(p, scale, out);
}

void set_zero(CDCNNParams& p) { zero_impl(p); }
void set_zero(LNParams& p) { zero_impl(p); }
void set_zero(CNParams& p) { zero_impl(p); }

double cdcnn_forward(const CDCNNParams& params, const Tensor& loc_input,
                     const Tensor& com_input, CDCNNCache* cache) {
    CDCNNCache local;
    CDCNNCache& c = cache ? *cache : local;
    const Tensor& loc_out = loc_forward(params.loc, loc_input, c.loc);
    const Tensor& com_out = com_forward(params.com, com_input, c.com);

    c.fused_input = Tensor({loc_out.size() + com_out.size()});
    for (std::size_t i = 0; i < loc_out.size(); ++i) c.fused_input[i] = loc_out[i];
    for (std::size_t i = 0; i < com_out.size(); ++i)
        c.fused_input[loc_out.size() + i] = com_out[i];

    c.fusion_out = dense_forward(c.fused_input, params.out.fusion);
    c.output = head_forward(params.out.head, c.fusion_out);
    return c.output;
}

double ln_forward(const LNParams& params, const Tensor& loc_input, LNCache* cache) {
    LNCache local;
    LNCache& c = cache ? *cache : local;
    const Tensor& loc_out = loc_forward(params.loc, loc_input, c.loc);
    c.output = head_forward(params.head, loc_out);
    return c.output;
}

double cn_forward(const CNParams& params, const Tensor& com_input, CNCache* cache) {
    CNCache local;
    CNCache& c = cache ? *cache : local;
    const Tensor& com_out = com_forward(params.com, com_input, c.com);
    c.output = head_forward(params.head, com_out);
    return c.output;
}

void cdcnn_backward(const CDCNNParams& params, const CDCNNCache& cache,
                    double upstream, CDCNNParams& grads) {
    Tensor fusion_grad = head_backward(params.out.head, cache.fusion_out,
                                       cache.output, upstream, grads.out.head);
    DenseGradients fg = dense_backward(cache.fused_input, params.out.fusion,
                                       cache.fusion_out, fusion_grad);
    for (std::size_t j = 0; j < fg.weight_grad.size(); ++j)
        grads.out.fusion.weights[j] += fg.weight_grad[j];
    for (std::size_t j = 0; j < fg.bias_grad.size(); ++j)
        grads.out.fusion.biases[j] += fg.bias_grad[j];

    const std::size_t loc_dim = cache.loc.balancer.activations.back().size();
    const std::size_t com_dim = cache.com.balancer.activations.back().size();
    Tensor loc_grad({loc_dim});
    Tensor com_grad({com_dim});
    for (std::size_t i = 0; i < loc_dim; ++i) loc_grad[i] = fg.input_grad[i];
    for (std::size_t i = 0; i < com_dim; ++i) com_grad[i] = fg.input_grad[loc_dim + i];

    loc_backward(params.loc, cache.loc, std::move(loc_grad), grads.loc);
    com_backward(params.com, cache.com, std::move(com_grad), grads.com);
}

void ln_backward(const LNParams& params, const LNCache& cache, double upstream,
                 LNParams& grads) {
    const Tensor& loc_out = cache.loc.balancer.activations.back();
    Tensor loc_grad =
        head_backward(params.head, loc_out, cache.output, upstream, grads.head);
    loc_backward(params.loc, cache.loc, std::move(loc_grad), grads.loc);
}

void cn_backward(const CNParams& params, const CNCache& cache, double upstream,
                 CNParams& grads) {
    const Tensor& com_out = cache.com.balancer.activations.back();
    Tensor com_grad =
        head_backward(params.head, com_out, cache.output, upstream, grads.head);
    com_backward(params.com, cache.com, std::move(com_grad), grads.com);
}

CDCNNParams cdcnn_backward(const CDCNNParams& params, const CDCNNCache& cache,
                           double upstream) {
    CDCNNParams grads = zeros_like(params);
    cdcnn_backward(params, cache, upstream, grads);
    return grads;
}

LNParams ln_backward(const LNParams& params, const LNCache& cache, double upstream) {
    LNParams grads = zeros_like(params);
    ln_backward(params, cache, upstream, grads);
    return grads;
}

CNParams cn_backward(const CNParams& params, const CNCache& cache, double upstream) {
    CNParams grads = zeros_like(params);
    cn_backward(params, cache, upstream, grads);
    return grads;
}

CDCNNParams assemble_cdcnn(const ModelConfig& config, const LocationParams& loc,
                           const CommParams& com, std::uint64_t output_seed) {
    config.validate();
    std::mt19937_64 rng(output_seed);
    CDCNNParams p;
    p.loc = loc;
    p.com = com;
    p.out = make_output(rng, config);
    return p;
}

}  // namespace cdcnn
