#include "cdcnn/gradcheck.hpp"

#include <algorithm>
#include <random>
#include <span>
#include <stdexcept>

#include "cdcnn/model.hpp"
#include "cdcnn/nncore.hpp"
#include "cdcnn/tensor.hpp"

namespace cdcnn::gradcheck {
namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Tensor random_tensor(std::mt19937_64& rng, const std::vector<std::size_t>& shape,
                     double bound = 1.0) {
    Tensor t(shape);
    for (auto& v : t.values()) v = uniform(rng, -bound, bound);
    return t;
}

void record(Report& report, std::string name, std::span<const double> analytic,
            std::span<const double> fd) {
    CaseResult c;
    c.name = std::move(name);
    c.max_rel_error = max_relative_error(analytic, fd);
    c.checks = analytic.size();
    report.total_checks += c.checks;
    if (report.cases.empty() || c.max_rel_error > report.worst) {
        report.worst = c.max_rel_error;
        report.worst_case = c.name;
    }
    report.cases.push_back(std::move(c));
}

void check_conv2d(Report& report, std::mt19937_64& rng, std::size_t trial) {
    const std::size_t m = pick(rng, 1, 3), n = pick(rng, 1, 3);
    const std::size_t rows = pick(rng, m, m + 5), cols = pick(rng, n, n + 5);
    const std::size_t k = pick(rng, 1, 2);

    std::vector<Conv2DFilter> filters(k);
    for (auto& f : filters) {
        f.weights = random_tensor(rng, {m, n, 2});
        f.bias = uniform(rng, -1.0, 1.0);
    }
    const Tensor input = random_tensor(rng, {2, rows, cols});
    std::vector<Tensor> coeff;
    for (std::size_t i = 0; i < k; ++i)
        coeff.push_back(random_tensor(rng, {rows - m + 1, cols - n + 1}));

    // Parameter vector: filter weights, biases, then the input itself, so the
    // finite difference also exercises the input gradient.
    std::vector<double> params;
    for (const auto& f : filters) {
        params.insert(params.end(), f.weights.values().begin(), f.weights.values().end());
        params.push_back(f.bias);
    }
    params.insert(params.end(), input.values().begin(), input.values().end());

    auto eval = [&](std::span<const double> p) {
        std::vector<Conv2DFilter> fs = filters;
        Tensor in = input;
        std::size_t pos = 0;
        for (auto& f : fs) {
            for (auto& w : f.weights.values()) w = p[pos++];
            f.bias = p[pos++];
        }
        for (auto& v : in.values()) v = p[pos++];
        const auto outs = conv2d_two_channel(in, fs, Activation::Sigmoid);
        double loss = 0.0;
        for (std::size_t i = 0; i < outs.size(); ++i) {
            const auto ov = outs[i].values();
            const auto cv = coeff[i].values();
            for (std::size_t j = 0; j < ov.size(); ++j) loss += cv[j] * ov[j];
        }
        return loss;
    };

    const auto outs = conv2d_two_channel(input, filters, Activation::Sigmoid);
    const auto grads =
        conv2d_two_channel_backward(input, filters, Activation::Sigmoid, outs, coeff);
    std::vector<double> analytic;
    for (std::size_t i = 0; i < filters.size(); ++i) {
        analytic.insert(analytic.end(), grads.weight_grads[i].values().begin(),
                        grads.weight_grads[i].values().end());
        analytic.push_back(grads.bias_grads[i]);
    }
    analytic.insert(analytic.end(), grads.input_grad.values().begin(),
                    grads.input_grad.values().end());

    const auto fd = finite_difference_grad(eval, params);
    record(report, "conv2d[" + std::to_string(trial) + "]", analytic, fd);
}

void check_pool2d(Report& report, std::mt19937_64& rng, std::size_t trial) {
    const std::size_t rows = pick(rng, 1, 9), cols = pick(rng, 1, 9);
    const std::size_t window = pick(rng, 1, 4);
    const Tensor input = random_tensor(rng, {rows, cols});
    const std::size_t prows = (rows + window - 1) / window;
    const std::size_t pcols = (cols + window - 1) / window;
    const Tensor coeff = random_tensor(rng, {prows, pcols});

    auto eval = [&](std::span<const double> p) {
        Tensor in = input;
        std::copy(p.begin(), p.end(), in.values().begin());
        const Tensor out = avg_pool2d(in, window);
        double loss = 0.0;
        const auto ov = out.values();
        const auto cv = coeff.values();
        for (std::size_t j = 0; j < ov.size(); ++j) loss += cv[j] * ov[j];
        return loss;
    };

    const Tensor analytic_t = avg_pool2d_backward(rows, cols, window, coeff);
    const auto fd = finite_difference_grad(eval, input.values());
    record(report, "avg_pool2d[" + std::to_string(trial) + "]", analytic_t.values(), fd);
}

void check_conv1d(Report& report, std::mt19937_64& rng, std::size_t trial) {
    const std::size_t h = pick(rng, 1, 5);
    const std::size_t len = pick(rng, h, h + 8);
    const std::size_t k = pick(rng, 1, 2);

    std::vector<Conv1DFilter> filters(k);
    for (auto& f : filters) {
        f.weights = random_tensor(rng, {2, h});
        f.bias = uniform(rng, -1.0, 1.0);
    }
    const Tensor input = random_tensor(rng, {2, len});
    std::vector<Tensor> coeff;
    for (std::size_t i = 0; i < k; ++i) coeff.push_back(random_tensor(rng, {len - h + 1}));

    std::vector<double> params;
    for (const auto& f : filters) {
        params.insert(params.end(), f.weights.values().begin(), f.weights.values().end());
        params.push_back(f.bias);
    }
    params.insert(params.end(), input.values().begin(), input.values().end());

    auto eval = [&](std::span<const double> p) {
        std::vector<Conv1DFilter> fs = filters;
        Tensor in = input;
        std::size_t pos = 0;
        for (auto& f : fs) {
            for (auto& w : f.weights.values()) w = p[pos++];
            f.bias = p[pos++];
        }
        for (auto& v : in.values()) v = p[pos++];
        const auto outs = conv1d_two_row(in, fs, Activation::Sigmoid);
        double loss = 0.0;
        for (std::size_t i = 0; i < outs.size(); ++i) {
            const auto ov = outs[i].values();
            const auto cv = coeff[i].values();
            for (std::size_t j = 0; j < ov.size(); ++j) loss += cv[j] * ov[j];
        }
        return loss;
    };

    const auto outs = conv1d_two_row(input, filters, Activation::Sigmoid);
    const auto grads =
        conv1d_two_row_backward(input, filters, Activation::Sigmoid, outs, coeff);
    std::vector<double> analytic;
    for (std::size_t i = 0; i < filters.size(); ++i) {
        analytic.insert(analytic.end(), grads.weight_grads[i].values().begin(),
                        grads.weight_grads[i].values().end());
        analytic.push_back(grads.bias_grads[i]);
    }
    analytic.insert(analytic.end(), grads.input_grad.values().begin(),
                    grads.input_grad.values().end());

    const auto fd = finite_difference_grad(eval, params);
    record(report, "conv1d[" + std::to_string(trial) + "]", analytic, fd);
}

void check_pool1d(Report& report, std::mt19937_64& rng, std::size_t trial) {
    const std::size_t len = pick(rng, 1, 12);
    const std::size_t window = pick(rng, 1, 4);
    const Tensor input = random_tensor(rng, {len});
    const Tensor coeff = random_tensor(rng, {(len + window - 1) / window});

    auto eval = [&](std::span<const double> p) {
        Tensor in = input;
        std::copy(p.begin(), p.end(), in.values().begin());
        const Tensor out = avg_pool1d(in, window);
        double loss = 0.0;
        const auto ov = out.values();
        const auto cv = coeff.values();
        for (std::size_t j = 0; j < ov.size(); ++j) loss += cv[j] * ov[j];
        return loss;
    };

    const Tensor analytic_t = avg_pool1d_backward(len, window, coeff);
    const auto fd = finite_difference_grad(eval, input.values());
    record(report, "avg_pool1d[" + std::to_string(trial) + "]", analytic_t.values(), fd);
}

void check_dense(Report& report, std::mt19937_64& rng, std::size_t trial) {
    const std::size_t in_dim = pick(rng, 1, 8), out_dim = pick(rng, 1, 5);
    const Activation act = trial % 2 ? Activation::Identity : Activation::Sigmoid;
    DenseLayer layer{random_tensor(rng, {out_dim, in_dim}),
                     random_tensor(rng, {out_dim}), act};
    const Tensor input = random_tensor(rng, {in_dim});
    const Tensor coeff = random_tensor(rng, {out_dim});

    std::vector<double> params(layer.weights.values().begin(), layer.weights.values().end());
    params.insert(params.end(), layer.biases.values().begin(), layer.biases.values().end());
    params.insert(params.end(), input.values().begin(), input.values().end());

    auto eval = [&](std::span<const double> p) {
        DenseLayer l = layer;
        Tensor in = input;
        std::size_t pos = 0;
        for (auto& w : l.weights.values()) w = p[pos++];
        for (auto& b : l.biases.values()) b = p[pos++];
        for (auto& v : in.values()) v = p[pos++];
        const Tensor out = dense_forward(in, l);
        double loss = 0.0;
        const auto ov = out.values();
        const auto cv = coeff.values();
        for (std::size_t j = 0; j < ov.size(); ++j) loss += cv[j] * ov[j];
        return loss;
    };

    const Tensor out = dense_forward(input, layer);
    const DenseGradients grads = dense_backward(input, layer, out, coeff);
    std::vector<double> analytic(grads.weight_grad.values().begin(),
                                 grads.weight_grad.values().end());
    analytic.insert(analytic.end(), grads.bias_grad.values().begin(),
                    grads.bias_grad.values().end());
    analytic.insert(analytic.end(), grads.input_grad.values().begin(),
                    grads.input_grad.values().end());

    const auto fd = finite_difference_grad(eval, params);
    record(report, "dense[" + std::to_string(trial) + "]", analytic, fd);
}

ModelConfig random_model_config(std::mt19937_64& rng, bool balancer) {
    ModelConfig c;
    c.grid_rows = pick(rng, 8, 12);
    c.grid_cols = pick(rng, 8, 12);
    c.loc_filters = pick(rng, 1, 2);
    c.loc_filter_rows = pick(rng, 2, 3);
    c.loc_filter_cols = pick(rng, 2, 3);
    c.loc_pool = pick(rng, 2, 3);
    c.com_filters = pick(rng, 1, 2);
    c.com_filter_width = pick(rng, 3, 5);
    c.com_pool = pick(rng, 2, 3);
    c.fusion_width = pick(rng, 3, 8);
    c.use_balancer = balancer && c.loc_feature_dim() >= c.com_feature_dim();
    c.validate();
    return c;
}

void check_cdcnn(Report& report, std::mt19937_64& rng, std::size_t trial) {
    const ModelConfig config = random_model_config(rng, trial % 2 == 0);
    CDCNNParams params = init_cdcnn(config, rng());
    const Tensor loc = random_tensor(rng, {2, config.grid_rows, config.grid_cols});
    const Tensor com = random_tensor(rng, {2, kHoursPerDay});

    const std::vector<double> flat = flatten(params);
    auto eval = [&](std::span<const double> p) {
        CDCNNParams q = params;
        unflatten(q, p);
        return cdcnn_forward(q, loc, com);
    };

    CDCNNCache cache;
    cdcnn_forward(params, loc, com, &cache);
    const CDCNNParams grads = cdcnn_backward(params, cache, 1.0);
    const auto fd = finite_difference_grad(eval, flat);
    record(report, "cdcnn[" + std::to_string(trial) + "]", flatten(grads), fd);
}

void check_ln(Report& report, std::mt19937_64& rng, std::size_t trial) {
    const ModelConfig config = random_model_config(rng, trial % 2 == 1);
    LNParams params = init_ln(config, rng());
    const Tensor loc = random_tensor(rng, {2, config.grid_rows, config.grid_cols});

    const std::vector<double> flat = flatten(params);
    auto eval = [&](std::span<const double> p) {
        LNParams q = params;
        unflatten(q, p);
        return ln_forward(q, loc);
    };

    LNCache cache;
    ln_forward(params, loc, &cache);
    const LNParams grads = ln_backward(params, cache, 1.0);
    const auto fd = finite_difference_grad(eval, flat);
    record(report, "ln[" + std::to_string(trial) + "]", flatten(grads), fd);
}

void check_cn(Report& report, std::mt19937_64& rng, std::size_t trial) {
    const ModelConfig config = random_model_config(rng, trial % 2 == 0);
    CNParams params = init_cn(config, rng());
    const Tensor com = random_tensor(rng, {2, kHoursPerDay});

    const std::vector<double> flat = flatten(params);
    auto eval = [&](std::span<const double> p) {
        CNParams q = params;
        unflatten(q, p);
        return cn_forward(q, com);
    };

    CNCache cache;
    cn_forward(params, com, &cache);
    const CNParams grads = cn_backward(params, cache, 1.0);
    const auto fd = finite_difference_grad(eval, flat);
    record(report, "cn[" + std::to_string(trial) + "]", flatten(grads), fd);
}

}  // namespace

Report run(std::size_t trials, std::uint64_t seed) {
    if (trials == 0) throw std::invalid_argument("gradcheck: trials must be >= 1");
    Report report;
    for (std::size_t t = 0; t < trials; ++t) {
        std::mt19937_64 rng(mix_seed(seed, t));
        check_conv2d(report, rng, t);
        check_pool2d(report, rng, t);
        check_conv1d(report, rng, t);
        check_pool1d(report, rng, t);
        check_dense(report, rng, t);
        check_cdcnn(report, rng, t);
        check_ln(report, rng, t);
        check_cn(report, rng, t);
    }
    return report;
}

}  // namespace cdcnn::gradcheck
