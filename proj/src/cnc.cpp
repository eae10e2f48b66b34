#include "cdcnn/cnc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <utility>

namespace cdcnn::cnc {
namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double sample_loss(LossKind kind, double y, double t) {
    if (kind == LossKind::Squared) {
        const double e = y - t;
        return e * e;
    }
    const double yc = std::clamp(y, 1e-12, 1.0 - 1e-12);
    return -(t * std::log(yc) + (1.0 - t) * std::log(1.0 - yc));
}

// d(sample loss)/dy
double sample_loss_grad(LossKind kind, double y, double t) {
    if (kind == LossKind::Squared) return 2.0 * (y - t);
    const double denom = std::max(y * (1.0 - y), 1e-12);
    return (y - t) / denom;
}

double mean_margin(const Selection& sel) {
    if (sel.margins.empty()) return 0.0;
    double s = 0.0;
    for (double m : sel.margins) s += m;
    return s / static_cast<double>(sel.margins.size());
}

}  // namespace

void TrainConfig::validate() const {
    auto require = [](bool ok, const char* msg) {
        if (!ok) throw std::invalid_argument(std::string("TrainConfig: ") + msg);
    };
    require(learning_rate >= 0.0 && std::isfinite(learning_rate),
            "learning_rate must be finite and nonnegative");
    require(l2_lambda >= 0.0 && std::isfinite(l2_lambda),
            "l2_lambda must be finite and nonnegative");
    require(batch_size >= 1, "batch_size must be positive");
    require(convergence_tol >= 0.0 && std::isfinite(convergence_tol),
            "convergence_tol must be finite and nonnegative");
}

UnlabeledPool::UnlabeledPool(std::span<const Sample> samples)
    : samples_(samples), selected_(samples.size(), 0), remaining_(samples.size()) {
    std::iota(remaining_.begin(), remaining_.end(), std::size_t{0});
}

void UnlabeledPool::mark_selected(std::span<const std::size_t> indices) {
    for (std::size_t idx : indices) {
        if (idx >= samples_.size())
            throw std::invalid_argument("pool: sample index out of range");
        if (selected_[idx])
            throw std::invalid_argument("pool: sample already selected");
        selected_[idx] = 1;
    }
    remaining_.erase(std::remove_if(remaining_.begin(), remaining_.end(),
                                    [&](std::size_t i) { return selected_[i] != 0; }),
                     remaining_.end());
}

void TrainLog::enable_timing() { timing_ = true; }

void TrainLog::add(std::string phase, std::string event, nlohmann::json data) {
    LogEvent ev;
    ev.seq = events_.size();
    ev.phase = std::move(phase);
    ev.event = std::move(event);
    if (timing_) {
        const double now = now_seconds();
        if (!started_) {
            start_ = now;
            started_ = true;
        }
        ev.wall_clock_s = now - start_;
    }
    ev.data = std::move(data);
    events_.push_back(std::move(ev));
}

void write_train_log(const TrainLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open train log for writing: " + path);
    for (const auto& ev : log.events()) {
        nlohmann::json j{{"seq", ev.seq},
                         {"phase", ev.phase},
                         {"event", ev.event},
                         {"wall_clock_s", ev.wall_clock_s},
                         {"data", ev.data}};
        out << j.dump() << '\n';
    }
    if (!out) throw std::runtime_error("failed writing train log: " + path);
}

LNNet::LNNet(LNParams& params, std::vector<const Tensor*> inputs,
             std::vector<double> targets)
    : params_(params),
      grads_(zeros_like(params)),
      inputs_(std::move(inputs)),
      targets_(std::move(targets)),
      dim_(param_count(params)) {
    if (inputs_.size() != targets_.size())
        throw std::invalid_argument("LNNet: inputs/targets size mismatch");
}

void LNNet::get_params(std::span<double> out) const { flatten(params_, out); }
void LNNet::set_params(std::span<const double> in) { unflatten(params_, in); }

double LNNet::predict(std::size_t i) {
    cached_ = i;
    return ln_forward(params_, *inputs_[i], &cache_);
}

void LNNet::accumulate_grad(std::size_t i, double upstream) {
    if (cached_ != i)
        throw std::logic_error("LNNet: gradient requested for a stale prediction");
    ln_backward(params_, cache_, upstream, grads_);
}

void LNNet::zero_grad() { set_zero(grads_); }

void LNNet::add_grad_to(std::span<double> out, double scale) const {
    add_scaled(grads_, scale, out);
}

CNNet::CNNet(CNParams& params, std::vector<const Tensor*> inputs,
             std::vector<double> targets)
    : params_(params),
      grads_(zeros_like(params)),
      inputs_(std::move(inputs)),
      targets_(std::move(targets)),
      dim_(param_count(params)) {
    if (inputs_.size() != targets_.size())
        throw std::invalid_argument("CNNet: inputs/targets size mismatch");
}

void CNNet::get_params(std::span<double> out) const { flatten(params_, out); }
void CNNet::set_params(std::span<const double> in) { unflatten(params_, in); }

double CNNet::predict(std::size_t i) {
    cached_ = i;
    return cn_forward(params_, *inputs_[i], &cache_);
}

void CNNet::accumulate_grad(std::size_t i, double upstream) {
    if (cached_ != i)
        throw std::logic_error("CNNet: gradient requested for a stale prediction");
    cn_backward(params_, cache_, upstream, grads_);
}

void CNNet::zero_grad() { set_zero(grads_); }

void CNNet::add_grad_to(std::span<double> out, double scale) const {
    add_scaled(grads_, scale, out);
}

CDCNNNet::CDCNNNet(CDCNNParams& params, std::vector<const Tensor*> loc_inputs,
                   std::vector<const Tensor*> com_inputs, std::vector<double> targets)
    : params_(params),
      grads_(zeros_like(params)),
      loc_inputs_(std::move(loc_inputs)),
      com_inputs_(std::move(com_inputs)),
      targets_(std::move(targets)),
      dim_(param_count(params)) {
    if (loc_inputs_.size() != com_inputs_.size() ||
        loc_inputs_.size() != targets_.size())
        throw std::invalid_argument("CDCNNNet: inputs/targets size mismatch");
}

void CDCNNNet::get_params(std::span<double> out) const { flatten(params_, out); }
void CDCNNNet::set_params(std::span<const double> in) { unflatten(params_, in); }

double CDCNNNet::predict(std::size_t i) {
    cached_ = i;
    return cdcnn_forward(params_, *loc_inputs_[i], *com_inputs_[i], &cache_);
}

void CDCNNNet::accumulate_grad(std::size_t i, double upstream) {
    if (cached_ != i)
        throw std::logic_error("CDCNNNet: gradient requested for a stale prediction");
    cdcnn_backward(params_, cache_, upstream, grads_);
}

void CDCNNNet::zero_grad() { set_zero(grads_); }

void CDCNNNet::add_grad_to(std::span<double> out, double scale) const {
    add_scaled(grads_, scale, out);
}

MinimizeResult minimize(ScalarNet& net, const TrainConfig& config,
                        std::size_t epochs, std::uint64_t shuffle_seed,
                        TrainLog* log, const std::string& phase) {
    config.validate();
    const std::size_t n = net.sample_count();
    if (n == 0) throw std::invalid_argument("minimize: empty sample set");

    const std::size_t dim = net.param_dim();
    std::vector<double> theta(dim), grad(dim);
    net.get_params(theta);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(shuffle_seed);

    MinimizeResult result;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_obj = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t end = std::min(n, start + config.batch_size);
            const double bs = static_cast<double>(end - start);
            net.zero_grad();
            double loss_sum = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t i = order[k];
                const double y = net.predict(i);
                const double t = net.target(i);
                loss_sum += sample_loss(config.loss, y, t);
                net.accumulate_grad(i, sample_loss_grad(config.loss, y, t) / bs);
            }
            double norm2 = 0.0;
            for (double v : theta) norm2 += v * v;
            const double objective = loss_sum / bs + config.l2_lambda * norm2;
            if (!std::isfinite(objective))
                throw std::runtime_error(
                    "minimize: non-finite objective at epoch " +
                    std::to_string(epoch) + ", batch " + std::to_string(batches));

            std::fill(grad.begin(), grad.end(), 0.0);
            net.add_grad_to(grad, 1.0);
            for (std::size_t d = 0; d < dim; ++d)
                grad[d] += 2.0 * config.l2_lambda * theta[d];
            for (std::size_t d = 0; d < dim; ++d)
                theta[d] -= config.learning_rate * grad[d];
            net.set_params(theta);

            epoch_obj += objective;
            ++batches;
        }
        epoch_obj /= static_cast<double>(batches);
        result.epoch_objectives.push_back(epoch_obj);
        if (log)
            log->add(phase, "epoch",
                     {{"epoch", epoch}, {"objective", epoch_obj}});
    }
    result.final_objective = result.epoch_objectives.empty()
                                 ? full_objective(net, config)
                                 : result.epoch_objectives.back();
    return result;
}

double full_objective(ScalarNet& net, const TrainConfig& config) {
    const std::size_t n = net.sample_count();
    if (n == 0) throw std::invalid_argument("full_objective: empty sample set");
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        loss_sum += sample_loss(config.loss, net.predict(i), net.target(i));
    std::vector<double> theta(net.param_dim());
    net.get_params(theta);
    double norm2 = 0.0;
    for (double v : theta) norm2 += v * v;
    return loss_sum / static_cast<double>(n) + config.l2_lambda * norm2;
}

Selection select_confident(std::span<const double> source_outputs,
                           std::span<const double> other_outputs,
                           std::span<const std::size_t> remaining,
                           std::size_t budget, PseudoLabelMode mode) {
    if (source_outputs.size() != remaining.size() ||
        other_outputs.size() != remaining.size())
        throw std::invalid_argument("select_confident: output/index size mismatch");

    struct Entry {
        double margin;
        std::size_t pos;
    };
    std::vector<Entry> entries;
    for (std::size_t pos = 0; pos < remaining.size(); ++pos) {
        const double margin = 2.0 * std::abs(source_outputs[pos] - 0.5) -
                              2.0 * std::abs(other_outputs[pos] - 0.5);
        if (margin > 0.0) entries.push_back({margin, pos});
    }
    std::sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
        if (a.margin != b.margin) return a.margin > b.margin;
        return remaining[a.pos] < remaining[b.pos];
    });
    if (entries.size() > budget) entries.resize(budget);

    Selection sel;
    for (const Entry& e : entries) {
        sel.pool_indices.push_back(remaining[e.pos]);
        const double y = source_outputs[e.pos];
        sel.pseudo_labels.push_back(mode == PseudoLabelMode::Hard
                                        ? (y >= 0.5 ? 1.0 : 0.0)
                                        : y);
        sel.margins.push_back(e.margin);
    }
    return sel;
}

PretrainResult pretrain(std::span<const LabeledSample> labeled,
                        const ModelConfig& model_config, const TrainConfig& config,
                        TrainLog& log) {
    config.validate();
    model_config.validate();
    if (labeled.empty()) throw std::invalid_argument("pretrain: labeled set is empty");

    PretrainResult result{init_ln(model_config, mix_seed(config.seed, 6)),
                          init_cn(model_config, mix_seed(config.seed, 7))};

    std::vector<const Tensor*> locs, coms;
    std::vector<double> targets;
    locs.reserve(labeled.size());
    coms.reserve(labeled.size());
    targets.reserve(labeled.size());
    for (const auto& s : labeled) {
        locs.push_back(&s.loc);
        coms.push_back(&s.com);
        targets.push_back(s.label);
    }

    LNNet ln_net(result.ln, std::move(locs), targets);
    auto ln_run = minimize(ln_net, config, config.pretrain_epochs,
                           mix_seed(config.seed, 1), &log, "pretrain_ln");
    log.add("pretrain_ln", "phase_end", {{"objective", ln_run.final_objective}});

    CNNet cn_net(result.cn, std::move(coms), std::move(targets));
    auto cn_run = minimize(cn_net, config, config.pretrain_epochs,
                           mix_seed(config.seed, 2), &log, "pretrain_cn");
    log.add("pretrain_cn", "phase_end", {{"objective", cn_run.final_objective}});

    return result;
}

CotrainResult cotrain(LNParams ln, CNParams cn, UnlabeledPool& pool,
                      const TrainConfig& config, TrainLog& log) {
    config.validate();
    CotrainResult result{std::move(ln), std::move(cn), 0};
    if (pool.size() == 0) {
        log.add("cotrain", "phase_end", {{"rounds", 0}, {"reason", "empty_pool"}});
        return result;
    }

    std::vector<double> theta_before;
    std::string stop_reason = "max_rounds";
    for (std::size_t round = 1; round <= config.max_rounds; ++round) {
        const std::vector<std::size_t> rem = pool.remaining();
        if (rem.empty()) {
            stop_reason = "pool_exhausted";
            break;
        }

        // Location net scores are valid for the whole round: the location
        // side updates only at the end of it.
        std::vector<double> ln_out(rem.size()), cn_out(rem.size());
        for (std::size_t k = 0; k < rem.size(); ++k) {
            ln_out[k] = ln_forward(result.ln, pool.sample(rem[k]).loc);
            cn_out[k] = cn_forward(result.cn, pool.sample(rem[k]).com);
        }

        Selection to_cn = select_confident(ln_out, cn_out, rem,
                                           config.cotrain_batch,
                                           config.pseudo_label_mode);
        pool.mark_selected(to_cn.pool_indices);
        log.add("cotrain", "select",
                {{"round", round},
                 {"direction", "ln_teaches_cn"},
                 {"count", to_cn.pool_indices.size()},
                 {"mean_margin", mean_margin(to_cn)}});

        double cn_delta = 0.0;
        if (!to_cn.pool_indices.empty()) {
            std::vector<const Tensor*> coms;
            for (std::size_t idx : to_cn.pool_indices)
                coms.push_back(&pool.sample(idx).com);
            theta_before = flatten(result.cn);
            CNNet net(result.cn, std::move(coms), std::move(to_cn.pseudo_labels));
            minimize(net, config, config.cotrain_epochs,
                     mix_seed(config.seed, 8 + 2 * round), nullptr, {});
            cn_delta = l2_distance(theta_before, flatten(result.cn));
        }
        log.add("cotrain", "update",
                {{"round", round}, {"side", "cn"}, {"param_delta", cn_delta}});

        // Second direction scores against the just-updated communication net.
        const std::vector<std::size_t>& rem2 = pool.remaining();
        std::vector<double> cn_out2(rem2.size()), ln_out2(rem2.size());
        {
            std::size_t j = 0;  // rem2 is a subsequence of rem, both ascending
            for (std::size_t k = 0; k < rem2.size(); ++k) {
                cn_out2[k] = cn_forward(result.cn, pool.sample(rem2[k]).com);
                while (rem[j] != rem2[k]) ++j;
                ln_out2[k] = ln_out[j];
            }
        }

        Selection to_ln = select_confident(cn_out2, ln_out2, rem2,
                                           config.cotrain_batch,
                                           config.pseudo_label_mode);
        pool.mark_selected(to_ln.pool_indices);
        log.add("cotrain", "select",
                {{"round", round},
                 {"direction", "cn_teaches_ln"},
                 {"count", to_ln.pool_indices.size()},
                 {"mean_margin", mean_margin(to_ln)}});

        double ln_delta = 0.0;
        if (!to_ln.pool_indices.empty()) {
            std::vector<const Tensor*> locs;
            for (std::size_t idx : to_ln.pool_indices)
                locs.push_back(&pool.sample(idx).loc);
            theta_before = flatten(result.ln);
            LNNet net(result.ln, std::move(locs), std::move(to_ln.pseudo_labels));
            minimize(net, config, config.cotrain_epochs,
                     mix_seed(config.seed, 9 + 2 * round), nullptr, {});
            ln_delta = l2_distance(theta_before, flatten(result.ln));
        }
        log.add("cotrain", "update",
                {{"round", round}, {"side", "ln"}, {"param_delta", ln_delta}});

        ++result.rounds;
        log.add("cotrain", "round_end",
                {{"round", round},
                 {"selected_cn", to_cn.pool_indices.size()},
                 {"selected_ln", to_ln.pool_indices.size()},
                 {"cn_delta", cn_delta},
                 {"ln_delta", ln_delta},
                 {"remaining", pool.remaining().size()}});

        if (to_cn.pool_indices.empty() && to_ln.pool_indices.empty()) {
            stop_reason = "no_positive_margins";
            break;
        }
        if (cn_delta < config.convergence_tol && ln_delta < config.convergence_tol) {
            stop_reason = "converged";
            break;
        }
    }

    log.add("cotrain", "phase_end",
            {{"rounds", result.rounds},
             {"selected_total", pool.selected_count()},
             {"remaining", pool.remaining().size()},
             {"reason", stop_reason}});
    return result;
}

CDCNNParams finetune(const ModelConfig& model_config, const LocationParams& loc,
                     const CommParams& com, std::span<const LabeledSample> labeled,
                     const TrainConfig& config, TrainLog& log) {
    config.validate();
    if (labeled.empty()) throw std::invalid_argument("finetune: labeled set is empty");

    CDCNNParams params =
        assemble_cdcnn(model_config, loc, com, mix_seed(config.seed, 4));

    std::vector<const Tensor*> locs, coms;
    std::vector<double> targets;
    for (const auto& s : labeled) {
        locs.push_back(&s.loc);
        coms.push_back(&s.com);
        targets.push_back(s.label);
    }
    CDCNNNet net(params, std::move(locs), std::move(coms), std::move(targets));
    auto run = minimize(net, config, config.finetune_epochs,
                        mix_seed(config.seed, 5), &log, "finetune");
    log.add("finetune", "phase_end", {{"objective", run.final_objective}});
    return params;
}

TrainFullResult train_full(std::span<const LabeledSample> labeled,
                           std::span<const Sample> pool,
                           const ModelConfig& model_config,
                           const TrainConfig& config, TrainLog& log) {
    PretrainResult pre = pretrain(labeled, model_config, config, log);
    UnlabeledPool unl(pool);
    CotrainResult co = cotrain(pre.ln, pre.cn, unl, config, log);
    CDCNNParams params =
        finetune(model_config, co.ln.loc, co.cn.com, labeled, config, log);
    return {std::move(params), std::move(pre.ln), std::move(pre.cn), co.rounds};
}

}  // namespace cdcnn::cnc
