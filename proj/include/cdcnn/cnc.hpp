#ifndef CDCNN_CNC_HPP
#define CDCNN_CNC_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cdcnn/model.hpp"
#include "cdcnn/tensor.hpp"

#include "json.hpp"

namespace cdcnn::cnc {

enum class PseudoLabelMode { Continuous, Hard };
enum class LossKind { Squared, CrossEntropy };

struct TrainConfig {
    double learning_rate = 0.75;
    double l2_lambda = 1e-6;
    std::size_t batch_size = 32;
    std::size_t pretrain_epochs = 600;
    std::size_t finetune_epochs = 60;
    std::size_t cotrain_epochs = 5;     // optimizer epochs per co-training update
    std::size_t cotrain_batch = 2048;   // unlabeled samples selected per round per direction
    std::size_t max_rounds = 2;
    double convergence_tol = 1e-7;
    PseudoLabelMode pseudo_label_mode = PseudoLabelMode::Continuous;
    LossKind loss = LossKind::Squared;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

struct Sample {
    Tensor loc;  // {2, I, J}
    Tensor com;  // {2, 24}

    bool operator==(const Sample&) const = default;
};

struct LabeledSample {
    Tensor loc;
    Tensor com;
    double label = 0.0;  // 1 = migrant

    bool operator==(const LabeledSample&) const = default;
};

/// Unlabeled samples with selection bookkeeping; each sample is selectable
/// at most once, and selected + remaining always partition the pool. Holds a
/// view: the underlying samples must outlive the pool.
class UnlabeledPool {
  public:
    UnlabeledPool() = default;
    explicit UnlabeledPool(std::span<const Sample> samples);

    std::size_t size() const { return samples_.size(); }
    std::size_t selected_count() const { return size() - remaining_.size(); }
    const std::vector<std::size_t>& remaining() const { return remaining_; }
    const Sample& sample(std::size_t index) const { return samples_[index]; }
    bool is_selected(std::size_t index) const { return selected_[index] != 0; }

    /// Throws if any index is out of range or already selected.
    void mark_selected(std::span<const std::size_t> indices);

  private:
    std::span<const Sample> samples_;
    std::vector<char> selected_;
    std::vector<std::size_t> remaining_;  // ascending
};

struct LogEvent {
    std::size_t seq = 0;
    std::string phase;
    std::string event;
    double wall_clock_s = 0.0;  // stays 0 unless timing is enabled
    nlohmann::json data;
};

/// Append-only training trace with monotone sequence numbers. Wall-clock
/// stamps are recorded only when timing is enabled, so logs from identical
/// runs are reproducible by default.
class TrainLog {
  public:
    void enable_timing();
    void add(std::string phase, std::string event, nlohmann::json data = {});
    const std::vector<LogEvent>& events() const { return events_; }
    bool timing_enabled() const { return timing_; }

  private:
    std::vector<LogEvent> events_;
    bool timing_ = false;
    double start_ = 0.0;  // seconds since steady-clock epoch, set on first event
    bool started_ = false;
};

void write_train_log(const TrainLog& log, const std::string& path);

/// A parametric scalar predictor over an indexed sample set: the abstraction
/// the optimizer trains. accumulate_grad(i, u) must be called right after
/// predict(i); it adds u * d predict(i) / d params to the internal
/// accumulator.
class ScalarNet {
  public:
    virtual ~ScalarNet() = default;
    virtual std::size_t param_dim() const = 0;
    virtual void get_params(std::span<double> out) const = 0;
    virtual void set_params(std::span<const double> in) = 0;
    virtual std::size_t sample_count() const = 0;
    virtual double target(std::size_t i) const = 0;
    virtual double predict(std::size_t i) = 0;
    virtual void accumulate_grad(std::size_t i, double upstream) = 0;
    virtual void zero_grad() = 0;
    virtual void add_grad_to(std::span<double> out, double scale) const = 0;
};

class LNNet : public ScalarNet {
  public:
    LNNet(LNParams& params, std::vector<const Tensor*> inputs,
          std::vector<double> targets);
    std::size_t param_dim() const override { return dim_; }
    void get_params(std::span<double> out) const override;
    void set_params(std::span<const double> in) override;
    std::size_t sample_count() const override { return inputs_.size(); }
    double target(std::size_t i) const override { return targets_[i]; }
    double predict(std::size_t i) override;
    void accumulate_grad(std::size_t i, double upstream) override;
    void zero_grad() override;
    void add_grad_to(std::span<double> out, double scale) const override;

  private:
    LNParams& params_;
    LNParams grads_;
    std::vector<const Tensor*> inputs_;
    std::vector<double> targets_;
    std::size_t dim_;
    LNCache cache_;
    std::size_t cached_ = SIZE_MAX;
};

class CNNet : public ScalarNet {
  public:
    CNNet(CNParams& params, std::vector<const Tensor*> inputs,
          std::vector<double> targets);
    std::size_t param_dim() const override { return dim_; }
    void get_params(std::span<double> out) const override;
    void set_params(std::span<const double> in) override;
    std::size_t sample_count() const override { return inputs_.size(); }
    double target(std::size_t i) const override { return targets_[i]; }
    double predict(std::size_t i) override;
    void accumulate_grad(std::size_t i, double upstream) override;
    void zero_grad() override;
    void add_grad_to(std::span<double> out, double scale) const override;

  private:
    CNParams& params_;
    CNParams grads_;
    std::vector<const Tensor*> inputs_;
    std::vector<double> targets_;
    std::size_t dim_;
    CNCache cache_;
    std::size_t cached_ = SIZE_MAX;
};

class CDCNNNet : public ScalarNet {
  public:
    CDCNNNet(CDCNNParams& params, std::vector<const Tensor*> loc_inputs,
             std::vector<const Tensor*> com_inputs, std::vector<double> targets);
    std::size_t param_dim() const override { return dim_; }
    void get_params(std::span<double> out) const override;
    void set_params(std::span<const double> in) override;
    std::size_t sample_count() const override { return loc_inputs_.size(); }
    double target(std::size_t i) const override { return targets_[i]; }
    double predict(std::size_t i) override;
    void accumulate_grad(std::size_t i, double upstream) override;
    void zero_grad() override;
    void add_grad_to(std::span<double> out, double scale) const override;

  private:
    CDCNNParams& params_;
    CDCNNParams grads_;
    std::vector<const Tensor*> loc_inputs_;
    std::vector<const Tensor*> com_inputs_;
    std::vector<double> targets_;
    std::size_t dim_;
    CDCNNCache cache_;
    std::size_t cached_ = SIZE_MAX;
};

struct MinimizeResult {
    double final_objective = 0.0;  // mean over the last epoch's batches
    std::vector<double> epoch_objectives;
};

/// Mini-batch gradient descent on mean prediction loss + l2_lambda * ||theta||^2.
/// Deterministic for a fixed shuffle_seed. Throws on an empty sample set and
/// on a non-finite batch objective (the message names the batch).
MinimizeResult minimize(ScalarNet& net, const TrainConfig& config,
                        std::size_t epochs, std::uint64_t shuffle_seed,
                        TrainLog* log = nullptr, const std::string& phase = {});

/// Mean prediction loss + l2_lambda * ||theta||^2 over all samples, without
/// updating anything.
double full_objective(ScalarNet& net, const TrainConfig& config);

struct Selection {
    std::vector<std::size_t> pool_indices;
    std::vector<double> pseudo_labels;
    std::vector<double> margins;
};

/// Confidence is 2*|output - 0.5|. Ranks `remaining` by the margin
/// confidence(source) - confidence(other), descending, and returns up to
/// budget entries with strictly positive margin; pseudo-labels come from the
/// source model's outputs. Ties break toward the lower pool index.
Selection select_confident(std::span<const double> source_outputs,
                           std::span<const double> other_outputs,
                           std::span<const std::size_t> remaining,
                           std::size_t budget, PseudoLabelMode mode);

struct PretrainResult {
    LNParams ln;
    CNParams cn;
};

/// Trains the two single-domain predictors independently on the labeled set.
PretrainResult pretrain(std::span<const LabeledSample> labeled,
                        const ModelConfig& model_config, const TrainConfig& config,
                        TrainLog& log);

struct CotrainResult {
    LNParams ln;
    CNParams cn;
    std::size_t rounds = 0;
};

/// Alternating cross-domain rounds: select by location-over-communication
/// margin and update the communication net on location pseudo-labels, then
/// select by the updated communication net's margin and update the location
/// net. Stops on pool exhaustion, max_rounds, an empty round, or both
/// parameter-change norms falling below convergence_tol.
CotrainResult cotrain(LNParams ln, CNParams cn, UnlabeledPool& pool,
                      const TrainConfig& config, TrainLog& log);

/// Full-network supervised pass. The output subnetwork is freshly
/// initialized; the domain sides start from the given (co-trained) values.
CDCNNParams finetune(const ModelConfig& model_config, const LocationParams& loc,
                     const CommParams& com, std::span<const LabeledSample> labeled,
                     const TrainConfig& config, TrainLog& log);

struct TrainFullResult {
    CDCNNParams params;
    LNParams ln;  // pretrained single-domain predictors (pre-co-training)
    CNParams cn;
    std::size_t rounds = 0;
};

/// pretrain -> cotrain -> finetune.
TrainFullResult train_full(std::span<const LabeledSample> labeled,
                           std::span<const Sample> pool,
                           const ModelConfig& model_config,
                           const TrainConfig& config, TrainLog& log);

}  // namespace cdcnn::cnc

#endif
