#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tsa/corpus.hpp"
#include "tsa/encoder.hpp"
#include "tsa/evaluation.hpp"

namespace tsa {

enum class SelectMetric { Targeted, Target };

struct TrainConfig {
    int epochs = 6;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double dropout = 0.5;
    double recurrent_dropout = 0.0;
    std::uint64_t seed = 1;
    double dev_fraction = 0.1;
    int folds = 10;
    double grad_clip = 0.0;   // global-norm bound; 0 disables
    SelectMetric select_metric = SelectMetric::Targeted;
    std::string embeddings;   // word-vector text file; empty for random init
    int threads = 1;          // cross-validation folds trained concurrently
    ModelConfig model;

    void validate() const;

    /// Flat "key = value" lines; '#' starts a comment. Unknown keys are errors.
    static TrainConfig parse(std::string_view text);
    static TrainConfig load(const std::filesystem::path& path);
    void set(const std::string& key, const std::string& value);
    std::string to_string() const;
};

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;            // mean NLL over the epoch's trainable sentences
    double dev_f1_target = 0.0;
    double dev_f1_targeted = 0.0;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    int selected_epoch = 0;
    std::size_t skipped = 0;   // span-free training sentences

    /// "epoch i loss L devF1_target X devF1_sent Y" per epoch, then
    /// "selected_epoch i". Timings are left out so reports stay reproducible.
    std::string lines() const;
};

struct TrainResult {
    Model model;
    TrainReport report;
};

/// logZ(unconstrained) - logZ(clamped) for one sentence. Throws
/// UnsupportedOutput when the instance has no spans.
double nll(Model& model, const Instance& instance, const ForwardOptions& options = {});

/// Same value; also adds d(nll)/d(param) into the model's gradient slots.
double nll_and_gradient(Model& model, const Instance& instance, const ForwardOptions& options = {});

std::vector<SpanLabel> predict(Model& model, const Sentence& sentence);
SpanCorpus predict_all(Model& model, const Dataset& dataset);

class Adam {
public:
    Adam(const Model& model, double learning_rate, double beta1, double beta2, double epsilon);
    explicit Adam(const Model& model, const TrainConfig& config)
        : Adam(model, config.learning_rate, config.beta1, config.beta2, config.epsilon) {}

    void step(Model& model);

private:
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
    std::vector<Eigen::MatrixXd> m_, v_;
};

/// Rescales all gradients so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_gradients(Model& model, double max_norm);

/// Word vectors from config.embeddings, or nullopt (with a warning) when the
/// path is empty or missing. Throws FormatError on a dimension mismatch.
std::optional<EmbeddingTable> pretrained_for(const TrainConfig& config, const Vocabulary& vocab);

/// Trains on `train`, selecting the epoch with the best dev F1. With an empty
/// dev set, selection uses the training set itself.
TrainResult train(const Dataset& train_set, const Dataset& dev_set, const TrainConfig& config);
/// Carves dev_fraction of `dataset` into a dev set first.
TrainResult train(const Dataset& dataset, const TrainConfig& config);

struct CrossValidationResult {
    std::vector<MetricsReport> per_fold;
    std::vector<TrainReport> reports;
    /// Unweighted mean of P/R/F1 across folds; counts are summed.
    MetricsReport mean;
};

CrossValidationResult cross_validate(const Dataset& dataset, const TrainConfig& config);

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::string worst_parameter;
    Eigen::Index worst_index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t checked = 0;
};

/// Central differences over every scalar parameter, eval mode.
/// Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradientCheckResult gradient_check(Model& model, const Instance& instance, double delta);

}  // namespace tsa
