#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tsa/corpus.hpp"
#include "tsa/inference.hpp"
#include "tsa/lattice.hpp"
#include "tsa/tape.hpp"

namespace tsa {

enum class Ablation {
    Full,          // EI
    NoAttention,   // EI-: self-attention removed
    NoBmes,        // E-I: one shared target score for all BMES sub-tags
};

/// What replaces g_s(a_k) when attention is removed.
enum class NoAttentionScores {
    Head,   // g_s applied to h_k
    Zero,   // those edge scores are 0
};

std::string_view ablation_name(Ablation a);
Ablation ablation_from_name(std::string_view name);
std::string_view no_attention_scores_name(NoAttentionScores m);
NoAttentionScores no_attention_scores_from_name(std::string_view name);

struct ModelConfig {
    int word_dim = 100;       // d_w
    int char_emb_dim = 25;
    int char_dim = 50;        // d_c, two directions of char_dim / 2
    int hidden_dim = 500;     // d_h per direction
    int attention_dim = 300;  // d_a
    int layers = 2;
    Ablation ablation = Ablation::Full;
    NoAttentionScores no_attention_scores = NoAttentionScores::Head;

    int embedding_dim() const { return word_dim + char_dim; }
    bool uses_attention() const { return ablation != Ablation::NoAttention; }
    bool has_span_head() const {
        return uses_attention() || no_attention_scores == NoAttentionScores::Head;
    }
    int target_head_width() const { return ablation == Ablation::NoBmes ? 1 : kNumSubTags; }

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

struct LstmParams {
    int input = -1;    // 4H x In
    int hidden = -1;   // 4H x H
    int bias = -1;     // 4H
    int hidden_size = 0;
};

/// All learnable state of one model plus the vocabulary it was built for.
/// Parameters live in one vector in a fixed order; role fields are indices.
class Model {
public:
    Model() = default;
    /// Xavier-uniform weights, zero biases, word vectors from `pretrained`
    /// when given (its dim must equal word_dim) and ±sqrt(3/d) otherwise.
    Model(ModelConfig config, Vocabulary vocab, std::mt19937_64& rng,
          const EmbeddingTable* pretrained = nullptr);

    const ModelConfig& config() const { return config_; }
    const Vocabulary& vocab() const { return vocab_; }

    std::vector<Parameter>& params() { return params_; }
    const std::vector<Parameter>& params() const { return params_; }
    Parameter& param(int index) { return params_.at(index); }
    const Parameter* find(std::string_view name) const;

    std::size_t parameter_count() const;
    void zero_grad();

    void save(const std::filesystem::path& path) const;
    static Model load(const std::filesystem::path& path);
    void save(std::ostream& out) const;
    static Model load(std::istream& in);

    int word_emb = -1, char_emb = -1;
    LstmParams char_fwd, char_bwd;
    std::vector<LstmParams> fwd, bwd;   // per layer
    int att_w = -1, att_b = -1, att_u = -1;
    int ft_w = -1, ft_b = -1, fs_w = -1, fs_b = -1, gs_w = -1, gs_b = -1;

private:
    int add(std::string name, Eigen::Index rows, Eigen::Index cols);
    LstmParams add_lstm(const std::string& prefix, int input_size, int hidden_size);
    void allocate();

    ModelConfig config_;
    Vocabulary vocab_;
    std::vector<Parameter> params_;
};

struct ForwardOptions {
    bool train = false;
    double dropout = 0.0;             // on e_k before the recurrence and h_k before the heads
    double recurrent_dropout = 0.0;   // between recurrent layers
    std::mt19937_64* rng = nullptr;   // required when train && a rate > 0
};

struct AttentionStates {
    std::vector<Var> output;   // a_k
    std::vector<Var> weights;  // α_{k,·}
    std::vector<Var> scores;   // β_{k,·}
};

struct HeadOutputs {
    std::vector<Var> target;      // f_t(h_k)
    std::vector<Var> sentiment;   // f_s(h_k)
    std::vector<Var> span;        // g_s(a_k) or g_s(h_k); empty when absent
};

/// Numeric head values per position (index k-1).
struct PositionScores {
    std::vector<Eigen::VectorXd> target;
    std::vector<Eigen::VectorXd> sentiment;
    std::vector<Eigen::VectorXd> span;

    static PositionScores zeros_like(const PositionScores& other);
    std::size_t length() const { return target.size(); }
};

Var lstm_step(Tape& tape, Model& model, const LstmParams& p, Var x, Var h_prev, Var c_prev,
              Var& c_out);
/// Hidden states of one direction over xs (in the given order).
std::vector<Var> lstm_run(Tape& tape, Model& model, const LstmParams& p, std::span<const Var> xs);

/// e_k = [w_k; c_k]
std::vector<Var> embed(Tape& tape, Model& model, const Sentence& sentence);
Var char_encode(Tape& tape, Model& model, const Token& token);

std::vector<Var> encode_context(Tape& tape, Model& model, std::span<const Var> embeddings,
                                const ForwardOptions& options = {});

AttentionStates self_attend(Tape& tape, Model& model, std::span<const Var> embeddings);

HeadOutputs apply_heads(Tape& tape, Model& model, std::span<const Var> context,
                        const AttentionStates* attention, const ForwardOptions& options = {});

PositionScores head_values(const Tape& tape, const HeadOutputs& heads);

/// φ_x(e) for every lattice edge from per-position head values.
EdgeScores score_edges(const Lattice& lattice, const PositionScores& scores);

/// Adjoint of score_edges: adds Σ_e weight_e ∂φ(e)/∂(head value) into `grads`.
void score_edges_backward(const Lattice& lattice, std::span<const double> edge_weights,
                          PositionScores& grads);

/// Whole-sentence forward pass up to the head outputs.
struct SentenceGraph {
    Tape tape;
    std::vector<Var> embeddings;
    std::vector<Var> context;
    AttentionStates attention;
    HeadOutputs heads;
    PositionScores scores;
};

SentenceGraph run_encoder(Model& model, const Sentence& sentence, const ForwardOptions& options);

/// Pushes position-score gradients into the tape and back-propagates into
/// the model's parameter gradient slots.
void backpropagate(SentenceGraph& graph, const PositionScores& grads);

}  // namespace tsa
