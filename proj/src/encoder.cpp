#include "tsa/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace tsa {

std::string_view ablation_name(Ablation a) {
    switch (a) {
    case Ablation::Full: return "full";
    case Ablation::NoAttention: return "no-attention";
    case Ablation::NoBmes: return "no-bmes";
    }
    return "full";
}

Ablation ablation_from_name(std::string_view name) {
    if (name == "full") return Ablation::Full;
    if (name == "no-attention") return Ablation::NoAttention;
    if (name == "no-bmes") return Ablation::NoBmes;
    throw ArgumentError("unknown ablation '" + std::string(name) + "'");
}

std::string_view no_attention_scores_name(NoAttentionScores m) {
    return m == NoAttentionScores::Head ? "head" : "zero";
}

NoAttentionScores no_attention_scores_from_name(std::string_view name) {
    if (name == "head") return NoAttentionScores::Head;
    if (name == "zero") return NoAttentionScores::Zero;
    throw ArgumentError("unknown no_attention_scores mode '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
    if (word_dim < 1 || char_emb_dim < 1 || hidden_dim < 1 || attention_dim < 1 || layers < 1)
        throw ArgumentError("model dimensions must be positive");
    if (char_dim < 2 || char_dim % 2 != 0)
        throw ArgumentError("char_dim must be a positive even number");
}

// ---------------------------------------------------------------------------
// Model

int Model::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    params_.emplace_back(std::move(name), rows, cols);
    return static_cast<int>(params_.size()) - 1;
}

LstmParams Model::add_lstm(const std::string& prefix, int input_size, int hidden_size) {
    LstmParams p;
    p.hidden_size = hidden_size;
    p.input = add(prefix + ".wx", 4 * hidden_size, input_size);
    p.hidden = add(prefix + ".wh", 4 * hidden_size, hidden_size);
    p.bias = add(prefix + ".b", 4 * hidden_size, 1);
    return p;
}

void Model::allocate() {
    config_.validate();
    const auto& c = config_;
    params_.clear();
    params_.reserve(64);
    word_emb = add("word_emb", c.word_dim, static_cast<Eigen::Index>(vocab_.word_count()));
    char_emb = add("char_emb", c.char_emb_dim, static_cast<Eigen::Index>(vocab_.char_count()));
    char_fwd = add_lstm("char.fwd", c.char_emb_dim, c.char_dim / 2);
    char_bwd = add_lstm("char.bwd", c.char_emb_dim, c.char_dim / 2);
    fwd.clear();
    bwd.clear();
    for (int l = 0; l < c.layers; ++l) {
        const int in = l == 0 ? c.embedding_dim() : 2 * c.hidden_dim;
        fwd.push_back(add_lstm("lstm" + std::to_string(l) + ".fwd", in, c.hidden_dim));
        bwd.push_back(add_lstm("lstm" + std::to_string(l) + ".bwd", in, c.hidden_dim));
    }
    if (c.uses_attention()) {
        att_w = add("att.w", c.attention_dim, 2 * c.embedding_dim());
        att_b = add("att.b", c.attention_dim, 1);
        att_u = add("att.u", c.attention_dim, 1);
    }
    ft_w = add("f_t.w", c.target_head_width(), 2 * c.hidden_dim);
    ft_b = add("f_t.b", c.target_head_width(), 1);
    fs_w = add("f_s.w", kNumPolarities, 2 * c.hidden_dim);
    fs_b = add("f_s.b", kNumPolarities, 1);
    if (c.has_span_head()) {
        const int in = c.uses_attention() ? c.embedding_dim() : 2 * c.hidden_dim;
        gs_w = add("g_s.w", kNumPolarities, in);
        gs_b = add("g_s.b", kNumPolarities, 1);
    }
}

Model::Model(ModelConfig config, Vocabulary vocab, std::mt19937_64& rng,
             const EmbeddingTable* pretrained)
    : config_(config), vocab_(std::move(vocab)) {
    allocate();

    auto xavier = [&](int index) {
        auto& m = params_[index].value;
        const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
    };

    if (pretrained) {
        if (pretrained->dim != config_.word_dim)
            throw ArgumentError("pretrained embedding dimension " + std::to_string(pretrained->dim) +
                                " != word_dim " + std::to_string(config_.word_dim));
        if (pretrained->vectors.cols() != static_cast<Eigen::Index>(vocab_.word_count()))
            throw ArgumentError("pretrained table does not match the vocabulary");
        params_[word_emb].value = pretrained->vectors;
    } else {
        params_[word_emb].value =
            random_embeddings(config_.word_dim, vocab_.word_count(), rng);
    }
    params_[char_emb].value = random_embeddings(config_.char_emb_dim, vocab_.char_count(), rng);

    for (int i = 0; i < static_cast<int>(params_.size()); ++i) {
        if (i == word_emb || i == char_emb || params_[i].value.cols() == 1) continue;
        xavier(i);
    }
    // U is a single column but is a weight, not a bias.
    if (att_u >= 0) xavier(att_u);
}

const Parameter* Model::find(std::string_view name) const {
    for (const auto& p : params_)
        if (p.name == name) return &p;
    return nullptr;
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.size());
    return n;
}

void Model::zero_grad() {
    for (auto& p : params_) p.grad.setZero();
}

namespace {

constexpr char kMagic[8] = {'T', 'S', 'A', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t kVersion = 1;

nlohmann::json config_json(const ModelConfig& c) {
    return {{"word_dim", c.word_dim},
            {"char_emb_dim", c.char_emb_dim},
            {"char_dim", c.char_dim},
            {"hidden_dim", c.hidden_dim},
            {"attention_dim", c.attention_dim},
            {"layers", c.layers},
            {"ablation", std::string(ablation_name(c.ablation))},
            {"no_attention_scores", std::string(no_attention_scores_name(c.no_attention_scores))}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.word_dim = j.at("word_dim");
    c.char_emb_dim = j.at("char_emb_dim");
    c.char_dim = j.at("char_dim");
    c.hidden_dim = j.at("hidden_dim");
    c.attention_dim = j.at("attention_dim");
    c.layers = j.at("layers");
    c.ablation = ablation_from_name(j.at("ablation").get<std::string>());
    c.no_attention_scores =
        no_attention_scores_from_name(j.at("no_attention_scores").get<std::string>());
    return c;
}

template <class T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw FormatError("truncated checkpoint");
    return v;
}

}  // namespace

void Model::save(std::ostream& out) const {
    nlohmann::json header;
    header["config"] = config_json(config_);
    header["words"] = vocab_.words();
    header["chars"] = vocab_.chars();
    auto& plist = header["params"] = nlohmann::json::array();
    for (const auto& p : params_)
        plist.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
    const std::string text = header.dump();

    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint64_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& p : params_)
        out.write(reinterpret_cast<const char*>(p.value.data()),
                  static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    if (!out) throw std::runtime_error("failed to write checkpoint");
}

Model Model::load(std::istream& in) {
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw FormatError("not a model checkpoint");
    if (read_pod<std::uint32_t>(in) != kVersion) throw FormatError("unsupported checkpoint version");
    const auto len = read_pod<std::uint64_t>(in);
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) throw FormatError("truncated checkpoint header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad checkpoint header: ") + e.what());
    }

    Model m;
    m.config_ = config_from_json(header.at("config"));
    const auto words = header.at("words").get<std::vector<std::string>>();
    const auto chars = header.at("chars").get<std::vector<std::string>>();
    if (words.empty() || words[0] != Vocabulary::kUnkToken || chars.empty() ||
        chars[0] != Vocabulary::kUnkToken)
        throw FormatError("checkpoint vocabulary lacks the UNK entry");
    for (std::size_t i = 1; i < words.size(); ++i) m.vocab_.add_word(words[i]);
    for (std::size_t i = 1; i < chars.size(); ++i) m.vocab_.add_char(chars[i]);
    m.allocate();

    const auto& plist = header.at("params");
    if (plist.size() != m.params_.size()) throw FormatError("checkpoint parameter count mismatch");
    for (std::size_t i = 0; i < plist.size(); ++i) {
        auto& p = m.params_[i];
        if (plist[i].at("name") != p.name || plist[i].at("rows") != p.value.rows() ||
            plist[i].at("cols") != p.value.cols())
            throw FormatError("checkpoint parameter '" + p.name + "' has unexpected shape");
        in.read(reinterpret_cast<char*>(p.value.data()),
                static_cast<std::streamsize>(p.value.size() * sizeof(double)));
        if (!in) throw FormatError("truncated checkpoint data");
    }
    return m;
}

void Model::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    save(out);
}

Model Model::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return load(in);
}

// ---------------------------------------------------------------------------
// Forward pass

Var lstm_step(Tape& tape, Model& model, const LstmParams& p, Var x, Var h_prev, Var c_prev,
              Var& c_out) {
    const int hs = p.hidden_size;
    Var gates = tape.affine(model.param(p.input), x, &model.param(p.bias));
    if (h_prev.valid()) gates = tape.add(gates, tape.affine(model.param(p.hidden), h_prev));
    Var in_gate = tape.sigmoid(tape.slice(gates, 0, hs));
    Var forget = tape.sigmoid(tape.slice(gates, hs, hs));
    Var out_gate = tape.sigmoid(tape.slice(gates, 2 * hs, hs));
    Var cand = tape.tanh(tape.slice(gates, 3 * hs, hs));
    Var c = tape.mul(in_gate, cand);
    if (c_prev.valid()) c = tape.add(c, tape.mul(forget, c_prev));
    c_out = c;
    return tape.mul(out_gate, tape.tanh(c));
}

std::vector<Var> lstm_run(Tape& tape, Model& model, const LstmParams& p, std::span<const Var> xs) {
    std::vector<Var> hs;
    hs.reserve(xs.size());
    Var h, c;
    for (Var x : xs) {
        Var c_next;
        h = lstm_step(tape, model, p, x, h, c, c_next);
        c = c_next;
        hs.push_back(h);
    }
    return hs;
}

Var char_encode(Tape& tape, Model& model, const Token& token) {
    std::vector<Var> xs;
    xs.reserve(token.chars.size());
    for (const auto& ch : token.chars)
        xs.push_back(tape.lookup(model.param(model.char_emb), model.vocab().char_id(ch)));
    auto fwd = lstm_run(tape, model, model.char_fwd, xs);
    std::vector<Var> rev(xs.rbegin(), xs.rend());
    auto bwd = lstm_run(tape, model, model.char_bwd, rev);
    const Var ends[] = {fwd.back(), bwd.back()};
    return tape.concat(ends);
}

std::vector<Var> embed(Tape& tape, Model& model, const Sentence& sentence) {
    std::vector<Var> out;
    out.reserve(sentence.size());
    for (const auto& tok : sentence.tokens) {
        const Var parts[] = {
            tape.lookup(model.param(model.word_emb), model.vocab().word_id(tok.text)),
            char_encode(tape, model, tok)};
        out.push_back(tape.concat(parts));
    }
    return out;
}

std::vector<Var> encode_context(Tape& tape, Model& model, std::span<const Var> embeddings,
                                const ForwardOptions& options) {
    const bool drop = options.train && options.rng;
    std::vector<Var> xs;
    xs.reserve(embeddings.size());
    for (Var e : embeddings)
        xs.push_back(drop ? tape.dropout(e, options.dropout, *options.rng) : e);

    const auto layers = model.fwd.size();
    for (std::size_t l = 0; l < layers; ++l) {
        auto f = lstm_run(tape, model, model.fwd[l], xs);
        std::vector<Var> rev(xs.rbegin(), xs.rend());
        auto b = lstm_run(tape, model, model.bwd[l], rev);
        std::reverse(b.begin(), b.end());
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const Var halves[] = {f[k], b[k]};
            xs[k] = tape.concat(halves);
            if (drop && l + 1 < layers)
                xs[k] = tape.dropout(xs[k], options.recurrent_dropout, *options.rng);
        }
    }
    return xs;
}

AttentionStates self_attend(Tape& tape, Model& model, std::span<const Var> embeddings) {
    if (model.att_w < 0) throw ContractViolation("model has no attention parameters");
    auto& w = model.param(model.att_w);
    auto& b = model.param(model.att_b);
    auto& u = model.param(model.att_u);
    const auto dim = static_cast<Eigen::Index>(model.config().embedding_dim());
    const auto n = embeddings.size();

    // W [e_k; e_j] + b = (W_left e_k + b) + W_right e_j
    std::vector<Var> left(n), right(n);
    for (std::size_t k = 0; k < n; ++k) {
        left[k] = tape.add(tape.matvec_cols(w, 0, embeddings[k]), tape.lookup(b, 0));
        right[k] = tape.matvec_cols(w, dim, embeddings[k]);
    }

    AttentionStates out;
    std::vector<Var> row(n);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < n; ++j)
            row[j] = tape.dot(u, tape.relu(tape.add(left[k], right[j])));
        Var beta = tape.concat(row);
        Var alpha = tape.softmax(beta);
        out.scores.push_back(beta);
        out.weights.push_back(alpha);
        out.output.push_back(tape.weighted_sum(alpha, embeddings));
    }
    return out;
}

HeadOutputs apply_heads(Tape& tape, Model& model, std::span<const Var> context,
                        const AttentionStates* attention, const ForwardOptions& options) {
    const bool drop = options.train && options.rng;
    HeadOutputs out;
    for (std::size_t k = 0; k < context.size(); ++k) {
        Var h = drop ? tape.dropout(context[k], options.dropout, *options.rng) : context[k];
        out.target.push_back(tape.affine(model.param(model.ft_w), h, &model.param(model.ft_b)));
        out.sentiment.push_back(tape.affine(model.param(model.fs_w), h, &model.param(model.fs_b)));
        if (model.gs_w >= 0) {
            Var src = attention ? attention->output.at(k) : h;
            out.span.push_back(tape.affine(model.param(model.gs_w), src, &model.param(model.gs_b)));
        }
    }
    return out;
}

PositionScores PositionScores::zeros_like(const PositionScores& other) {
    PositionScores z;
    for (const auto& v : other.target) z.target.push_back(Eigen::VectorXd::Zero(v.size()));
    for (const auto& v : other.sentiment) z.sentiment.push_back(Eigen::VectorXd::Zero(v.size()));
    for (const auto& v : other.span) z.span.push_back(Eigen::VectorXd::Zero(v.size()));
    return z;
}

PositionScores head_values(const Tape& tape, const HeadOutputs& heads) {
    PositionScores s;
    for (Var v : heads.target) s.target.push_back(tape.value(v));
    for (Var v : heads.sentiment) s.sentiment.push_back(tape.value(v));
    for (Var v : heads.span) s.span.push_back(tape.value(v));
    return s;
}

namespace {

/// Where an edge's score comes from: up to two (head, position, index) terms.
struct ScoreTerms {
    enum Head { Target, Sentiment, Span };
    struct Term {
        Head head;
        std::size_t pos;
        Eigen::Index index;
    };
    Term terms[2];
    int count = 0;
};

ScoreTerms edge_terms(const Lattice& lattice, const Edge& edge, const PositionScores& s) {
    const auto& src = lattice.nodes()[edge.source];
    const auto k = static_cast<std::size_t>(src.position - 1);
    if (k >= s.length()) throw ContractViolation("edge position beyond the scored positions");
    const auto p = static_cast<Eigen::Index>(src.tag.polarity);
    const Eigen::Index sub = s.target[k].size() == 1 ? 0 : static_cast<Eigen::Index>(src.tag.sub);
    const bool has_span = !s.span.empty();

    ScoreTerms t;
    auto push = [&](ScoreTerms::Head h, Eigen::Index idx) { t.terms[t.count++] = {h, k, idx}; };
    switch (edge.rule) {
    case EdgeRule::TargetCont: push(ScoreTerms::Target, sub); break;
    case EdgeRule::TargetEnd:
        push(ScoreTerms::Target, sub);
        if (has_span) push(ScoreTerms::Span, p);
        break;
    case EdgeRule::SentBB:
    case EdgeRule::SentAA:
    case EdgeRule::SentAB: push(ScoreTerms::Sentiment, p); break;
    case EdgeRule::AttnBegin:
        if (has_span) push(ScoreTerms::Span, p);
        break;
    }
    return t;
}

template <class PS>
auto& head_vector(PS& s, ScoreTerms::Head h, std::size_t pos) {
    if (h == ScoreTerms::Target) return s.target[pos];
    if (h == ScoreTerms::Sentiment) return s.sentiment[pos];
    return s.span[pos];
}

}  // namespace

EdgeScores score_edges(const Lattice& lattice, const PositionScores& scores) {
    EdgeScores out;
    out.values.reserve(lattice.edges().size());
    for (const auto& edge : lattice.edges()) {
        auto t = edge_terms(lattice, edge, scores);
        double v = 0.0;
        for (int i = 0; i < t.count; ++i)
            v += head_vector(scores, t.terms[i].head, t.terms[i].pos)(t.terms[i].index);
        out.values.push_back(v);
    }
    return out;
}

void score_edges_backward(const Lattice& lattice, std::span<const double> edge_weights,
                          PositionScores& grads) {
    const auto& edges = lattice.edges();
    if (edge_weights.size() != edges.size())
        throw ContractViolation("edge weight count does not match the lattice");
    for (std::size_t e = 0; e < edges.size(); ++e) {
        auto t = edge_terms(lattice, edges[e], grads);
        for (int i = 0; i < t.count; ++i)
            head_vector(grads, t.terms[i].head, t.terms[i].pos)(t.terms[i].index) += edge_weights[e];
    }
}

SentenceGraph run_encoder(Model& model, const Sentence& sentence, const ForwardOptions& options) {
    if (sentence.size() == 0) throw ArgumentError("empty sentence");
    SentenceGraph g;
    g.embeddings = embed(g.tape, model, sentence);
    g.context = encode_context(g.tape, model, g.embeddings, options);
    const AttentionStates* att = nullptr;
    if (model.config().uses_attention()) {
        g.attention = self_attend(g.tape, model, g.embeddings);
        att = &g.attention;
    }
    g.heads = apply_heads(g.tape, model, g.context, att, options);
    g.scores = head_values(g.tape, g.heads);
    return g;
}

void backpropagate(SentenceGraph& graph, const PositionScores& grads) {
    auto seed = [&](const std::vector<Var>& vars, const std::vector<Eigen::VectorXd>& gs) {
        for (std::size_t k = 0; k < vars.size() && k < gs.size(); ++k) graph.tape.grad(vars[k]) += gs[k];
    };
    seed(graph.heads.target, grads.target);
    seed(graph.heads.sentiment, grads.sentiment);
    seed(graph.heads.span, grads.span);
    graph.tape.backward();
}

}  // namespace tsa
