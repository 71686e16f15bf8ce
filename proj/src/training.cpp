#include "tsa/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "tsa/inference.hpp"
#include "tsa/lattice.hpp"

namespace tsa {

// ---------------------------------------------------------------- config

void TrainConfig::validate() const {
    if (epochs < 1) throw ArgumentError("epochs must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ArgumentError("dropout must be in [0, 1)");
    if (!(recurrent_dropout >= 0.0 && recurrent_dropout < 1.0))
        throw ArgumentError("recurrent_dropout must be in [0, 1)");
    if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ArgumentError("beta1 and beta2 must be in [0, 1)");
    if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be positive");
    if (!(dev_fraction >= 0.0 && dev_fraction < 1.0))
        throw ArgumentError("dev_fraction must be in [0, 1)");
    if (folds < 2) throw ArgumentError("folds must be >= 2");
    if (grad_clip < 0.0) throw ArgumentError("grad_clip must be >= 0");
    if (threads < 1) throw ArgumentError("threads must be >= 1");
    model.validate();
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    T out{};
    in >> out;
    if (!in || !(in >> std::ws).eof())
        throw ArgumentError("config key '" + key + "': cannot parse '" + value + "'");
    return out;
}

}  // namespace

void TrainConfig::set(const std::string& key, const std::string& value) {
    auto num = [&](auto& field) { field = parse_number<std::decay_t<decltype(field)>>(key, value); };
    if (key == "epochs") num(epochs);
    else if (key == "learning_rate") num(learning_rate);
    else if (key == "beta1") num(beta1);
    else if (key == "beta2") num(beta2);
    else if (key == "epsilon") num(epsilon);
    else if (key == "dropout") num(dropout);
    else if (key == "recurrent_dropout") num(recurrent_dropout);
    else if (key == "seed") num(seed);
    else if (key == "dev_fraction") num(dev_fraction);
    else if (key == "folds") num(folds);
    else if (key == "grad_clip") num(grad_clip);
    else if (key == "threads") num(threads);
    else if (key == "embeddings") embeddings = value;
    else if (key == "word_dim") num(model.word_dim);
    else if (key == "char_dim") num(model.char_dim);
    else if (key == "char_emb_dim") num(model.char_emb_dim);
    else if (key == "hidden_dim") num(model.hidden_dim);
    else if (key == "attention_dim") num(model.attention_dim);
    else if (key == "layers") num(model.layers);
    else if (key == "ablation") model.ablation = ablation_from_name(value);
    else if (key == "no_attention_scores")
        model.no_attention_scores = no_attention_scores_from_name(value);
    else if (key == "select_metric") {
        if (value == "targeted") select_metric = SelectMetric::Targeted;
        else if (value == "target") select_metric = SelectMetric::Target;
        else throw ArgumentError("select_metric must be 'targeted' or 'target'");
    } else {
        throw ArgumentError("unknown config key '" + key + "'");
    }
}

TrainConfig TrainConfig::parse(std::string_view text) {
    TrainConfig c;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ParseError(lineno, "expected key = value");
        const auto key = trim(std::string_view(body).substr(0, eq));
        const auto value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) throw ParseError(lineno, "empty key");
        try {
            c.set(key, value);
        } catch (const ArgumentError& e) {
            throw ParseError(lineno, e.what());
        }
    }
    c.validate();
    return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string TrainConfig::to_string() const {
    std::ostringstream out;
    out.precision(17);
    out << "epochs = " << epochs << "\n"
        << "learning_rate = " << learning_rate << "\n"
        << "beta1 = " << beta1 << "\n"
        << "beta2 = " << beta2 << "\n"
        << "epsilon = " << epsilon << "\n"
        << "dropout = " << dropout << "\n"
        << "recurrent_dropout = " << recurrent_dropout << "\n"
        << "seed = " << seed << "\n"
        << "dev_fraction = " << dev_fraction << "\n"
        << "folds = " << folds << "\n"
        << "grad_clip = " << grad_clip << "\n"
        << "select_metric = " << (select_metric == SelectMetric::Targeted ? "targeted" : "target")
        << "\n"
        << "threads = " << threads << "\n"
        << "word_dim = " << model.word_dim << "\n"
        << "char_dim = " << model.char_dim << "\n"
        << "char_emb_dim = " << model.char_emb_dim << "\n"
        << "hidden_dim = " << model.hidden_dim << "\n"
        << "attention_dim = " << model.attention_dim << "\n"
        << "layers = " << model.layers << "\n"
        << "ablation = " << ablation_name(model.ablation) << "\n"
        << "no_attention_scores = " << no_attention_scores_name(model.no_attention_scores) << "\n";
    if (!embeddings.empty()) out << "embeddings = " << embeddings << "\n";
    return out.str();
}

std::string TrainReport::lines() const {
    std::string out;
    char buf[160];
    for (const auto& e : epochs) {
        std::snprintf(buf, sizeof(buf), "epoch %d loss %.6f devF1_target %.2f devF1_sent %.2f\n",
                      e.epoch, e.loss, e.dev_f1_target, e.dev_f1_targeted);
        out += buf;
    }
    out += "selected_epoch " + std::to_string(selected_epoch) + "\n";
    return out;
}

// ---------------------------------------------------------------- objective

namespace {

const Lattice& unconstrained_lattice(int n) {
    thread_local std::map<int, Lattice> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, build_unconstrained(n)).first;
    return it->second;
}

double objective(Model& model, const Instance& instance, const ForwardOptions& options,
                 bool with_gradient) {
    if (instance.spans.empty()) throw UnsupportedOutput("instance has no target spans");
    const int n = static_cast<int>(instance.sentence.size());
    validate_spans(instance.spans, instance.sentence.size());

    auto graph = run_encoder(model, instance.sentence, options);
    const auto& full = unconstrained_lattice(n);
    const auto gold = build_clamped(n, instance.spans);
    const auto full_m = marginals(full, score_edges(full, graph.scores));
    const auto gold_m = marginals(gold, score_edges(gold, graph.scores));
    const double loss = full_m.log_partition - gold_m.log_partition;
    if (!with_gradient) return loss;

    // d(logZ)/d(edge score) is that edge's marginal.
    auto grads = PositionScores::zeros_like(graph.scores);
    score_edges_backward(full, full_m.edge_marginals, grads);
    std::vector<double> neg(gold_m.edge_marginals.size());
    std::transform(gold_m.edge_marginals.begin(), gold_m.edge_marginals.end(), neg.begin(),
                   [](double m) { return -m; });
    score_edges_backward(gold, neg, grads);
    backpropagate(graph, grads);
    return loss;
}

}  // namespace

double nll(Model& model, const Instance& instance, const ForwardOptions& options) {
    return objective(model, instance, options, false);
}

double nll_and_gradient(Model& model, const Instance& instance, const ForwardOptions& options) {
    return objective(model, instance, options, true);
}

std::vector<SpanLabel> predict(Model& model, const Sentence& sentence) {
    if (sentence.size() == 0) return {};
    auto graph = run_encoder(model, sentence, {});
    const auto& lattice = unconstrained_lattice(static_cast<int>(sentence.size()));
    const auto best = viterbi(lattice, score_edges(lattice, graph.scores));
    return decode_spans(path_nodes(lattice, best.path));
}

SpanCorpus predict_all(Model& model, const Dataset& dataset) {
    SpanCorpus out;
    out.reserve(dataset.size());
    for (const auto& inst : dataset.instances) out.push_back(predict(model, inst.sentence));
    return out;
}

// ---------------------------------------------------------------- optimizer

Adam::Adam(const Model& model, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), b1_(beta1), b2_(beta2), eps_(epsilon) {
    for (const auto& p : model.params()) {
        m_.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
        v_.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
    }
}

void Adam::step(Model& model) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    auto& params = model.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& g = params[i].grad;
        m_[i] = b1_ * m_[i] + (1.0 - b1_) * g;
        v_[i] = b2_ * v_[i] + (1.0 - b2_) * g.cwiseProduct(g);
        params[i].value.array() -=
            lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
    }
}

double clip_gradients(Model& model, double max_norm) {
    double sq = 0.0;
    for (const auto& p : model.params()) sq += p.grad.squaredNorm();
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double f = max_norm / norm;
        for (auto& p : model.params()) p.grad *= f;
    }
    return norm;
}

// ---------------------------------------------------------------- training loop

std::optional<EmbeddingTable> pretrained_for(const TrainConfig& config, const Vocabulary& vocab) {
    if (config.embeddings.empty()) return std::nullopt;
    if (!std::filesystem::exists(config.embeddings)) {
        spdlog::warn("embedding file '{}' not found; using random word vectors", config.embeddings);
        return std::nullopt;
    }
    auto table = load_embeddings(config.embeddings, vocab, config.seed);
    if (table.dim != config.model.word_dim)
        throw FormatError("embedding file has dimension " + std::to_string(table.dim) +
                          " but word_dim is " + std::to_string(config.model.word_dim));
    spdlog::info("loaded {} pretrained word vectors", table.pretrained_hits);
    return table;
}

namespace {

// Independent streams per purpose, all fixed by the run seed.
std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

}  // namespace

TrainResult train(const Dataset& train_set, const Dataset& dev_set, const TrainConfig& config) {
    config.validate();
    std::vector<std::size_t> trainable;
    for (std::size_t i = 0; i < train_set.size(); ++i)
        if (!train_set.instances[i].spans.empty()) trainable.push_back(i);
    TrainReport report;
    report.skipped = train_set.size() - trainable.size();
    if (trainable.empty()) throw ArgumentError("no training sentence contains a target span");
    if (report.skipped > 0)
        spdlog::info("skipping {} training sentences without targets", report.skipped);

    const auto vocab = Vocabulary::from_dataset(train_set);
    const auto pretrained = pretrained_for(config, vocab);
    auto init_rng = derived_rng(config.seed, 0);
    auto shuffle_rng = derived_rng(config.seed, 1);
    auto dropout_rng = derived_rng(config.seed, 2);

    Model model(config.model, vocab, init_rng, pretrained ? &*pretrained : nullptr);
    Adam adam(model, config);
    const Dataset& selection = dev_set.empty() ? train_set : dev_set;
    const auto selection_gold = gold_spans(selection);

    ForwardOptions opts;
    opts.train = true;
    opts.dropout = config.dropout;
    opts.recurrent_dropout = config.recurrent_dropout;
    opts.rng = &dropout_rng;

    Model best = model;
    double best_f1 = -1.0;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(trainable.begin(), trainable.end(), shuffle_rng);
        double total = 0.0;
        for (auto idx : trainable) {
            model.zero_grad();
            const double loss = nll_and_gradient(model, train_set.instances[idx], opts);
            if (!std::isfinite(loss))
                throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch));
            total += loss;
            if (config.grad_clip > 0.0) clip_gradients(model, config.grad_clip);
            adam.step(model);
        }
        model.zero_grad();

        const auto preds = predict_all(model, selection);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = total / static_cast<double>(trainable.size());
        rec.dev_f1_target = exact_prf(preds, selection_gold, MatchMode::Target).f1;
        rec.dev_f1_targeted = exact_prf(preds, selection_gold, MatchMode::Targeted).f1;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.epochs.push_back(rec);
        spdlog::info("epoch {} loss {:.6f} devF1_target {:.2f} devF1_sent {:.2f} ({:.1f}s)", epoch,
                     rec.loss, rec.dev_f1_target, rec.dev_f1_targeted, rec.seconds);

        const double f1 = config.select_metric == SelectMetric::Targeted ? rec.dev_f1_targeted
                                                                         : rec.dev_f1_target;
        if (f1 > best_f1) {
            best_f1 = f1;
            best = model;
            report.selected_epoch = epoch;
        }
    }
    return {std::move(best), std::move(report)};
}

TrainResult train(const Dataset& dataset, const TrainConfig& config) {
    std::vector<std::size_t> all(dataset.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    auto [tr, dev] = split_dev(std::move(all), config.dev_fraction, config.seed);
    return train(dataset.subset(tr), dataset.subset(dev), config);
}

// ---------------------------------------------------------------- cross-validation

namespace {

void add_scaled(PRF& acc, const PRF& x, double w) {
    acc.precision += w * x.precision;
    acc.recall += w * x.recall;
    acc.f1 += w * x.f1;
    acc.matched += x.matched;
    acc.predicted += x.predicted;
    acc.gold += x.gold;
}

MetricsReport mean_report(const std::vector<MetricsReport>& folds) {
    MetricsReport m;
    const double w = 1.0 / static_cast<double>(folds.size());
    for (const auto& f : folds) {
        add_scaled(m.target, f.target, w);
        add_scaled(m.targeted, f.targeted, w);
        add_scaled(m.partial_target, f.partial_target, w);
        add_scaled(m.partial_targeted, f.partial_targeted, w);
        add_scaled(m.subjectivity, f.subjectivity, w);
        add_scaled(m.nonneutral, f.nonneutral, w);
        for (int b = 0; b < kLengthBuckets; ++b) add_scaled(m.by_length[b], f.by_length[b], w);
    }
    return m;
}

}  // namespace

CrossValidationResult cross_validate(const Dataset& dataset, const TrainConfig& config) {
    config.validate();
    const auto folds = make_folds(dataset.size(), config.folds, config.dev_fraction, config.seed);
    CrossValidationResult result;
    result.per_fold.resize(folds.size());
    result.reports.resize(folds.size());

    auto run_fold = [&](std::size_t f) {
        TrainConfig fc = config;
        fc.seed = config.seed + 7919 * (f + 1);
        auto trained = train(dataset.subset(folds[f].train), dataset.subset(folds[f].dev), fc);
        const auto test = dataset.subset(folds[f].test);
        result.per_fold[f] = evaluate_all(predict_all(trained.model, test), gold_spans(test));
        result.reports[f] = std::move(trained.report);
        spdlog::info("fold {} targeted F1 {:.2f}", f + 1, result.per_fold[f].targeted.f1);
    };

    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config.threads), folds.size());
    if (workers <= 1) {
        for (std::size_t f = 0; f < folds.size(); ++f) run_fold(f);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t f; (f = next++) < folds.size();) {
                    try {
                        run_fold(f);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }
    result.mean = mean_report(result.per_fold);
    return result;
}

// ---------------------------------------------------------------- gradient check

GradientCheckResult gradient_check(Model& model, const Instance& instance, double delta) {
    model.zero_grad();
    nll_and_gradient(model, instance, {});
    std::vector<Eigen::MatrixXd> analytic;
    for (const auto& p : model.params()) analytic.push_back(p.grad);
    model.zero_grad();

    GradientCheckResult r;
    for (std::size_t i = 0; i < model.params().size(); ++i) {
        auto& p = model.params()[i];
        for (Eigen::Index j = 0; j < p.value.size(); ++j) {
            double& x = p.value.data()[j];
            const double saved = x;
            x = saved + delta;
            const double up = nll(model, instance, {});
            x = saved - delta;
            const double down = nll(model, instance, {});
            x = saved;
            const double num = (up - down) / (2.0 * delta);
            const double ana = analytic[i].data()[j];
            const double rel =
                std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), 1e-6});
            ++r.checked;
            if (rel > r.max_relative_error || r.worst_index < 0) {
                r.max_relative_error = std::max(rel, r.max_relative_error);
                r.worst_parameter = p.name;
                r.worst_index = j;
                r.analytic = ana;
                r.numeric = num;
            }
        }
    }
    return r;
}

}  // namespace tsa
