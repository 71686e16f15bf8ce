// Command-line driver: train, predict, evaluate, xval, selfcheck.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "tsa/corpus.hpp"
#include "tsa/encoder.hpp"
#include "tsa/evaluation.hpp"
#include "tsa/training.hpp"
#include "tsa/verify.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
};

tsa::TrainConfig resolve_config(const Common& c) {
    auto config = c.config_path.empty() ? tsa::TrainConfig{} : tsa::TrainConfig::load(c.config_path);
    for (const auto& kv : c.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw tsa::ArgumentError("--set expects key=value, got '" + kv + "'");
        config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (c.seed) config.seed = *c.seed;
    config.validate();
    return config;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "overrides the config seed");
    cmd->add_option("--set", c.overrides, "config override key=value (repeatable)");
}

int run_train(const Common& c, const std::string& train_file, const std::string& dev_file,
              const std::string& model_out, const std::string& report_out) {
    const auto config = resolve_config(c);
    const auto data = tsa::read_annotation_file(train_file);
    auto result = dev_file.empty()
                      ? tsa::train(data, config)
                      : tsa::train(data, tsa::read_annotation_file(dev_file), config);
    result.model.save(model_out);
    write_text(report_out, result.report.lines());
    spdlog::info("selected epoch {}, model written to {}", result.report.selected_epoch, model_out);
    return kOk;
}

int run_predict(const Common& c, const std::string& model_in, const std::string& input,
                const std::string& output) {
    auto model = tsa::Model::load(model_in);
    if (!c.config_path.empty() || !c.overrides.empty()) {
        const auto config = resolve_config(c);
        if (!(config.model == model.config()))
            throw tsa::FormatError("checkpoint dimensions or ablation differ from the config");
    }
    auto data = tsa::read_annotation_file(input, {.allow_untagged = true});
    for (auto& inst : data.instances) inst.spans = tsa::predict(model, inst.sentence);
    write_text(output, tsa::emit_annotations(data));
    return kOk;
}

int run_evaluate(const std::string& gold_file, const std::string& pred_file, bool porcelain,
                 const std::string& lengths_out) {
    const auto gold = tsa::read_annotation_file(gold_file);
    const auto pred = tsa::read_annotation_file(pred_file);
    if (gold.size() != pred.size())
        throw tsa::ArgumentError("gold has " + std::to_string(gold.size()) +
                                 " sentences, predictions have " + std::to_string(pred.size()));
    for (std::size_t i = 0; i < gold.size(); ++i)
        if (gold.instances[i].sentence.size() != pred.instances[i].sentence.size())
            throw tsa::ArgumentError("sentence " + std::to_string(i + 1) + " differs in length");
    const auto report = tsa::evaluate_all(tsa::gold_spans(pred), tsa::gold_spans(gold));
    std::cout << (porcelain ? report.porcelain() : report.table());
    if (!lengths_out.empty()) write_text(lengths_out, report.length_csv());
    return kOk;
}

int run_xval(const Common& c, const std::string& data_file, const std::string& report_out) {
    const auto config = resolve_config(c);
    const auto data = tsa::read_annotation_file(data_file);
    const auto cv = tsa::cross_validate(data, config);
    std::ostringstream out;
    for (std::size_t f = 0; f < cv.per_fold.size(); ++f) {
        const auto& m = cv.per_fold[f];
        char buf[160];
        std::snprintf(buf, sizeof(buf), "fold %zu target_f1=%.2f targeted_f1=%.2f\n", f + 1,
                      m.target.f1, m.targeted.f1);
        out << buf;
    }
    out << cv.mean.porcelain();
    write_text(report_out, out.str());
    return kOk;
}

int run_selfcheck(std::optional<std::uint64_t> seed, bool corrupt) {
    tsa::SelfCheckOptions opt;
    if (seed) opt.seed = *seed;
    opt.corrupt_transitions = corrupt;
    const auto report = tsa::run_selfcheck(opt, std::cout);
    std::cout << "max_lattice_error=" << report.max_lattice_error << "\n"
              << "max_gradient_error=" << report.max_gradient_error << "\n";
    return report.passed ? kOk : kNumeric;
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_st("tsa"));

    CLI::App app{"Targeted sentiment tagger with latent sentiment scopes"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "only log warnings and errors");

    Common common;
    std::string train_file, dev_file, model_path, report_out, input, output, gold, pred, lengths;
    bool porcelain = false, corrupt = false;

    auto* train = app.add_subcommand("train", "train a model");
    add_common(train, common);
    train->add_option("--train", train_file, "annotated training file")->required();
    train->add_option("--dev", dev_file, "annotated dev file; carved from --train when absent");
    train->add_option("--model", model_path, "checkpoint output")->required();
    train->add_option("--report", report_out, "training report output (default stdout)");

    auto* predict = app.add_subcommand("predict", "tag sentences with a trained model");
    add_common(predict, common);
    predict->add_option("--model", model_path, "checkpoint")->required()->check(CLI::ExistingFile);
    predict->add_option("--input", input, "tokens, optionally tagged")->required();
    predict->add_option("--output", output, "tagged output (default stdout)");

    auto* evaluate = app.add_subcommand("evaluate", "score predictions against gold");
    evaluate->add_option("--gold", gold, "gold annotation file")->required();
    evaluate->add_option("--pred", pred, "predicted annotation file")->required();
    evaluate->add_flag("--porcelain", porcelain, "key=value output");
    evaluate->add_option("--lengths", lengths, "write per-length rows as CSV");

    auto* xval = app.add_subcommand("xval", "k-fold cross-validation");
    add_common(xval, common);
    xval->add_option("--data", input, "annotated data file")->required();
    xval->add_option("--report", report_out, "output (default stdout)");

    auto* selfcheck = app.add_subcommand("selfcheck", "run the numeric oracles");
    selfcheck->add_option("--seed", common.seed, "oracle seed");
    selfcheck->add_flag("--corrupt-transitions", corrupt, "negative control");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }
    spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        if (*train) return run_train(common, train_file, dev_file, model_path, report_out);
        if (*predict) return run_predict(common, model_path, input, output);
        if (*evaluate) return run_evaluate(gold, pred, porcelain, lengths);
        if (*xval) return run_xval(common, input, report_out);
        if (*selfcheck) return run_selfcheck(common.seed, corrupt);
    } catch (const tsa::ContractViolation& e) {
        spdlog::error("{}", e.what());
        return kNumeric;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kData;
    }
    return kUsage;
}
