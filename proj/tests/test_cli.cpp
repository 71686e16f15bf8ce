#include <doctest.h>

#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "fixtures.hpp"
#include "tsa/corpus.hpp"

namespace fs = std::filesystem;
using namespace tsa;

namespace {

const std::string kCli = TSA_CLI_PATH;

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("tsa_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args, const std::string& stdout_file = "/dev/null",
        const std::string& stderr_file = "/dev/null") {
    const std::string cmd = kCli + " " + args + " >" + stdout_file + " 2>" + stderr_file;
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

const std::string kOverfitSets =
    "--set epochs=50 --set learning_rate=0.01 --set dropout=0 --set word_dim=8 --set char_emb_dim=4 "
    "--set char_dim=4 --set hidden_dim=8 --set attention_dim=8";

}  // namespace

TEST_CASE("cli: train writes a checkpoint and a deterministic report") {
    TempDir dir;
    write(dir / "train.txt", emit_annotations(fixtures::overfit_corpus()));
    const std::string base = "-q train --train " + dir / "train.txt" + " --dev " + dir / "train.txt" +
                             " --set epochs=3 --set word_dim=4 --set hidden_dim=4 --seed 5";
    REQUIRE(run(base + " --model " + dir / "a.model" + " --report " + dir / "a.report") == 0);
    REQUIRE(run(base + " --model " + dir / "b.model" + " --report " + dir / "b.report") == 0);
    CHECK(fs::exists(dir / "a.model"));
    const auto report = slurp(dir / "a.report");
    std::istringstream lines(report);
    int epochs = 0;
    for (std::string line; std::getline(lines, line);) epochs += line.rfind("epoch ", 0) == 0;
    CHECK(epochs == 3);
    CHECK(report == slurp(dir / "b.report"));
    CHECK(slurp(dir / "a.model") == slurp(dir / "b.model"));
}

TEST_CASE("cli: predict after overfitting reproduces gold and evaluates to 100") {
    TempDir dir;
    const auto data = fixtures::overfit_corpus();
    write(dir / "train.txt", emit_annotations(data));
    REQUIRE(run("-q train --train " + dir / "train.txt" + " --dev " + dir / "train.txt" + " --seed 7 " +
                kOverfitSets + " --model " + dir / "m.model") == 0);

    std::string tokens;
    for (const auto& inst : data.instances) {
        for (const auto& t : inst.sentence.tokens) tokens += t.text + "\n";
        tokens += "\n";
    }
    write(dir / "tokens.txt", tokens);
    REQUIRE(run("-q predict --model " + dir / "m.model" + " --input " + dir / "tokens.txt" + " --output " +
                dir / "pred.txt") == 0);
    const auto pred = read_annotation_file(dir / "pred.txt");
    CHECK(pred == data);

    REQUIRE(run("evaluate --porcelain --gold " + dir / "train.txt" + " --pred " + dir / "pred.txt" +
                    " --lengths " + dir / "len.csv",
                dir / "eval.txt") == 0);
    std::istringstream in(slurp(dir / "eval.txt"));
    std::map<std::string, std::string> kv;
    for (std::string line; std::getline(in, line);) {
        const auto eq = line.find('=');
        REQUIRE(eq != std::string::npos);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    for (const char* key : {"target_f1", "targeted_f1", "partial_target_f1", "partial_targeted_f1",
                            "subjectivity_f1"})
        CHECK(kv.at(key) == "100.00");
    CHECK(fs::exists(dir / "len.csv"));

    write(dir / "empty.txt", "");
    REQUIRE(run("-q predict --model " + dir / "m.model" + " --input " + dir / "empty.txt" + " --output " +
                dir / "empty.out") == 0);
    CHECK(slurp(dir / "empty.out").empty());

    CHECK(run("-q predict --model " + dir / "m.model" + " --input " + dir / "tokens.txt" +
              " --set hidden_dim=3") == 2);
}

TEST_CASE("cli: evaluate rejects misaligned files") {
    TempDir dir;
    auto data = fixtures::overfit_corpus();
    write(dir / "gold.txt", emit_annotations(data));
    data.instances.pop_back();
    write(dir / "short.txt", emit_annotations(data));
    CHECK(run("evaluate --gold " + dir / "gold.txt" + " --pred " + dir / "short.txt") == 2);
    CHECK(run("evaluate --gold " + dir / "missing.txt" + " --pred " + dir / "short.txt") == 2);
}

TEST_CASE("cli: selfcheck and its negative control") {
    TempDir dir;
    CHECK(run("selfcheck", dir / "out.txt") == 0);
    CHECK(slurp(dir / "out.txt").find("max_lattice_error=") != std::string::npos);
    CHECK(run("selfcheck --corrupt-transitions") == 3);
}

TEST_CASE("cli: missing embeddings warn, usage errors exit 1") {
    TempDir dir;
    write(dir / "train.txt", emit_annotations(fixtures::overfit_corpus()));
    CHECK(run("train --train " + dir / "train.txt" + " --model " + dir / "m.model" +
                  " --set epochs=1 --set embeddings=" + dir / "nope.vec",
              "/dev/null", dir / "err.txt") == 0);
    CHECK(slurp(dir / "err.txt").find("warn") != std::string::npos);

    CHECK(run("train --model " + dir / "m.model") == 1);
    CHECK(run("frobnicate") == 1);
    CHECK(run("train --train " + dir / "train.txt" + " --model " + dir / "m.model" + " --set bogus=1") == 2);
}
