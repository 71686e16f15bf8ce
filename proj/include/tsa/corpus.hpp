#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace tsa {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class FormatError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class ArgumentError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class Polarity : std::uint8_t { Positive = 0, Negative = 1, Neutral = 2 };

inline constexpr int kNumPolarities = 3;

std::string_view polarity_code(Polarity p);   // "POS" / "NEG" / "NEU"
std::optional<Polarity> polarity_from_code(std::string_view code);

struct Token {
    std::string text;
    std::vector<std::string> chars;   // UTF-8 code points

    explicit Token(std::string t);
    bool operator==(const Token& other) const { return text == other.text; }
};

struct Sentence {
    std::vector<Token> tokens;

    Sentence() = default;
    explicit Sentence(const std::vector<std::string>& words);

    std::size_t size() const { return tokens.size(); }
    bool operator==(const Sentence&) const = default;
};

/// One target: 1-based inclusive token range plus its polarity.
struct SpanLabel {
    int start = 1;
    int end = 1;
    Polarity polarity = Polarity::Neutral;

    int length() const { return end - start + 1; }
    auto operator<=>(const SpanLabel&) const = default;
};

/// Throws ArgumentError unless spans are in bounds, sorted and non-overlapping.
void validate_spans(const std::vector<SpanLabel>& spans, std::size_t n);

struct Instance {
    Sentence sentence;
    std::vector<SpanLabel> spans;

    bool operator==(const Instance&) const = default;
};

struct Dataset {
    std::vector<Instance> instances;

    std::size_t size() const { return instances.size(); }
    bool empty() const { return instances.empty(); }
    bool operator==(const Dataset&) const = default;

    Dataset subset(const std::vector<std::size_t>& indices) const;
};

struct ParseOptions {
    // Accept token-only lines and read them as tagged O.
    bool allow_untagged = false;
};

/// Reads token<TAB>tag lines with blank-line sentence separators.
Dataset parse_annotations(std::string_view text, ParseOptions options = {});
std::string emit_annotations(const Dataset& dataset);

Dataset read_annotation_file(const std::filesystem::path& path, ParseOptions options = {});
void write_annotation_file(const std::filesystem::path& path, const Dataset& dataset);

std::vector<std::string> spans_to_tags(const std::vector<SpanLabel>& spans, std::size_t n);

std::vector<std::string> utf8_split(std::string_view text);
std::string ascii_lower(std::string_view text);

class Vocabulary {
public:
    static constexpr int kUnk = 0;
    static inline const std::string kUnkToken = "<UNK>";

    Vocabulary();

    static Vocabulary from_dataset(const Dataset& dataset);

    int add_word(const std::string& word);
    int add_char(const std::string& ch);

    // Exact match, then lowercase, then UNK.
    int word_id(const std::string& word) const;
    int char_id(const std::string& ch) const;

    std::size_t word_count() const { return words_.size(); }
    std::size_t char_count() const { return chars_.size(); }
    const std::vector<std::string>& words() const { return words_; }
    const std::vector<std::string>& chars() const { return chars_; }

    bool operator==(const Vocabulary& other) const {
        return words_ == other.words_ && chars_ == other.chars_;
    }

private:
    std::vector<std::string> words_;
    std::vector<std::string> chars_;
    std::unordered_map<std::string, int> word_index_;
    std::unordered_map<std::string, int> char_index_;
};

/// Column k holds the vector for vocabulary id k.
struct EmbeddingTable {
    int dim = 0;
    Eigen::MatrixXd vectors;
    std::size_t pretrained_hits = 0;
};

/// Uniform in ±sqrt(3/dim), drawn column by column.
Eigen::MatrixXd random_embeddings(int dim, std::size_t count, std::mt19937_64& rng);

/// Vocabulary words found in the file take its vector; the rest (UNK included)
/// are drawn from random_embeddings with the given seed.
EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                               std::uint64_t seed);
EmbeddingTable load_embeddings(std::istream& in, const Vocabulary& vocab, std::uint64_t seed);

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> dev;
    std::vector<std::size_t> test;
};

std::vector<Fold> make_folds(std::size_t dataset_size, int k, double dev_fraction,
                             std::uint64_t seed);

/// Splits indices [0, size) into (train, dev) with round(dev_fraction * size) dev items.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_dev(
    std::vector<std::size_t> indices, double dev_fraction, std::uint64_t seed);

std::string fold_manifest(const std::vector<Fold>& folds);

}  // namespace tsa
