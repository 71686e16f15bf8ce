#include "tsa/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace tsa {

std::string_view polarity_code(Polarity p) {
    switch (p) {
    case Polarity::Positive: return "POS";
    case Polarity::Negative: return "NEG";
    case Polarity::Neutral: return "NEU";
    }
    return "NEU";
}

std::optional<Polarity> polarity_from_code(std::string_view code) {
    if (code == "POS") return Polarity::Positive;
    if (code == "NEG") return Polarity::Negative;
    if (code == "NEU") return Polarity::Neutral;
    return std::nullopt;
}

std::vector<std::string> utf8_split(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        auto lead = static_cast<unsigned char>(text[i]);
        std::size_t len = 1;
        if (lead >= 0xF0) len = 4;
        else if (lead >= 0xE0) len = 3;
        else if (lead >= 0xC0) len = 2;
        len = std::min(len, text.size() - i);
        out.emplace_back(text.substr(i, len));
        i += len;
    }
    return out;
}

std::string ascii_lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return out;
}

Token::Token(std::string t) : text(std::move(t)), chars(utf8_split(text)) {}

Sentence::Sentence(const std::vector<std::string>& words) {
    tokens.reserve(words.size());
    for (const auto& w : words) tokens.emplace_back(w);
}

void validate_spans(const std::vector<SpanLabel>& spans, std::size_t n) {
    int last_end = 0;
    for (const auto& s : spans) {
        if (s.start < 1 || s.end < s.start || s.end > static_cast<int>(n))
            throw ArgumentError("span (" + std::to_string(s.start) + "," + std::to_string(s.end) +
                                ") out of bounds for length " + std::to_string(n));
        if (s.start <= last_end)
            throw ArgumentError("spans must be sorted and non-overlapping");
        last_end = s.end;
    }
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
    Dataset out;
    out.instances.reserve(indices.size());
    for (auto i : indices) out.instances.push_back(instances.at(i));
    return out;
}

namespace {

struct TagState {
    Dataset dataset;
    std::vector<std::string> words;
    std::vector<SpanLabel> spans;
    bool open = false;

    void flush() {
        if (words.empty()) return;
        dataset.instances.push_back({Sentence(words), std::move(spans)});
        words.clear();
        spans.clear();
        open = false;
    }
};

}  // namespace

Dataset parse_annotations(std::string_view text, ParseOptions options) {
    TagState state;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) {
            state.flush();
            continue;
        }

        std::string_view token = line;
        std::string_view tag = "O";
        auto tab = line.find('\t');
        if (tab == std::string_view::npos) {
            if (!options.allow_untagged) throw ParseError(line_no, "expected token<TAB>tag");
        } else {
            token = line.substr(0, tab);
            tag = line.substr(tab + 1);
            if (tag.find('\t') != std::string_view::npos)
                throw ParseError(line_no, "expected exactly two fields");
        }
        if (token.empty()) throw ParseError(line_no, "empty token");

        const int k = static_cast<int>(state.words.size()) + 1;
        state.words.emplace_back(token);
        if (tag == "O") {
            state.open = false;
            continue;
        }
        if (tag.size() < 3 || tag[1] != '-' || (tag[0] != 'B' && tag[0] != 'I'))
            throw ParseError(line_no, "unknown tag '" + std::string(tag) + "'");
        auto polarity = polarity_from_code(tag.substr(2));
        if (!polarity) throw ParseError(line_no, "unknown polarity in tag '" + std::string(tag) + "'");

        if (tag[0] == 'B') {
            state.spans.push_back({k, k, *polarity});
            state.open = true;
        } else {
            if (!state.open || state.spans.back().polarity != *polarity)
                throw ParseError(line_no, "I- tag without preceding B- of the same polarity");
            state.spans.back().end = k;
        }
    }
    state.flush();
    return std::move(state.dataset);
}

std::vector<std::string> spans_to_tags(const std::vector<SpanLabel>& spans, std::size_t n) {
    std::vector<std::string> tags(n, "O");
    for (const auto& s : spans) {
        auto code = std::string(polarity_code(s.polarity));
        tags.at(s.start - 1) = "B-" + code;
        for (int k = s.start + 1; k <= s.end; ++k) tags.at(k - 1) = "I-" + code;
    }
    return tags;
}

std::string emit_annotations(const Dataset& dataset) {
    std::string out;
    for (const auto& inst : dataset.instances) {
        auto tags = spans_to_tags(inst.spans, inst.sentence.size());
        for (std::size_t i = 0; i < inst.sentence.size(); ++i) {
            out += inst.sentence.tokens[i].text;
            out += '\t';
            out += tags[i];
            out += '\n';
        }
        out += '\n';
    }
    return out;
}

Dataset read_annotation_file(const std::filesystem::path& path, ParseOptions options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_annotations(buffer.str(), options);
}

void write_annotation_file(const std::filesystem::path& path, const Dataset& dataset) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << emit_annotations(dataset);
}

Vocabulary::Vocabulary() {
    add_word(kUnkToken);
    add_char(kUnkToken);
}

Vocabulary Vocabulary::from_dataset(const Dataset& dataset) {
    Vocabulary vocab;
    for (const auto& inst : dataset.instances)
        for (const auto& tok : inst.sentence.tokens) {
            vocab.add_word(tok.text);
            for (const auto& c : tok.chars) vocab.add_char(c);
        }
    return vocab;
}

int Vocabulary::add_word(const std::string& word) {
    auto [it, inserted] = word_index_.emplace(word, static_cast<int>(words_.size()));
    if (inserted) words_.push_back(word);
    return it->second;
}

int Vocabulary::add_char(const std::string& ch) {
    auto [it, inserted] = char_index_.emplace(ch, static_cast<int>(chars_.size()));
    if (inserted) chars_.push_back(ch);
    return it->second;
}

int Vocabulary::word_id(const std::string& word) const {
    if (auto it = word_index_.find(word); it != word_index_.end()) return it->second;
    if (auto it = word_index_.find(ascii_lower(word)); it != word_index_.end()) return it->second;
    return kUnk;
}

int Vocabulary::char_id(const std::string& ch) const {
    auto it = char_index_.find(ch);
    return it == char_index_.end() ? kUnk : it->second;
}

Eigen::MatrixXd random_embeddings(int dim, std::size_t count, std::mt19937_64& rng) {
    const double bound = std::sqrt(3.0 / dim);
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd m(dim, static_cast<Eigen::Index>(count));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
    return m;
}

EmbeddingTable load_embeddings(std::istream& in, const Vocabulary& vocab, std::uint64_t seed) {
    std::unordered_map<std::string, std::vector<double>> file;
    int dim = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream fields(line);
        std::string word;
        if (!(fields >> word)) continue;
        std::vector<double> values;
        std::string field;
        while (fields >> field) {
            try {
                values.push_back(std::stod(field));
            } catch (const std::exception&) {
                throw FormatError("embedding line " + std::to_string(line_no) + ": bad number '" +
                                  field + "'");
            }
        }
        if (values.empty())
            throw FormatError("embedding line " + std::to_string(line_no) + ": no values");
        if (dim == 0) dim = static_cast<int>(values.size());
        if (static_cast<int>(values.size()) != dim)
            throw FormatError("embedding line " + std::to_string(line_no) + ": dimension " +
                              std::to_string(values.size()) + " != " + std::to_string(dim));
        file.emplace(std::move(word), std::move(values));
    }
    if (dim == 0) throw FormatError("embedding file has no entries");

    std::mt19937_64 rng(seed);
    EmbeddingTable table;
    table.dim = dim;
    table.vectors = random_embeddings(dim, vocab.word_count(), rng);
    for (std::size_t id = 1; id < vocab.word_count(); ++id) {
        const auto& w = vocab.words()[id];
        auto it = file.find(w);
        if (it == file.end()) it = file.find(ascii_lower(w));
        if (it == file.end()) continue;
        table.vectors.col(static_cast<Eigen::Index>(id)) =
            Eigen::Map<const Eigen::VectorXd>(it->second.data(), dim);
        ++table.pretrained_hits;
    }
    return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                               std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return load_embeddings(in, vocab, seed);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_dev(
    std::vector<std::size_t> indices, double dev_fraction, std::uint64_t seed) {
    if (dev_fraction < 0.0 || dev_fraction >= 1.0)
        throw ArgumentError("dev_fraction must be in [0, 1)");
    std::mt19937_64 rng(seed);
    std::shuffle(indices.begin(), indices.end(), rng);
    auto dev_size = static_cast<std::size_t>(std::lround(dev_fraction * indices.size()));
    std::vector<std::size_t> dev(indices.begin(), indices.begin() + dev_size);
    std::vector<std::size_t> train(indices.begin() + dev_size, indices.end());
    std::sort(dev.begin(), dev.end());
    std::sort(train.begin(), train.end());
    return {std::move(train), std::move(dev)};
}

std::vector<Fold> make_folds(std::size_t dataset_size, int k, double dev_fraction,
                             std::uint64_t seed) {
    if (k < 2) throw ArgumentError("k must be at least 2");
    if (static_cast<std::size_t>(k) > dataset_size)
        throw ArgumentError("k = " + std::to_string(k) + " exceeds dataset size " +
                            std::to_string(dataset_size));

    std::vector<std::size_t> order(dataset_size);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<Fold> folds(k);
    const std::size_t base = dataset_size / k;
    const std::size_t extra = dataset_size % k;
    std::size_t offset = 0;
    for (int f = 0; f < k; ++f) {
        const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
        std::vector<bool> in_test(dataset_size, false);
        for (std::size_t i = offset; i < offset + size; ++i) {
            folds[f].test.push_back(order[i]);
            in_test[order[i]] = true;
        }
        offset += size;
        std::sort(folds[f].test.begin(), folds[f].test.end());

        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < dataset_size; ++i)
            if (!in_test[i]) rest.push_back(i);
        auto [train, dev] = split_dev(std::move(rest), dev_fraction, seed + 1 + f);
        folds[f].train = std::move(train);
        folds[f].dev = std::move(dev);
    }
    return folds;
}

std::string fold_manifest(const std::vector<Fold>& folds) {
    auto join = [](const std::vector<std::size_t>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ',';
            s += std::to_string(v[i]);
        }
        return s;
    };
    std::string out;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        out += "fold " + std::to_string(f) + "\ttrain " + join(folds[f].train) + "\tdev " +
               join(folds[f].dev) + "\ttest " + join(folds[f].test) + "\n";
    }
    return out;
}

}  // namespace tsa
