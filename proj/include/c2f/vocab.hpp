#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace c2f {

// Token ids reserved for structural symbols. PAD fills sequences to a fixed
// length, UNK covers out-of-vocabulary words.
enum ReservedToken : int { kPad = 0, kUnk = 1, kCls = 2, kSep = 3 };

struct Vocabulary {
    std::unordered_map<std::string, int> token_to_id;
    std::vector<std::string> id_to_token{"[PAD]", "[UNK]", "[CLS]", "[SEP]"};

    int size() const { return static_cast<int>(id_to_token.size()); }

    int lookup(const std::string& token) const {
        auto it = token_to_id.find(token);
        return it == token_to_id.end() ? kUnk : it->second;
    }

    // Returns the existing id or assigns the next dense one.
    int add(const std::string& token) {
        auto it = token_to_id.find(token);
        if (it != token_to_id.end()) return it->second;
        int id = size();
        token_to_id.emplace(token, id);
        id_to_token.push_back(token);
        return id;
    }
};

struct TokenSequence {
    std::vector<int> ids;      // fixed length, PAD after real_len
    std::size_t real_len = 0;  // count of non-PAD tokens
};

// Lowercases ASCII letters and splits on whitespace and punctuation
// boundaries; each punctuation character is its own token. Bytes >= 0x80 are
// kept inside word tokens so UTF-8 sequences stay intact.
inline std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            words.push_back(cur);
            cur.clear();
        }
    };
    for (unsigned char ch : text) {
        bool word_char = (ch >= 0x80) || (ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'z') ||
                         (ch >= 'A' && ch <= 'Z');
        if (word_char) {
            cur.push_back(ch >= 'A' && ch <= 'Z' ? static_cast<char>(ch - 'A' + 'a')
                                                 : static_cast<char>(ch));
        } else {
            flush();
            if (!std::isspace(ch)) words.push_back(std::string(1, static_cast<char>(ch)));
        }
    }
    flush();
    return words;
}

// Map text to ids, truncate to max_len, pad with PAD. Empty text is legal and
// yields real_len 0.
inline TokenSequence tokenize(const std::string& text, const Vocabulary& vocab,
                              std::size_t max_len) {
    if (max_len < 1) throw std::invalid_argument("tokenize: max_len must be >= 1");
    TokenSequence seq;
    seq.ids.assign(max_len, kPad);
    std::vector<std::string> words = split_words(text);
    seq.real_len = std::min(words.size(), max_len);
    for (std::size_t i = 0; i < seq.real_len; ++i) seq.ids[i] = vocab.lookup(words[i]);
    return seq;
}

// FNV-1a over the serialized token<TAB>id lines; stored in checkpoints so a
// model is never paired with the wrong vocabulary.
inline std::uint64_t vocab_hash(const Vocabulary& vocab) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
    };
    for (int id = 0; id < vocab.size(); ++id) {
        mix(vocab.id_to_token[id]);
        mix("\t" + std::to_string(id) + "\n");
    }
    return h;
}

inline void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write vocabulary file: " + path);
    for (int id = 0; id < vocab.size(); ++id) out << vocab.id_to_token[id] << '\t' << id << '\n';
}

inline Vocabulary load_vocabulary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read vocabulary file: " + path);
    Vocabulary vocab;
    vocab.id_to_token.clear();
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error("vocabulary parse error at line " + std::to_string(line_no));
        std::string token = line.substr(0, tab);
        int id = std::stoi(line.substr(tab + 1));
        if (id != static_cast<int>(vocab.id_to_token.size()))
            throw std::runtime_error("vocabulary ids not dense at line " + std::to_string(line_no));
        vocab.id_to_token.push_back(token);
        if (id >= 4) vocab.token_to_id.emplace(token, id);
    }
    if (vocab.size() < 4) throw std::runtime_error("vocabulary missing reserved tokens: " + path);
    return vocab;
}

}  // namespace c2f
