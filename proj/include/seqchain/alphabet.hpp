#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "errors.hpp"
#include "stateset.hpp"

namespace seqchain {

/// Ordered set of distinct symbol tokens. The index <-> symbol bijection
/// is fixed for the lifetime of the object.
struct Alphabet {
    std::vector<std::string> symbols;

    Alphabet() = default;
    explicit Alphabet(std::vector<std::string> syms) : symbols(std::move(syms)) {
        std::unordered_map<std::string, int> seen;
        for (const auto& s : symbols)
            if (!seen.emplace(s, 1).second)
                throw ParseError("duplicate alphabet symbol '" + s + "'");
        if (symbols.empty()) throw ParseError("alphabet must not be empty");
        if (static_cast<int>(symbols.size()) > kMaxStates)
            throw ParseError("alphabet larger than supported limit");
    }

    int size() const { return static_cast<int>(symbols.size()); }

    int index_of(const std::string& tok) const {
        for (int i = 0; i < size(); ++i)
            if (symbols[i] == tok) return i;
        return -1;
    }

    const std::string& symbol(int i) const { return symbols[i]; }

    bool operator==(const Alphabet& o) const { return symbols == o.symbols; }

    /// Parses a comma-separated token list into a subset.
    StateSet parse_subset(const std::string& list) const {
        StateSet set = 0;
        std::string tok;
        std::istringstream in(list);
        while (std::getline(in, tok, ',')) {
            if (tok.empty()) continue;
            int i = index_of(tok);
            if (i < 0) throw ParseError("unknown symbol '" + tok + "'");
            set |= StateSet{1} << i;
        }
        return set;
    }

    std::string subset_to_string(StateSet set) const {
        std::string out;
        for (int i = 0; i < size(); ++i) {
            if (!set_contains(set, i)) continue;
            if (!out.empty()) out += ',';
            out += symbols[i];
        }
        return out.empty() ? "{}" : out;
    }
};

/// A finite symbol sequence over an alphabet, stored as indices.
/// Needs at least two entries, i.e. at least one transition.
struct ObservedSequence {
    Alphabet alphabet;
    std::vector<int> entries;

    ObservedSequence() = default;
    ObservedSequence(Alphabet a, std::vector<int> e)
        : alphabet(std::move(a)), entries(std::move(e)) {
        if (entries.size() < 2)
            throw ParseError("sequence needs at least two entries");
        for (int v : entries)
            if (v < 0 || v >= alphabet.size())
                throw ParseError("sequence entry out of alphabet range");
    }

    long long transitions() const {
        return static_cast<long long>(entries.size()) - 1;
    }
    int first() const { return entries.front(); }
    int last() const { return entries.back(); }
};

// Sequence file format: whitespace/newline-separated symbol tokens.
// An optional header line `#alphabet: tok1 tok2 ...` declares states up
// front (the only way to represent states the sequence never visits).
// Any other line starting with '#' is a comment. Tokens not covered by
// the header are appended to the alphabet in first-appearance order.
inline ObservedSequence parse_sequence(std::istream& in) {
    std::vector<std::string> declared;
    std::vector<std::string> tokens;
    std::string line;
    bool first_line = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') {
            const std::string key = "#alphabet:";
            if (first_line && line.rfind(key, 0) == 0) {
                std::istringstream ls(line.substr(key.size()));
                std::string tok;
                while (ls >> tok) declared.push_back(tok);
            }
            first_line = false;
            continue;
        }
        first_line = false;
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) tokens.push_back(tok);
    }
    if (tokens.size() < 2) throw ParseError("sequence needs at least two tokens");

    std::vector<std::string> symbols = declared;
    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (!index.emplace(symbols[i], static_cast<int>(i)).second)
            throw ParseError("duplicate declared symbol '" + symbols[i] + "'");
    }
    std::vector<int> entries;
    entries.reserve(tokens.size());
    for (const auto& tok : tokens) {
        auto it = index.find(tok);
        if (it == index.end()) {
            int id = static_cast<int>(symbols.size());
            symbols.push_back(tok);
            it = index.emplace(tok, id).first;
        }
        entries.push_back(it->second);
    }
    return ObservedSequence(Alphabet(symbols), std::move(entries));
}

inline ObservedSequence parse_sequence_text(const std::string& text) {
    std::istringstream in(text);
    return parse_sequence(in);
}

inline ObservedSequence read_sequence_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return parse_sequence(in);
}

inline void write_sequence(std::ostream& out, const ObservedSequence& x) {
    out << "#alphabet:";
    for (const auto& s : x.alphabet.symbols) out << ' ' << s;
    out << '\n';
    for (std::size_t i = 0; i < x.entries.size(); ++i) {
        if (i) out << ((i % 40 == 0) ? '\n' : ' ');
        out << x.alphabet.symbol(x.entries[i]);
    }
    out << '\n';
}

} // namespace seqchain
