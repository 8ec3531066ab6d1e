#pragma once

// Okapi BM25 passage index: ingestion, scoring, top-k search, persistence.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ragctl/error.hpp"

namespace ragctl {

struct Passage {
    std::string id;
    std::string title;
    std::string text;

    bool operator==(const Passage&) const = default;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct RetrievedPassage {
    Passage passage;
    double score = 0.0;
    std::size_t rank = 0;  // 1-based
};

/// Lowercases ASCII and splits on every character that is not an ASCII
/// letter or digit. Bytes >= 0x80 count as word characters so UTF-8 words
/// stay whole.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> terms;
    std::string current;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        const bool word = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                          (c >= 'A' && c <= 'Z') || c >= 0x80;
        if (word) {
            current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
        } else if (!current.empty()) {
            terms.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) terms.push_back(std::move(current));
    return terms;
}

/// Unique terms in first-occurrence order.
inline std::vector<std::string> unique_terms(std::span<const std::string> terms) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& t : terms) {
        if (seen.insert(t).second) out.push_back(t);
    }
    return out;
}

struct Posting {
    std::uint32_t ordinal;
    std::uint32_t tf;
};

class PassageIndex {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    /// Builds the inverted index. Passages keep their input order as ordinals.
    static PassageIndex build(std::vector<Passage> corpus, Bm25Params params = {}) {
        if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no passages");
        PassageIndex idx;
        idx.params_ = params;
        idx.passages_ = std::move(corpus);
        std::unordered_set<std::string_view> ids;
        for (const auto& p : idx.passages_) {
            if (!ids.insert(p.id).second) throw Error(ErrorCode::DuplicateId, p.id);
            if (p.text.empty()) throw Error(ErrorCode::ParseError, "passage " + p.id + " has empty text");
        }
        idx.doc_lengths_.reserve(idx.passages_.size());
        for (std::size_t ord = 0; ord < idx.passages_.size(); ++ord) {
            const auto terms = tokenize(idx.passages_[ord].text);
            idx.doc_lengths_.push_back(static_cast<std::uint32_t>(terms.size()));
            std::unordered_map<std::string, std::uint32_t> tf;
            std::vector<std::string> order;
            for (const auto& t : terms) {
                if (tf[t]++ == 0) order.push_back(t);
            }
            for (const auto& t : order) {
                idx.postings_for(t).push_back({static_cast<std::uint32_t>(ord), tf[t]});
            }
        }
        idx.finish();
        return idx;
    }

    std::size_t doc_count() const { return passages_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    const Bm25Params& params() const { return params_; }
    std::size_t term_count() const { return terms_.size(); }
    const Passage& passage(std::size_t ordinal) const { return passages_.at(ordinal); }
    std::uint32_t doc_length(std::size_t ordinal) const { return doc_lengths_.at(ordinal); }
    const std::vector<std::uint32_t>& doc_lengths() const { return doc_lengths_; }

    std::span<const Posting> postings(const std::string& term) const {
        auto it = term_ids_.find(term);
        if (it == term_ids_.end()) return {};
        return postings_[it->second];
    }

    std::size_t document_frequency(const std::string& term) const { return postings(term).size(); }

    /// ln((N - df + 0.5) / (df + 0.5) + 1); never negative.
    double idf(const std::string& term) const {
        const double n = static_cast<double>(doc_count());
        const double df = static_cast<double>(document_frequency(term));
        return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
    }

    std::uint32_t term_frequency(const std::string& term, std::size_t ordinal) const {
        auto list = postings(term);
        auto it = std::lower_bound(list.begin(), list.end(), ordinal,
                                   [](const Posting& p, std::size_t o) { return p.ordinal < o; });
        return (it != list.end() && it->ordinal == ordinal) ? it->tf : 0;
    }

    /// BM25 score of one passage. Query terms are deduplicated first.
    double score(std::span<const std::string> query_terms, std::size_t ordinal) const {
        if (ordinal >= doc_count()) {
            throw Error(ErrorCode::OrdinalOutOfRange, std::to_string(ordinal));
        }
        double total = 0.0;
        for (const auto& term : unique_terms(query_terms)) {
            const std::uint32_t tf = term_frequency(term, ordinal);
            if (tf == 0) continue;
            total += term_weight(idf(term), tf, doc_lengths_[ordinal]);
        }
        return total;
    }

    /// Top-k passages by score, ties broken by ascending passage id. Only
    /// passages with a positive score are returned.
    std::vector<RetrievedPassage> search(std::string_view query, std::size_t k) const {
        if (k == 0) throw Error(ErrorCode::InvalidConfig, "search requires k >= 1");
        const auto terms = unique_terms(tokenize(query));
        std::vector<double> scores(doc_count(), 0.0);
        std::vector<std::uint32_t> touched;
        for (const auto& term : terms) {
            auto list = postings(term);
            if (list.empty()) continue;
            const double w = idf(term);
            for (const Posting& p : list) {
                if (scores[p.ordinal] == 0.0) touched.push_back(p.ordinal);
                scores[p.ordinal] += term_weight(w, p.tf, doc_lengths_[p.ordinal]);
            }
        }
        std::vector<std::uint32_t> candidates;
        for (auto ord : touched) {
            if (scores[ord] > 0.0) candidates.push_back(ord);
        }
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

        auto better = [&](std::uint32_t a, std::uint32_t b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return passages_[a].id < passages_[b].id;
        };
        const std::size_t n = std::min(k, candidates.size());
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n),
                          candidates.end(), better);

        std::vector<RetrievedPassage> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            out.push_back({passages_[candidates[i]], scores[candidates[i]], i + 1});
        }
        return out;
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
        out.write(kMagic, sizeof(kMagic));
        write_pod(out, kFormatVersion);
        write_pod(out, params_.k1);
        write_pod(out, params_.b);
        write_pod(out, static_cast<std::uint64_t>(passages_.size()));
        for (std::size_t i = 0; i < passages_.size(); ++i) {
            write_string(out, passages_[i].id);
            write_string(out, passages_[i].title);
            write_string(out, passages_[i].text);
            write_pod(out, doc_lengths_[i]);
        }
        std::vector<std::size_t> order(terms_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return terms_[a] < terms_[b]; });
        write_pod(out, static_cast<std::uint64_t>(terms_.size()));
        for (auto t : order) {
            write_string(out, terms_[t]);
            write_pod(out, static_cast<std::uint64_t>(postings_[t].size()));
            for (const Posting& p : postings_[t]) {
                write_pod(out, p.ordinal);
                write_pod(out, p.tf);
            }
        }
        out.write(kTrailer, sizeof(kTrailer));
        out.flush();
        if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
    }

    static PassageIndex load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
        char magic[sizeof(kMagic)];
        read_bytes(in, magic, sizeof(magic));
        if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
            throw Error(ErrorCode::FormatVersionMismatch, path.string() + " is not a passage index");
        }
        const auto version = read_pod<std::uint32_t>(in);
        if (version != kFormatVersion) {
            throw Error(ErrorCode::FormatVersionMismatch,
                        "index format " + std::to_string(version) + ", expected " +
                            std::to_string(kFormatVersion));
        }
        PassageIndex idx;
        idx.params_.k1 = read_pod<double>(in);
        idx.params_.b = read_pod<double>(in);
        const auto n = read_pod<std::uint64_t>(in);
        if (n == 0) throw Error(ErrorCode::FormatVersionMismatch, "index holds no passages");
        for (std::uint64_t i = 0; i < n; ++i) {
            Passage p;
            p.id = read_string(in);
            p.title = read_string(in);
            p.text = read_string(in);
            idx.passages_.push_back(std::move(p));
            idx.doc_lengths_.push_back(read_pod<std::uint32_t>(in));
        }
        const auto term_count = read_pod<std::uint64_t>(in);
        for (std::uint64_t t = 0; t < term_count; ++t) {
            auto& list = idx.postings_for(read_string(in));
            const auto count = read_pod<std::uint64_t>(in);
            for (std::uint64_t j = 0; j < count; ++j) {
                Posting p{read_pod<std::uint32_t>(in), read_pod<std::uint32_t>(in)};
                if (p.ordinal >= n) {
                    throw Error(ErrorCode::FormatVersionMismatch, "posting ordinal out of range");
                }
                list.push_back(p);
            }
        }
        char trailer[sizeof(kTrailer)];
        read_bytes(in, trailer, sizeof(trailer));
        if (std::memcmp(trailer, kTrailer, sizeof(kTrailer)) != 0) {
            throw Error(ErrorCode::FormatVersionMismatch, "missing index trailer");
        }
        idx.finish();
        return idx;
    }

private:
    static constexpr char kMagic[8] = {'P', 'R', 'A', 'G', 'B', 'M', '2', '5'};
    static constexpr char kTrailer[4] = {'E', 'N', 'D', '.'};

    double term_weight(double idf_value, std::uint32_t tf, std::uint32_t len) const {
        const double f = static_cast<double>(tf);
        const double norm = 1.0 - params_.b + params_.b * static_cast<double>(len) / avg_doc_length_;
        return idf_value * f * (params_.k1 + 1.0) / (f + params_.k1 * norm);
    }

    std::vector<Posting>& postings_for(const std::string& term) {
        auto [it, inserted] = term_ids_.try_emplace(term, terms_.size());
        if (inserted) {
            terms_.push_back(term);
            postings_.emplace_back();
        }
        return postings_[it->second];
    }

    void finish() {
        double total = 0.0;
        for (auto len : doc_lengths_) total += static_cast<double>(len);
        avg_doc_length_ = total / static_cast<double>(doc_lengths_.size());
    }

    template <typename T>
    static void write_pod(std::ofstream& out, T value) {
        out.write(reinterpret_cast<const char*>(&value), sizeof(T));
    }

    static void write_string(std::ofstream& out, const std::string& s) {
        write_pod(out, static_cast<std::uint64_t>(s.size()));
        out.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

    static void read_bytes(std::ifstream& in, char* dst, std::size_t n) {
        in.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n) {
            throw Error(ErrorCode::Io, "unexpected end of index file");
        }
    }

    template <typename T>
    static T read_pod(std::ifstream& in) {
        T value;
        read_bytes(in, reinterpret_cast<char*>(&value), sizeof(T));
        return value;
    }

    static std::string read_string(std::ifstream& in) {
        const auto size = read_pod<std::uint64_t>(in);
        if (size > (std::uint64_t{1} << 32)) {
            throw Error(ErrorCode::FormatVersionMismatch, "implausible string length");
        }
        std::string s(size, '\0');
        if (size) read_bytes(in, s.data(), size);
        return s;
    }

    Bm25Params params_;
    std::vector<Passage> passages_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
    std::vector<std::string> terms_;
    std::vector<std::vector<Posting>> postings_;
    std::unordered_map<std::string, std::size_t> term_ids_;
};

// Free-function surface mirroring the index operations.

inline PassageIndex build_index(std::vector<Passage> corpus, Bm25Params params = {}) {
    return PassageIndex::build(std::move(corpus), params);
}

inline double bm25_score(const PassageIndex& index, std::span<const std::string> query_terms,
                         std::size_t ordinal) {
    return index.score(query_terms, ordinal);
}

inline std::vector<RetrievedPassage> search(const PassageIndex& index, std::string_view query,
                                            std::size_t k) {
    return index.search(query, k);
}

inline void save_index(const PassageIndex& index, const std::filesystem::path& path) {
    index.save(path);
}

inline PassageIndex load_index(const std::filesystem::path& path) {
    return PassageIndex::load(path);
}

}  // namespace ragctl
