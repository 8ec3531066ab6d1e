#pragma once

// Deterministic synthetic inputs shared by the unit and acceptance suites.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "ragctl/generator.hpp"
#include "ragctl/retrieval_index.hpp"

namespace fixtures {

/// Zipf-ish vocabulary so that some terms are common and many are rare.
inline std::string random_words(std::mt19937& rng, std::size_t vocab, std::size_t min_len, std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> len(min_len, max_len);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::string out;
    const std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) {
        const auto w = static_cast<std::size_t>(std::pow(u(rng), 2.0) * static_cast<double>(vocab));
        if (!out.empty()) out += (rng() % 7 == 0) ? ", " : " ";
        out += "w" + std::to_string(w);
    }
    return out;
}

inline std::vector<ragctl::Passage> random_corpus(std::mt19937& rng, std::size_t n, std::size_t vocab = 300) {
    std::vector<ragctl::Passage> out;
    for (std::size_t i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "p%04zu", (i * 7919) % 10007);
        out.push_back({id, "title " + std::to_string(i), random_words(rng, vocab, 3, 40)});
    }
    return out;
}

/// Fresh empty directory under the system temp dir, unique per process so
/// tests can run in parallel.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() /
               ("ragctl_" + std::to_string(::getpid()) + "_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

struct MetricPair {
    std::string pred;
    std::vector<std::string> refs;
};

/// Hand-picked prediction/reference pairs covering case, punctuation,
/// articles, repeats, multi-reference and empty sides.
inline std::vector<MetricPair> curated_pairs() {
    return {
        {"Paris", {"paris"}},
        {"in Paris", {"Paris"}},
        {"", {"x"}},
        {"the capital is paris", {"Paris"}},
        {"par is", {"Paris"}},
        {"the cat sat", {"cat sat down"}},
        {"a b c", {"a x c"}},
        {"The Eiffel Tower.", {"eiffel tower", "tour eiffel"}},
        {"1871 A.D.", {"1871"}},
        {"the the the", {"the"}},
        {"New York City", {"new york", "NYC"}},
        {"George Washington", {"Washington, George"}},
        {"  spaced   out\ttext ", {"spaced out text"}},
        {"an apple a day", {"apple day"}},
        {"red red blue", {"red blue blue"}},
        {"x y z w v", {"v w z y x"}},
        {"Barack Obama was president", {"obama", "barack obama"}},
        {"", {""}},
        {"one", {"one two three four five"}},
        {"it is 42, the answer", {"42", "forty-two"}},
    };
}

/// Small encyclopedic corpus behind the three walkthrough episodes.
inline std::vector<ragctl::Passage> case_corpus() {
    return {
        {"c01", "Slovakia", "Slovakia is a landlocked country in Central Europe. Until 1993 it was part of Czechoslovakia."},
        {"c02", "Czechoslovakia", "Czechoslovakia was a sovereign state in Central Europe that peacefully dissolved into the Czech Republic and Slovakia in 1993."},
        {"c03", "Nebula (character)", "Nebula is a fictional character in the Guardians of the Galaxy franchise, the adopted daughter of Thanos and sister of Gamora."},
        {"c04", "Karen Gillan", "Karen Gillan is a Scottish actress who plays Nebula in the Guardians of the Galaxy films."},
        {"c05", "Super Bowl", "The Super Bowl is the annual championship game of the National Football League."},
        {"c06", "Super Bowl halftime show", "The halftime show of the upcoming Super Bowl will be headlined by the artist Kendrick Lamar, the league announced."},
        {"c07", "Great Chicago Fire", "The Great Chicago Fire burned in October 1871, destroying much of the city of Chicago."},
        {"c08", "Chicago history", "The fire of 1871 A.D. led to new building codes and the rebuilding of Chicago as a modern city."},
        {"c09", "Gamora", "Gamora is a character in the Guardians of the Galaxy and the sister of Nebula."},
        {"c10", "Central Europe", "Central Europe includes Austria, Czechia, Germany, Hungary, Poland, Slovakia and Switzerland."},
    };
}

struct CaseStudy {
    std::string question;
    std::vector<std::string> answers;
    ragctl::ReplayScript script;
};

/// Falls back to parametric context, then retrieves with a reformulated sub-question.
inline CaseStudy case_fallback_to_internal_knowledge() {
    return {"what country was Slovakia part of?",
            {"Czechoslovakia"},
            {{"[INTERMEDIARY] Slovakia is a country in Central Europe [RETRIEVE] what country was Slovakia part of before 1993",
              "[ANSWER] Czechoslovakia [SOLVED]"},
             std::nullopt}};
}

inline CaseStudy case_nebula() {
    return {"who is Nebula on Guardians of the Galaxy",
            {"Karen Gillan"},
            {{"[INTERMEDIARY] Nebula is a character in the Guardians franchise [RETRIEVE] who plays Nebula in Guardians of the Galaxy",
              "[ANSWER] Karen Gillan [SOLVED]"},
             std::nullopt}};
}

/// Near-identical intermediates across two rounds; the second query is refined.
inline CaseStudy case_query_refinement() {
    return {"who is performing the halftime show at the upcoming super bowl",
            {"Kendrick Lamar"},
            {{"[INTERMEDIARY] The halftime show performer has not been found yet [RETRIEVE] who is performing the halftime show at the upcoming super bowl",
              "[INTERMEDIARY] The halftime show performer has not been found yet [RETRIEVE] What is the name of the artist performing in the halftime show for the upcoming Super Bowl?",
              "[ANSWER] Kendrick Lamar [SOLVED]"},
             std::nullopt}};
}

/// Wrong parametric year, corrected by evidence, one more round, then a summary answer.
inline CaseStudy case_summarization() {
    return {"in what year did the great chicago fire happen",
            {"1871"},
            {{"[INTERMEDIARY] 1880 [RETRIEVE] in what year did the great chicago fire happen",
              "[INTERMEDIARY] 1871 [RETRIEVE] what was the historical significance of the chicago fire of 1871",
              "[ANSWER] 1871 A.D. [SOLVED]"},
             std::nullopt}};
}

}  // namespace fixtures
