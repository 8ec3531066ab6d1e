/// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "ragctl/ragctl.hpp"

using namespace ragctl;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool ok = true;
    std::string detail;
};

/// Collects the first few mismatches so a failing line says what broke.
class Checker {
public:
    void expect(bool cond, const std::string& what) {
        ++checks_;
        if (cond) return;
        ++failures_;
        if (failures_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
    }
    Verdict verdict(const std::string& summary) const {
        if (failures_ == 0) return {true, summary};
        return {false, std::to_string(failures_) + "/" + std::to_string(checks_) + " checks failed: " + notes_};
    }

private:
    std::size_t checks_ = 0;
    std::size_t failures_ = 0;
    std::string notes_;
};

std::string seq_of(const Trajectory& t) { return control_string(control_sequence(t)); }

std::string fmt(double v, int decimals = 3) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

// 1 ----------------------------------------------------------------------------

Verdict grammar_oracle() {
    Checker c;
    const std::string alphabet = "IRAS";
    std::size_t cases = 0;
    for (std::size_t len = 0; len <= 8; ++len) {
        std::size_t total = 1;
        for (std::size_t i = 0; i < len; ++i) total *= 4;
        for (std::size_t code = 0; code < total; ++code) {
            std::string codes;
            for (std::size_t i = 0, x = code; i < len; ++i, x /= 4) codes.push_back(alphabet[x % 4]);
            const auto t = parse_trajectory(oracle::synthesize(codes));
            c.expect(seq_of(t) == codes, "parse " + codes);
            for (std::size_t budget : {2u, 8u}) {
                c.expect(validate(t, budget).valid == oracle::grammar_accepts(codes, budget),
                         codes + " B=" + std::to_string(budget));
            }
            ++cases;
        }
    }
    return c.verdict(std::to_string(cases) + " marker sequences x 2 budgets agree with the regular-language oracle");
}

// 2 ----------------------------------------------------------------------------

std::vector<StreamEvent> scan_in_chunks(const std::string& s, std::mt19937& rng, std::size_t max_chunk) {
    ScannerState st;
    std::vector<StreamEvent> ev;
    for (std::size_t i = 0; i < s.size();) {
        const auto n = std::uniform_int_distribution<std::size_t>(1, max_chunk)(rng);
        auto part = scan_stream(std::string_view(s).substr(i, n), st);
        ev.insert(ev.end(), part.begin(), part.end());
        i += n;
    }
    auto tail = scan_stream("", st, true);
    ev.insert(ev.end(), tail.begin(), tail.end());
    return coalesce(ev);
}

Verdict streaming_equivalence() {
    Checker c;
    std::mt19937 rng(2024);
    const std::vector<std::string> pieces = {"[RETRIEVE]", "[INTERMEDIARY]", "[ANSWER]", "[SOLVED]", "[RETR",
                                             "[INTER", "[", "]", "[ANSWER", "SOLVED]", "word", " ", "\n",
                                             "1871 A.D.", "[[", "z\xc3\xbc", "[answer]"};
    for (int i = 0; i < 1000; ++i) {
        std::string s;
        const int n = std::uniform_int_distribution<int>(0, 24)(rng);
        for (int j = 0; j < n; ++j) s += pieces[rng() % pieces.size()];
        const auto whole = scan_in_chunks(s, rng, s.size() + 1);
        for (std::size_t max_chunk : {1u, 3u, 16u}) {
            c.expect(scan_in_chunks(s, rng, max_chunk) == whole, "chunking differs for \"" + s + "\"");
        }
        c.expect(render(whole) == s, "render(scan) for \"" + s + "\"");
        c.expect(render(parse_trajectory(s)) == s, "render(parse) for \"" + s + "\"");
    }
    return c.verdict("1000 strings: chunked scans equal single pass, render(parse(s)) == s");
}

// 3 ----------------------------------------------------------------------------

Verdict bm25_oracle() {
    Checker c;
    std::mt19937 rng(77);
    struct Setup {
        std::size_t passages;
        std::size_t vocab;
        int queries;
    };
    const std::vector<Setup> setups = {{1000, 400, 60}, {400, 60, 60}, {120, 25, 50}, {30, 8, 30}};
    int total_queries = 0;
    for (const auto& s : setups) {
        auto corpus = fixtures::random_corpus(rng, s.passages, s.vocab);
        // Duplicated texts under different ids force score ties.
        for (std::size_t i = 0; i < s.passages / 10; ++i) {
            corpus.push_back({"dup" + std::to_string(i), "", corpus[i].text});
        }
        std::vector<oracle::Doc> docs;
        for (const auto& p : corpus) docs.push_back({p.id, p.text});
        const auto idx = build_index(corpus);
        for (int q = 0; q < s.queries; ++q, ++total_queries) {
            const auto query = fixtures::random_words(rng, s.vocab + 20, 1, 6);
            const auto k = std::uniform_int_distribution<std::size_t>(1, 20)(rng);
            const auto got = idx.search(query, k);
            const auto want = oracle::bm25_rank(docs, query, k);
            c.expect(got.size() == want.size(), "result count for \"" + query + "\"");
            for (std::size_t i = 0; i < std::min(got.size(), want.size()); ++i) {
                c.expect(got[i].passage.id == want[i].id, "id at rank " + std::to_string(i + 1) + " for \"" + query + "\"");
                c.expect(std::abs(got[i].score - want[i].score) <= 1e-9, "score for " + want[i].id);
            }
        }
    }
    return c.verdict(std::to_string(total_queries) + " queries on corpora up to 1000 passages match full scoring");
}

// 4 ----------------------------------------------------------------------------

const PassageIndex& case_index() {
    static const PassageIndex idx = build_index(fixtures::case_corpus());
    return idx;
}

Episode replay(const std::string& question, ReplayScript script, std::size_t budget) {
    PlannerConfig cfg;
    cfg.max_rounds = budget;
    ReplayGenerator gen(std::move(script));
    return run_episode(question, cfg, gen, &case_index());
}

Verdict budget_safety() {
    Checker c;
    std::mt19937 rng(404);
    const std::vector<std::string> turns = {
        "[INTERMEDIARY] a [RETRIEVE] slovakia", "[INTERMEDIARY] a [RETRIEVE]   ", "[SOLVED]", "[RETRIEVE] x",
        "garbage", "[INTERMEDIARY] only", "[ANSWER] done [SOLVED]", "[INTERMEDIARY] b [RETRIEVE] nebula",
        "[ANSWER] unterminated", "[RETRIEVE] fire [RETRIEVE] fire", ""};
    std::string shape;
    std::size_t episodes = 0;
    for (std::size_t budget : {0u, 1u, 3u, 5u, 7u, 10u}) {
        std::map<std::size_t, std::size_t> hist;
        for (int trial = 0; trial < 120; ++trial) {
            ReplayScript s;
            const int style = trial % 3;  // 0: always retrieve, 1: malformed mix, 2: empty queries
            for (int i = 0; i < 40; ++i) {
                if (style == 0) s.turns.push_back(turns[trial % 2 ? 0 : 7]);
                else if (style == 2) s.turns.push_back(turns[rng() % 2]);
                else s.turns.push_back(turns[rng() % turns.size()]);
            }
            if (trial % 4 != 3) s.on_finalize = "[ANSWER] final [SOLVED]";
            const auto ep = replay("q", s, budget);
            ++episodes;
            c.expect(ep.state.rounds_used <= budget, "rounds_used > B");
            c.expect(ep.state.memory.size() == ep.state.rounds_used, "memory size");
            std::size_t b = 0;
            for (const auto& step : ep.steps) {
                c.expect((step.finalize_reason == FinalizeReason::Budget) == (b == budget),
                         "forced finalize at b=" + std::to_string(b) + " B=" + std::to_string(budget));
                if (step.action == TurnAction::Retrieved) ++b;
            }
            if (style == 0) c.expect(ep.state.rounds_used == budget, "always-retrieve stops short of B");
            ++hist[ep.state.rounds_used];
        }
        shape += " B=" + std::to_string(budget) + ":";
        for (const auto& [r, n] : hist) shape += std::to_string(r) + "x" + std::to_string(n) + ",";
        shape.pop_back();
    }
    return c.verdict(std::to_string(episodes) + " fuzzed episodes within budget; counts" + shape);
}

// 5 ----------------------------------------------------------------------------

Verdict case_replays() {
    Checker c;
    const auto one = fixtures::case_fallback_to_internal_knowledge();
    const auto ep1 = replay(one.question, one.script, 3);
    const auto s1 = seq_of(ep1.state.transcript);
    c.expect(s1.rfind("IR", 0) == 0, "case 1 starts " + s1);
    c.expect(render(ep1.state.transcript) == one.script.turns[0] + one.script.turns[1], "case 1 transcript");

    const auto two = fixtures::case_query_refinement();
    const auto ep2 = replay(two.question, two.script, 3);
    c.expect(seq_of(ep2.state.transcript) == "IRIRAS", "case 2 sequence " + seq_of(ep2.state.transcript));
    const auto q2 = retrieve_queries(ep2.state.transcript);
    c.expect(q2.size() == 2 && q2[1] == "What is the name of the artist performing in the halftime show for the upcoming Super Bowl?",
             "case 2 refined query");
    c.expect(ep2.final_answer == "Kendrick Lamar", "case 2 answer");

    const auto three = fixtures::case_summarization();
    const auto ep3 = replay(three.question, three.script, 3);
    c.expect(ep3.final_answer == "1871 A.D.", "case 3 answer '" + ep3.final_answer + "'");
    c.expect(seq_of(ep3.state.transcript) == "IRIRAS", "case 3 sequence");
    c.expect(ep3.state.memory.size() == 2 && contains_answer(ep3.state.memory[0].passages.at(0).passage.text,
                                                             three.answers, NormalizationMode::SquadStyle) == 1,
             "case 3 first retrieval surfaces 1871");
    return c.verdict("case 1 " + s1 + ", case 2 " + seq_of(ep2.state.transcript) + ", case 3 answer \"" +
                     ep3.final_answer + "\"");
}

// 6 ----------------------------------------------------------------------------

Verdict metrics_oracle() {
    Checker c;
    const auto pairs = fixtures::curated_pairs();
    for (const auto& p : pairs) {
        for (bool squad : {false, true}) {
            const auto mode = squad ? NormalizationMode::SquadStyle : NormalizationMode::Minimal;
            const std::string tag = "\"" + p.pred + "\" " + (squad ? "squad" : "minimal");
            c.expect(exact_match(p.pred, p.refs, mode) == oracle::em(p.pred, p.refs, squad), "EM " + tag);
            c.expect(cover_em(p.pred, p.refs, mode) == oracle::cover(p.pred, p.refs, squad), "CoverEM " + tag);
            c.expect(std::abs(token_f1(p.pred, p.refs, mode) - oracle::f1(p.pred, p.refs, squad)) <= 1e-9, "F1 " + tag);
            const auto got = rouge(p.pred, p.refs, mode);
            const auto want = oracle::rouge(p.pred, p.refs, squad);
            c.expect(std::abs(got.r1 - want.r1) <= 1e-9, "ROUGE-1 " + tag);
            c.expect(std::abs(got.r2 - want.r2) <= 1e-9, "ROUGE-2 " + tag);
            c.expect(std::abs(got.rl - want.rl) <= 1e-9, "ROUGE-L " + tag);
        }
        c.expect(std::abs(bleu(p.pred, p.refs.front()) - oracle::bleu(p.pred, p.refs.front())) <= 1e-9,
                 "BLEU \"" + p.pred + "\"");
    }
    std::mt19937 rng(6);
    for (int i = 0; i < 10000; ++i) {
        const auto pred = fixtures::random_words(rng, 8, 0, 5);
        const std::vector<std::string> refs{fixtures::random_words(rng, 8, 0, 3), fixtures::random_words(rng, 8, 1, 2)};
        for (auto mode : {NormalizationMode::Minimal, NormalizationMode::SquadStyle}) {
            c.expect(exact_match(pred, refs, mode) <= cover_em(pred, refs, mode), "EM > CoverEM for \"" + pred + "\"");
        }
    }
    return c.verdict(std::to_string(pairs.size()) + " curated pairs match oracles; EM <= CoverEM on 10000 random pairs");
}

// 7 ----------------------------------------------------------------------------

Verdict avg_score_table() {
    Checker c;
    // Eighths are exact in binary: the cells sum to 6, so the mean is 6/15.
    const std::vector<std::string> names{"alpha", "bravo", "charlie", "delta", "echo"};
    const double em[] = {0.5, 0.625, 0.25, 0.375, 0.125};
    const double rg[] = {0.375, 0.5, 0.25, 0.25, 0.125};
    const double f1[] = {0.625, 0.75, 0.375, 0.5, 0.375};
    std::vector<MetricRow> rows;
    for (std::size_t i = 0; i < names.size(); ++i) rows.push_back({names[i], em[i], rg[i], f1[i], 0.0, 1});
    const double got = avg_score(rows);
    c.expect(got == 6.0 / 15.0, "avg " + fmt(got, 17));

    TableLine line{"ragctl", {}, got};
    for (const auto& r : rows) line.cells.emplace_back(r);
    const auto table = render_metric_table(names, {line});
    std::vector<std::string> lines;
    std::istringstream in(table);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    c.expect(lines.size() == 4, "table has " + std::to_string(lines.size()) + " lines");
    for (const auto& l : lines) c.expect(l.size() == lines.front().size(), "ragged line: " + l);
    std::size_t pos = 0;
    for (const auto& n : names) {
        const auto at = lines.front().find(n, pos);
        c.expect(at != std::string::npos, "dataset column " + n);
        pos = at == std::string::npos ? pos : at;
    }
    c.expect(lines.front().find("Avg.Score") != std::string::npos, "Avg.Score header");
    c.expect(lines.size() > 3 && lines[3].find("  50.0   37.5   62.5") != std::string::npos, "NQ cell group");
    c.expect(lines.size() > 3 && lines[3].substr(lines[3].size() - 4) == "40.0", "Avg.Score cell");
    return c.verdict("5x3 table mean = 6/15 exactly, layout Method | 5 x (EM ROUGE F1) | Avg.Score");
}

// 8 ----------------------------------------------------------------------------

struct LabeledProbe {
    std::string id;
    std::string gold;
    std::vector<std::string> probe_turns;  // three parametric attempts, then the retrieval attempt
    SupervisionType label;
};

/// Ten questions per kind, labeled by construction. Each group includes
/// cases that sit near a decision boundary.
std::vector<LabeledProbe> labeled_probes() {
    const std::vector<std::string> golds = {"Zanzibar", "Ottoline", "Kestrel", "Marigold", "Fennec",
                                            "Quillon", "Tamarind", "Obsidian", "Halcyon", "Bergamot"};
    std::vector<LabeledProbe> out;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        const auto& g = golds[i];
        const std::string n = std::to_string(i);
        // Alpha: every attempt normalizes to the gold answer.
        out.push_back({"a" + n, g, {g, "The " + g + ".", i % 2 ? g + "!" : "  " + g}, SupervisionType::Alpha});
        out.back().probe_turns.push_back(i % 3 ? "wrong" : g);
        // Beta: some attempt contains the answer without matching it.
        std::vector<std::string> beta = {"wrong " + n, "it is " + g + " I think", "wrong"};
        if (i % 3 == 1) beta = {g, g, "probably " + g};          // mostly exact plus one partial
        if (i % 3 == 2) beta = {"no", "no", "[ANSWER] maybe " + g + " [SOLVED]"};
        out.push_back({"b" + n, g, beta, SupervisionType::Beta});
        out.back().probe_turns.push_back(i % 2 ? g : "nothing");
        // Gamma: neither probe finds it. Exact-but-inconsistent parametric answers are not Alpha.
        std::vector<std::string> gamma = {"wrong", "also wrong", "nope"};
        if (i % 4 == 0) gamma = {g, "other", g};
        out.push_back({"g" + n, g, gamma, SupervisionType::Gamma});
        out.back().probe_turns.push_back(i % 2 ? "unknown" : "");
        // Theta: parametric misses, retrieval finds it exactly or inside a sentence.
        std::vector<std::string> theta = {"wrong", "wrong", "wrong"};
        if (i % 4 == 0) theta = {g, "other", g};
        out.push_back({"t" + n, g, theta, SupervisionType::Theta});
        out.back().probe_turns.push_back(i % 2 ? g : "the answer is " + g);
    }
    return out;
}

Verdict supervision_partition() {
    Checker c;
    const auto dir = fixtures::temp_dir("acceptance_supervision");
    const auto probes = labeled_probes();
    std::string questions, probe_scripts, teacher_scripts;
    for (const auto& p : probes) {
        questions += nlohmann::json{{"id", p.id}, {"question", "what is item " + p.id}, {"answers", {p.gold}}}.dump() + "\n";
        probe_scripts += nlohmann::json{{"id", p.id}, {"turns", p.probe_turns}}.dump() + "\n";
        teacher_scripts += nlohmann::json{{"id", p.id}, {"turns", {"which item follows " + p.id}}}.dump() + "\n";
    }
    write_text(dir / "questions.jsonl", questions);
    write_text(dir / "probe.jsonl", probe_scripts);
    write_text(dir / "teacher.jsonl", teacher_scripts);
    cmd_index(RAGCTL_SAMPLES_DIR "/corpus.jsonl", dir / "index.bin");

    SuperviseConfig cfg;
    cfg.questions_path = dir / "questions.jsonl";
    cfg.index_path = dir / "index.bin";
    cfg.probe.replay_path = dir / "probe.jsonl";
    cfg.teacher.replay_path = dir / "teacher.jsonl";
    cfg.output_dir = dir / "out";
    const auto out = cmd_supervise(cfg);
    c.expect(out.skipped.empty(), "skipped " + std::to_string(out.skipped.size()));
    c.expect(out.samples.size() == probes.size(), "sample count");

    std::map<std::string, SupervisionType> label;
    for (const auto& p : probes) label[p.id] = p.label;
    std::size_t agree = 0;
    for (const auto& s : out.samples) {
        const bool same = label.at(s.id) == s.kind;
        agree += same;
        c.expect(same, s.id + " labeled " + std::string(to_string(label.at(s.id))) + " got " + std::string(to_string(s.kind)));
        c.expect(validate(s.target, cfg.max_rounds).valid, s.id + " target invalid");
        c.expect(target_matches_kind(s, cfg.max_rounds), s.id + " target breaks its kind's shape");
    }
    // The exported file must reload into the same valid targets.
    std::size_t reloaded = 0;
    for (const auto& j : read_jsonl_strict(dir / "out" / "sft.jsonl")) {
        c.expect(target_matches_kind(sample_from_json(j), cfg.max_rounds), "reloaded target");
        ++reloaded;
    }
    c.expect(reloaded == probes.size(), "exported count");
    return c.verdict(std::to_string(agree) + "/" + std::to_string(probes.size()) +
                     " hand labels matched, every target valid for its kind");
}

// 9 ----------------------------------------------------------------------------

Verdict reward_algebra() {
    Checker c;
    std::mt19937 rng(909);
    const std::vector<std::string> targets = {
        "[ANSWER] Paris [SOLVED]",
        "[INTERMEDIARY] a [RETRIEVE] q [ANSWER] the great fire [SOLVED]",
        "[INTERMEDIARY] a [RETRIEVE] q [INTERMEDIARY] b [RETRIEVE] r [ANSWER] Kendrick Lamar [SOLVED]"};
    std::size_t rollouts = 0;
    double lo = 1e9, hi = -1e9;
    for (const auto& target : targets) {
        SupervisionSample s;
        s.id = "s";
        s.target = parse_trajectory(target);
        s.references = {*final_answer_text(s.target)};
        const auto perfect = total_reward(s.target, s, 3);
        c.expect(perfect.total == 1.5 && perfect.r_ans == 1.0 && perfect.r_ctrl == 0.5, "perfect rollout");
        ++rollouts;
        for (int i = 0; i < 3000; ++i) {
            std::string codes;
            const auto len = rng() % 9;
            for (std::size_t j = 0; j < len; ++j) codes += "IRAS"[rng() % 4];
            std::string text = oracle::synthesize(codes);
            if (rng() % 3 == 0) text = text + " " + fixtures::random_words(rng, 5, 0, 3);
            if (rng() % 4 == 0 && !codes.empty() && codes.back() == 'S') {
                text = text.substr(0, text.size() - std::string("[SOLVED]").size()) + s.references[0] + " [SOLVED]";
            }
            const auto rollout = parse_trajectory(text);
            const auto r = total_reward(rollout, s, 3);
            ++rollouts;
            c.expect(r.total == r.r_ans + r.r_ctrl, "R != r_ans + r_ctrl");
            c.expect(r.total >= -0.5 && r.total <= 1.5, "R out of bounds: " + fmt(r.total));
            if (!validate(rollout, 3).valid) c.expect(r.r_ctrl == -0.5, "invalid rollout r_ctrl " + fmt(r.r_ctrl));
            lo = std::min(lo, r.total);
            hi = std::max(hi, r.total);
        }
    }
    return c.verdict(std::to_string(rollouts) + " rollouts: R = r_ans + r_ctrl, perfect 1.5, invalid -0.5, range [" +
                     fmt(lo) + ", " + fmt(hi) + "]");
}

// 10 ---------------------------------------------------------------------------

Verdict run_determinism() {
    Checker c;
    const auto dir = fixtures::temp_dir("acceptance_determinism");
    std::mt19937 rng(1010);
    const std::vector<std::string> turns = {
        "[INTERMEDIARY] partial [RETRIEVE] w1 w2", "[INTERMEDIARY] more [RETRIEVE] w3 w9 w4",
        "[ANSWER] w1 [SOLVED]", "garbage", "[INTERMEDIARY] x [RETRIEVE]  ", "[ANSWER] w7 w8 [SOLVED]"};
    std::string dataset, scripts, corpus;
    for (const auto& p : fixtures::random_corpus(rng, 300, 40)) {
        corpus += nlohmann::json{{"id", p.id}, {"title", p.title}, {"text", p.text}}.dump() + "\n";
    }
    for (int i = 0; i < 80; ++i) {
        const auto id = "d" + std::to_string(i);
        dataset += nlohmann::json{{"id", id},
                                  {"question", fixtures::random_words(rng, 40, 2, 6)},
                                  {"answers", {fixtures::random_words(rng, 40, 1, 2)}},
                                  {"dataset", i % 3 ? "alpha" : "beta"}}
                       .dump() + "\n";
        std::vector<std::string> t;
        for (int k = 0; k < 6; ++k) t.push_back(turns[rng() % turns.size()]);
        nlohmann::json row{{"id", id}, {"turns", t}};
        if (i % 2) row["on_finalize"] = "[ANSWER] w0 [SOLVED]";
        scripts += row.dump() + "\n";
    }
    write_text(dir / "dataset.jsonl", dataset);
    write_text(dir / "replay.jsonl", scripts);
    write_text(dir / "corpus.jsonl", corpus);
    cmd_index(dir / "corpus.jsonl", dir / "index.bin");
    cmd_index(RAGCTL_SAMPLES_DIR "/corpus.jsonl", dir / "samples.bin");

    std::size_t runs = 0;
    for (const auto& [data, replay_file, index] :
         std::vector<std::tuple<fs::path, fs::path, fs::path>>{
             {dir / "dataset.jsonl", dir / "replay.jsonl", dir / "index.bin"},
             {RAGCTL_SAMPLES_DIR "/dataset.jsonl", RAGCTL_SAMPLES_DIR "/replay.jsonl", dir / "samples.bin"}}) {
        std::string reference;
        for (std::size_t par : {1u, 1u, 1u, 4u, 4u}) {
            RunConfig cfg;
            cfg.dataset_path = data;
            cfg.index_path = index;
            cfg.generator.replay_path = replay_file;
            cfg.parallelism = par;
            cfg.output_dir = dir / ("run" + std::to_string(runs++));
            cmd_run(cfg);
            const auto bytes = read_text(cfg.output_dir / "transcripts.jsonl") + "\x1f" +
                               read_text(cfg.output_dir / "report.json") + "\x1f" +
                               read_text(cfg.output_dir / "report.txt");
            if (reference.empty()) reference = bytes;
            c.expect(bytes == reference, "run " + std::to_string(runs) + " (parallelism " + std::to_string(par) +
                                             ") differs");
        }
    }
    return c.verdict(std::to_string(runs) + " runs over 2 datasets byte-identical at parallelism 1 and 4");
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Verdict()> run;
        double limit_s;  // 0: no time limit
    };
    const std::vector<Criterion> criteria = {
        {"grammar oracle", grammar_oracle, 10.0},
        {"streaming equivalence", streaming_equivalence, 5.0},
        {"bm25 oracle", bm25_oracle, 30.0},
        {"budget safety", budget_safety, 20.0},
        {"case-study replays", case_replays, 0.0},
        {"metrics oracle", metrics_oracle, 0.0},
        {"avg.score aggregation", avg_score_table, 0.0},
        {"supervision partition", supervision_partition, 0.0},
        {"reward algebra", reward_algebra, 0.0},
        {"end-to-end determinism", run_determinism, 0.0},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& cr = criteria[i];
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = cr.run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (v.ok && cr.limit_s > 0 && secs >= cr.limit_s) {
            v = {false, v.detail + "; took " + fmt(secs, 2) + " s, limit " + fmt(cr.limit_s, 0) + " s"};
        }
        failed += !v.ok;
        std::printf("%s %2zu %-24s %7.2fs  %s\n", v.ok ? "PASS" : "FAIL", i + 1, cr.name, secs, v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    return failed ? 1 : 0;
}
