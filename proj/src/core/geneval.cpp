#include "geneval.hpp"

#include "error.hpp"
#include "util.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

namespace bose {

GenerationResult generate(const GenerationPrompt& prompt, Backend& backend,
                          const GenConfig& cfg) {
    GenConfig effective = cfg;
    for (const auto& s : prompt.stop_sequences) {
        if (std::find(effective.stop_sequences.begin(), effective.stop_sequences.end(), s) ==
            effective.stop_sequences.end()) {
            effective.stop_sequences.push_back(s);
        }
    }
    Completion completion = backend.complete(prompt.text, effective);
    // backends already trim; re-enforce here so the contract survives any
    // backend implementation
    auto [text, hit] = trim_at_stop(completion.text, effective.stop_sequences);
    GenerationResult result;
    result.text = std::move(text);
    result.truncated = !hit && completion.finish_reason == FinishReason::length;
    return result;
}

namespace {

bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

std::optional<std::string> last_boxed(const std::string& text) {
    static const std::string tag = "\\boxed{";
    std::optional<std::string> result;
    std::size_t pos = 0;
    while ((pos = text.find(tag, pos)) != std::string::npos) {
        std::size_t i = pos + tag.size();
        const std::size_t start = i;
        int depth = 1;
        while (i < text.size() && depth > 0) {
            if (text[i] == '{') ++depth;
            else if (text[i] == '}') --depth;
            ++i;
        }
        if (depth == 0) result = text.substr(start, i - 1 - start);
        // advance past the tag only: a balanced group nested inside this one
        // still counts as a later occurrence
        pos += tag.size();
    }
    return result;
}

// last maximal token of the form [+-]?digits(.digits)?(/digits)?
std::optional<std::string> last_number(const std::string& text) {
    std::optional<std::string> result;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const std::size_t start = i;
        std::size_t j = i;
        if (text[j] == '+' || text[j] == '-') ++j;
        if (j < n && is_ascii_digit(text[j])) {
            while (j < n && is_ascii_digit(text[j])) ++j;
            if (j + 1 < n && text[j] == '.' && is_ascii_digit(text[j + 1])) {
                ++j;
                while (j < n && is_ascii_digit(text[j])) ++j;
            }
            if (j + 1 < n && text[j] == '/' && is_ascii_digit(text[j + 1])) {
                ++j;
                while (j < n && is_ascii_digit(text[j])) ++j;
            }
            result = text.substr(start, j - start);
            i = j;
        } else {
            ++i;
        }
    }
    return result;
}

} // namespace

std::optional<std::string> extract_answer(const std::string& text) {
    if (auto boxed = last_boxed(text)) return boxed;
    return last_number(text);
}

namespace {

bool parse_ll(std::string_view s, long long& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::string canonical_fraction(long long num, long long den) {
    if (den == 0) return {};
    bool negative = (num < 0) != (den < 0);
    unsigned long long a = num < 0 ? -static_cast<unsigned long long>(num) : num;
    unsigned long long b = den < 0 ? -static_cast<unsigned long long>(den) : den;
    if (a == 0) return "0";
    unsigned long long x = a, y = b;
    while (y != 0) {
        const unsigned long long t = x % y;
        x = y;
        y = t;
    }
    a /= x;
    b /= x;
    std::string s = negative ? "-" : "";
    s += std::to_string(a);
    if (b != 1) s += "/" + std::to_string(b);
    return s;
}

// "^[+-]?digits(.digits)?$" -> minimal decimal rendering
std::optional<std::string> canonical_decimal(const std::string& s) {
    std::size_t i = 0;
    bool negative = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
        negative = s[i] == '-';
        ++i;
    }
    std::size_t int_start = i;
    while (i < s.size() && is_ascii_digit(s[i])) ++i;
    if (i == int_start) return std::nullopt;
    std::string int_part = s.substr(int_start, i - int_start);
    std::string frac_part;
    if (i < s.size() && s[i] == '.') {
        ++i;
        std::size_t frac_start = i;
        while (i < s.size() && is_ascii_digit(s[i])) ++i;
        if (i == frac_start) return std::nullopt;
        frac_part = s.substr(frac_start, i - frac_start);
    }
    if (i != s.size()) return std::nullopt;

    std::size_t lead = int_part.find_first_not_of('0');
    int_part = lead == std::string::npos ? "0" : int_part.substr(lead);
    while (!frac_part.empty() && frac_part.back() == '0') frac_part.pop_back();

    if (int_part == "0" && frac_part.empty()) return std::string("0");
    std::string out = negative ? "-" : "";
    out += int_part;
    if (!frac_part.empty()) out += "." + frac_part;
    return out;
}

std::optional<std::string> canonicalize_fraction_text(const std::string& s) {
    // \frac{a}{b}
    if (s.rfind("\\frac{", 0) == 0) {
        const std::size_t close_a = s.find('}', 6);
        if (close_a == std::string::npos || close_a + 1 >= s.size() ||
            s[close_a + 1] != '{' || s.back() != '}') {
            return std::nullopt;
        }
        const std::string a_txt = s.substr(6, close_a - 6);
        const std::string b_txt = s.substr(close_a + 2, s.size() - close_a - 3);
        long long a = 0, b = 0;
        if (!parse_ll(a_txt, a) || !parse_ll(b_txt, b) || b == 0) return std::nullopt;
        return canonical_fraction(a, b);
    }
    // a/b
    const std::size_t slash = s.find('/');
    if (slash == std::string::npos || slash == 0 || slash + 1 >= s.size()) {
        return std::nullopt;
    }
    long long a = 0, b = 0;
    if (!parse_ll(s.substr(0, slash), a) || !parse_ll(s.substr(slash + 1), b) || b == 0) {
        return std::nullopt;
    }
    return canonical_fraction(a, b);
}

} // namespace

std::string normalize_answer(const std::string& input) {
    std::string s = trim(input);

    // currency/percent marks, with or without the LaTeX backslash
    std::string stripped;
    stripped.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size() && (s[i + 1] == '$' || s[i + 1] == '%')) {
            ++i;
            continue;
        }
        if (s[i] == '$' || s[i] == '%') continue;
        stripped += s[i];
    }

    // thousands separators
    std::string t;
    t.reserve(stripped.size());
    for (std::size_t i = 0; i < stripped.size(); ++i) {
        if (stripped[i] == ',' && i > 0 && is_ascii_digit(stripped[i - 1]) &&
            i + 1 < stripped.size() && is_ascii_digit(stripped[i + 1])) {
            continue;
        }
        t += stripped[i];
    }

    while (!t.empty() && t.back() == '.') t.pop_back();
    t = trim(t);

    if (auto frac = canonicalize_fraction_text(t)) return *frac;
    if (auto dec = canonical_decimal(t)) return *dec;

    bool any_alpha = false;
    bool alpha_only = !t.empty();
    for (char c : t) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            any_alpha = true;
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            alpha_only = false;
            break;
        }
    }
    if (alpha_only && any_alpha) {
        std::string folded;
        bool pending_space = false;
        for (char c : t) {
            if (std::isspace(static_cast<unsigned char>(c))) {
                pending_space = !folded.empty();
            } else {
                if (pending_space) folded += ' ';
                pending_space = false;
                folded += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            }
        }
        return folded;
    }
    return t;
}

namespace {

std::optional<double> parse_numeric(const std::string& s) {
    // reduced fraction
    const std::size_t slash = s.find('/');
    if (slash != std::string::npos) {
        long long a = 0, b = 0;
        if (parse_ll(s.substr(0, slash), a) && parse_ll(s.substr(slash + 1), b) && b != 0) {
            return static_cast<double>(a) / static_cast<double>(b);
        }
        return std::nullopt;
    }
    // plain decimal (no exponents, no inf/nan spellings)
    std::size_t i = 0;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    bool any_digit = false;
    bool dot = false;
    for (; i < s.size(); ++i) {
        if (is_ascii_digit(s[i])) {
            any_digit = true;
        } else if (s[i] == '.' && !dot) {
            dot = true;
        } else {
            return std::nullopt;
        }
    }
    if (!any_digit) return std::nullopt;
    return std::strtod(s.c_str(), nullptr);
}

} // namespace

bool judge(const std::optional<std::string>& pred, const std::string& gold, JudgeMode mode) {
    if (gold.empty()) throw UsageError("judge requires a nonempty gold answer");
    if (!pred) return false;
    if (mode == JudgeMode::strict) return *pred == gold;

    const std::string np = normalize_answer(*pred);
    const std::string ng = normalize_answer(gold);
    if (np == ng) return true;

    const auto vp = parse_numeric(np);
    const auto vg = parse_numeric(ng);
    if (vp && vg) {
        const double x = *vp;
        const double y = *vg;
        if (x == y) return true;
        return std::abs(x - y) <= 1e-6 * std::max(std::abs(x), std::abs(y));
    }
    return false;
}

RunRecord eval_open_ended(const Benchmark& bench, Backend& backend,
                          const OpenEndedOptions& opts) {
    if (bench.task_kind != TaskKind::open_ended) {
        throw UsageError("benchmark '" + bench.name + "' is not an open-ended benchmark");
    }
    if (bench.samples.empty()) {
        throw DataError("benchmark '" + bench.name + "' has no samples");
    }
    const bool zero_shot =
        opts.kind == TemplateKind::instruct_0shot || opts.kind == TemplateKind::light_0shot;
    if (zero_shot && opts.shots != 0) {
        throw UsageError(std::string(to_string(opts.kind)) + " is a 0-shot template");
    }
    const auto shots = select_fewshot(bench, opts.shots);

    RunRecord record;
    record.benchmark = bench.name;
    record.method = to_string(opts.kind);
    record.skip_errors = opts.skip_errors;
    record.verdicts.resize(bench.samples.size());

    parallel_for_indexed(
        bench.samples.size(), backend.spec().max_inflight, [&](std::size_t i) {
            const Sample& sample = bench.samples[i];
            Verdict& v = record.verdicts[i];
            v.sample_id = sample.id;
            v.judge_mode = opts.judge_mode;
            v.normalized_gold = normalize_answer(sample.answer);

            const auto prompt = render_generation(sample, shots, opts.kind, opts.prompt);
            try {
                const GenerationResult gen = generate(prompt, backend, opts.gen);
                v.raw_output = gen.text;
                v.truncated = gen.truncated;
                v.extracted = extract_answer(gen.text);
                if (v.extracted) v.normalized_pred = normalize_answer(*v.extracted);
                v.correct = judge(v.extracted, sample.answer, opts.judge_mode);
            } catch (const BackendError& e) {
                v.errored = true;
                v.error = e.what();
            }
        });

    if (!opts.skip_errors) {
        for (const auto& v : record.verdicts) {
            if (v.errored) throw BackendError("sample '" + v.sample_id + "': " + v.error);
        }
    }
    const std::size_t scored = record.scored_count();
    if (scored == 0) throw DataError("no scorable samples (all errored)");
    record.accuracy =
        static_cast<double>(record.correct_count()) / static_cast<double>(scored);
    record.created_at_ms = now_epoch_ms();
    record.run_id = compute_run_id(record);
    return record;
}

double rejudge_accuracy(const std::vector<Verdict>& verdicts,
                        const std::vector<std::string>& golds, JudgeMode mode) {
    if (verdicts.empty() || verdicts.size() != golds.size()) {
        throw UsageError("rejudge_accuracy requires matching nonempty verdicts and golds");
    }
    std::size_t scored = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        if (verdicts[i].errored) continue;
        ++scored;
        if (judge(verdicts[i].extracted, golds[i], mode)) ++correct;
    }
    if (scored == 0) throw DataError("no scorable verdicts");
    return static_cast<double>(correct) / static_cast<double>(scored);
}

} // namespace bose
