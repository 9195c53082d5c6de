#include "dataset.hpp"

#include "error.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

using nlohmann::json;

namespace bose {

const char* to_string(TaskKind kind) {
    return kind == TaskKind::open_ended ? "open_ended" : "multi_choice";
}

TaskKind task_kind_from_string(const std::string& s) {
    if (s == "open_ended" || s == "open-ended") return TaskKind::open_ended;
    if (s == "multi_choice" || s == "multi-choice") return TaskKind::multi_choice;
    throw UsageError("unknown task kind '" + s + "' (expected open_ended or multi_choice)");
}

namespace {

const std::set<std::string> kKnownFields = {
    "id", "question", "options", "answer", "cot", "domain", "role"};

std::string require_string(const json& obj, const char* key, int line) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw DataError("line " + std::to_string(line) + ": missing or non-string field '" +
                        key + "'");
    }
    return it->get<std::string>();
}

// Resolve the gold answer against the option list; letters are canonical.
int resolve_gold(const Sample& s, int line) {
    const auto& ans = s.answer;
    if (ans.size() == 1 && ans[0] >= 'A' && ans[0] <= 'Z') {
        const int idx = ans[0] - 'A';
        if (idx >= static_cast<int>(s.options.size())) {
            throw DataError("sample '" + s.id + "' (line " + std::to_string(line) +
                            "): answer letter '" + ans + "' has no matching option");
        }
        return idx;
    }
    int found = -1;
    for (std::size_t i = 0; i < s.options.size(); ++i) {
        if (s.options[i] == ans) {
            if (found >= 0) {
                throw DataError("sample '" + s.id + "' (line " + std::to_string(line) +
                                "): answer text matches more than one option");
            }
            found = static_cast<int>(i);
        }
    }
    if (found < 0) {
        throw DataError("sample '" + s.id + "' (line " + std::to_string(line) +
                        "): answer does not identify any option");
    }
    return found;
}

} // namespace

Benchmark parse_benchmark(const std::string& text, const std::string& name,
                          TaskKind kind, bool strict, const std::string& origin) {
    Benchmark bench;
    bench.name = name;
    bench.task_kind = kind;

    std::unordered_map<std::string, int> seen_line; // id -> first line
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError(origin + ": parse error at line " + std::to_string(lineno) +
                            ": " + e.what());
        }
        if (!obj.is_object()) {
            throw DataError(origin + ": line " + std::to_string(lineno) +
                            " is not a JSON object");
        }
        if (strict) {
            for (auto it = obj.begin(); it != obj.end(); ++it) {
                if (!kKnownFields.count(it.key())) {
                    throw DataError(origin + ": line " + std::to_string(lineno) +
                                    ": unknown field '" + it.key() + "' under --strict");
                }
            }
        }

        Sample s;
        s.id = require_string(obj, "id", lineno);
        s.question = require_string(obj, "question", lineno);
        s.answer = require_string(obj, "answer", lineno);
        if (auto it = obj.find("options"); it != obj.end() && !it->is_null()) {
            if (!it->is_array()) {
                throw DataError(origin + ": line " + std::to_string(lineno) +
                                ": 'options' must be an array of strings");
            }
            for (const auto& o : *it) {
                if (!o.is_string()) {
                    throw DataError(origin + ": line " + std::to_string(lineno) +
                                    ": 'options' must be an array of strings");
                }
                s.options.push_back(o.get<std::string>());
            }
        }
        if (auto it = obj.find("cot"); it != obj.end() && !it->is_null()) {
            s.cot = it->get<std::string>();
        }
        if (auto it = obj.find("domain"); it != obj.end() && !it->is_null()) {
            s.domain_tag = it->get<std::string>();
        }
        std::string role = "eval";
        if (auto it = obj.find("role"); it != obj.end() && !it->is_null()) {
            role = it->get<std::string>();
        }
        if (role != "eval" && role != "exemplar") {
            throw DataError(origin + ": line " + std::to_string(lineno) +
                            ": role must be 'eval' or 'exemplar', got '" + role + "'");
        }

        if (s.id.empty()) {
            throw DataError(origin + ": line " + std::to_string(lineno) + ": empty id");
        }
        if (s.question.empty()) {
            throw DataError(origin + ": sample '" + s.id + "' (line " +
                            std::to_string(lineno) + "): empty question");
        }
        if (s.answer.empty()) {
            throw DataError(origin + ": sample '" + s.id + "' (line " +
                            std::to_string(lineno) + "): empty answer");
        }
        if (auto it = seen_line.find(s.id); it != seen_line.end()) {
            throw DataError(origin + ": duplicate id '" + s.id + "' on lines " +
                            std::to_string(it->second) + " and " + std::to_string(lineno));
        }
        seen_line[s.id] = lineno;

        if (!s.options.empty()) {
            if (s.options.size() > 26) {
                throw DataError(origin + ": sample '" + s.id + "' (line " +
                                std::to_string(lineno) + "): more than 26 options");
            }
            s.gold_index = resolve_gold(s, lineno);
            s.answer = std::string(1, static_cast<char>('A' + s.gold_index));
        }

        if (role == "exemplar") {
            if (kind == TaskKind::open_ended && (!s.cot || s.cot->empty())) {
                throw DataError(origin + ": exemplar '" + s.id + "' (line " +
                                std::to_string(lineno) + "): missing worked solution (cot)");
            }
            bench.exemplars.push_back(std::move(s));
        } else {
            if (kind == TaskKind::multi_choice && s.options.size() < 2) {
                throw DataError(origin + ": sample '" + s.id + "' (line " +
                                std::to_string(lineno) +
                                "): multi-choice sample needs at least 2 options");
            }
            bench.samples.push_back(std::move(s));
        }
    }
    return bench;
}

Benchmark load_benchmark(const std::string& path, TaskKind kind, bool strict) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open benchmark file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string name = std::filesystem::path(path).stem().string();
    return parse_benchmark(buf.str(), name, kind, strict, path);
}

std::string serialize_benchmark(const Benchmark& bench) {
    std::string out;
    auto emit = [&out](const Sample& s, bool exemplar) {
        json obj;
        obj["id"] = s.id;
        obj["question"] = s.question;
        if (!s.options.empty()) obj["options"] = s.options;
        obj["answer"] = s.answer;
        if (s.cot) obj["cot"] = *s.cot;
        if (s.domain_tag) obj["domain"] = *s.domain_tag;
        if (exemplar) obj["role"] = "exemplar";
        out += obj.dump();
        out += '\n';
    };
    for (const auto& s : bench.samples) emit(s, false);
    for (const auto& s : bench.exemplars) emit(s, true);
    return out;
}

std::vector<Sample> select_fewshot(const Benchmark& bench, std::size_t k) {
    if (k > bench.exemplars.size()) {
        throw UsageError("requested " + std::to_string(k) + " shots but benchmark '" +
                         bench.name + "' ships only " +
                         std::to_string(bench.exemplars.size()) + " exemplars");
    }
    return std::vector<Sample>(bench.exemplars.begin(), bench.exemplars.begin() + k);
}

} // namespace bose
