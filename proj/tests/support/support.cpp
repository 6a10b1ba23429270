#include "support.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace refine::testing {

TempDir::TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "refine-test-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
}

TempDir::~TempDir() {
    std::error_code ignored;
    std::filesystem::remove_all(path_, ignored);
}

std::filesystem::path copy_fixture(const std::string& name, const std::filesystem::path& dest) {
    const auto source = std::filesystem::path(REFINE_FIXTURE_DIR) / name;
    const auto target = dest / name;
    std::filesystem::create_directories(target);
    std::filesystem::copy(source, target, std::filesystem::copy_options::recursive);
    return target;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::filesystem::path write_config(const std::filesystem::path& dir, const nlohmann::json& overrides) {
    nlohmann::json config = {
        {"version", 1},
        {"task", "qa"},
        {"candidates", "candidates.jsonl"},
        {"references", "references.jsonl"},
        {"embeddings", {{"file", "embeddings.jsonl"}}},
        {"nli", {{"file", "nli.jsonl"}}},
        {"output_dir", "out"},
        {"deterministic", true},
    };
    if (overrides.is_object()) {
        for (const auto& [key, value] : overrides.items()) {
            if (value.is_null()) {
                config.erase(key);
            } else {
                config[key] = value;
            }
        }
    }
    const auto path = dir / "config.json";
    write_text(path, config.dump(2));
    return path;
}

void write_synthetic_qa(const std::filesystem::path& dir, const SyntheticQa& o) {
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::ofstream candidates(dir / "candidates.jsonl");
    std::ofstream references(dir / "references.jsonl");
    std::ofstream embeddings(dir / "embeddings.jsonl");
    std::ofstream nli(dir / "nli.jsonl");
    auto line = [](std::ofstream& out, const nlohmann::json& row) { out << row.dump() << '\n'; };

    for (std::size_t s = 0; s < o.samples; ++s) {
        const std::string id = o.id_prefix + std::to_string(s);
        const std::string answer = "Token" + std::to_string(s * 7919 % 100003);
        line(references, {{"sample_id", id}, {"task", "qa"}, {"answers", {answer}}});

        std::vector<double> center(o.dimension);
        for (auto& x : center) x = 3.0 * gauss(rng);

        // which ranks hold the planted answer
        std::vector<int> order(o.k);
        for (int r = 0; r < o.k; ++r) order[r] = r;
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<bool> correct(o.k, false);
        for (int p = 0; p < o.planted && p < o.k; ++p) correct[order[p]] = true;

        const std::array<std::string, 3> variants = {"Answer: " + answer + ".", "Answer: " + answer,
                                                     "answer:  " + answer + "!"};
        std::vector<std::string> texts(o.k);
        int variant = 0;
        int distractor = 0;
        for (int r = 0; r < o.k; ++r) {
            if (correct[r]) {
                texts[r] = variants[variant++ % variants.size()];
            } else {
                texts[r] = "Answer: Wrong" + std::to_string(s) + "x" + std::to_string(distractor++) + ".";
            }
        }
        for (int r = 0; r < o.k; ++r) {
            line(candidates, {{"sample_id", id}, {"rank", r}, {"text", texts[r]}});
            std::vector<double> v(o.dimension);
            const double spread = correct[r] ? o.cluster_noise : o.distractor_spread;
            for (std::size_t d = 0; d < o.dimension; ++d) v[d] = center[d] + spread * gauss(rng);
            line(embeddings, {{"sample_id", id}, {"rank", r}, {"vector", v}});
        }
        for (int p = 0; p < o.k; ++p) {
            for (int h = 0; h < o.k; ++h) {
                if (p == h) continue;
                const double value = correct[p] && correct[h] ? 0.85 + 0.1 * unit(rng) : 0.5 * unit(rng);
                line(nli, {{"sample_id", id}, {"premise_rank", p}, {"hypothesis_rank", h}, {"p_entail", value}});
            }
        }
    }
}

CliResult run_cli(const std::vector<std::string>& args, const std::string& env) {
    std::string command = env.empty() ? "" : env + " ";
    command += "'" + std::string(REFINE_CLI_PATH) + "'";
    for (const auto& arg : args) command += " '" + arg + "'";
    command += " 2>&1";
    CliResult result;
    FILE* pipe = ::popen(command.c_str(), "r");
    if (pipe == nullptr) throw std::runtime_error("popen failed");
    std::array<char, 4096> buffer;
    std::size_t n;
    while ((n = std::fread(buffer.data(), 1, buffer.size(), pipe)) > 0) result.output.append(buffer.data(), n);
    const int status = ::pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

}  // namespace refine::testing
