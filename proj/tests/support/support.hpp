#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace refine::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

/// Copies tests/fixtures/<name> into `dest` and returns the copy's path.
std::filesystem::path copy_fixture(const std::string& name, const std::filesystem::path& dest);

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

/// Writes `config` (merged over a file-backed default) to dir/config.json.
std::filesystem::path write_config(const std::filesystem::path& dir, const nlohmann::json& overrides = {});

struct SyntheticQa {
    std::size_t samples = 500;
    int k = 5;
    int planted = 3;          // surface variants of the correct answer per sample
    std::size_t dimension = 8;
    double cluster_noise = 0.01;   // spread of the planted variants around the sample center
    double distractor_spread = 1.0;
    std::uint64_t seed = 1;
    std::string id_prefix = "s";
};

/// Candidates, references, embeddings and NLI for a qa corpus in which each
/// sample carries `planted` near-duplicate correct answers at random ranks
/// among scattered distractors.
void write_synthetic_qa(const std::filesystem::path& dir, const SyntheticQa& options);

struct CliResult {
    int exit_code = 0;
    std::string output;  // stdout and stderr
};

/// Runs the refine executable with `args` and the given extra environment.
CliResult run_cli(const std::vector<std::string>& args, const std::string& env = {});

}  // namespace refine::testing
