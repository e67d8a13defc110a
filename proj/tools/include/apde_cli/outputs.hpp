#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace apde::cli {

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes);
std::uint64_t fnv1a(const std::string& text);
std::uint64_t fnv1a_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

void write_text(const std::filesystem::path& path, const std::string& text);

struct ManifestEntry {
    std::string path; ///< relative to the run directory
    std::uint64_t bytes = 0;
    std::string fnv1a;
};

/// Every regular file below `root` except manifest.json, sorted by path.
std::vector<ManifestEntry> list_outputs(const std::filesystem::path& root);

/// Output directory that only becomes visible under its final name on
/// commit(); an uncommitted staging directory is removed on destruction.
class StagedDirectory {
public:
    explicit StagedDirectory(std::filesystem::path final_path);
    ~StagedDirectory();
    StagedDirectory(const StagedDirectory&) = delete;
    StagedDirectory& operator=(const StagedDirectory&) = delete;

    const std::filesystem::path& path() const { return staging_; }
    const std::filesystem::path& final_path() const { return final_; }
    /// Replaces any previous directory at the final path.
    void commit();

private:
    std::filesystem::path final_;
    std::filesystem::path staging_;
    bool committed_ = false;
};

} // namespace apde::cli
