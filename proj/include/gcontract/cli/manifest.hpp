#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>
#include <openssl/evp.h>

namespace gcontract::cli {

inline std::string sha256_hex(const std::string& data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return out.str();
}

/// Writes output files into one directory and records each with its size and
/// SHA-256 in manifest.json. Nothing time- or host-dependent is recorded.
class OutputDirectory {
public:
    OutputDirectory(std::filesystem::path dir, std::string command, nlohmann::json config, std::uint64_t seed)
        : dir_(std::move(dir))
    {
        std::filesystem::create_directories(dir_);
        manifest_["command"] = std::move(command);
        manifest_["config"] = std::move(config);
        manifest_["seed"] = seed;
        manifest_["files"] = nlohmann::json::array();
        manifest_["results"] = nlohmann::json::object();
    }

    void write(const std::string& name, const std::string& content)
    {
        const auto path = dir_ / name;
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
        out << content;
        if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
        manifest_["files"].push_back({{"path", name}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
    }

    nlohmann::json& results() { return manifest_["results"]; }
    const nlohmann::json& manifest() const { return manifest_; }

    /// Writes manifest.json; call once, after every data file.
    void finish()
    {
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        out << manifest_.dump(2) << '\n';
        if (!out) throw std::runtime_error("cannot write manifest");
    }

private:
    std::filesystem::path dir_;
    nlohmann::json manifest_;
};

} // namespace gcontract::cli
