#include "sabrdnn/manifest.hpp"

#include <Eigen/Core>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "sabrdnn/error.hpp"

namespace sabrdnn {

AtomicWriter::AtomicWriter(std::string path) : path_(std::move(path)), tmp_(path_ + ".partial") {
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) fail(ErrorKind::Io, "cannot open " + tmp_ + " for writing");
}

AtomicWriter::~AtomicWriter() {
    if (!done_) {
        out_.close();
        std::error_code ec;
        std::filesystem::remove(tmp_, ec);
    }
}

void AtomicWriter::commit() {
    out_.flush();
    if (!out_) fail(ErrorKind::Io, "write failed: " + tmp_);
    out_.close();
    std::error_code ec;
    std::filesystem::rename(tmp_, path_, ec);
    if (ec) fail(ErrorKind::Io, "cannot rename " + tmp_ + " to " + path_ + ": " + ec.message());
    done_ = true;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    AtomicWriter w(path);
    w.stream() << content;
    w.commit();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, path + ": " + e.what());
    }
}

std::string manifest_path(const std::string& output_path) { return output_path + ".manifest.json"; }

void write_manifest(const std::string& output_path, const std::string& command, const nlohmann::json& config) {
    nlohmann::json m;
    m["tool"] = "sabrdnn";
    m["version"] = kVersion;
    m["command"] = command;
    m["config"] = config;
    m["output"] = std::filesystem::path(output_path).filename().string();
    m["libraries"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                    "." + std::to_string(EIGEN_MINOR_VERSION)},
                      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                            std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                            std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    write_file_atomic(manifest_path(output_path), m.dump(2) + "\n");
}

}  // namespace sabrdnn
