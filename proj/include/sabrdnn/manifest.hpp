#pragma once

#include <fstream>
#include <string>

#include "json.hpp"

namespace sabrdnn {

inline constexpr const char* kVersion = "0.1.0";

// Writes to a sibling temp file; the target appears only on commit().
class AtomicWriter {
public:
    explicit AtomicWriter(std::string path);
    ~AtomicWriter();
    AtomicWriter(const AtomicWriter&) = delete;
    AtomicWriter& operator=(const AtomicWriter&) = delete;

    std::ostream& stream() { return out_; }
    void commit();

private:
    std::string path_, tmp_;
    std::ofstream out_;
    bool done_ = false;
};

void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);
nlohmann::json read_json(const std::string& path);

// Writes <output>.manifest.json: command, full config, seeds, library versions.
void write_manifest(const std::string& output_path, const std::string& command, const nlohmann::json& config);
std::string manifest_path(const std::string& output_path);

}  // namespace sabrdnn
