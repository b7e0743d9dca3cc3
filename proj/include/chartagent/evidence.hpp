#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chartagent/common.hpp"
#include "chartagent/image.hpp"

namespace chartagent::evidence {

using nlohmann::json;

// Hex-encoded SHA-256.
std::string sha256_hex(const void* data, size_t len);
std::string sha256_hex(const std::string& s);
std::string sha256_hex(const std::vector<uint8_t>& v);

// Digest the chain starts from: the hash of the empty string.
const std::string& genesis_digest();

// Canonical JSON: keys sorted, floats printed with 9 significant digits,
// no whitespace. Parsing the output and dumping again is byte-stable.
std::string canonical_dump(const json& j);

struct Artifact {
    std::string kind;  // bbox_set|mask_ref|overlay_image_ref|text_items|
                       // table|vote_log|calibration|reading
    json payload;                // inline form
    std::vector<uint8_t> blob;   // file-backed form (payload ignored)
    std::string file;            // relative path under the package root
    std::string digest;          // sha256 of blob
    int64_t bytes = 0;
    std::string ext;             // suffix used when the blob is materialized

    static Artifact inline_json(std::string kind, json payload);
    static Artifact file_blob(std::string kind, std::string ext,
                              std::vector<uint8_t> blob);
    bool file_backed() const { return !digest.empty(); }
};

// Inline artifact payloads above this size are spilled to files.
inline constexpr size_t kInlinePayloadCap = 64 * 1024;

struct EvidenceItem {
    int id = 0;    // dense from 1
    int step = 0;  // round index
    std::string tool;
    json params;
    std::string summary;
    std::vector<Artifact> artifacts;
    std::string prev_hash;
    std::string hash;
    int64_t timestamp_ms = 0;  // recorded, never hashed

    // The hashed view: canonical serialization without hashes/timestamp.
    json canonical_payload() const;
};

struct EvidencePackage {
    std::string algorithm = "sha256";
    std::string image_digest;
    std::string question;
    json config;
    uint64_t seed = 0;
    std::vector<EvidenceItem> items;
    std::map<std::string, std::vector<int>> index;  // tool -> item ids
    json final_answer;
    json final_verdict;
    bool incomplete = false;

    const EvidenceItem* find_item(int id) const;
};

// Appends a new item, verifying the existing chain first.
EvidenceItem& append(EvidencePackage& package, int step,
                     const std::string& tool, json params,
                     const std::string& summary,
                     std::vector<Artifact> artifacts = {});

// Id of the first item whose hash fails to verify, if any.
std::optional<int> verify_chain(const EvidencePackage& package);

std::string serialize(const EvidencePackage& package);
EvidencePackage deserialize(const std::string& bytes);

// package.json + artifacts/ blobs under `dir`.
void save_package(const EvidencePackage& package, const std::string& dir);
EvidencePackage load_package(const std::string& dir);

struct ReplayDiff {
    int id = 0;
    bool chain_ok = true;
    bool match = true;
    std::string diff;
};

struct ReplayReport {
    std::vector<ReplayDiff> items;
    bool all_match() const;
    std::string to_string() const;
};

// Re-runs the episode a package records; implemented by the orchestrator.
class ReplayRunner {
  public:
    virtual ~ReplayRunner() = default;
    virtual bool has_tool(const std::string& name) const = 0;
    virtual EvidencePackage rerun(const EvidencePackage& recorded,
                                  const ChartImage& image) const = 0;
};

// Verifies the chain, re-executes the recorded episode, and compares the
// two item streams. Throws ImageMismatch before re-execution when the image
// digest differs, MissingTool when a recorded tool is not available.
ReplayReport replay_verify(const EvidencePackage& package,
                           const ChartImage& image,
                           const ReplayRunner& runner);

}  // namespace chartagent::evidence
