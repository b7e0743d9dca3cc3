#include "chartagent/evidence.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>

namespace chartagent::evidence {

namespace fs = std::filesystem;

std::string sha256_hex(const void* data, size_t len) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data, len) != 1 ||
        EVP_DigestFinal_ex(ctx, digest, &digest_len) != 1) {
        EVP_MD_CTX_free(ctx);
        fail("DigestFailure", "sha256 computation failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out(digest_len * 2, '0');
    for (unsigned int i = 0; i < digest_len; ++i) {
        out[2 * i] = hex[digest[i] >> 4];
        out[2 * i + 1] = hex[digest[i] & 0xF];
    }
    return out;
}

std::string sha256_hex(const std::string& s) {
    return sha256_hex(s.data(), s.size());
}

std::string sha256_hex(const std::vector<uint8_t>& v) {
    return sha256_hex(v.data(), v.size());
}

const std::string& genesis_digest() {
    static const std::string g = sha256_hex("", 0);
    return g;
}

namespace {

void canonical_dump_rec(const json& j, std::string& out) {
    switch (j.type()) {
        case json::value_t::object: {
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                out += json(it.key()).dump();
                out += ':';
                canonical_dump_rec(it.value(), out);
            }
            out += '}';
            break;
        }
        case json::value_t::array: {
            out += '[';
            for (size_t i = 0; i < j.size(); ++i) {
                if (i) out += ',';
                canonical_dump_rec(j[i], out);
            }
            out += ']';
            break;
        }
        case json::value_t::number_float: {
            const double v = j.get<double>();
            if (std::isfinite(v)) {
                char buf[40];
                std::snprintf(buf, sizeof buf, "%.9g", v);
                out += buf;
            } else {
                out += "null";
            }
            break;
        }
        default:
            out += j.dump();
    }
}

}  // namespace

std::string canonical_dump(const json& j) {
    std::string out;
    canonical_dump_rec(j, out);
    return out;
}

Artifact Artifact::inline_json(std::string kind, json payload) {
    Artifact a;
    a.kind = std::move(kind);
    a.payload = std::move(payload);
    return a;
}

Artifact Artifact::file_blob(std::string kind, std::string ext,
                             std::vector<uint8_t> blob) {
    Artifact a;
    a.kind = std::move(kind);
    a.ext = std::move(ext);
    a.digest = sha256_hex(blob);
    a.bytes = int64_t(blob.size());
    a.blob = std::move(blob);
    return a;
}

namespace {

json artifact_canonical(const Artifact& a) {
    if (a.file_backed())
        return json{{"bytes", a.bytes},
                    {"digest", a.digest},
                    {"file", a.file},
                    {"kind", a.kind}};
    return json{{"kind", a.kind}, {"payload", a.payload}};
}

std::string item_hash(const EvidenceItem& item) {
    return sha256_hex(item.prev_hash + canonical_dump(item.canonical_payload()));
}

}  // namespace

json EvidenceItem::canonical_payload() const {
    json arts = json::array();
    for (const Artifact& a : artifacts) arts.push_back(artifact_canonical(a));
    return json{{"artifacts", arts}, {"id", id},      {"params", params},
                {"step", step},      {"summary", summary}, {"tool", tool}};
}

const EvidenceItem* EvidencePackage::find_item(int id) const {
    if (id < 1 || id > int(items.size())) return nullptr;
    return &items[id - 1];
}

std::optional<int> verify_chain(const EvidencePackage& package) {
    std::string prev = genesis_digest();
    for (const EvidenceItem& item : package.items) {
        if (item.prev_hash != prev || item.hash != item_hash(item))
            return item.id;
        prev = item.hash;
    }
    return std::nullopt;
}

EvidenceItem& append(EvidencePackage& package, int step,
                     const std::string& tool, json params,
                     const std::string& summary,
                     std::vector<Artifact> artifacts) {
    if (auto broken = verify_chain(package))
        fail("ChainBroken", "hash chain invalid at item " +
                                std::to_string(*broken));
    EvidenceItem item;
    item.id = int(package.items.size()) + 1;
    item.step = step;
    item.tool = tool;
    item.params = std::move(params);
    item.summary = summary;
    item.artifacts = std::move(artifacts);
    for (size_t k = 0; k < item.artifacts.size(); ++k) {
        Artifact& a = item.artifacts[k];
        if (!a.file_backed()) {
            // Spill oversized inline payloads to a file-backed blob.
            std::string dumped = canonical_dump(a.payload);
            if (dumped.size() > kInlinePayloadCap) {
                a = Artifact::file_blob(
                    a.kind, "json",
                    std::vector<uint8_t>(dumped.begin(), dumped.end()));
            }
        }
        if (a.file_backed() && a.file.empty()) {
            a.file = "artifacts/item_" + std::to_string(item.id) + "_" +
                     std::to_string(k) + "." + (a.ext.empty() ? "bin" : a.ext);
        }
    }
    item.prev_hash =
        package.items.empty() ? genesis_digest() : package.items.back().hash;
    item.hash = item_hash(item);
    item.timestamp_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::system_clock::now().time_since_epoch())
                            .count();
    package.items.push_back(std::move(item));
    package.index[tool].push_back(package.items.back().id);
    return package.items.back();
}

namespace {

json artifact_to_json(const Artifact& a) {
    json j = artifact_canonical(a);
    if (a.file_backed() && !a.ext.empty()) j["ext"] = a.ext;
    return j;
}

Artifact artifact_from_json(const json& j) {
    Artifact a;
    a.kind = j.at("kind").get<std::string>();
    if (j.contains("digest")) {
        a.digest = j.at("digest").get<std::string>();
        a.file = j.at("file").get<std::string>();
        a.bytes = j.at("bytes").get<int64_t>();
        if (j.contains("ext")) a.ext = j.at("ext").get<std::string>();
    } else {
        a.payload = j.at("payload");
    }
    return a;
}

}  // namespace

std::string serialize(const EvidencePackage& package) {
    json items = json::array();
    for (const EvidenceItem& item : package.items) {
        json arts = json::array();
        for (const Artifact& a : item.artifacts)
            arts.push_back(artifact_to_json(a));
        items.push_back(json{{"artifacts", arts},
                             {"hash", item.hash},
                             {"id", item.id},
                             {"params", item.params},
                             {"prev_hash", item.prev_hash},
                             {"step", item.step},
                             {"summary", item.summary},
                             {"timestamp_ms", item.timestamp_ms},
                             {"tool", item.tool}});
    }
    json index = json::object();
    for (const auto& [tool, ids] : package.index) index[tool] = ids;
    const json j{{"algorithm", package.algorithm},
                 {"config", package.config},
                 {"final_answer", package.final_answer},
                 {"final_verdict", package.final_verdict},
                 {"image_digest", package.image_digest},
                 {"incomplete", package.incomplete},
                 {"index", index},
                 {"items", items},
                 {"question", package.question},
                 {"seed", package.seed}};
    return canonical_dump(j);
}

EvidencePackage deserialize(const std::string& bytes) {
    json j = json::parse(bytes, nullptr, false);
    if (j.is_discarded()) fail("SchemaViolation", "package is not valid JSON");
    EvidencePackage p;
    try {
        p.algorithm = j.at("algorithm").get<std::string>();
        p.image_digest = j.at("image_digest").get<std::string>();
        p.question = j.at("question").get<std::string>();
        p.config = j.at("config");
        p.seed = j.at("seed").get<uint64_t>();
        p.final_answer = j.at("final_answer");
        p.final_verdict = j.at("final_verdict");
        p.incomplete = j.at("incomplete").get<bool>();
        for (const json& ji : j.at("items")) {
            EvidenceItem item;
            item.id = ji.at("id").get<int>();
            item.step = ji.at("step").get<int>();
            item.tool = ji.at("tool").get<std::string>();
            item.params = ji.at("params");
            item.summary = ji.at("summary").get<std::string>();
            item.prev_hash = ji.at("prev_hash").get<std::string>();
            item.hash = ji.at("hash").get<std::string>();
            item.timestamp_ms = ji.at("timestamp_ms").get<int64_t>();
            for (const json& ja : ji.at("artifacts"))
                item.artifacts.push_back(artifact_from_json(ja));
            p.items.push_back(std::move(item));
        }
        for (auto it = j.at("index").begin(); it != j.at("index").end(); ++it)
            p.index[it.key()] = it.value().get<std::vector<int>>();
    } catch (const json::exception& e) {
        fail("SchemaViolation", std::string("package field error: ") + e.what());
    }
    return p;
}

void save_package(const EvidencePackage& package, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "artifacts");
    write_file_bytes((fs::path(dir) / "package.json").string(),
                     serialize(package));
    for (const EvidenceItem& item : package.items)
        for (const Artifact& a : item.artifacts)
            if (a.file_backed() && !a.blob.empty())
                write_file_bytes((fs::path(dir) / a.file).string(), a.blob);
}

EvidencePackage load_package(const std::string& dir) {
    const auto bytes = read_file_bytes((fs::path(dir) / "package.json").string());
    EvidencePackage pkg = deserialize(std::string(bytes.begin(), bytes.end()));
    for (EvidenceItem& item : pkg.items)
        for (Artifact& a : item.artifacts) {
            if (!a.file_backed()) continue;
            a.blob = read_file_bytes((fs::path(dir) / a.file).string());
            if (int64_t(a.blob.size()) != a.bytes ||
                sha256_hex(a.blob) != a.digest)
                fail("ChainBroken",
                     "artifact blob does not match its recorded digest: " +
                         a.file);
        }
    return pkg;
}

bool ReplayReport::all_match() const {
    for (const ReplayDiff& d : items)
        if (!d.match || !d.chain_ok) return false;
    return true;
}

std::string ReplayReport::to_string() const {
    std::string out;
    for (const ReplayDiff& d : items) {
        out += "item " + std::to_string(d.id) + ": ";
        if (d.chain_ok && d.match) {
            out += "ok\n";
        } else {
            out += (d.chain_ok ? "mismatch" : "chain broken");
            if (!d.diff.empty()) out += " (" + d.diff + ")";
            out += '\n';
        }
    }
    return out;
}

namespace {

std::string compare_items(const EvidenceItem& a, const EvidenceItem& b) {
    if (a.tool != b.tool) return "tool " + a.tool + " vs " + b.tool;
    if (canonical_dump(a.params) != canonical_dump(b.params)) return "params";
    if (a.summary != b.summary) return "summary";
    if (a.artifacts.size() != b.artifacts.size()) return "artifact count";
    for (size_t k = 0; k < a.artifacts.size(); ++k) {
        const Artifact& x = a.artifacts[k];
        const Artifact& y = b.artifacts[k];
        if (x.kind != y.kind) return "artifact " + std::to_string(k) + " kind";
        if (x.file_backed() != y.file_backed() || x.digest != y.digest ||
            canonical_dump(x.payload) != canonical_dump(y.payload))
            return "artifact " + std::to_string(k) + " content";
    }
    return {};
}

}  // namespace

ReplayReport replay_verify(const EvidencePackage& package,
                           const ChartImage& image,
                           const ReplayRunner& runner) {
    if (sha256_hex(encode_ppm(image)) != package.image_digest)
        fail("ImageMismatch", "image digest differs from the recorded episode");
    for (const EvidenceItem& item : package.items)
        if (!runner.has_tool(item.tool))
            fail("MissingTool", "tool not available for replay: " + item.tool);

    const auto broken = verify_chain(package);
    const EvidencePackage redone = runner.rerun(package, image);

    ReplayReport report;
    const size_t n = std::max(package.items.size(), redone.items.size());
    for (size_t i = 0; i < n; ++i) {
        ReplayDiff d;
        d.id = int(i) + 1;
        if (broken && d.id >= *broken) d.chain_ok = false;
        if (i >= package.items.size()) {
            d.match = false;
            d.diff = "extra replayed item";
        } else if (i >= redone.items.size()) {
            d.match = false;
            d.diff = "missing in replay";
        } else {
            d.diff = compare_items(package.items[i], redone.items[i]);
            d.match = d.diff.empty();
        }
        report.items.push_back(std::move(d));
    }
    return report;
}

}  // namespace chartagent::evidence
