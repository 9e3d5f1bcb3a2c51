#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "printmatch/error.hpp"
#include "printmatch/eval.hpp"
#include "printmatch/matcher.hpp"
#include "printmatch/vocabulary.hpp"

namespace printmatch::service {

struct DesignRecord {
    std::string design_id;
    std::string product_id;
    std::string image_path;  // absolute
    int width = 0;
    int height = 0;
};

/// Offline-built matching index. Never modified after it is published.
struct IndexSnapshot {
    eval::MethodSpec method;
    std::optional<Vocabulary> vocabulary;  // local pathway only
    MatcherIndex index;
    std::vector<DesignRecord> designs;     // parallel to index.design_ids()
    std::string built_at;

    const DesignRecord* find_design(const std::string& id) const;
};

struct SnapshotOptions {
    std::uint64_t seed = 1;
    std::string built_at;                  // caller-supplied so rebuilds can be byte-identical
    std::vector<std::string> design_ids;   // empty: every design in the manifest
    double alpha = 1.0;
    int threads = 0;
};

IndexSnapshot build_snapshot(const DatasetManifest& manifest, const eval::MethodSpec& method,
                             const SnapshotOptions& opts = {});

std::vector<std::uint8_t> encode_snapshot(const IndexSnapshot& s);
IndexSnapshot decode_snapshot(std::span<const std::uint8_t> bytes);
void save_snapshot(const std::filesystem::path& path, const IndexSnapshot& s);
IndexSnapshot load_snapshot(const std::filesystem::path& path);

struct StageTimings {
    double upload = 0;        // decoding the uploaded bytes
    double segmentation = 0;
    double extraction = 0;
    double matching = 0;
    double total = 0;
};

struct MatchRequest {
    std::vector<std::uint8_t> photo;             // PNG or PGM bytes
    int k = 10;
    std::optional<Rect> rect;                    // operator-drawn product rectangle
    std::optional<std::vector<std::uint8_t>> mask;  // PGM/PNG mask, any size
};

struct RankedDesign {
    int rank = 0;
    std::string design_id;
    double score = 0;
};

struct MatchResponse {
    std::string token;
    std::string method;
    std::string segmentation;  // what actually ran
    std::vector<RankedDesign> results;
    StageTimings timings;
    BinaryMask mask;
};

/// Thrown when there is no snapshot to match against.
class Unavailable : public Error {
public:
    using Error::Error;
};

/// Online matcher over the current snapshot plus the confirmation log.
class MatchService {
public:
    explicit MatchService(std::optional<std::filesystem::path> confirm_log = std::nullopt, GbvsConfig gbvs = {});

    /// Atomically replaces the snapshot; requests already running keep the old one.
    void publish(std::shared_ptr<const IndexSnapshot> snapshot);
    std::shared_ptr<const IndexSnapshot> snapshot() const;

    /// ParseError for undecodable photos, Unavailable without a snapshot.
    MatchResponse match(const MatchRequest& request);

    /// Appends one line to the confirmation log. ReferenceError for an unknown token
    /// or a design that is not in the snapshot.
    std::string confirm(const std::string& token, const std::string& design_id);

    std::size_t confirmations() const;

private:
    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const IndexSnapshot> snapshot_;
    GbvsConfig gbvs_;

    mutable std::mutex log_mutex_;
    std::optional<std::filesystem::path> log_path_;
    std::map<std::string, std::string> tokens_;  // token -> snapshot method label
    std::uint64_t next_token_ = 1;
    std::size_t confirmations_ = 0;
};

/// JSON body of a match response.
std::string response_json(const MatchResponse& r, bool include_mask = false);

/// Serves the HTTP API until stop() is called from another thread.
class HttpServer {
public:
    explicit HttpServer(MatchService& service, int default_k = 10);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Blocks serving requests.
    void serve();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace printmatch::service
