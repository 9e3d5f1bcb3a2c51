#include "printmatch/service.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "printmatch/error.hpp"
#include "printmatch/image_io.hpp"
#include "printmatch/mask_ops.hpp"
#include "printmatch/parallel.hpp"
#include "printmatch/rng.hpp"

namespace printmatch::service {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

const DesignRecord* IndexSnapshot::find_design(const std::string& id) const {
    for (const auto& d : designs)
        if (d.design_id == id) return &d;
    return nullptr;
}

IndexSnapshot build_snapshot(const DatasetManifest& manifest, const eval::MethodSpec& method,
                             const SnapshotOptions& opts) {
    std::vector<std::string> ids = opts.design_ids;
    if (ids.empty())
        for (const auto& d : manifest.designs()) ids.push_back(d.design_id);
    if (ids.empty()) throw InvalidArgument("snapshot: corpus has no designs");

    eval::FeatureStore store(manifest);
    parallel_for(ids.size(), [&](std::size_t i) { store.design_features(ids[i], method.feature); },
                 static_cast<unsigned>(opts.threads));

    std::optional<Vocabulary> vocab;
    if (method.local()) vocab = *store.vocabulary(ids, method.feature, method.clusters, opts.seed);

    MatcherIndex index = eval::build_index(store, ids, method, vocab ? &*vocab : nullptr, opts.alpha);
    IndexSnapshot s{method, std::move(vocab), std::move(index), {}, opts.built_at};

    std::map<std::string, std::string> product_of;
    for (const auto& p : manifest.products())
        for (const auto& d : p.design_ids) product_of[d] = p.product_id;
    for (const auto& id : ids) {
        const auto& entry = manifest.design(id);
        const auto path = std::filesystem::absolute(manifest.resolve(entry.path)).lexically_normal();
        const ImageBuffer img = read_image(path);
        s.designs.push_back({id, product_of[id], path.string(), img.width(), img.height()});
    }
    return s;
}

// PMIX1: magic, method label, built_at, pathway u8, alpha f64, vocabulary (u8 flag + PMVC1
// blob), design count, then per design: id, product, path, width, height and either the
// histogram (u32 N + counts) or the vector (u32 dim + f32 values, u8 flag + weights).
std::vector<std::uint8_t> encode_snapshot(const IndexSnapshot& s) {
    detail::ByteWriter w;
    w.raw("PMIX1", 5);
    w.str(s.method.label());
    w.str(s.built_at);
    w.u8(s.index.pathway() == Pathway::local ? 0 : 1);
    w.f64(s.index.alpha());
    w.u8(s.vocabulary ? 1 : 0);
    if (s.vocabulary) {
        const auto blob = encode_vocabulary(*s.vocabulary);
        w.u32(static_cast<std::uint32_t>(blob.size()));
        w.raw(blob.data(), blob.size());
    }
    w.u32(static_cast<std::uint32_t>(s.designs.size()));
    for (std::size_t i = 0; i < s.designs.size(); ++i) {
        const auto& d = s.designs[i];
        w.str(d.design_id);
        w.str(d.product_id);
        w.str(d.image_path);
        w.u32(static_cast<std::uint32_t>(d.width));
        w.u32(static_cast<std::uint32_t>(d.height));
        if (s.index.pathway() == Pathway::local) {
            const auto& h = s.index.histograms()[i];
            w.u32(static_cast<std::uint32_t>(h.counts.size()));
            for (auto c : h.counts) w.u32(c);
        } else {
            const auto& v = s.index.vectors()[i];
            w.u32(static_cast<std::uint32_t>(v.values.size()));
            for (float f : v.values) w.f32(f);
            w.u8(v.weights.empty() ? 0 : 1);
            for (float f : v.weights) w.f32(f);
        }
    }
    return std::move(w.bytes());
}

IndexSnapshot decode_snapshot(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes, "PMIX1");
    r.expect_magic("PMIX1", 5);
    const eval::MethodSpec method = eval::MethodSpec::parse(r.str());
    const std::string built_at = r.str();
    const std::uint8_t pathway = r.u8();
    if (pathway > 1) throw ParseError("PMIX1: bad pathway tag");
    if ((pathway == 0) != method.local()) throw ParseError("PMIX1: pathway does not match method " + method.label());
    const double alpha = r.f64();
    std::optional<Vocabulary> vocab;
    if (r.u8()) {
        const std::uint32_t n = r.u32();
        r.need(n);
        std::vector<std::uint8_t> blob(n);
        for (auto& b : blob) b = r.u8();
        vocab = decode_vocabulary(blob);
    }
    if (method.local() && !vocab) throw ParseError("PMIX1: local method without vocabulary");

    const std::uint32_t count = r.u32();
    std::vector<std::string> ids;
    std::vector<DesignRecord> designs;
    std::vector<BowHistogram> hists;
    std::vector<GlobalDescriptor> vectors;
    for (std::uint32_t i = 0; i < count; ++i) {
        DesignRecord d;
        d.design_id = r.str();
        d.product_id = r.str();
        d.image_path = r.str();
        d.width = static_cast<int>(r.u32());
        d.height = static_cast<int>(r.u32());
        const std::uint32_t len = r.u32();
        r.need(static_cast<std::size_t>(len) * 4);
        if (pathway == 0) {
            BowHistogram h;
            h.counts.resize(len);
            for (auto& c : h.counts) c = r.u32();
            hists.push_back(std::move(h));
        } else {
            GlobalDescriptor g;
            g.type = method.feature;
            g.values.resize(len);
            for (auto& f : g.values) f = r.f32();
            if (r.u8()) {
                r.need(static_cast<std::size_t>(len) * 4);
                g.weights.resize(len);
                for (auto& f : g.weights) f = r.f32();
            }
            vectors.push_back(std::move(g));
        }
        ids.push_back(d.design_id);
        designs.push_back(std::move(d));
    }
    if (!r.done()) throw ParseError("PMIX1: trailing bytes");
    if (vocab)
        for (const auto& h : hists)
            if (static_cast<int>(h.counts.size()) != vocab->n) throw ParseError("PMIX1: histogram length != vocabulary size");

    MatcherIndex index = pathway == 0 ? MatcherIndex::local(ids, std::move(hists), alpha)
                                      : MatcherIndex::global(ids, std::move(vectors));
    return IndexSnapshot{method, std::move(vocab), std::move(index), std::move(designs), built_at};
}

void save_snapshot(const std::filesystem::path& path, const IndexSnapshot& s) { write_file_bytes(path, encode_snapshot(s)); }

IndexSnapshot load_snapshot(const std::filesystem::path& path) { return decode_snapshot(read_file_bytes(path)); }

// --- online matching --------------------------------------------------------------

MatchService::MatchService(std::optional<std::filesystem::path> confirm_log, GbvsConfig gbvs)
    : gbvs_(gbvs), log_path_(std::move(confirm_log)) {
    gbvs_.validate();
}

void MatchService::publish(std::shared_ptr<const IndexSnapshot> snapshot) {
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = std::move(snapshot);
}

std::shared_ptr<const IndexSnapshot> MatchService::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
}

MatchResponse MatchService::match(const MatchRequest& request) {
    const auto start = Clock::now();
    const auto snap = snapshot();
    if (!snap) throw Unavailable("no index snapshot loaded");
    if (request.k < 1) throw InvalidArgument("k must be >= 1");

    MatchResponse resp;
    resp.method = snap->method.label();

    auto t = Clock::now();
    ImageBuffer photo;
    try {
        photo = decode_image(request.photo);
    } catch (const Error& e) {
        throw ParseError(std::string("undecodable photo: ") + e.what());
    }
    std::optional<ImageBuffer> uploaded_mask;
    if (request.mask) {
        try {
            uploaded_mask = to_gray_u8(decode_image(*request.mask));
        } catch (const Error& e) {
            throw ParseError(std::string("undecodable mask: ") + e.what());
        }
    }
    resp.timings.upload = seconds_since(t);

    // online segmentation: the method's own when its inputs are at hand, gbvs otherwise
    t = Clock::now();
    SegmentationMethod seg = snap->method.segmentation;
    using Kind = SegmentationMethod::Kind;
    if (uploaded_mask && (seg.kind == Kind::external || seg.kind == Kind::manual)) {
        if (uploaded_mask->width() > photo.width() || uploaded_mask->height() > photo.height())
            throw InvalidArgument("mask is larger than the photo");
        resp.mask = upsample_binarize(*uploaded_mask, photo.width(), photo.height());
        resp.segmentation = seg.kind == Kind::external ? seg.name + " (uploaded)" : "manual (uploaded mask)";
    } else {
        if (seg.kind == Kind::external || (seg.kind == Kind::manual && !request.rect)) seg = SegmentationMethod::parse("gbvs");
        SegmentationContext ctx{nullptr, "upload", request.rect, gbvs_};
        if (request.rect && !request.rect->fits(photo.width(), photo.height()))
            throw InvalidArgument("rect does not fit inside the photo");
        resp.mask = segment(photo, seg, ctx);
        resp.segmentation = seg.label();
    }
    resp.timings.segmentation = seconds_since(t);

    t = Clock::now();
    const Extracted feats = extract(photo, resp.mask, snap->method.feature, "upload").features;
    resp.timings.extraction = seconds_since(t);

    t = Clock::now();
    const Ranking ranking = snap->method.local()
                                ? rank_bayes(quantize(std::get<FeatureSet>(feats), *snap->vocabulary), snap->index)
                                : rank_euclidean(std::get<GlobalDescriptor>(feats), snap->index);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(request.k), ranking.entries.size());
    for (std::size_t i = 0; i < k; ++i)
        resp.results.push_back({static_cast<int>(i + 1), ranking.entries[i].design_id, ranking.entries[i].score});
    resp.timings.matching = seconds_since(t);

    {
        std::lock_guard lock(log_mutex_);
        char buf[40];
        std::snprintf(buf, sizeof buf, "%016llx-%llu",
                      static_cast<unsigned long long>(fnv1a(std::string_view(
                          reinterpret_cast<const char*>(request.photo.data()), request.photo.size()))),
                      static_cast<unsigned long long>(next_token_++));
        resp.token = buf;
        tokens_[resp.token] = resp.method;
    }
    resp.timings.total = seconds_since(start);
    return resp;
}

std::string MatchService::confirm(const std::string& token, const std::string& design_id) {
    const auto snap = snapshot();
    std::lock_guard lock(log_mutex_);
    const auto it = tokens_.find(token);
    if (it == tokens_.end()) throw ReferenceError("unknown token \"" + token + "\"", token);
    if (snap && !snap->find_design(design_id))
        throw ReferenceError("unknown design \"" + design_id + "\"", design_id);
    nlohmann::ordered_json line{{"timestamp", utc_now()}, {"token", token}, {"design_id", design_id}, {"method", it->second}};
    const std::string text = line.dump();
    if (log_path_) {
        if (log_path_->has_parent_path()) std::filesystem::create_directories(log_path_->parent_path());
        std::ofstream out(*log_path_, std::ios::app | std::ios::binary);
        if (!out) throw IoError("cannot append to " + log_path_->string());
        out << text << '\n';
        out.flush();
        if (!out) throw IoError("write failed on " + log_path_->string());
    }
    ++confirmations_;
    return text;
}

std::size_t MatchService::confirmations() const {
    std::lock_guard lock(log_mutex_);
    return confirmations_;
}

}  // namespace printmatch::service
