#include "printmatch/eval.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "printmatch/error.hpp"
#include "printmatch/image_io.hpp"
#include "printmatch/mask_ops.hpp"
#include "printmatch/ncc.hpp"
#include "printmatch/parallel.hpp"
#include "printmatch/rng.hpp"

namespace printmatch::eval {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::uint64_t hash_ids(const std::vector<std::string>& ids, std::uint64_t h) {
    for (const auto& id : ids) h = fnv1a(id + '\n', h);
    return h;
}

}  // namespace

// --- experiment sets -----------------------------------------------------------------

std::uint64_t ExperimentSet::hash() const {
    return hash_ids(design_ids, hash_ids(photo_ids, fnv1a("photos")) ^ fnv1a("designs"));
}

ExperimentSet sample_experiment(const DatasetManifest& manifest, int n_photos, int n_designs, std::uint64_t seed) {
    if (n_photos < 1 || n_designs < 1) throw InvalidArgument("experiment sizes must be positive");
    const auto& photos = manifest.photos();
    if (photos.size() < static_cast<std::size_t>(n_photos))
        throw InvalidArgument("insufficient corpus: " + std::to_string(photos.size()) + " photos, " +
                              std::to_string(n_photos) + " requested");

    Rng rng(seed);
    Rng photo_rng = rng.fork(1);
    Rng filler_rng = rng.fork(2);

    std::vector<std::string> pool;
    pool.reserve(photos.size());
    for (const auto& p : photos) pool.push_back(p.photo_id);
    photo_rng.shuffle(pool);
    pool.resize(static_cast<std::size_t>(n_photos));

    ExperimentSet set;
    set.seed = seed;
    set.photo_ids = pool;
    std::set<std::string> chosen;
    for (const auto& pid : set.photo_ids)
        for (const auto& did : manifest.product_of_photo(pid).design_ids)
            if (chosen.insert(did).second) set.design_ids.push_back(did);
    set.pair_designs = set.design_ids.size();
    if (set.pair_designs > static_cast<std::size_t>(n_designs))
        throw InvalidArgument("insufficient corpus: sampled photos own " + std::to_string(set.pair_designs) +
                              " designs, more than the " + std::to_string(n_designs) + " candidates requested");

    std::vector<std::string> fillers;
    for (const auto& d : manifest.designs())
        if (!chosen.contains(d.design_id)) fillers.push_back(d.design_id);
    const std::size_t need = static_cast<std::size_t>(n_designs) - set.pair_designs;
    if (fillers.size() < need)
        throw InvalidArgument("insufficient corpus: " + std::to_string(fillers.size()) +
                              " non-pair designs available, " + std::to_string(need) + " needed");
    filler_rng.shuffle(fillers);
    set.design_ids.insert(set.design_ids.end(), fillers.begin(), fillers.begin() + static_cast<std::ptrdiff_t>(need));
    return set;
}

std::vector<ExperimentSet> sample_experiments(const DatasetManifest& manifest, int count, int n_photos,
                                              int n_designs, std::uint64_t seed) {
    std::vector<ExperimentSet> sets;
    const Rng root(seed);
    for (int i = 0; i < count; ++i)
        sets.push_back(sample_experiment(manifest, n_photos, n_designs, root.fork(static_cast<std::uint64_t>(i)).next_u64()));
    return sets;
}

// --- methods ------------------------------------------------------------------------

std::string MethodSpec::label() const {
    std::string s = to_string(feature) + "-" + segmentation.tag();
    if (local()) s += "@" + std::to_string(clusters);
    return s;
}

MethodSpec MethodSpec::parse(const std::string& text, int default_clusters) {
    MethodSpec m;
    std::string body = text;
    m.clusters = default_clusters;
    if (const auto at = body.find('@'); at != std::string::npos) {
        const std::string n = body.substr(at + 1);
        std::size_t used = 0;
        try {
            m.clusters = std::stoi(n, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != n.size()) throw ParseError("method \"" + text + "\": bad cluster count");
        body.resize(at);
    }
    const auto dash = body.find('-');
    if (dash == std::string::npos) throw ParseError("method \"" + text + "\": expected FEATURE-SEGMENTATION");
    m.feature = parse_feature_type(body.substr(0, dash));
    m.segmentation = SegmentationMethod::parse(body.substr(dash + 1));
    if (m.local() && m.clusters < 2) throw ParseError("method \"" + text + "\": cluster count must be >= 2");
    return m;
}

std::vector<MethodSpec> default_methods(int clusters) {
    const char* segs[] = {"none", "manual", "gbvs", "external:vggreg", "external:fcn32s", "external:fcn8s"};
    std::vector<MethodSpec> out;
    for (auto f : {FeatureType::sift, FeatureType::dsift, FeatureType::hog, FeatureType::gist, FeatureType::deepspp}) {
        for (const char* s : segs) {
            MethodSpec m{f, SegmentationMethod::parse(s), clusters};
            // deep vectors are only paired with manual and vggreg masks
            if (f == FeatureType::deepspp && std::string(s) != "manual" && std::string(s) != "external:vggreg")
                continue;
            out.push_back(m);
        }
    }
    return out;
}

std::vector<MethodSpec> read_method_file(const std::filesystem::path& path, int default_clusters) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read method list " + path.string());
    std::vector<MethodSpec> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        try {
            out.push_back(MethodSpec::parse(line.substr(b, e - b + 1), default_clusters));
        } catch (const Error& err) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + err.what());
        }
    }
    if (out.empty()) throw ParseError(path.string() + ": no methods listed");
    return out;
}

StageTimes& StageTimes::operator+=(const StageTimes& o) {
    segmentation += o.segmentation;
    extraction += o.extraction;
    vocabulary += o.vocabulary;
    matching += o.matching;
    return *this;
}

// --- feature store ------------------------------------------------------------------

FeatureStore::FeatureStore(const DatasetManifest& manifest, GbvsConfig gbvs,
                           std::optional<std::filesystem::path> cache_dir)
    : manifest_(manifest), gbvs_(gbvs), cache_dir_(std::move(cache_dir)) {
    gbvs_.validate();
}

std::shared_ptr<const ImageBuffer> FeatureStore::image(const std::filesystem::path& path) {
    const std::string key = path.string();
    {
        std::lock_guard lock(mutex_);
        if (auto it = images_.find(key); it != images_.end()) return it->second;
    }
    auto img = std::make_shared<const ImageBuffer>(read_image(path));
    std::lock_guard lock(mutex_);
    return images_.emplace(key, img).first->second;
}

const BinaryMask& FeatureStore::photo_mask(const std::string& photo_id, const SegmentationMethod& seg) {
    const std::string key = photo_id + "|" + seg.tag();
    {
        std::lock_guard lock(mutex_);
        if (auto it = masks_.find(key); it != masks_.end()) return *it->second;
    }
    const auto& entry = manifest_.photo(photo_id);
    const auto img = image(manifest_.resolve(entry.path));
    const auto t0 = Clock::now();
    SegmentationContext ctx{&manifest_, photo_id, std::nullopt, gbvs_};
    auto mask = std::make_unique<BinaryMask>(segment(*img, seg, ctx));
    const double dt = seconds_since(t0);
    std::lock_guard lock(mutex_);
    times_.segmentation += dt;
    return *masks_.emplace(key, std::move(mask)).first->second;
}

Extracted FeatureStore::compute(const ImageBuffer& img, const BinaryMask& mask, FeatureType type,
                                const std::string& item_id, const std::optional<std::filesystem::path>& vector_path) {
    return extract(img, mask, type, item_id, vector_path).features;
}

namespace {

std::optional<Extracted> read_cached(const std::filesystem::path& file, FeatureType type) {
    if (!std::filesystem::exists(file)) return std::nullopt;
    FeatureFile f = read_feature_file(file);
    if (f.tag != to_string(type)) return std::nullopt;
    if (is_local(type)) {
        FeatureSet fs;
        fs.type = type;
        fs.descriptors = std::move(f.rows);
        return Extracted{std::move(fs)};
    }
    GlobalDescriptor g;
    g.type = type;
    g.values = std::move(f.rows.data);
    g.weights = std::move(f.weights);
    return Extracted{std::move(g)};
}

void write_cached(const std::filesystem::path& file, const Extracted& e, FeatureType type) {
    FeatureFile f;
    f.tag = to_string(type);
    if (const auto* fs = std::get_if<FeatureSet>(&e)) {
        f.rows = fs->descriptors;
        if (f.rows.dim == 0) f.rows.dim = type == FeatureType::hog ? 36 : 128;
    } else {
        const auto& g = std::get<GlobalDescriptor>(e);
        f.rows.dim = static_cast<int>(g.values.size());
        f.rows.data = g.values;
        f.weights = g.weights;
    }
    write_feature_file(file, f);
}

}  // namespace

const Extracted& FeatureStore::photo_features(const std::string& photo_id, FeatureType type,
                                              const SegmentationMethod& seg) {
    const std::string key = "photo|" + photo_id + "|" + to_string(type) + "|" + seg.tag();
    {
        std::lock_guard lock(mutex_);
        if (auto it = features_.find(key); it != features_.end()) return *it->second;
    }
    std::optional<std::filesystem::path> file;
    std::unique_ptr<Extracted> result;
    if (cache_dir_) {
        std::string seg_dir = seg.tag();
        std::replace(seg_dir.begin(), seg_dir.end(), ':', '_');
        file = *cache_dir_ / "photos" / to_string(type) / seg_dir / (photo_id + ".pmfv");
        if (auto cached = read_cached(*file, type)) result = std::make_unique<Extracted>(std::move(*cached));
    }
    if (!result) {
        const auto& entry = manifest_.photo(photo_id);
        std::optional<std::filesystem::path> vector_path;
        if (type == FeatureType::deepspp) {
            // a vector exported for this segmentation wins over the generic one
            auto it = entry.vectors.find("deepspp:" + seg.label());
            if (it == entry.vectors.end()) it = entry.vectors.find("deepspp");
            if (it == entry.vectors.end())
                throw MissingInputError("no deepspp vector for photo \"" + photo_id + "\"", photo_id);
            vector_path = manifest_.resolve(it->second);
            const auto t0 = Clock::now();
            result = std::make_unique<Extracted>(load_global_vector(*vector_path));
            std::lock_guard lock(mutex_);
            times_.extraction += seconds_since(t0);
        } else {
            const BinaryMask& mask = photo_mask(photo_id, seg);
            const auto img = image(manifest_.resolve(entry.path));
            const auto t0 = Clock::now();
            result = std::make_unique<Extracted>(compute(*img, mask, type, photo_id, std::nullopt));
            const double dt = seconds_since(t0);
            std::lock_guard lock(mutex_);
            times_.extraction += dt;
        }
        if (file) write_cached(*file, *result, type);
    }
    std::lock_guard lock(mutex_);
    return *features_.emplace(key, std::move(result)).first->second;
}

const Extracted& FeatureStore::design_features(const std::string& design_id, FeatureType type) {
    const std::string key = "design|" + design_id + "|" + to_string(type);
    {
        std::lock_guard lock(mutex_);
        if (auto it = features_.find(key); it != features_.end()) return *it->second;
    }
    std::optional<std::filesystem::path> file;
    std::unique_ptr<Extracted> result;
    if (cache_dir_) {
        file = *cache_dir_ / "designs" / to_string(type) / (design_id + ".pmfv");
        if (auto cached = read_cached(*file, type)) result = std::make_unique<Extracted>(std::move(*cached));
    }
    if (!result) {
        const auto& entry = manifest_.design(design_id);
        const auto t0 = Clock::now();
        if (type == FeatureType::deepspp) {
            const auto it = entry.vectors.find("deepspp");
            if (it == entry.vectors.end())
                throw MissingInputError("no deepspp vector for design \"" + design_id + "\"", design_id);
            result = std::make_unique<Extracted>(load_global_vector(manifest_.resolve(it->second)));
        } else {
            const auto img = image(manifest_.resolve(entry.path));
            result = std::make_unique<Extracted>(
                compute(*img, BinaryMask(img->width(), img->height(), true), type, design_id, std::nullopt));
        }
        const double dt = seconds_since(t0);
        if (file) write_cached(*file, *result, type);
        std::lock_guard lock(mutex_);
        times_.extraction += dt;
    }
    std::lock_guard lock(mutex_);
    return *features_.emplace(key, std::move(result)).first->second;
}

std::shared_ptr<const Vocabulary> FeatureStore::vocabulary(const std::vector<std::string>& design_ids, FeatureType type,
                                                           int clusters, std::uint64_t seed) {
    if (!is_local(type)) throw InvalidArgument("vocabulary requested for global feature " + to_string(type));
    std::vector<std::string> sorted = design_ids;
    std::sort(sorted.begin(), sorted.end());
    std::ostringstream key;
    key << std::hex << hash_ids(sorted, fnv1a(to_string(type))) << std::dec << "-" << clusters << "-" << seed;
    {
        std::lock_guard lock(mutex_);
        if (auto it = vocabularies_.find(key.str()); it != vocabularies_.end()) return it->second;
    }
    std::optional<std::filesystem::path> file;
    if (cache_dir_) {
        file = *cache_dir_ / "vocabularies" / (key.str() + ".pmvc");
        if (std::filesystem::exists(*file)) {
            auto v = std::make_shared<const Vocabulary>(load_vocabulary(*file));
            std::lock_guard lock(mutex_);
            return vocabularies_.emplace(key.str(), v).first->second;
        }
    }
    // pooled in the caller's order so the training data does not depend on sorting
    DescriptorMatrix pooled;
    for (const auto& id : design_ids) {
        const auto& fs = std::get<FeatureSet>(design_features(id, type));
        if (fs.size() == 0) continue;
        if (pooled.dim == 0) pooled.dim = fs.descriptors.dim;
        pooled.append(fs.descriptors.data);
    }
    if (pooled.rows() == 0) throw InvalidArgument("no descriptors to train a vocabulary on");
    const auto t0 = Clock::now();
    auto v = std::make_shared<const Vocabulary>(train_vocabulary(pooled, clusters, seed));
    const double dt = seconds_since(t0);
    if (file) save_vocabulary(*file, *v);
    std::lock_guard lock(mutex_);
    times_.vocabulary += dt;
    return vocabularies_.emplace(key.str(), v).first->second;
}

StageTimes FeatureStore::compute_times() const {
    std::lock_guard lock(mutex_);
    return times_;
}

// --- experiments --------------------------------------------------------------------

MatcherIndex build_index(FeatureStore& store, const std::vector<std::string>& design_ids, const MethodSpec& method,
                         const Vocabulary* vocab, double alpha) {
    if (method.local()) {
        if (!vocab) throw InvalidArgument("local method " + method.label() + " needs a vocabulary");
        std::vector<BowHistogram> hists;
        hists.reserve(design_ids.size());
        for (const auto& id : design_ids)
            hists.push_back(quantize(std::get<FeatureSet>(store.design_features(id, method.feature)), *vocab));
        return MatcherIndex::local(design_ids, std::move(hists), alpha);
    }
    std::vector<GlobalDescriptor> vectors;
    vectors.reserve(design_ids.size());
    for (const auto& id : design_ids) vectors.push_back(std::get<GlobalDescriptor>(store.design_features(id, method.feature)));
    return MatcherIndex::global(design_ids, std::move(vectors));
}

ExperimentResult run_experiment(const ExperimentSet& set, const MethodSpec& method, FeatureStore& store, int threads) {
    ExperimentResult result;
    result.set_hash = set.hash();
    const StageTimes before = store.compute_times();

    // warm the caches; extraction parallelizes per image
    parallel_for(set.design_ids.size(), [&](std::size_t i) { store.design_features(set.design_ids[i], method.feature); },
                 static_cast<unsigned>(threads));
    parallel_for(set.photo_ids.size(),
                 [&](std::size_t i) { store.photo_features(set.photo_ids[i], method.feature, method.segmentation); },
                 static_cast<unsigned>(threads));

    std::shared_ptr<const Vocabulary> vocab;
    if (method.local()) vocab = store.vocabulary(set.design_ids, method.feature, method.clusters, set.seed);

    const auto t0 = Clock::now();
    const MatcherIndex index = build_index(store, set.design_ids, method, vocab.get());
    result.orders.resize(set.photo_ids.size());
    parallel_for(set.photo_ids.size(), [&](std::size_t i) {
        const auto& pid = set.photo_ids[i];
        const auto& feats = store.photo_features(pid, method.feature, method.segmentation);
        Ranking r = method.local() ? rank_bayes(quantize(std::get<FeatureSet>(feats), *vocab), index)
                                   : rank_euclidean(std::get<GlobalDescriptor>(feats), index);
        const auto& designs = store.manifest().product_of_photo(pid).design_ids;
        const auto order = order_of_match(r.entries, std::set<std::string>(designs.begin(), designs.end()));
        if (!order) throw ReferenceError("true design of photo \"" + pid + "\" is not a candidate", pid);
        result.orders[i] = *order;
    }, static_cast<unsigned>(threads));
    const double matching = seconds_since(t0);

    const StageTimes after = store.compute_times();
    result.times.segmentation = after.segmentation - before.segmentation;
    result.times.extraction = after.extraction - before.extraction;
    result.times.vocabulary = after.vocabulary - before.vocabulary;
    result.times.matching = matching;
    return result;
}

TopKCurve topk_curve(const std::vector<int>& orders, int n_designs) {
    if (orders.empty()) throw InvalidArgument("top-k curve needs at least one order");
    if (n_designs < 1) throw InvalidArgument("top-k curve needs n_designs >= 1");
    std::vector<std::size_t> hist(static_cast<std::size_t>(n_designs) + 1, 0);
    for (int o : orders) {
        if (o < 1) throw InvalidArgument("order of match must be >= 1");
        if (o <= n_designs) ++hist[static_cast<std::size_t>(o)];
    }
    TopKCurve c;
    c.accuracy.resize(static_cast<std::size_t>(n_designs));
    std::size_t cum = 0;
    for (int k = 1; k <= n_designs; ++k) {
        cum += hist[static_cast<std::size_t>(k)];
        c.accuracy[static_cast<std::size_t>(k - 1)] = static_cast<double>(cum) / static_cast<double>(orders.size());
    }
    return c;
}

std::vector<int> MethodResult::all_orders() const {
    std::vector<int> out;
    for (const auto& e : experiments) out.insert(out.end(), e.orders.begin(), e.orders.end());
    return out;
}

double MethodResult::mean_order() const {
    const auto o = all_orders();
    return o.empty() ? 0.0 : std::accumulate(o.begin(), o.end(), 0.0) / static_cast<double>(o.size());
}

MethodResult run_method(const std::vector<ExperimentSet>& sets, const MethodSpec& method, FeatureStore& store,
                        int threads) {
    if (sets.empty()) throw InvalidArgument("no experiment sets");
    MethodResult r;
    r.method = method;
    r.n_designs = static_cast<int>(sets.front().design_ids.size());
    for (const auto& s : sets) {
        r.experiments.push_back(run_experiment(s, method, store, threads));
        r.times += r.experiments.back().times;
    }
    r.curve = topk_curve(r.all_orders(), r.n_designs);
    return r;
}

std::vector<MethodResult> cluster_sweep(const MethodSpec& base, const std::vector<int>& cluster_counts,
                                        const std::vector<ExperimentSet>& sets, FeatureStore& store, int threads) {
    if (!base.local()) throw InvalidArgument("cluster sweep needs a local feature, got " + base.label());
    std::vector<MethodResult> out;
    std::set<int> seen;
    for (int n : cluster_counts) {
        if (!seen.insert(n).second) continue;
        MethodSpec m = base;
        m.clusters = n;
        out.push_back(run_method(sets, m, store, threads));
    }
    return out;
}

SegBenchmark seg_benchmark(FeatureStore& store, const SegmentationMethod& method,
                           const std::vector<std::string>& photo_ids, GroundTruth gt, bool raw_external) {
    if (photo_ids.empty()) throw InvalidArgument("segmentation benchmark needs at least one photo");
    const auto& manifest = store.manifest();
    SegBenchmark b;
    for (const auto& pid : photo_ids) {
        const auto& entry = manifest.photo(pid);
        const ImageBuffer photo = read_image(manifest.resolve(entry.path));
        BinaryMask truth;
        if (gt == GroundTruth::rect) {
            if (!entry.rect) throw MissingInputError("no ground-truth rectangle for photo \"" + pid + "\"", pid);
            truth = rect_to_mask(*entry.rect, photo.width(), photo.height());
        } else {
            const auto it = entry.masks.find("gt");
            if (it == entry.masks.end()) throw MissingInputError("no ground-truth mask for photo \"" + pid + "\"", pid);
            truth = image_to_mask(read_pgm(manifest.resolve(it->second)));
        }
        double score;
        if (method.kind == SegmentationMethod::Kind::external && raw_external) {
            const auto it = entry.masks.find(method.name);
            if (it == entry.masks.end())
                throw MissingInputError("no " + method.name + " mask for photo \"" + pid + "\"", pid);
            const FloatImage small = to_gray(read_pgm(manifest.resolve(it->second)));
            const FloatImage up = resize_bilinear(small, photo.width(), photo.height());
            RealGrid raw{up.width, up.height, std::vector<double>(up.pixels.begin(), up.pixels.end())};
            score = ncc(raw, RealGrid::from_mask(truth));
        } else {
            score = ncc(store.photo_mask(pid, method), truth);
        }
        b.scores.push_back(score);
    }
    const double n = static_cast<double>(b.scores.size());
    b.mean = std::accumulate(b.scores.begin(), b.scores.end(), 0.0) / n;
    double ss = 0;
    for (double s : b.scores) ss += (s - b.mean) * (s - b.mean);
    b.stddev = std::sqrt(ss / n);
    return b;
}

// --- reports ------------------------------------------------------------------------

namespace {

std::string fixed(double v, int digits) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
}

}  // namespace

void emit_report(const std::vector<MethodResult>& results, const std::filesystem::path& out_dir) {
    if (results.empty()) throw InvalidArgument("no results to report");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    {
        auto csv = open_out(out_dir / "topk.csv");
        csv << "method,k,accuracy\n";
        for (const auto& r : results)
            for (int k = 1; k <= r.curve.max_k(); ++k) csv << r.method.label() << ',' << k << ',' << fixed(r.curve.at(k), 6) << '\n';
    }
    {
        auto dat = open_out(out_dir / "curves.dat");
        dat << "# k";
        for (const auto& r : results) dat << ' ' << r.method.label();
        dat << '\n';
        int max_k = 0;
        for (const auto& r : results) max_k = std::max(max_k, r.curve.max_k());
        for (int k = 1; k <= max_k; ++k) {
            dat << k;
            for (const auto& r : results) dat << ' ' << (k <= r.curve.max_k() ? fixed(r.curve.at(k), 6) : "NaN");
            dat << '\n';
        }
    }
    {
        nlohmann::ordered_json methods = nlohmann::ordered_json::array();
        for (const auto& r : results) {
            const auto at = [&](int k) { return k <= r.curve.max_k() ? r.curve.at(k) : 1.0; };
            const double photos = static_cast<double>(r.all_orders().size());
            methods.push_back({
                {"method", r.method.label()},
                {"experiments", r.experiments.size()},
                {"photos", r.all_orders().size()},
                {"n_designs", r.n_designs},
                {"mean_order", r.mean_order()},
                {"top1", at(1)},
                {"top5", at(5)},
                {"top10", at(10)},
                {"seconds", {{"segmentation", r.times.segmentation},
                             {"extraction", r.times.extraction},
                             {"vocabulary", r.times.vocabulary},
                             {"matching", r.times.matching},
                             {"matching_per_photo", photos > 0 ? r.times.matching / photos : 0.0}}},
            });
        }
        auto js = open_out(out_dir / "summary.json");
        js << nlohmann::ordered_json{{"methods", methods}}.dump(2) << '\n';
    }
}

}  // namespace printmatch::eval
