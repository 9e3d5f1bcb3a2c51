// printmatch: corpus generation, segmentation, extraction, benchmarking and the match server.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "printmatch/error.hpp"
#include "printmatch/eval.hpp"
#include "printmatch/image_io.hpp"
#include "printmatch/mask_ops.hpp"
#include "printmatch/parallel.hpp"
#include "printmatch/segmentation.hpp"
#include "printmatch/service.hpp"
#include "printmatch/synth.hpp"
#include "printmatch/vocabulary.hpp"

namespace fs = std::filesystem;
using namespace printmatch;

namespace {

std::optional<Rect> parse_rect_arg(const std::string& text) {
    if (text.empty()) return std::nullopt;
    Rect r;
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream in(text);
    if (!(in >> r.x >> c1 >> r.y >> c2 >> r.w >> c3 >> r.h) || c1 != ',' || c2 != ',' || c3 != ',' || !in.eof())
        throw InvalidArgument("--rect must be x,y,w,h");
    return r;
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

void print_stage_times(const eval::StageTimes& t) {
    std::cerr << std::fixed << std::setprecision(2) << "  segmentation " << t.segmentation << " s, extraction "
              << t.extraction << " s, vocabulary " << t.vocabulary << " s, matching " << t.matching << " s\n";
}

std::vector<eval::MethodSpec> load_methods(const std::string& file, const std::vector<std::string>& inline_methods,
                                           int clusters) {
    std::vector<eval::MethodSpec> methods;
    if (!file.empty()) methods = eval::read_method_file(file, clusters);
    for (const auto& m : inline_methods) methods.push_back(eval::MethodSpec::parse(m, clusters));
    if (methods.empty()) methods = eval::default_methods(clusters);
    return methods;
}

std::atomic<service::HttpServer*> g_server{nullptr};

extern "C" void on_signal(int) {
    if (auto* s = g_server.load()) s->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Print-design retrieval from product photos"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("-j,--threads", threads, "worker threads (0 = hardware concurrency)");

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic design/photo corpus");
    synth::CorpusSpec corpus_spec;
    std::string preset_name = "mild";
    fs::path gen_out;
    double margin = -1;
    int clutter = -1;
    gen->add_option("--products", corpus_spec.n_products, "number of products")->check(CLI::PositiveNumber);
    gen->add_option("--photos", corpus_spec.n_photos, "number of photos")->check(CLI::PositiveNumber);
    gen->add_option("--preset", preset_name, "distortion preset")->check(CLI::IsMember({"mild", "strong"}));
    gen->add_option("--seed", corpus_spec.seed, "corpus seed");
    gen->add_option("--two-sided", corpus_spec.two_sided_fraction, "fraction of products with two designs")
        ->check(CLI::Range(0.0, 1.0));
    gen->add_option("--margin", margin, "override the preset's per-side margin");
    gen->add_option("--clutter", clutter, "override the preset's background clutter count");
    gen->add_option("--out", gen_out, "output directory")->required();

    // segment
    auto* seg_cmd = app.add_subcommand("segment", "segment one photo and write a 0/255 PGM mask");
    std::string seg_method = "gbvs", seg_rect, seg_photo_id;
    fs::path seg_photo, seg_out, seg_manifest;
    bool seg_largest = false;
    double seg_threshold = 0.11;
    seg_cmd->add_option("--method", seg_method, "none | manual | gbvs | external:NAME");
    seg_cmd->add_option("--photo", seg_photo, "photo file (or use --manifest with --photo-id)");
    seg_cmd->add_option("--manifest", seg_manifest, "corpus manifest for manual/external masks");
    seg_cmd->add_option("--photo-id", seg_photo_id, "photo id inside the manifest");
    seg_cmd->add_option("--rect", seg_rect, "manual rectangle x,y,w,h");
    seg_cmd->add_option("--threshold", seg_threshold, "gbvs threshold on the max-normalized map");
    seg_cmd->add_flag("--largest-component", seg_largest, "keep only the largest connected gbvs region");
    seg_cmd->add_option("--out", seg_out, "output PGM")->required();

    // extract
    auto* ext = app.add_subcommand("extract", "extract and cache features for a corpus");
    std::string ext_method = "sift", ext_seg = "none";
    fs::path ext_corpus, ext_cache;
    ext->add_option("--method", ext_method, "sift | dsift | hog | gist | deepspp");
    ext->add_option("--seg", ext_seg, "photo segmentation");
    ext->add_option("--corpus", ext_corpus, "corpus directory or manifest")->required();
    ext->add_option("--cache", ext_cache, "cache directory")->required();

    // train-vocab
    auto* tv = app.add_subcommand("train-vocab", "train a visual vocabulary on corpus design descriptors");
    std::string tv_feature = "sift";
    int tv_clusters = 1000;
    std::uint64_t tv_seed = 1;
    fs::path tv_corpus, tv_cache, tv_out;
    tv->add_option("--feature", tv_feature, "sift | dsift | hog");
    tv->add_option("--clusters", tv_clusters, "vocabulary size")->check(CLI::PositiveNumber);
    tv->add_option("--seed", tv_seed, "k-means seed");
    tv->add_option("--corpus", tv_corpus, "corpus directory or manifest")->required();
    tv->add_option("--cache", tv_cache, "feature cache directory");
    tv->add_option("--out", tv_out, "output PMVC1 file")->required();

    // build-index
    auto* bi = app.add_subcommand("build-index", "build a serving snapshot over every corpus design");
    std::string bi_method = "sift-gbvs@1000", bi_built_at;
    std::uint64_t bi_seed = 1;
    fs::path bi_corpus, bi_out;
    bi->add_option("--method", bi_method, "method label, e.g. sift-gbvs@1000 or gist-none");
    bi->add_option("--seed", bi_seed, "vocabulary seed");
    bi->add_option("--built-at", bi_built_at, "timestamp stored in the snapshot (default: now)");
    bi->add_option("--corpus", bi_corpus, "corpus directory or manifest")->required();
    bi->add_option("--out", bi_out, "output PMIX1 file")->required();

    // match
    auto* mt = app.add_subcommand("match", "rank the designs of a snapshot against one photo");
    fs::path mt_query, mt_index, mt_mask;
    int mt_k = 10;
    std::string mt_rect;
    mt->add_option("--query", mt_query, "photo file")->required();
    mt->add_option("--index", mt_index, "snapshot file")->required();
    mt->add_option("-k,--k", mt_k, "results to return")->check(CLI::PositiveNumber);
    mt->add_option("--rect", mt_rect, "product rectangle x,y,w,h for manual methods");
    mt->add_option("--mask", mt_mask, "mask image for manual/external methods");

    // bench
    auto* bench = app.add_subcommand("bench", "top-k accuracy over sampled experiment sets");
    fs::path bench_corpus, bench_methods_file, bench_out, bench_cache;
    std::vector<std::string> bench_methods;
    int bench_experiments = 20, bench_photos = 60, bench_designs = 100, bench_clusters = 1000;
    std::uint64_t bench_seed = 1;
    bench->add_option("--corpus", bench_corpus, "corpus directory or manifest")->required();
    bench->add_option("--methods", bench_methods_file, "method list file (default: all 26 methods)");
    bench->add_option("--method", bench_methods, "extra method label (repeatable)");
    bench->add_option("--experiments", bench_experiments, "experiment sets")->check(CLI::PositiveNumber);
    bench->add_option("--photos-per-set", bench_photos, "photos per set")->check(CLI::PositiveNumber);
    bench->add_option("--designs-per-set", bench_designs, "candidate designs per set")->check(CLI::PositiveNumber);
    bench->add_option("--clusters", bench_clusters, "default vocabulary size")->check(CLI::PositiveNumber);
    bench->add_option("--seed", bench_seed, "sampling seed");
    bench->add_option("--cache", bench_cache, "feature cache directory");
    bench->add_option("--out", bench_out, "report directory")->required();

    // sweep
    auto* sweep = app.add_subcommand("sweep", "top-k accuracy as a function of vocabulary size");
    fs::path sweep_corpus, sweep_out, sweep_cache;
    std::string sweep_method = "sift-manual";
    std::vector<int> sweep_clusters{50, 100, 200, 500, 1000, 2000};
    int sweep_experiments = 20, sweep_photos = 60, sweep_designs = 100;
    std::uint64_t sweep_seed = 1;
    sweep->add_option("--corpus", sweep_corpus, "corpus directory or manifest")->required();
    sweep->add_option("--method", sweep_method, "local method without @N");
    sweep->add_option("--clusters", sweep_clusters, "vocabulary sizes")->delimiter(',');
    sweep->add_option("--experiments", sweep_experiments, "experiment sets")->check(CLI::PositiveNumber);
    sweep->add_option("--photos-per-set", sweep_photos, "photos per set")->check(CLI::PositiveNumber);
    sweep->add_option("--designs-per-set", sweep_designs, "candidate designs per set")->check(CLI::PositiveNumber);
    sweep->add_option("--seed", sweep_seed, "sampling seed");
    sweep->add_option("--cache", sweep_cache, "feature cache directory");
    sweep->add_option("--out", sweep_out, "report directory")->required();

    // seg-bench
    auto* sb = app.add_subcommand("seg-bench", "NCC of segmentation masks against ground truth");
    fs::path sb_corpus;
    std::vector<std::string> sb_methods{"none", "gbvs"};
    std::string sb_gt = "mask";
    bool sb_binary = false;
    sb->add_option("--corpus", sb_corpus, "corpus directory or manifest")->required();
    sb->add_option("--method", sb_methods, "segmentation methods")->delimiter(',');
    sb->add_option("--gt", sb_gt, "ground truth")->check(CLI::IsMember({"rect", "mask"}));
    sb->add_flag("--binary-external", sb_binary, "compare external masks after thresholding");

    // serve
    auto* serve = app.add_subcommand("serve", "serve the HTTP matching API");
    std::string serve_snapshot = env_or("PRINTMATCH_SNAPSHOT", "");
    std::string serve_host = env_or("PRINTMATCH_HOST", "0.0.0.0");
    std::string serve_log = env_or("PRINTMATCH_CONFIRM_LOG", "confirmations.jsonl");
    int serve_port = std::atoi(env_or("PRINTMATCH_PORT", "8080").c_str());
    int serve_k = std::atoi(env_or("PRINTMATCH_K", "10").c_str());
    serve->add_option("--snapshot", serve_snapshot, "snapshot file (env PRINTMATCH_SNAPSHOT)");
    serve->add_option("--host", serve_host, "bind address (env PRINTMATCH_HOST)");
    serve->add_option("--port", serve_port, "port, 0 for any (env PRINTMATCH_PORT)");
    serve->add_option("--k", serve_k, "default result depth (env PRINTMATCH_K)")->check(CLI::PositiveNumber);
    serve->add_option("--log", serve_log, "confirmation log (env PRINTMATCH_CONFIRM_LOG)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            corpus_spec.distortion = synth::preset(preset_name);
            if (margin >= 0) corpus_spec.distortion.margin = margin;
            if (clutter >= 0) corpus_spec.distortion.clutter = clutter;
            const auto m = synth::gen_corpus(corpus_spec, gen_out);
            std::cout << "wrote " << m.products().size() << " products, " << m.designs().size() << " designs, "
                      << m.photos().size() << " photos to " << gen_out.string() << "\n";
        } else if (*seg_cmd) {
            const auto method = SegmentationMethod::parse(seg_method);
            std::optional<DatasetManifest> manifest;
            if (!seg_manifest.empty()) manifest = load_manifest(seg_manifest);
            fs::path photo_path = seg_photo;
            if (photo_path.empty()) {
                if (!manifest || seg_photo_id.empty()) throw InvalidArgument("need --photo or --manifest with --photo-id");
                photo_path = manifest->resolve(manifest->photo(seg_photo_id).path);
            }
            SegmentationContext ctx;
            ctx.manifest = manifest ? &*manifest : nullptr;
            ctx.photo_id = seg_photo_id;
            ctx.rect = parse_rect_arg(seg_rect);
            ctx.gbvs.threshold = seg_threshold;
            ctx.gbvs.largest_component = seg_largest;
            const ImageBuffer photo = read_image(photo_path);
            const BinaryMask mask = segment(photo, method, ctx);
            write_mask_pgm(seg_out, mask);
            std::cout << seg_out.string() << ": " << mask.width() << "x" << mask.height() << ", " << std::fixed
                      << std::setprecision(1) << 100.0 * mask.count() / mask.bits().size() << "% foreground\n";
        } else if (*ext) {
            const auto manifest = load_manifest(ext_corpus);
            const auto type = parse_feature_type(ext_method);
            const auto seg = SegmentationMethod::parse(ext_seg);
            eval::FeatureStore store(manifest, {}, ext_cache);
            const auto& designs = manifest.designs();
            const auto& photos = manifest.photos();
            parallel_for(designs.size(), [&](std::size_t i) { store.design_features(designs[i].design_id, type); },
                         static_cast<unsigned>(threads));
            parallel_for(photos.size(), [&](std::size_t i) { store.photo_features(photos[i].photo_id, type, seg); },
                         static_cast<unsigned>(threads));
            std::cout << "cached " << to_string(type) << " for " << designs.size() << " designs and " << photos.size()
                      << " photos (" << seg.label() << ") in " << ext_cache.string() << "\n";
            print_stage_times(store.compute_times());
        } else if (*tv) {
            const auto manifest = load_manifest(tv_corpus);
            const auto type = parse_feature_type(tv_feature);
            if (!is_local(type)) throw InvalidArgument("vocabularies are only trained for local features");
            std::optional<fs::path> cache;
            if (!tv_cache.empty()) cache = tv_cache;
            eval::FeatureStore store(manifest, {}, cache);
            std::vector<std::string> ids;
            for (const auto& d : manifest.designs()) ids.push_back(d.design_id);
            parallel_for(ids.size(), [&](std::size_t i) { store.design_features(ids[i], type); },
                         static_cast<unsigned>(threads));
            const auto vocab = store.vocabulary(ids, type, tv_clusters, tv_seed);
            save_vocabulary(tv_out, *vocab);
            std::cout << "vocabulary " << vocab->n << "x" << vocab->dim << ", " << vocab->iterations
                      << " iterations, inertia " << vocab->inertia << " -> " << tv_out.string() << "\n";
        } else if (*bi) {
            const auto manifest = load_manifest(bi_corpus);
            service::SnapshotOptions opts;
            opts.seed = bi_seed;
            opts.built_at = bi_built_at.empty() ? utc_now() : bi_built_at;
            opts.threads = threads;
            const auto snap = service::build_snapshot(manifest, eval::MethodSpec::parse(bi_method), opts);
            service::save_snapshot(bi_out, snap);
            std::cout << "snapshot " << snap.method.label() << " over " << snap.designs.size() << " designs -> "
                      << bi_out.string() << "\n";
        } else if (*mt) {
            service::MatchService svc;
            svc.publish(std::make_shared<const service::IndexSnapshot>(service::load_snapshot(mt_index)));
            service::MatchRequest req;
            req.photo = read_file_bytes(mt_query);
            req.k = mt_k;
            req.rect = parse_rect_arg(mt_rect);
            if (!mt_mask.empty()) req.mask = read_file_bytes(mt_mask);
            std::cout << service::response_json(svc.match(req)) << "\n";
        } else if (*bench) {
            const auto manifest = load_manifest(bench_corpus);
            const auto methods = load_methods(bench_methods_file.string(), bench_methods, bench_clusters);
            const auto sets =
                eval::sample_experiments(manifest, bench_experiments, bench_photos, bench_designs, bench_seed);
            std::optional<fs::path> cache;
            if (!bench_cache.empty()) cache = bench_cache;
            eval::FeatureStore store(manifest, {}, cache);
            std::vector<eval::MethodResult> results;
            for (const auto& m : methods) {
                results.push_back(eval::run_method(sets, m, store, threads));
                const auto& r = results.back();
                std::cerr << std::left << std::setw(28) << m.label() << std::right << std::fixed
                          << std::setprecision(3) << " top1 " << r.curve.at(1) << "  top5 "
                          << r.curve.at(std::min(5, r.curve.max_k())) << "  top10 "
                          << r.curve.at(std::min(10, r.curve.max_k())) << "\n";
            }
            eval::emit_report(results, bench_out);
            std::cout << "report written to " << bench_out.string() << "\n";
            print_stage_times(store.compute_times());
        } else if (*sweep) {
            const auto manifest = load_manifest(sweep_corpus);
            const auto base = eval::MethodSpec::parse(sweep_method);
            if (!base.local()) throw InvalidArgument("cluster sweep needs a local feature");
            const auto sets =
                eval::sample_experiments(manifest, sweep_experiments, sweep_photos, sweep_designs, sweep_seed);
            std::optional<fs::path> cache;
            if (!sweep_cache.empty()) cache = sweep_cache;
            eval::FeatureStore store(manifest, {}, cache);
            const auto results = eval::cluster_sweep(base, sweep_clusters, sets, store, threads);
            for (const auto& r : results)
                std::cerr << std::setw(6) << r.method.clusters << std::fixed << std::setprecision(3) << "  top1 "
                          << r.curve.at(1) << "  top10 " << r.curve.at(std::min(10, r.curve.max_k())) << "\n";
            eval::emit_report(results, sweep_out);
            std::cout << "report written to " << sweep_out.string() << "\n";
        } else if (*sb) {
            const auto manifest = load_manifest(sb_corpus);
            eval::FeatureStore store(manifest);
            std::vector<std::string> ids;
            for (const auto& p : manifest.photos()) ids.push_back(p.photo_id);
            const auto gt = sb_gt == "rect" ? eval::GroundTruth::rect : eval::GroundTruth::mask;
            nlohmann::ordered_json out = nlohmann::ordered_json::array();
            for (const auto& name : sb_methods) {
                const auto method = SegmentationMethod::parse(name);
                const auto r = eval::seg_benchmark(store, method, ids, gt, !sb_binary);
                out.push_back({{"method", method.label()}, {"photos", r.scores.size()}, {"mean", r.mean},
                               {"stddev", r.stddev}});
            }
            std::cout << out.dump(2) << "\n";
        } else if (*serve) {
            if (serve_snapshot.empty()) throw InvalidArgument("no snapshot given (--snapshot or PRINTMATCH_SNAPSHOT)");
            service::MatchService svc{fs::path(serve_log)};
            svc.publish(std::make_shared<const service::IndexSnapshot>(service::load_snapshot(serve_snapshot)));
            service::HttpServer server(svc, serve_k);
            const int port = server.bind(serve_host, serve_port);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "listening on " << serve_host << ":" << port << " (" << svc.snapshot()->method.label()
                      << ", " << svc.snapshot()->designs.size() << " designs)" << std::endl;
            server.serve();
            g_server = nullptr;
        }
    } catch (const MissingInputError& e) {
        std::cerr << "printmatch: missing input: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "printmatch: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "printmatch: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
