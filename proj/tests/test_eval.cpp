#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "printmatch/error.hpp"
#include "printmatch/eval.hpp"
#include "printmatch/synth.hpp"
#include "test_util.hpp"

using namespace printmatch;
using namespace printmatch::eval;

namespace {

// products p0..; the first `two_sided` own two designs; photos go to products in order
DatasetManifest toy_manifest(int products, int two_sided, int photos) {
    nlohmann::json j{{"products", nlohmann::json::array()}, {"photos", nlohmann::json::array()}, {"designs", nlohmann::json::array()}};
    for (int p = 0; p < products; ++p) {
        nlohmann::json prod{{"product_id", "P" + std::to_string(p)}, {"design_ids", nlohmann::json::array()}, {"photo_ids", nlohmann::json::array()}};
        for (int s = 0; s < (p < two_sided ? 2 : 1); ++s) {
            const std::string id = "d" + std::to_string(p) + (s ? "b" : "a");
            prod["design_ids"].push_back(id);
            j["designs"].push_back({{"design_id", id}, {"path", "designs/" + id + ".png"}});
        }
        if (p < photos) {
            const std::string id = "ph" + std::to_string(p);
            prod["photo_ids"].push_back(id);
            j["photos"].push_back({{"photo_id", id}, {"path", "photos/" + id + ".png"}});
        }
        j["products"].push_back(prod);
    }
    return parse_manifest(j.dump(), "/nonexistent");
}

const DatasetManifest& small_corpus() {
    static const DatasetManifest m = [] {
        const auto dir = testutil::scratch("eval_corpus");
        synth::CorpusSpec spec;
        spec.n_products = 14;
        spec.n_photos = 14;
        spec.seed = 5;
        synth::gen_corpus(spec, dir);
        return load_manifest(dir);
    }();
    return m;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("sampling") {
    TEST_CASE("single-design products give 60 pairs and 40 fillers") {
        const auto m = toy_manifest(150, 0, 150);
        const auto s = sample_experiment(m, 60, 100, 3);
        CHECK(s.photo_ids.size() == 60);
        CHECK(s.design_ids.size() == 100);
        CHECK(s.pair_designs == 60);
        CHECK(s.filler_count() == 40);
    }

    TEST_CASE("72 pair designs leave 28 fillers") {
        const auto m = toy_manifest(110, 12, 60);
        const auto s = sample_experiment(m, 60, 100, 9);
        CHECK(s.pair_designs == 72);
        CHECK(s.filler_count() == 28);
        const std::set<std::string> ids(s.design_ids.begin(), s.design_ids.end());
        CHECK(ids.size() == 100);
        for (const auto& ph : s.photo_ids)
            for (const auto& d : m.product_of_photo(ph).design_ids) CHECK(ids.contains(d));
    }

    TEST_CASE("seeded reproducibility and variety") {
        const auto m = toy_manifest(300, 50, 300);
        const auto a = sample_experiment(m, 60, 100, 42), b = sample_experiment(m, 60, 100, 42);
        CHECK(a.photo_ids == b.photo_ids);
        CHECK(a.design_ids == b.design_ids);
        CHECK(a.hash() == b.hash());
        std::set<std::uint64_t> hashes;
        for (std::uint64_t seed = 1000; seed < 1100; ++seed) hashes.insert(sample_experiment(m, 60, 100, seed).hash());
        CHECK(hashes.size() >= 99);
        const auto sets = sample_experiments(m, 5, 60, 100, 7);
        CHECK(sets.size() == 5);
        CHECK(sets[0].hash() != sets[1].hash());
        CHECK(sample_experiments(m, 5, 60, 100, 7)[3].hash() == sets[3].hash());
    }

    TEST_CASE("insufficient corpus") {
        const auto m = toy_manifest(50, 0, 50);
        CHECK_THROWS_AS(sample_experiment(m, 60, 100, 1), InvalidArgument);
        CHECK_THROWS_AS(sample_experiment(toy_manifest(80, 0, 80), 60, 100, 1), InvalidArgument);
        // 60 photos of two-sided products already need 120 designs
        CHECK_THROWS_AS(sample_experiment(toy_manifest(200, 200, 60), 60, 100, 1), InvalidArgument);
    }
}

TEST_SUITE("methods") {
    TEST_CASE("labels round-trip") {
        for (const auto& m : default_methods(500)) CHECK(MethodSpec::parse(m.label()).label() == m.label());
        const auto s = MethodSpec::parse("sift-external:vggreg@250");
        CHECK(s.feature == FeatureType::sift);
        CHECK(s.segmentation.name == "vggreg");
        CHECK(s.clusters == 250);
        CHECK(MethodSpec::parse("gist-manual@77").label() == "gist-manual");
        CHECK(MethodSpec::parse("hog-gbvs", 64).label() == "hog-gbvs@64");
        CHECK_THROWS_AS(MethodSpec::parse("sift"), ParseError);
        CHECK_THROWS_AS(MethodSpec::parse("orb-none"), InvalidArgument);
        CHECK_THROWS_AS(MethodSpec::parse("sift-none@x"), ParseError);
    }

    TEST_CASE("the default list has 26 entries") {
        const auto all = default_methods();
        CHECK(all.size() == 26);
        std::set<std::string> labels;
        for (const auto& m : all) labels.insert(m.label());
        CHECK(labels.size() == 26);
        CHECK(labels.contains("deepspp-manual"));
        CHECK(labels.contains("deepspp-external:vggreg"));
        CHECK_FALSE(labels.contains("deepspp-none"));
        CHECK_FALSE(labels.contains("deepspp-gbvs"));
        CHECK_FALSE(labels.contains("deepspp-external:fcn8s"));
        CHECK(labels.contains("sift-external:fcn32s@1000"));
    }

    TEST_CASE("method files") {
        const auto dir = testutil::scratch("methods");
        std::ofstream(dir / "m.txt") << "# comment\n\nsift-manual@50\n  gist-none  \n";
        const auto ms = read_method_file(dir / "m.txt");
        REQUIRE(ms.size() == 2);
        CHECK(ms[0].label() == "sift-manual@50");
        CHECK(ms[1].label() == "gist-none");
        std::ofstream(dir / "bad.txt") << "sift-none\nbogus\n";
        CHECK_THROWS_WITH_AS(read_method_file(dir / "bad.txt"), doctest::Contains("bad.txt:2"), ParseError);
    }
}

TEST_SUITE("topk") {
    TEST_CASE("direct counts") {
        CHECK(topk_curve({1, 1, 1}, 5).at(1) == 1.0);
        const auto c = topk_curve({1, 3, 5, 11}, 100);
        CHECK(c.at(1) == 0.25);
        CHECK(c.at(3) == 0.5);
        CHECK(c.at(10) == 0.75);
        CHECK(c.at(100) == 1.0);
        CHECK(c.max_k() == 100);
        for (int k = 2; k <= 100; ++k) CHECK(c.at(k) >= c.at(k - 1));
        CHECK_THROWS_AS(topk_curve({}, 10), InvalidArgument);
    }

    TEST_CASE("accuracy at 10 is the share of orders up to 10") {
        std::vector<int> orders(95, 10);
        orders.insert(orders.end(), 5, 11);
        CHECK(topk_curve(orders, 100).at(10) == doctest::Approx(0.95));
    }

    TEST_CASE("a stronger filler can only push the true design down") {
        Rng rng(4);
        for (int t = 0; t < 50; ++t) {
            std::vector<RankEntry> e;
            for (int i = 0; i < 10; ++i) e.push_back({"d" + std::to_string(i), rng.uniform()});
            auto with = e;
            with.push_back({"filler", e[0].score + rng.uniform(0.0, 0.5)});
            sort_entries(e);
            sort_entries(with);
            CHECK(*order_of_match(with, {"d0"}) >= *order_of_match(e, {"d0"}));
        }
    }
}

TEST_SUITE("experiments") {
    TEST_CASE("single photo against its own design") {
        const auto m = load_manifest(testutil::fixture("mini"));
        FeatureStore store(m);
        ExperimentSet s{{"p0"}, {"d0"}, 1, 1};
        for (const char* label : {"gist-none", "hog-manual@2", "deepspp-manual"})
            CHECK(run_experiment(s, MethodSpec::parse(label), store).orders == std::vector<int>{1});
        ExperimentSet wrong{{"p0"}, {}, 0, 1};
        CHECK_THROWS_AS(run_experiment(wrong, MethodSpec::parse("gist-none"), store), ReferenceError);
    }

    TEST_CASE("deepspp prefers the segmentation-specific vector") {
        const auto m = load_manifest(testutil::fixture("mini"));
        FeatureStore store(m);
        const auto& manual = std::get<GlobalDescriptor>(store.photo_features("p0", FeatureType::deepspp, SegmentationMethod::parse("manual")));
        const auto& plain = std::get<GlobalDescriptor>(store.photo_features("p0", FeatureType::deepspp, SegmentationMethod::parse("gbvs")));
        CHECK(manual.values[0] == doctest::Approx(0.9f));
        CHECK(plain.values[0] == doctest::Approx(0.1f));
    }

    TEST_CASE("orders, curves and serial/parallel agreement") {
        const auto& m = small_corpus();
        const auto sets = sample_experiments(m, 3, 6, 10, 11);
        FeatureStore store(m);
        const auto method = MethodSpec::parse("sift-manual@16");
        const auto serial = run_method(sets, method, store, 1);
        const auto parallel = run_method(sets, method, store, 4);
        REQUIRE(serial.experiments.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(serial.experiments[i].orders.size() == 6);
            CHECK(serial.experiments[i].orders == parallel.experiments[i].orders);
        }
        CHECK(serial.curve.max_k() == 10);
        CHECK(serial.curve.at(10) == 1.0);
        for (int k = 2; k <= 10; ++k) CHECK(serial.curve.at(k) >= serial.curve.at(k - 1));
        for (int o : serial.all_orders()) {
            CHECK(o >= 1);
            CHECK(o <= 10);
        }
    }

    TEST_CASE("cluster sweep reuses the sets and drops repeats") {
        const auto& m = small_corpus();
        const auto sets = sample_experiments(m, 2, 6, 10, 12);
        FeatureStore store(m);
        const auto fam = cluster_sweep(MethodSpec::parse("sift-none"), {16, 8, 16}, sets, store);
        REQUIRE(fam.size() == 2);
        CHECK(fam[0].method.clusters == 16);
        CHECK(fam[1].method.clusters == 8);
        for (std::size_t i = 0; i < sets.size(); ++i) CHECK(fam[0].experiments[i].set_hash == fam[1].experiments[i].set_hash);
        CHECK(cluster_sweep(MethodSpec::parse("sift-none"), {8}, sets, store).size() == 1);
        CHECK_THROWS_AS(cluster_sweep(MethodSpec::parse("gist-none"), {8}, sets, store), InvalidArgument);
    }

    TEST_CASE("segmentation benchmark degenerate cases") {
        const auto& m = small_corpus();
        FeatureStore store(m);
        std::vector<std::string> ids;
        for (const auto& p : m.photos()) ids.push_back(p.photo_id);
        const auto manual = seg_benchmark(store, SegmentationMethod::parse("manual"), ids, GroundTruth::rect);
        CHECK(manual.mean == doctest::Approx(1.0));
        CHECK(manual.stddev == doctest::Approx(0.0));
        const auto none = seg_benchmark(store, SegmentationMethod::parse("none"), ids, GroundTruth::mask);
        CHECK(none.mean == 0.0);
        CHECK(none.scores.size() == ids.size());
    }

    TEST_CASE("external masks compare raw or binarized") {
        const auto m = load_manifest(testutil::fixture("mini"));
        FeatureStore store(m);
        const auto raw = seg_benchmark(store, SegmentationMethod::parse("external:vggreg"), {"p0"}, GroundTruth::mask, true);
        const auto bin = seg_benchmark(store, SegmentationMethod::parse("external:vggreg"), {"p0"}, GroundTruth::mask, false);
        CHECK(raw.mean >= 0.8);
        CHECK(bin.mean >= 0.8);
        CHECK(raw.mean != bin.mean);
    }
}

TEST_SUITE("report") {
    TEST_CASE("files, labels and byte stability") {
        const auto& m = small_corpus();
        const auto sets = sample_experiments(m, 2, 6, 10, 13);
        auto run_once = [&](const std::filesystem::path& out) {
            FeatureStore store(m);
            std::vector<MethodResult> rs{run_method(sets, MethodSpec::parse("sift-none@8"), store),
                                         run_method(sets, MethodSpec::parse("gist-manual"), store)};
            emit_report(rs, out);
        };
        const auto a = testutil::scratch("report_a"), b = testutil::scratch("report_b");
        run_once(a);
        run_once(b);
        const auto csv = slurp(a / "topk.csv");
        CHECK(csv == slurp(b / "topk.csv"));
        CHECK(slurp(a / "curves.dat") == slurp(b / "curves.dat"));
        CHECK(csv.find('\r') == std::string::npos);

        std::istringstream lines(csv);
        std::string line;
        std::getline(lines, line);
        CHECK(line == "method,k,accuracy");
        std::map<std::string, int> rows;
        while (std::getline(lines, line)) ++rows[line.substr(0, line.find(','))];
        CHECK(rows.size() == 2);
        CHECK(rows["sift-none@8"] == 10);
        CHECK(rows["gist-manual"] == 10);

        const auto summary = nlohmann::json::parse(slurp(a / "summary.json"));
        CHECK(summary["methods"].size() == 2);
        CHECK(summary["methods"][0].contains("mean_order"));
        CHECK(summary["methods"][0]["seconds"].contains("extraction"));
        CHECK_THROWS_AS(emit_report({}, a), InvalidArgument);
    }
}
