#include <doctest.h>

#include <fstream>
#include <future>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "printmatch/error.hpp"
#include "printmatch/image_io.hpp"
#include "printmatch/service.hpp"
#include "printmatch/synth.hpp"
#include "test_util.hpp"

using namespace printmatch;
using namespace printmatch::service;

namespace {

struct Corpus {
    std::filesystem::path dir;
    DatasetManifest manifest;
    std::shared_ptr<const IndexSnapshot> sift;
    std::shared_ptr<const IndexSnapshot> gist;
};

const Corpus& corpus() {
    static const Corpus c = [] {
        const auto dir = testutil::scratch("service_corpus");
        synth::CorpusSpec spec;
        spec.n_products = 10;
        spec.n_photos = 6;
        spec.seed = 23;
        synth::gen_corpus(spec, dir);
        auto m = load_manifest(dir);
        SnapshotOptions o;
        o.built_at = "2026-01-01T00:00:00Z";
        auto sift = std::make_shared<const IndexSnapshot>(build_snapshot(m, eval::MethodSpec::parse("sift-manual@16"), o));
        auto gist = std::make_shared<const IndexSnapshot>(build_snapshot(m, eval::MethodSpec::parse("gist-none"), o));
        return Corpus{dir, std::move(m), std::move(sift), std::move(gist)};
    }();
    return c;
}

std::vector<std::uint8_t> photo_bytes(const std::string& photo_id) {
    const auto& m = corpus().manifest;
    return read_file_bytes(m.resolve(m.photo(photo_id).path));
}

std::vector<std::string> ids_of(const MatchResponse& r) {
    std::vector<std::string> out;
    for (const auto& e : r.results) out.push_back(e.design_id);
    return out;
}

std::size_t line_count(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) n += !line.empty();
    return n;
}

}  // namespace

TEST_SUITE("snapshot") {
    TEST_CASE("shapes follow the pathway") {
        const auto& c = corpus();
        const auto& s = *c.sift;
        REQUIRE(s.vocabulary.has_value());
        CHECK(s.vocabulary->n == 16);
        CHECK(s.index.size() == c.manifest.designs().size());
        CHECK(s.designs.size() == s.index.size());
        for (const auto& h : s.index.histograms()) CHECK(h.counts.size() == 16);
        CHECK(s.find_design(s.designs[0].design_id) == &s.designs[0]);
        CHECK(s.find_design("nope") == nullptr);

        const auto& g = *c.gist;
        CHECK_FALSE(g.vocabulary.has_value());
        for (const auto& v : g.index.vectors()) CHECK(v.values.size() == 512);
    }

    TEST_CASE("rebuild and round-trip are byte-identical") {
        const auto& c = corpus();
        SnapshotOptions o;
        o.built_at = "2026-01-01T00:00:00Z";
        const auto again = build_snapshot(c.manifest, eval::MethodSpec::parse("sift-manual@16"), o);
        const auto bytes = encode_snapshot(*c.sift);
        CHECK(encode_snapshot(again) == bytes);
        const auto back = decode_snapshot(bytes);
        CHECK(encode_snapshot(back) == bytes);
        CHECK(back.method.label() == "sift-manual@16");
        CHECK(back.built_at == "2026-01-01T00:00:00Z");

        const auto file = testutil::scratch("snapshot_file") / "s.pmix";
        save_snapshot(file, *c.gist);
        CHECK(encode_snapshot(load_snapshot(file)) == encode_snapshot(*c.gist));
    }

    TEST_CASE("restricted design list and corrupt bytes") {
        const auto& c = corpus();
        SnapshotOptions o;
        o.design_ids = {c.manifest.designs()[1].design_id, c.manifest.designs()[0].design_id};
        const auto s = build_snapshot(c.manifest, eval::MethodSpec::parse("gist-none"), o);
        CHECK(s.index.size() == 2);
        o.design_ids = {"ghost"};
        CHECK_THROWS_AS(build_snapshot(c.manifest, eval::MethodSpec::parse("gist-none"), o), ReferenceError);

        auto bytes = encode_snapshot(*c.gist);
        CHECK_THROWS_AS(decode_snapshot(std::span(bytes).first(bytes.size() / 2)), ParseError);
        bytes[0] ^= 0xff;
        CHECK_THROWS_AS(decode_snapshot(bytes), ParseError);
    }
}

TEST_SUITE("match service") {
    TEST_CASE("no snapshot means unavailable") {
        MatchService svc;
        CHECK_THROWS_AS(svc.match(MatchRequest{photo_bytes("p00000"), 5, {}, {}}), Unavailable);
    }

    TEST_CASE("undecodable uploads") {
        MatchService svc;
        svc.publish(corpus().gist);
        CHECK_THROWS_AS(svc.match(MatchRequest{{'n', 'o', 'p', 'e'}, 5, {}, {}}), ParseError);
        auto bytes = photo_bytes("p00000");
        bytes.resize(bytes.size() / 3);
        CHECK_THROWS_AS(svc.match(MatchRequest{bytes, 5, {}, {}}), ParseError);
    }

    TEST_CASE("responses are complete and deterministic") {
        MatchService svc;
        svc.publish(corpus().sift);
        const auto& m = corpus().manifest;
        for (const auto& p : m.photos()) {
            MatchRequest req{photo_bytes(p.photo_id), 3, p.rect, {}};
            const auto a = svc.match(req), b = svc.match(req);
            CHECK(a.results.size() == 3);
            CHECK(ids_of(a) == ids_of(b));
            CHECK(a.token != b.token);
            CHECK(a.segmentation == "manual");
            for (std::size_t i = 0; i < a.results.size(); ++i) {
                CHECK(a.results[i].rank == static_cast<int>(i) + 1);
                CHECK(a.results[i].score == b.results[i].score);
            }
            CHECK(a.timings.total > 0);
            CHECK(a.timings.total >= a.timings.matching);
            const auto j = nlohmann::json::parse(response_json(a));
            for (const char* key : {"upload", "segmentation", "extraction", "matching", "total"})
                CHECK(j["timings"].contains(key));
            CHECK_FALSE(j.contains("mask"));
        }
        MatchRequest one{photo_bytes("p00001"), 1, {}, {}};
        const auto r = svc.match(one);
        CHECK(r.results.size() == 1);
        CHECK(r.segmentation == "gbvs");
        one.k = 1000;
        CHECK(svc.match(one).results.size() == m.designs().size());
    }

    TEST_CASE("bad rect and oversized mask") {
        MatchService svc;
        svc.publish(corpus().sift);
        CHECK_THROWS_AS(svc.match(MatchRequest{photo_bytes("p00000"), 3, Rect{0, 0, 5000, 10}, {}}), InvalidArgument);
        const auto big = encode_png(ImageBuffer(4000, 10, 1, 255));
        CHECK_THROWS_AS(svc.match(MatchRequest{photo_bytes("p00000"), 3, {}, big}), InvalidArgument);
    }

    TEST_CASE("concurrent requests match serial ones") {
        MatchService svc;
        svc.publish(corpus().gist);
        const auto& m = corpus().manifest;
        std::vector<std::vector<std::string>> serial;
        for (const auto& p : m.photos()) serial.push_back(ids_of(svc.match(MatchRequest{photo_bytes(p.photo_id), 5, {}, {}})));
        std::vector<std::future<std::vector<std::string>>> futures;
        for (const auto& p : m.photos())
            futures.push_back(std::async(std::launch::async, [&svc, id = p.photo_id] {
                return ids_of(svc.match(MatchRequest{photo_bytes(id), 5, {}, {}}));
            }));
        for (std::size_t i = 0; i < futures.size(); ++i) CHECK(futures[i].get() == serial[i]);
    }

    TEST_CASE("confirmations append to the log") {
        const auto log = testutil::scratch("confirm_log") / "c.jsonl";
        MatchService svc(log);
        svc.publish(corpus().gist);
        const auto r = svc.match(MatchRequest{photo_bytes("p00002"), 2, {}, {}});
        const auto line = nlohmann::json::parse(svc.confirm(r.token, r.results[0].design_id));
        CHECK(line["token"] == r.token);
        CHECK(line["design_id"] == r.results[0].design_id);
        CHECK(line["method"] == "gist-none");
        CHECK(line.contains("timestamp"));
        svc.confirm(r.token, r.results[1].design_id);
        CHECK(line_count(log) == 2);
        CHECK(svc.confirmations() == 2);
        CHECK_THROWS_AS(svc.confirm("0000-0", r.results[0].design_id), ReferenceError);
        CHECK_THROWS_AS(svc.confirm(r.token, "ghost"), ReferenceError);
        CHECK(line_count(log) == 2);
    }

    TEST_CASE("publishing swaps the snapshot") {
        MatchService svc;
        svc.publish(corpus().gist);
        CHECK(svc.match(MatchRequest{photo_bytes("p00000"), 2, {}, {}}).method == "gist-none");
        svc.publish(corpus().sift);
        CHECK(svc.match(MatchRequest{photo_bytes("p00000"), 2, {}, {}}).method == "sift-manual@16");
    }
}

TEST_SUITE("http") {
    struct Running {
        MatchService svc;
        HttpServer server;
        int port;
        std::thread thread;
        explicit Running(std::filesystem::path log)
            : svc(std::move(log)), server(svc, 4), port(server.bind("127.0.0.1", 0)), thread([this] { server.serve(); }) {}
        ~Running() {
            server.stop();
            thread.join();
        }
        httplib::Client client() const {
            httplib::Client c("127.0.0.1", port);
            c.set_read_timeout(60);
            return c;
        }
    };

    std::string as_string(const std::vector<std::uint8_t>& b) { return {b.begin(), b.end()}; }

    TEST_CASE("api round trip") {
        const auto log = testutil::scratch("http_log") / "c.jsonl";
        Running r(log);
        auto cli = r.client();

        auto res = cli.Get("/api/health");
        REQUIRE(res);
        CHECK(res->status == 200);
        CHECK(nlohmann::json::parse(res->body)["status"] == "no_snapshot");

        const auto photo = as_string(photo_bytes("p00000"));
        res = cli.Post("/api/match", photo, "application/octet-stream");
        REQUIRE(res);
        CHECK(res->status == 503);
        CHECK(cli.Get("/api/designs/x")->status == 503);

        r.svc.publish(corpus().sift);
        res = cli.Post("/api/match", "garbage", "application/octet-stream");
        CHECK(res->status == 400);
        res = cli.Post("/api/match", "", "application/octet-stream");
        CHECK(res->status == 400);
        res = cli.Post("/api/match?k=0", photo, "application/octet-stream");
        CHECK(res->status == 400);
        res = cli.Post("/api/match?rect=1,2,3", photo, "application/octet-stream");
        CHECK(res->status == 400);

        res = cli.Post("/api/match", photo, "application/octet-stream");
        REQUIRE(res->status == 200);
        auto body = nlohmann::json::parse(res->body);
        CHECK(body["results"].size() == 4);
        CHECK(body["timings"].contains("total"));

        httplib::MultipartFormDataItems form{{"photo", photo, "p.png", "image/png"}};
        const auto& rect = *corpus().manifest.photo("p00000").rect;
        const std::string q = "/api/match?k=1&include_mask=1&rect=" + std::to_string(rect.x) + "," + std::to_string(rect.y) +
                              "," + std::to_string(rect.w) + "," + std::to_string(rect.h);
        res = cli.Post(q, form);
        REQUIRE(res->status == 200);
        body = nlohmann::json::parse(res->body);
        CHECK(body["results"].size() == 1);
        CHECK(body["segmentation"] == "manual");
        CHECK(body.contains("mask"));
        const std::string token = body["token"], top = body["results"][0]["design_id"];

        res = cli.Get("/api/designs/" + top);
        REQUIRE(res->status == 200);
        const auto design = nlohmann::json::parse(res->body);
        CHECK(design["design_id"] == top);
        CHECK(design["thumbnail"].get<std::string>().starts_with("data:image/png;base64,"));
        res = cli.Get("/api/designs/" + top + "/image");
        CHECK(res->status == 200);
        CHECK(res->body.size() > 100);
        CHECK(cli.Get("/api/designs/ghost")->status == 404);
        CHECK(cli.Get("/api/designs/ghost/image")->status == 404);

        nlohmann::json confirm{{"token", token}, {"design_id", top}};
        res = cli.Post("/api/confirm", confirm.dump(), "application/json");
        CHECK(res->status == 200);
        CHECK(line_count(log) == 1);
        res = cli.Post("/api/confirm", nlohmann::json{{"photo_id", token}, {"design_id", top}}.dump(), "application/json");
        CHECK(res->status == 200);
        CHECK(line_count(log) == 2);
        CHECK(cli.Post("/api/confirm", "{", "application/json")->status == 400);
        CHECK(cli.Post("/api/confirm", R"({"token":"t"})", "application/json")->status == 400);
        CHECK(cli.Post("/api/confirm", nlohmann::json{{"token", "nope"}, {"design_id", top}}.dump(), "application/json")->status == 404);
        CHECK(line_count(log) == 2);

        res = cli.Get("/api/health");
        body = nlohmann::json::parse(res->body);
        CHECK(body["status"] == "ok");
        CHECK(body["confirmations"] == 2);
    }

    TEST_CASE("default k must be positive") {
        MatchService svc;
        CHECK_THROWS_AS(HttpServer(svc, 0), InvalidArgument);
    }
}
