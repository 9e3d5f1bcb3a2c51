#include <doctest.h>

#include <cmath>
#include <fstream>

#include "printmatch/error.hpp"
#include "printmatch/image_io.hpp"
#include "printmatch/manifest.hpp"
#include "printmatch/mask_ops.hpp"
#include "printmatch/ncc.hpp"
#include "printmatch/ranking.hpp"
#include "test_util.hpp"

using namespace printmatch;

namespace {

// Textbook Pearson form: sum((a - ma)(b - mb)) / (n sa sb), computed from raw sums.
double ncc_oracle(const BinaryMask& a, const BinaryMask& b) {
    const double n = static_cast<double>(a.width()) * a.height();
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
            const double va = a.at(x, y), vb = b.at(x, y);
            sa += va, sb += vb, saa += va * va, sbb += vb * vb, sab += va * vb;
        }
    const double ma = sa / n, mb = sb / n;
    const double cov = sab / n - ma * mb;
    const double da = std::sqrt(saa / n - ma * ma), db = std::sqrt(sbb / n - mb * mb);
    return cov / (da * db);
}

BinaryMask complement(const BinaryMask& m) {
    BinaryMask out(m.width(), m.height());
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) out.set(x, y, !m.at(x, y));
    return out;
}

// tent-weighted sum over every source pixel, pixel-center aligned, coordinates clamped
double bilinear_oracle(const ImageBuffer& src, int tw, int th, int x, int y) {
    const double u = std::clamp((x + 0.5) * src.width() / tw - 0.5, 0.0, src.width() - 1.0);
    const double v = std::clamp((y + 0.5) * src.height() / th - 0.5, 0.0, src.height() - 1.0);
    double acc = 0;
    for (int j = 0; j < src.height(); ++j)
        for (int i = 0; i < src.width(); ++i) {
            const double w = std::max(0.0, 1 - std::abs(u - i)) * std::max(0.0, 1 - std::abs(v - j));
            acc += w * src.at(i, j);
        }
    return acc;
}

}  // namespace

TEST_SUITE("ncc") {
    TEST_CASE("matches the raw-sum formula on random 30x30 masks") {
        Rng rng(11);
        for (int t = 0; t < 100; ++t) {
            const auto a = testutil::random_mask(30, 30, rng, rng.uniform(0.1, 0.9));
            const auto b = testutil::random_mask(30, 30, rng, rng.uniform(0.1, 0.9));
            CHECK(std::abs(ncc(a, b) - ncc_oracle(a, b)) <= 1e-12);
            CHECK(std::abs(ncc(a, b) - ncc(b, a)) <= 1e-12);
        }
    }

    TEST_CASE("self and complement") {
        Rng rng(3);
        const auto a = testutil::random_mask(17, 9, rng);
        CHECK(ncc(a, a) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(ncc(a, complement(a)) == doctest::Approx(-1.0).epsilon(1e-12));
    }

    TEST_CASE("positive gain and offset leave the score unchanged") {
        Rng rng(5);
        for (int t = 0; t < 20; ++t) {
            auto a = RealGrid::from_mask(testutil::random_mask(30, 30, rng));
            auto b = RealGrid::from_mask(testutil::random_mask(30, 30, rng));
            const double base = ncc(a, b);
            const double gain = rng.uniform(0.1, 50), offset = rng.uniform(-5, 5);
            for (auto& v : a.values) v = gain * v + offset;
            CHECK(std::abs(ncc(a, b) - base) <= 1e-12);
        }
    }

    TEST_CASE("constant grids") {
        const BinaryMask ones = BinaryMask::full(8, 8), zeros(8, 8);
        Rng rng(1);
        const auto r = testutil::random_mask(8, 8, rng);
        CHECK(ncc(ones, ones) == 1.0);
        CHECK(ncc(zeros, zeros) == 1.0);
        CHECK(ncc(ones, zeros) == 0.0);
        CHECK(ncc(ones, r) == 0.0);
        CHECK(ncc(r, zeros) == 0.0);
    }

    TEST_CASE("dimension mismatch") {
        CHECK_THROWS_AS(ncc(BinaryMask(4, 4), BinaryMask(4, 5)), DimensionError);
    }
}

TEST_SUITE("masks") {
    TEST_CASE("rect_to_mask") {
        CHECK(rect_to_mask(Rect{0, 0, 10, 7}, 10, 7).all());
        const auto m = rect_to_mask(Rect{2, 3, 4, 5}, 10, 10);
        CHECK(m.count() == 20);
        for (int y = 0; y < 10; ++y)
            for (int x = 0; x < 10; ++x) CHECK(m.at(x, y) == (x >= 2 && x < 6 && y >= 3 && y < 8));
        CHECK(bounding_rect(m) == Rect{2, 3, 4, 5});
        CHECK_THROWS_AS(rect_to_mask(Rect{8, 0, 3, 2}, 10, 10), InvalidArgument);
        CHECK_THROWS_AS(rect_to_mask(AnnotationRecord{"p1", Rect{0, 0, 0, 2}}, 10, 10), InvalidArgument);
    }

    TEST_CASE("set count is w*h for random rectangles") {
        Rng rng(9);
        for (int t = 0; t < 200; ++t) {
            const int W = rng.range(1, 60), H = rng.range(1, 60);
            const int x = rng.range(0, W - 1), y = rng.range(0, H - 1);
            const Rect r{x, y, rng.range(1, W - x), rng.range(1, H - y)};
            CHECK(rect_to_mask(r, W, H).count() == static_cast<std::size_t>(r.w) * r.h);
        }
    }

    TEST_CASE("upsample constant fields") {
        CHECK(upsample_binarize(ImageBuffer(30, 30, 1, 255), 300, 200).all());
        CHECK(upsample_binarize(ImageBuffer(30, 30, 1, 0), 300, 200).count() == 0);
        CHECK_THROWS_AS(upsample_binarize(ImageBuffer(), 10, 10), InvalidArgument);
    }

    TEST_CASE("upsample half mask agrees with a tent-kernel oracle") {
        const auto half = read_pgm(testutil::fixture("mask_half_30.pgm"));
        REQUIRE(half.width() == 30);
        const auto m = upsample_binarize(half, 300, 300);
        const double frac = static_cast<double>(m.count()) / (300.0 * 300.0);
        CHECK(std::abs(frac - 0.5) <= 0.02);
        for (int y = 0; y < 300; y += 7)
            for (int x = 0; x < 300; ++x) {
                const double v = bilinear_oracle(half, 300, 300, x, y);
                if (std::abs(v - 128) > 1e-3) CHECK(m.at(x, y) == (v >= 128));
            }
    }
}

TEST_SUITE("ranking") {
    TEST_CASE("sort by score then id") {
        std::vector<RankEntry> e{{"c", 1.0}, {"a", 2.0}, {"b", 1.0}, {"d", 3.0}};
        sort_entries(e);
        CHECK(e[0].design_id == "d");
        CHECK(e[1].design_id == "a");
        CHECK(e[2].design_id == "b");
        CHECK(e[3].design_id == "c");
    }

    TEST_CASE("order of match is pessimistic on ties") {
        std::vector<RankEntry> e{{"a", 1.0}, {"b", 1.0}, {"c", 1.0}, {"d", 0.5}};
        sort_entries(e);
        CHECK(order_of_match(e, {"a"}) == 3);
        CHECK(order_of_match(e, {"d"}) == 4);
        CHECK(order_of_match(e, {"b", "d"}) == 3);
        CHECK_FALSE(order_of_match(e, {"zz"}).has_value());
    }
}

TEST_SUITE("manifest") {
    const char* kSmall = R"({
  "products": [{"product_id": "P1", "design_ids": ["d1", "d2"], "photo_ids": ["p1"]}],
  "photos": [{"photo_id": "p1", "path": "photos/p1.png", "rect": [1, 2, 3, 4], "masks": {"vggreg": "m/p1.pgm"}}],
  "designs": [{"design_id": "d1", "path": "designs/d1.png"}, {"design_id": "d2", "path": "designs/d2.png"}]
})";

    TEST_CASE("parse and round-trip") {
        const auto m = parse_manifest(kSmall, "/tmp");
        CHECK(m.products().size() == 1);
        CHECK(m.designs().size() == 2);
        CHECK(m.photos().size() == 1);
        CHECK(m.photo("p1").rect == Rect{1, 2, 3, 4});
        CHECK(m.product_of_photo("p1").product_id == "P1");

        const auto dir = testutil::scratch("manifest");
        save_manifest(m, dir / "manifest.json");
        const auto back = load_manifest(dir / "manifest.json", false);
        CHECK(back.same_content(m));
    }

    TEST_CASE("dangling design id is named") {
        std::string text = kSmall;
        text.replace(text.find("\"d2\"]"), 4, "\"d9\"");
        try {
            parse_manifest(text, "/tmp");
            FAIL("expected a ReferenceError");
        } catch (const ReferenceError& e) {
            CHECK(e.id() == "d9");
            CHECK(std::string(e.what()).find("d9") != std::string::npos);
        }
    }

    TEST_CASE("parse errors carry a location") {
        CHECK_THROWS_AS(parse_manifest("{\"products\": [", "/tmp"), ParseError);
        std::string bad = kSmall;
        bad.replace(bad.find("[1, 2, 3, 4]"), 12, "[1, 2, 3]");
        CHECK_THROWS_WITH_AS(parse_manifest(bad, "/tmp"), doctest::Contains("rect"), ParseError);
    }

    TEST_CASE("missing files are reported when checked") {
        const auto dir = testutil::scratch("manifest_files");
        std::ofstream(dir / "manifest.json") << kSmall;
        CHECK_NOTHROW(load_manifest(dir, false));
        CHECK_THROWS_AS(load_manifest(dir, true), ReferenceError);
    }

    TEST_CASE("fixture corpus validates") {
        const auto m = load_manifest(testutil::fixture("mini"));
        CHECK(m.designs().size() == 2);
        CHECK(m.photo("p0").masks.at("vggreg") == "masks/vggreg/p0.pgm");
    }
}

TEST_SUITE("image io") {
    TEST_CASE("png and pgm round-trip") {
        Rng rng(2);
        const auto dir = testutil::scratch("imageio");
        ImageBuffer rgb(13, 7, 3);
        for (auto& v : rgb.data()) v = static_cast<std::uint8_t>(rng.below(256));
        write_png(dir / "a.png", rgb);
        CHECK(read_image(dir / "a.png") == rgb);
        const auto gray = testutil::random_gray(9, 5, rng);
        write_pgm(dir / "g.pgm", gray);
        CHECK(read_image(dir / "g.pgm") == gray);
        const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5};
        CHECK_THROWS_AS(decode_image(junk), ParseError);
    }
}
