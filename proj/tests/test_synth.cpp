#include <doctest.h>

#include <cmath>
#include <queue>

#include "printmatch/error.hpp"
#include "printmatch/features.hpp"
#include "printmatch/image_io.hpp"
#include "printmatch/manifest.hpp"
#include "printmatch/ncc.hpp"
#include "printmatch/synth.hpp"
#include "test_util.hpp"

using namespace printmatch;
using namespace printmatch::synth;

namespace {

// side of the directed edge a->b that p lies on, scaled to a distance
double edge_side(std::array<double, 2> a, std::array<double, 2> b, double px, double py) {
    const double ex = b[0] - a[0], ey = b[1] - a[1];
    return (ex * (py - a[1]) - ey * (px - a[0])) / std::hypot(ex, ey);
}

int connected_regions(const BinaryMask& m) {
    BinaryMask seen(m.width(), m.height());
    int regions = 0;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            if (!m.at(x, y) || seen.at(x, y)) continue;
            ++regions;
            std::queue<std::pair<int, int>> q;
            q.push({x, y});
            seen.set(x, y, true);
            while (!q.empty()) {
                const auto [cx, cy] = q.front();
                q.pop();
                for (const auto& [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
                    const int nx = cx + dx, ny = cy + dy;
                    if (nx < 0 || ny < 0 || nx >= m.width() || ny >= m.height()) continue;
                    if (m.at(nx, ny) && !seen.at(nx, ny)) {
                        seen.set(nx, ny, true);
                        q.push({nx, ny});
                    }
                }
            }
        }
    return regions;
}

RealGrid gray_grid(const ImageBuffer& img, int x0, int y0, int w, int h) {
    const auto g = to_gray(img);
    RealGrid r{w, h, {}};
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) r.values.push_back(g.at(x, y));
    return r;
}

}  // namespace

TEST_SUITE("homography") {
    TEST_CASE("identity warp is exact") {
        Rng rng(4);
        const auto img = testutil::random_gray(40, 30, rng);
        CHECK(apply_homography(img, Homography(), 40, 30) == img);
    }

    TEST_CASE("translation moves a single white pixel") {
        ImageBuffer img(20, 10, 1, 0);
        img.at(7, 4) = 255;
        const auto out = apply_homography(img, Homography::translation(5, 0), 20, 10);
        for (int y = 0; y < 10; ++y)
            for (int x = 0; x < 20; ++x) CHECK(out.at(x, y) == ((x == 12 && y == 4) ? 255 : 0));
    }

    TEST_CASE("four-point solve reproduces its correspondences") {
        const std::array<std::array<double, 2>, 4> src{{{0, 0}, {100, 0}, {100, 80}, {0, 80}}};
        const std::array<std::array<double, 2>, 4> dst{{{3, 5}, {96, -2}, {110, 90}, {-4, 77}}};
        const auto h = Homography::from_points(src, dst);
        for (int i = 0; i < 4; ++i) {
            const auto p = h.apply(src[i][0], src[i][1]);
            CHECK(p[0] == doctest::Approx(dst[i][0]).epsilon(1e-9));
            CHECK(p[1] == doctest::Approx(dst[i][1]).epsilon(1e-9));
        }
        const auto round = h.inverse() * h;
        const auto q = round.apply(37, 21);
        CHECK(q[0] == doctest::Approx(37).epsilon(1e-9));
        CHECK(q[1] == doctest::Approx(21).epsilon(1e-9));
    }

    TEST_CASE("singular homography is rejected") {
        const Homography flat({1, 2, 0, 2, 4, 0, 0, 0, 1});
        CHECK_FALSE(flat.invertible());
        CHECK_THROWS_AS(apply_homography(ImageBuffer(8, 8, 1), flat, 8, 8), InvalidArgument);
    }

    TEST_CASE("random warp then inverse keeps the interior") {
        const auto design = gen_design(DesignSpec{}, 21);
        Rng rng(8);
        for (int t = 0; t < 5; ++t) {
            const double j = 8;
            const std::array<std::array<double, 2>, 4> src{{{0, 0}, {255, 0}, {255, 255}, {0, 255}}};
            std::array<std::array<double, 2>, 4> dst;
            for (int i = 0; i < 4; ++i) dst[i] = {src[i][0] + rng.uniform(-j, j), src[i][1] + rng.uniform(-j, j)};
            const auto h = Homography::from_points(src, dst);
            const auto there = apply_homography(design, h, 256, 256, 0);
            const auto back = apply_homography(there, h.inverse(), 256, 256, 0);
            CHECK(ncc(gray_grid(design, 32, 32, 192, 192), gray_grid(back, 32, 32, 192, 192)) >= 0.98);
        }
    }
}

TEST_SUITE("designs") {
    TEST_CASE("deterministic per seed") {
        const DesignSpec spec;
        const auto a = gen_design(spec, 1), b = gen_design(spec, 1), c = gen_design(spec, 2);
        CHECK(a == b);
        CHECK(a.width() == 256);
        std::size_t diff = 0;
        for (std::size_t i = 0; i < a.data().size(); ++i) diff += a.data()[i] != c.data()[i];
        CHECK(diff > 0);
    }

    TEST_CASE("ten elements give enough keypoints") {
        DesignSpec spec;
        spec.min_elements = spec.max_elements = 10;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto d = gen_design(spec, seed);
            CHECK(sift_extract(d, BinaryMask::full(d.width(), d.height())).size() >= 50);
        }
    }

    TEST_CASE("invalid specs") {
        DesignSpec s;
        s.width = 64;
        CHECK_THROWS_AS(gen_design(s, 1), InvalidArgument);
        s = DesignSpec{};
        s.min_elements = 2;
        CHECK_THROWS_AS(gen_design(s, 1), InvalidArgument);
        DistortionParams p;
        p.occluder_max_area = 0.5;
        CHECK_THROWS_AS(p.validate(), InvalidArgument);
        p = DistortionParams{};
        p.noise_sigma = -1;
        CHECK_THROWS_AS(p.validate(), InvalidArgument);
        CHECK_THROWS_AS(preset("medium"), InvalidArgument);
    }
}

TEST_SUITE("photos") {
    TEST_CASE("zero distortion is the identity") {
        const auto d = gen_design(DesignSpec{}, 5);
        const auto r = render_photo(d, DistortionParams{}, 99);
        CHECK(r.photo == d);
        CHECK(r.gt_mask.all());
        CHECK(r.annotation == Rect{0, 0, 256, 256});
    }

    TEST_CASE("occluders add separate regions") {
        const auto d = gen_design(DesignSpec{}, 6);
        DistortionParams clean;
        clean.margin = 0.1;
        DistortionParams occl = clean;
        occl.occluders = 2;
        occl.occluder_max_area = 0.1;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto a = render_photo(d, clean, seed), b = render_photo(d, occl, seed);
            REQUIRE(a.photo.width() == b.photo.width());
            BinaryMask diff(a.photo.width(), a.photo.height());
            for (int y = 0; y < diff.height(); ++y)
                for (int x = 0; x < diff.width(); ++x)
                    for (int c = 0; c < 3; ++c)
                        if (a.photo.at(x, y, c) != b.photo.at(x, y, c)) diff.set(x, y, true);
            CHECK(connected_regions(diff) >= 2);
            CHECK(a.gt_mask == b.gt_mask);
        }
    }

    TEST_CASE("gt mask is the warped design quadrilateral") {
        const auto d = gen_design(DesignSpec{}, 7);
        for (const char* name : {"mild", "strong"}) {
            for (std::uint64_t seed = 1; seed <= 3; ++seed) {
                const auto r = render_photo(d, preset(name), seed);
                std::array<std::array<double, 2>, 4> q;
                const double w = d.width(), h = d.height();
                const std::array<std::array<double, 2>, 4> corners{{{-0.5, -0.5}, {w - 0.5, -0.5}, {w - 0.5, h - 0.5}, {-0.5, h - 0.5}}};
                for (int i = 0; i < 4; ++i) q[i] = r.h.apply(corners[i][0], corners[i][1]);
                const double orient = edge_side(q[0], q[1], q[2][0], q[2][1]) > 0 ? 1 : -1;
                int checked = 0, wrong = 0;
                for (int y = 0; y < r.gt_mask.height(); ++y)
                    for (int x = 0; x < r.gt_mask.width(); ++x) {
                        double dmin = 1e9;
                        for (int i = 0; i < 4; ++i) dmin = std::min(dmin, orient * edge_side(q[i], q[(i + 1) % 4], x, y));
                        if (std::abs(dmin) < 1e-6) continue;
                        ++checked;
                        wrong += r.gt_mask.at(x, y) != (dmin > 0);
                    }
                CHECK(checked > 0);
                CHECK(wrong == 0);
                CHECK(r.annotation == bounding_rect(r.gt_mask));
            }
        }
    }

    TEST_CASE("render is a pure function of its seed") {
        const auto d = gen_design(DesignSpec{}, 8);
        const auto a = render_photo(d, preset("strong"), 3), b = render_photo(d, preset("strong"), 3);
        CHECK(a.photo == b.photo);
        CHECK(a.gt_mask == b.gt_mask);
    }
}

TEST_SUITE("corpus") {
    TEST_CASE("two-sided arithmetic") {
        CHECK(two_sided_count(100, 0.3) == 30);
        CHECK(two_sided_count(2000, 0.729) == 1458);
        CHECK(2000 + two_sided_count(2000, 0.729) == 3458);
        CHECK(two_sided_count(1, 0.0) == 0);
    }

    TEST_CASE("smallest corpus loads back") {
        const auto dir = testutil::scratch("corpus_min");
        CorpusSpec spec;
        spec.n_products = 1;
        spec.n_photos = 1;
        spec.two_sided_fraction = 0;
        const auto m = gen_corpus(spec, dir);
        const auto back = load_manifest(dir);
        CHECK(back.products().size() == 1);
        CHECK(back.designs().size() == 1);
        CHECK(back.photos().size() == 1);
        CHECK(back.same_content(m));
    }

    TEST_CASE("design count follows the two-sided fraction and output is deterministic") {
        const auto a = testutil::scratch("corpus_a"), b = testutil::scratch("corpus_b");
        CorpusSpec spec;
        spec.n_products = 100;
        spec.n_photos = 60;
        spec.two_sided_fraction = 0.3;
        spec.seed = 17;
        const auto ma = gen_corpus(spec, a);
        CHECK(ma.designs().size() == 130);
        CHECK(ma.photos().size() == 60);
        const auto reloaded = load_manifest(a);
        for (const auto& p : reloaded.photos()) {
            REQUIRE(p.rect.has_value());
            const auto gt = read_pgm(reloaded.resolve(p.masks.at("gt")));
            CHECK(rect_to_mask(*p.rect, gt.width(), gt.height()).count() ==
                  static_cast<std::size_t>(p.rect->w) * p.rect->h);
        }
        spec.n_products = 10;
        spec.n_photos = 6;
        const auto m1 = gen_corpus(spec, b / "1"), m2 = gen_corpus(spec, b / "2");
        CHECK(m1.same_content(m2));
        for (const auto& p : m1.photos())
            CHECK(read_file_bytes(m1.resolve(p.path)) == read_file_bytes(m2.resolve(p.path)));
    }
}
