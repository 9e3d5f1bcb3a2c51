#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include "printmatch/image.hpp"
#include "printmatch/manifest.hpp"

namespace printmatch::synth {

/// Parameters of a procedurally generated design raster.
struct DesignSpec {
    int width = 256;
    int height = 256;
    int min_elements = 8;   // text blocks, rectangles, circles, gradients
    int max_elements = 14;
    std::uint64_t palette_seed = 0;

    void validate() const;
};

/// Every strength is >= 0; all zero is the identity render (up to margins).
struct DistortionParams {
    double corner_jitter = 0.0;       // fraction of min(design w, h)
    double rotation_deg = 0.0;        // max |rotation|
    double scale_jitter = 0.0;        // scale drawn from [1 - s, 1 + s]
    double illumination = 0.0;        // gradient strength in [0, 1]
    double blur_sigma = 0.0;          // pixels
    double noise_sigma = 0.0;         // 8-bit levels
    int occluders = 0;
    double occluder_max_area = 0.0;   // fraction of design area, < 0.5
    int clutter = 0;                  // background distractor shapes
    std::uint64_t background_seed = 0;
    double margin = 0.0;              // per-side margin, fraction of design size

    void validate() const;
};

DistortionParams preset(const std::string& name);  // "mild" | "strong"

/// Projective map, stored row-major with h33 normalized to 1.
class Homography {
public:
    Homography();  // identity
    explicit Homography(const std::array<double, 9>& m);

    static Homography translation(double tx, double ty);
    /// Exact 4-point correspondence solve.
    static Homography from_points(const std::array<std::array<double, 2>, 4>& src,
                                  const std::array<std::array<double, 2>, 4>& dst);

    std::array<double, 2> apply(double x, double y) const;
    Homography inverse() const;
    Homography operator*(const Homography& rhs) const;  // (this * rhs)(p) = this(rhs(p))
    double determinant() const;
    bool invertible() const;

    const std::array<double, 9>& matrix() const noexcept { return m_; }

private:
    std::array<double, 9> m_;
};

/// Per-pixel background color for pixels that map outside the source.
using FillSampler = std::function<std::uint8_t(int x, int y, int channel)>;

ImageBuffer gen_design(const DesignSpec& spec, std::uint64_t rng_seed);

/// Inverse-mapped bilinear warp. A destination pixel is inside when its
/// preimage lies in the source extent [-0.5, w - 0.5) x [-0.5, h - 0.5).
ImageBuffer apply_homography(const ImageBuffer& img, const Homography& h, int out_w, int out_h,
                             const FillSampler& fill);
ImageBuffer apply_homography(const ImageBuffer& img, const Homography& h, int out_w, int out_h,
                             std::uint8_t fill_value = 0);

struct RenderedPhoto {
    ImageBuffer photo;
    BinaryMask gt_mask;      // warped design quadrilateral, occluded pixels included
    Homography h;            // design -> photo
    Rect annotation;         // bounding rectangle of gt_mask
};

/// warp -> illumination -> occluders -> blur -> noise.
RenderedPhoto render_photo(const ImageBuffer& design, const DistortionParams& params, std::uint64_t rng_seed);

struct CorpusSpec {
    int n_products = 100;
    double two_sided_fraction = 0.3;  // products with two design files
    int n_photos = 60;
    DesignSpec design;
    DistortionParams distortion = preset("mild");
    std::uint64_t seed = 1;
};

/// Number of products that receive a second design file.
int two_sided_count(int n_products, double fraction);

/// Writes designs/, photos/, masks/gt/ and manifest.json under out_dir.
DatasetManifest gen_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir);

}  // namespace printmatch::synth
