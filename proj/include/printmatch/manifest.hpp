#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "printmatch/mask_ops.hpp"

namespace printmatch {

struct ProductEntry {
    std::string product_id;
    std::vector<std::string> design_ids;
    std::vector<std::string> photo_ids;
    bool operator==(const ProductEntry&) const = default;
};

struct PhotoEntry {
    std::string photo_id;
    std::string path;                             // relative to the manifest directory
    std::optional<Rect> rect;                     // annotation rectangle
    std::map<std::string, std::string> masks;     // method name -> PGM path ("gt", "vggreg", ...)
    std::map<std::string, std::string> vectors;   // method name -> PMFV1 path ("deepspp")
    bool operator==(const PhotoEntry&) const = default;
};

struct DesignEntry {
    std::string design_id;
    std::string path;
    std::map<std::string, std::string> vectors;
    bool operator==(const DesignEntry&) const = default;
};

/// On-disk corpus index: products, their design files and photos.
class DatasetManifest {
public:
    DatasetManifest() = default;
    DatasetManifest(std::filesystem::path root, std::vector<ProductEntry> products,
                    std::vector<PhotoEntry> photos, std::vector<DesignEntry> designs);

    const std::filesystem::path& root() const noexcept { return root_; }
    const std::vector<ProductEntry>& products() const noexcept { return products_; }
    const std::vector<PhotoEntry>& photos() const noexcept { return photos_; }
    const std::vector<DesignEntry>& designs() const noexcept { return designs_; }

    const PhotoEntry& photo(const std::string& id) const;
    const DesignEntry& design(const std::string& id) const;
    const ProductEntry& product(const std::string& id) const;
    const ProductEntry& product_of_photo(const std::string& photo_id) const;
    bool has_photo(const std::string& id) const { return photo_index_.contains(id); }
    bool has_design(const std::string& id) const { return design_index_.contains(id); }

    std::filesystem::path resolve(const std::string& relative) const { return root_ / relative; }

    /// Checks id uniqueness and references; optionally that every referenced file exists.
    void validate(bool check_files) const;

    /// Same content, ignoring the root directory.
    bool same_content(const DatasetManifest& other) const {
        return products_ == other.products_ && photos_ == other.photos_ && designs_ == other.designs_;
    }

private:
    void build_indexes();

    std::filesystem::path root_;
    std::vector<ProductEntry> products_;
    std::vector<PhotoEntry> photos_;
    std::vector<DesignEntry> designs_;
    std::unordered_map<std::string, std::size_t> photo_index_;
    std::unordered_map<std::string, std::size_t> design_index_;
    std::unordered_map<std::string, std::size_t> product_index_;
    std::unordered_map<std::string, std::size_t> photo_product_;
};

/// Loads and cross-validates `manifest.json` (or a directory containing one).
DatasetManifest load_manifest(const std::filesystem::path& path, bool check_files = true);
DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& root,
                               const std::string& source_name = "manifest.json");
std::string manifest_to_json(const DatasetManifest& manifest);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace printmatch
