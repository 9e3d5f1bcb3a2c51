#include "printmatch/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "printmatch/error.hpp"
#include "printmatch/image_io.hpp"

namespace printmatch {

namespace fs = std::filesystem;
using nlohmann::json;

DatasetManifest::DatasetManifest(fs::path root, std::vector<ProductEntry> products, std::vector<PhotoEntry> photos,
                                 std::vector<DesignEntry> designs)
    : root_(std::move(root)), products_(std::move(products)), photos_(std::move(photos)), designs_(std::move(designs)) {
    build_indexes();
}

void DatasetManifest::build_indexes() {
    auto index = [](auto& map, const auto& items, auto key, const char* kind) {
        for (std::size_t i = 0; i < items.size(); ++i) {
            const std::string& id = key(items[i]);
            if (!map.emplace(id, i).second) throw ReferenceError(std::string("duplicate ") + kind + " id \"" + id + "\"", id);
        }
    };
    index(photo_index_, photos_, [](const PhotoEntry& p) -> const std::string& { return p.photo_id; }, "photo");
    index(design_index_, designs_, [](const DesignEntry& d) -> const std::string& { return d.design_id; }, "design");
    index(product_index_, products_, [](const ProductEntry& p) -> const std::string& { return p.product_id; }, "product");
    for (std::size_t i = 0; i < products_.size(); ++i)
        for (const auto& ph : products_[i].photo_ids)
            if (!photo_product_.emplace(ph, i).second)
                throw ReferenceError("photo \"" + ph + "\" belongs to more than one product", ph);
}

const PhotoEntry& DatasetManifest::photo(const std::string& id) const {
    auto it = photo_index_.find(id);
    if (it == photo_index_.end()) throw ReferenceError("unknown photo id \"" + id + "\"", id);
    return photos_[it->second];
}

const DesignEntry& DatasetManifest::design(const std::string& id) const {
    auto it = design_index_.find(id);
    if (it == design_index_.end()) throw ReferenceError("unknown design id \"" + id + "\"", id);
    return designs_[it->second];
}

const ProductEntry& DatasetManifest::product(const std::string& id) const {
    auto it = product_index_.find(id);
    if (it == product_index_.end()) throw ReferenceError("unknown product id \"" + id + "\"", id);
    return products_[it->second];
}

const ProductEntry& DatasetManifest::product_of_photo(const std::string& photo_id) const {
    auto it = photo_product_.find(photo_id);
    if (it == photo_product_.end()) throw ReferenceError("photo \"" + photo_id + "\" has no product", photo_id);
    return products_[it->second];
}

void DatasetManifest::validate(bool check_files) const {
    for (const auto& p : products_) {
        if (p.design_ids.empty())
            throw ReferenceError("product \"" + p.product_id + "\" has no design files", p.product_id);
        for (const auto& d : p.design_ids)
            if (!design_index_.contains(d))
                throw ReferenceError("product \"" + p.product_id + "\" references missing design_id \"" + d + "\"", d);
        for (const auto& ph : p.photo_ids)
            if (!photo_index_.contains(ph))
                throw ReferenceError("product \"" + p.product_id + "\" references missing photo_id \"" + ph + "\"", ph);
    }
    for (const auto& ph : photos_)
        if (!photo_product_.contains(ph.photo_id))
            throw ReferenceError("photo \"" + ph.photo_id + "\" is not listed under any product", ph.photo_id);
    if (!check_files) return;

    auto require = [&](const std::string& rel, const std::string& owner) {
        if (!fs::exists(resolve(rel)))
            throw ReferenceError("file \"" + rel + "\" referenced by \"" + owner + "\" does not exist", owner);
    };
    for (const auto& ph : photos_) {
        require(ph.path, ph.photo_id);
        for (const auto& [_, m] : ph.masks) require(m, ph.photo_id);
        for (const auto& [_, v] : ph.vectors) require(v, ph.photo_id);
    }
    for (const auto& d : designs_) {
        require(d.path, d.design_id);
        for (const auto& [_, v] : d.vectors) require(v, d.design_id);
    }
}

namespace {

[[noreturn]] void field_error(const std::string& source, const std::string& field, const std::string& what) {
    throw ParseError(source + ": field " + field + ": " + what);
}

const json& require_key(const json& obj, const char* key, const std::string& source, const std::string& where) {
    if (!obj.is_object()) field_error(source, where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) field_error(source, where + "." + key, "missing");
    return *it;
}

std::string get_string(const json& obj, const char* key, const std::string& source, const std::string& where) {
    const json& v = require_key(obj, key, source, where);
    if (!v.is_string()) field_error(source, where + "." + key, "expected a string");
    return v.get<std::string>();
}

std::vector<std::string> get_string_list(const json& obj, const char* key, const std::string& source,
                                         const std::string& where) {
    const json& v = require_key(obj, key, source, where);
    if (!v.is_array()) field_error(source, where + "." + key, "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string())
            field_error(source, where + "." + key + "[" + std::to_string(i) + "]", "expected a string");
        out.push_back(v[i].get<std::string>());
    }
    return out;
}

std::map<std::string, std::string> get_path_table(const json& obj, const char* key, const std::string& source,
                                                  const std::string& where) {
    std::map<std::string, std::string> out;
    auto it = obj.find(key);
    if (it == obj.end()) return out;
    if (!it->is_object()) field_error(source, where + "." + key, "expected an object of paths");
    for (const auto& [name, value] : it->items()) {
        if (!value.is_string()) field_error(source, where + "." + key + "." + name, "expected a path string");
        out.emplace(name, value.get<std::string>());
    }
    return out;
}

const json& get_array(const json& doc, const char* key, const std::string& source) {
    const json& v = require_key(doc, key, source, "<root>");
    if (!v.is_array()) field_error(source, key, "expected an array");
    return v;
}

json path_table_json(const std::map<std::string, std::string>& table) {
    json out = json::object();
    for (const auto& [k, v] : table) out[k] = v;
    return out;
}

}  // namespace

DatasetManifest parse_manifest(const std::string& text, const fs::path& root, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        throw ParseError(source + ":" + std::to_string(line) + ": " + e.what());
    }

    std::vector<ProductEntry> products;
    const json& jp = get_array(doc, "products", source);
    for (std::size_t i = 0; i < jp.size(); ++i) {
        const std::string where = "products[" + std::to_string(i) + "]";
        products.push_back({get_string(jp[i], "product_id", source, where),
                            get_string_list(jp[i], "design_ids", source, where),
                            get_string_list(jp[i], "photo_ids", source, where)});
    }

    std::vector<PhotoEntry> photos;
    const json& jph = get_array(doc, "photos", source);
    for (std::size_t i = 0; i < jph.size(); ++i) {
        const std::string where = "photos[" + std::to_string(i) + "]";
        PhotoEntry p;
        p.photo_id = get_string(jph[i], "photo_id", source, where);
        p.path = get_string(jph[i], "path", source, where);
        if (auto it = jph[i].find("rect"); it != jph[i].end() && !it->is_null()) {
            if (!it->is_array() || it->size() != 4 ||
                !std::all_of(it->begin(), it->end(), [](const json& v) { return v.is_number_integer(); }))
                field_error(source, where + ".rect", "expected [x, y, w, h] integers");
            Rect r{(*it)[0].get<int>(), (*it)[1].get<int>(), (*it)[2].get<int>(), (*it)[3].get<int>()};
            if (r.x < 0 || r.y < 0 || r.w < 1 || r.h < 1)
                field_error(source, where + ".rect", "requires x, y >= 0 and w, h >= 1");
            p.rect = r;
        }
        p.masks = get_path_table(jph[i], "masks", source, where);
        p.vectors = get_path_table(jph[i], "vectors", source, where);
        photos.push_back(std::move(p));
    }

    std::vector<DesignEntry> designs;
    const json& jd = get_array(doc, "designs", source);
    for (std::size_t i = 0; i < jd.size(); ++i) {
        const std::string where = "designs[" + std::to_string(i) + "]";
        designs.push_back({get_string(jd[i], "design_id", source, where), get_string(jd[i], "path", source, where),
                           get_path_table(jd[i], "vectors", source, where)});
    }

    DatasetManifest m(root, std::move(products), std::move(photos), std::move(designs));
    m.validate(false);
    return m;
}

DatasetManifest load_manifest(const fs::path& path, bool check_files) {
    fs::path file = path;
    if (fs::is_directory(file)) file /= "manifest.json";
    std::ifstream in(file);
    if (!in) throw IoError("cannot open manifest " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    DatasetManifest m = parse_manifest(ss.str(), file.parent_path(), file.string());
    if (check_files) m.validate(true);
    return m;
}

std::string manifest_to_json(const DatasetManifest& m) {
    json doc;
    doc["products"] = json::array();
    for (const auto& p : m.products())
        doc["products"].push_back({{"product_id", p.product_id}, {"design_ids", p.design_ids}, {"photo_ids", p.photo_ids}});
    doc["photos"] = json::array();
    for (const auto& p : m.photos()) {
        json j = {{"photo_id", p.photo_id}, {"path", p.path}};
        if (p.rect) j["rect"] = {p.rect->x, p.rect->y, p.rect->w, p.rect->h};
        if (!p.masks.empty()) j["masks"] = path_table_json(p.masks);
        if (!p.vectors.empty()) j["vectors"] = path_table_json(p.vectors);
        doc["photos"].push_back(std::move(j));
    }
    doc["designs"] = json::array();
    for (const auto& d : m.designs()) {
        json j = {{"design_id", d.design_id}, {"path", d.path}};
        if (!d.vectors.empty()) j["vectors"] = path_table_json(d.vectors);
        doc["designs"].push_back(std::move(j));
    }
    return doc.dump(2) + "\n";
}

void save_manifest(const DatasetManifest& m, const fs::path& path) {
    const std::string text = manifest_to_json(m);
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace printmatch
