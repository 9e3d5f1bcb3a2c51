#include <httplib.h>
#include <nlohmann/json.hpp>

#include <charconv>

#include "printmatch/error.hpp"
#include "printmatch/image_io.hpp"
#include "printmatch/service.hpp"

namespace printmatch::service {

namespace {

using json = nlohmann::ordered_json;

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump() + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, json{{"error", message}});
}

std::string png_data_uri(const ImageBuffer& img) {
    const auto bytes = encode_png(img);
    return "data:image/png;base64," + httplib::detail::base64_encode(std::string(bytes.begin(), bytes.end()));
}

ImageBuffer thumbnail(const ImageBuffer& img, int longer = 96) {
    const double s = static_cast<double>(longer) / std::max(img.width(), img.height());
    if (s >= 1.0) return img;
    const int w = std::max(1, static_cast<int>(img.width() * s)), h = std::max(1, static_cast<int>(img.height() * s));
    ImageBuffer out(w, h, img.channels());
    for (int c = 0; c < img.channels(); ++c) {
        FloatImage plane(img.width(), img.height());
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) plane.at(x, y) = img.at(x, y, c);
        const FloatImage small = resize_area(plane, w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(small.at(x, y)), 0L, 255L));
    }
    return out;
}

int parse_int(const std::string& text, const char* what) {
    int v = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size())
        throw InvalidArgument(std::string("query parameter ") + what + " is not an integer: \"" + text + "\"");
    return v;
}

// "x,y,w,h"
Rect parse_rect(const std::string& text) {
    int v[4];
    std::size_t start = 0;
    for (int i = 0; i < 4; ++i) {
        const std::size_t comma = i < 3 ? text.find(',', start) : text.size();
        if (comma == std::string::npos) throw InvalidArgument("rect must be x,y,w,h");
        v[i] = parse_int(text.substr(start, comma - start), "rect");
        start = comma + 1;
    }
    if (v[0] < 0 || v[1] < 0 || v[2] < 1 || v[3] < 1) throw InvalidArgument("rect must have x, y >= 0 and w, h >= 1");
    return {v[0], v[1], v[2], v[3]};
}

}  // namespace

std::string response_json(const MatchResponse& r, bool include_mask) {
    json results = json::array();
    for (const auto& e : r.results) results.push_back({{"rank", e.rank}, {"design_id", e.design_id}, {"score", e.score}});
    json body{
        {"token", r.token},
        {"method", r.method},
        {"segmentation", r.segmentation},
        {"results", results},
        {"timings", {{"upload", r.timings.upload},
                     {"segmentation", r.timings.segmentation},
                     {"extraction", r.timings.extraction},
                     {"matching", r.timings.matching},
                     {"total", r.timings.total}}},
    };
    if (include_mask && r.mask.width() > 0) body["mask"] = png_data_uri(mask_to_image(r.mask));
    return body.dump();
}

struct HttpServer::Impl {
    MatchService& service;
    int default_k;
    httplib::Server server;

    Impl(MatchService& s, int k) : service(s), default_k(k) { routes(); }

    void routes() {
        server.Post("/api/match", [this](const httplib::Request& req, httplib::Response& res) { match(req, res); });
        server.Get("/api/designs/:id", [this](const httplib::Request& req, httplib::Response& res) { design(req, res); });
        server.Get("/api/designs/:id/image",
                   [this](const httplib::Request& req, httplib::Response& res) { design_image(req, res); });
        server.Post("/api/confirm", [this](const httplib::Request& req, httplib::Response& res) { confirm(req, res); });
        server.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) { health(res); });
        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                send_error(res, 500, e.what());
            }
        });
    }

    void match(const httplib::Request& req, httplib::Response& res) {
        MatchRequest mr;
        mr.k = default_k;
        try {
            if (req.is_multipart_form_data()) {
                const char* field = req.has_file("photo") ? "photo" : (req.has_file("image") ? "image" : nullptr);
                if (!field) return send_error(res, 400, "multipart body has no \"photo\" part");
                const auto part = req.get_file_value(field);
                mr.photo.assign(part.content.begin(), part.content.end());
                if (req.has_file("mask")) {
                    const auto m = req.get_file_value("mask");
                    mr.mask.emplace(m.content.begin(), m.content.end());
                }
            } else {
                mr.photo.assign(req.body.begin(), req.body.end());
            }
            if (mr.photo.empty()) return send_error(res, 400, "empty photo upload");
            if (req.has_param("k")) mr.k = parse_int(req.get_param_value("k"), "k");
            if (mr.k < 1) return send_error(res, 400, "k must be >= 1");
            if (req.has_param("rect")) mr.rect = parse_rect(req.get_param_value("rect"));
        } catch (const Error& e) {
            return send_error(res, 400, e.what());
        }
        const bool include_mask = req.has_param("include_mask") && req.get_param_value("include_mask") != "0";
        try {
            const MatchResponse r = service.match(mr);
            res.status = 200;
            res.set_content(response_json(r, include_mask) + "\n", "application/json");
        } catch (const Unavailable& e) {
            send_error(res, 503, e.what());
        } catch (const ParseError& e) {
            send_error(res, 400, e.what());
        } catch (const InvalidArgument& e) {
            send_error(res, 400, e.what());
        }
    }

    const DesignRecord* lookup(const std::shared_ptr<const IndexSnapshot>& snap, const httplib::Request& req,
                               httplib::Response& res) {
        if (!snap) {
            send_error(res, 503, "no index snapshot loaded");
            return nullptr;
        }
        const auto* d = snap->find_design(req.path_params.at("id"));
        if (!d) send_error(res, 404, "unknown design \"" + req.path_params.at("id") + "\"");
        return d;
    }

    void design(const httplib::Request& req, httplib::Response& res) {
        const auto snap = service.snapshot();
        const auto* d = lookup(snap, req, res);
        if (!d) return;
        json body{{"design_id", d->design_id},
                  {"product_id", d->product_id},
                  {"width", d->width},
                  {"height", d->height},
                  {"image_url", "/api/designs/" + d->design_id + "/image"}};
        try {
            body["thumbnail"] = png_data_uri(thumbnail(read_image(d->image_path)));
        } catch (const Error&) {
            body["thumbnail"] = nullptr;
        }
        send_json(res, 200, body);
    }

    void design_image(const httplib::Request& req, httplib::Response& res) {
        const auto snap = service.snapshot();
        const auto* d = lookup(snap, req, res);
        if (!d) return;
        std::vector<std::uint8_t> bytes;
        try {
            bytes = read_file_bytes(d->image_path);
        } catch (const Error& e) {
            return send_error(res, 404, e.what());
        }
        const bool pgm = bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5';
        res.status = 200;
        res.set_content(std::string(bytes.begin(), bytes.end()), pgm ? "image/x-portable-graymap" : "image/png");
    }

    void confirm(const httplib::Request& req, httplib::Response& res) {
        std::string token, design_id;
        try {
            const auto body = json::parse(req.body);
            if (body.contains("token")) token = body.at("token").get<std::string>();
            else if (body.contains("photo_id")) token = body.at("photo_id").get<std::string>();
            design_id = body.at("design_id").get<std::string>();
        } catch (const std::exception& e) {
            return send_error(res, 400, std::string("confirm body must be {\"token\", \"design_id\"}: ") + e.what());
        }
        try {
            const std::string line = service.confirm(token, design_id);
            send_json(res, 200, json{{"status", "ok"}, {"entry", json::parse(line)}});
        } catch (const ReferenceError& e) {
            send_error(res, 404, e.what());
        }
    }

    void health(httplib::Response& res) {
        const auto snap = service.snapshot();
        json body{{"status", snap ? "ok" : "no_snapshot"}, {"confirmations", service.confirmations()}};
        if (snap)
            body["snapshot"] = {{"method", snap->method.label()},
                                {"built_at", snap->built_at},
                                {"designs", snap->designs.size()}};
        send_json(res, 200, body);
    }
};

HttpServer::HttpServer(MatchService& service, int default_k) : impl_(std::make_unique<Impl>(service, default_k)) {
    if (default_k < 1) throw InvalidArgument("default k must be >= 1");
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = impl_->server.bind_to_any_port(host);
        if (p < 0) throw IoError("cannot bind " + host);
        return p;
    }
    if (!impl_->server.bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::serve() {
    if (!impl_->server.listen_after_bind() && impl_->server.is_running())
        throw IoError("http server stopped unexpectedly");
}

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace printmatch::service
