#include "vieval/mock_server.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "vieval/corpus.hpp"
#include "vieval/rng.hpp"

namespace vieval::mock_server {

using nlohmann::json;

ServerConfig parse_server_config(const std::string& json_text, const std::string& origin) {
    ServerConfig cfg;
    cfg.model = mock_model::parse_mock_config(json_text, origin);
    json j = json::parse(json_text);  // already validated above
    if (j.contains("toxic_words")) {
        for (auto it = j.at("toxic_words").begin(); it != j.at("toxic_words").end(); ++it)
            cfg.toxic_words[it.key()] = it.value().get<double>();
    }
    if (j.contains("embedding_dim")) {
        cfg.embedding_dim = j.at("embedding_dim").get<int>();
        if (cfg.embedding_dim < 1) throw SchemaError(origin + ": embedding_dim must be >= 1");
    }
    return cfg;
}

ServerConfig load_server_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw SchemaError("cannot open mock server config: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_server_config(ss.str(), path);
}

std::vector<std::vector<double>> mock_embed(const std::string& text, int dim) {
    std::vector<std::vector<double>> out;
    for (const auto& tok : corpus::tokenize_lower(text)) {
        rng::Engine eng(rng::fnv1a(tok));
        std::vector<double> v(static_cast<std::size_t>(dim));
        double norm = 0.0;
        for (auto& x : v) {
            x = rng::uniform01(eng) * 2.0 - 1.0;
            norm += x * x;
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) {
            v[0] = 1.0;  // vanishingly unlikely, but keep vectors unit-length
        } else {
            for (auto& x : v) x /= norm;
        }
        out.push_back(std::move(v));
    }
    return out;
}

double mock_toxicity(const std::string& text, const std::map<std::string, double>& lexicon) {
    double sum = 0.0;
    for (const auto& tok : corpus::tokenize_lower(text)) {
        auto it = lexicon.find(tok);
        if (it != lexicon.end()) sum += it->second;
    }
    return std::clamp(sum, 0.0, 1.0);
}

struct MockServer::Impl {
    explicit Impl(ServerConfig c) : cfg(std::move(c)), backend(cfg.model) {}

    ServerConfig cfg;
    mock_model::MockBackend backend;
    httplib::Server server;

    void install_routes() {
        server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("{\"status\": \"ok\"}", "application/json");
        });

        server.Post("/generate", [this](const httplib::Request& req, httplib::Response& res) {
            json body;
            try {
                body = json::parse(req.body);
            } catch (const json::exception&) {
                res.status = 400;
                res.set_content("{\"error\": \"invalid JSON\"}", "application/json");
                return;
            }
            if (!body.contains("inputs")) {
                res.status = 400;
                res.set_content("{\"error\": \"missing 'inputs'\"}", "application/json");
                return;
            }
            model_gateway::GenerationConfig gc;
            if (body.contains("parameters")) {
                const json& p = body.at("parameters");
                if (p.contains("max_new_tokens"))
                    gc.max_new_tokens = p.at("max_new_tokens").get<std::size_t>();
                if (p.contains("temperature")) gc.temperature = p.at("temperature").get<double>();
                if (p.contains("top_k")) gc.top_k = p.at("top_k").get<int>();
                if (p.contains("repetition_penalty"))
                    gc.repetition_penalty = p.at("repetition_penalty").get<double>();
                if (p.contains("seed")) gc.seed = p.at("seed").get<std::uint64_t>();
            }
            auto out = backend.generate(body.at("inputs").get<std::string>(), gc);
            json toks = json::array();
            for (const auto& t : *out.tokens)
                toks.push_back({{"text", t.text}, {"logprob", t.logprob}});
            json resp = {
                {"generated_text", out.text},
                {"details",
                 {{"finish_reason", model_gateway::finish_reason_to_string(out.finish_reason)},
                  {"tokens", toks}}},
            };
            res.set_content(resp.dump(), "application/json");
        });

        server.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
            if (!cfg.model.scoring_enabled) {
                res.status = 501;
                res.set_content("{\"error\": \"scoring not supported\"}", "application/json");
                return;
            }
            json body;
            try {
                body = json::parse(req.body);
            } catch (const json::exception&) {
                res.status = 400;
                res.set_content("{\"error\": \"invalid JSON\"}", "application/json");
                return;
            }
            if (!body.contains("prompt") || !body.contains("continuation")) {
                res.status = 400;
                res.set_content("{\"error\": \"missing 'prompt'/'continuation'\"}",
                                "application/json");
                return;
            }
            auto lps = backend.score_tokens(body.at("prompt").get<std::string>(),
                                            body.at("continuation").get<std::string>());
            json resp = {{"token_logprobs", lps}};
            res.set_content(resp.dump(), "application/json");
        });

        server.Post("/toxicity", [this](const httplib::Request& req, httplib::Response& res) {
            json body;
            try {
                body = json::parse(req.body);
            } catch (const json::exception&) {
                res.status = 400;
                res.set_content("{\"error\": \"invalid JSON\"}", "application/json");
                return;
            }
            if (!body.contains("texts") || !body.at("texts").is_array()) {
                res.status = 400;
                res.set_content("{\"error\": \"missing array 'texts'\"}", "application/json");
                return;
            }
            json probs = json::array();
            for (const auto& t : body.at("texts"))
                probs.push_back(mock_toxicity(t.get<std::string>(), cfg.toxic_words));
            json resp = {{"probs", probs}};
            res.set_content(resp.dump(), "application/json");
        });

        server.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
            json body;
            try {
                body = json::parse(req.body);
            } catch (const json::exception&) {
                res.status = 400;
                res.set_content("{\"error\": \"invalid JSON\"}", "application/json");
                return;
            }
            if (!body.contains("text")) {
                res.status = 400;
                res.set_content("{\"error\": \"missing 'text'\"}", "application/json");
                return;
            }
            auto vecs = mock_embed(body.at("text").get<std::string>(), cfg.embedding_dim);
            json resp = {{"dim", cfg.embedding_dim}, {"vectors", vecs}};
            res.set_content(resp.dump(), "application/json");
        });
    }
};

MockServer::MockServer(ServerConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {
    impl_->install_routes();
}

MockServer::~MockServer() { stop(); }

int MockServer::start(const std::string& host, int port) {
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host);
        if (port_ < 0) throw EndpointError("mock server: cannot bind to any port on " + host);
    } else {
        if (!impl_->server.bind_to_port(host, port))
            throw EndpointError("mock server: cannot bind " + host + ":" + std::to_string(port));
        port_ = port;
    }
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port_;
}

void MockServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

void MockServer::run(const std::string& host, int port) {
    if (!impl_->server.bind_to_port(host, port))
        throw EndpointError("mock server: cannot bind " + host + ":" + std::to_string(port));
    port_ = port;
    impl_->server.listen_after_bind();
}

}  // namespace vieval::mock_server
