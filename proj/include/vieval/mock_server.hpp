#pragma once

#include <map>
#include <memory>
#include <string>
#include <thread>

#include "vieval/mock_model.hpp"

namespace vieval::mock_server {

/// Everything the offline endpoint serves.
struct ServerConfig {
    mock_model::MockConfig model;
    /// Lexicon for the mock toxicity classifier: token -> weight. A text's
    /// p_toxic is the sum of matched token weights clamped to [0, 1].
    std::map<std::string, double> toxic_words;
    int embedding_dim = 16;
};

ServerConfig parse_server_config(const std::string& json_text,
                                 const std::string& origin = "<memory>");
ServerConfig load_server_config(const std::string& path);

/// Deterministic per-token embeddings: each distinct token (lowercased,
/// whitespace-split) maps to a fixed unit vector seeded by its hash.
/// Identical tokens embed identically, so self-similarity is exactly 1.
std::vector<std::vector<double>> mock_embed(const std::string& text, int dim);

/// p_toxic for one text under the lexicon (clamped weight sum).
double mock_toxicity(const std::string& text, const std::map<std::string, double>& lexicon);

/// In-process HTTP server exposing the full offline endpoint:
///   POST /generate  — text generation (inference-server JSON protocol)
///   POST /score     — continuation token logprobs (501 when disabled)
///   POST /toxicity  — {texts:[...]} -> {probs:[...]}
///   POST /embed     — {text} -> {dim, vectors:[[...]]}
///   GET  /health    — readiness probe
class MockServer {
public:
    explicit MockServer(ServerConfig cfg);
    ~MockServer();

    /// Start serving on host:port in a background thread; port 0 picks a
    /// free port. Returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    void stop();
    int port() const { return port_; }

    /// Serve on the calling thread until stopped (CLI entry point).
    void run(const std::string& host, int port);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace vieval::mock_server
