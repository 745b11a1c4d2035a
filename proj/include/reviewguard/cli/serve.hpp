#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "reviewguard/annotate/record.hpp"
#include "reviewguard/annotate/rounds.hpp"
#include "reviewguard/corpus/store.hpp"

namespace httplib {
class Server;
}

namespace reviewguard::cli {

struct ApiReply {
  int status = 200;
  nlohmann::json body;
};

// Human-validation API over the annotation store. All methods are safe to
// call concurrently; label writes are serialized through one mutex.
class ValidationService {
 public:
  ValidationService(annotate::AnnotationStore annotations, std::optional<corpus::Store> corpus,
                    annotate::RoundRegistry rounds);

  // Machine labels are left out of the payload while the round is open.
  ApiReply tasks(int round, const std::string& annotator);
  ApiReply post_label(const std::string& body);
  ApiReply agreement(int round, bool machine_reference);
  ApiReply list_rounds();
  ApiReply open_round(const std::string& body);
  ApiReply close_round(int round);

 private:
  std::mutex mu_;
  annotate::AnnotationStore annotations_;
  std::optional<corpus::Store> corpus_;
  annotate::RoundRegistry rounds_;
};

struct ServeOptions {
  std::filesystem::path annotations;
  std::optional<std::filesystem::path> store;
  std::optional<std::filesystem::path> rounds;  // defaults to <annotations>.rounds.json
  std::string host = "127.0.0.1";
  int port = 8080;
};

// Owns the store lock file (<annotations>.lock) for its lifetime; a second
// server on the same store fails with "store locked".
class Server {
 public:
  explicit Server(const ServeOptions& options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds the listening socket; returns the actual port (useful with port 0).
  // Throws Error("port in use ...") when binding fails.
  int bind();
  void run();  // blocks until stop()
  void stop();

 private:
  ServeOptions options_;
  std::filesystem::path lock_path_;
  std::unique_ptr<ValidationService> service_;
  std::unique_ptr<httplib::Server> http_;
};

}  // namespace reviewguard::cli
