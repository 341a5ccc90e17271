// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "epbench/pipeline.hpp"

namespace epbench {

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON
  std::string content_type = "application/json";
};

/// Read-side JSON API over an immutable leaderboard. handle() is pure given
/// the current snapshot, so it is tested without a socket.
class ApiService {
 public:
  ApiService() = default;
  explicit ApiService(std::shared_ptr<const Leaderboard> board) : board_(std::move(board)) {}

  /// Swaps in a new snapshot. In-flight requests keep the one they started with.
  void load(std::shared_ptr<const Leaderboard> board);
  std::shared_ptr<const Leaderboard> current() const;

  /// `target` is the raw request target: path plus optional query string,
  /// still percent-encoded.
  ApiResponse handle(std::string_view method, std::string_view target,
                     std::string_view body = {}) const;

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const Leaderboard> board_;
};

/// Imports a snapshot directory (bundled registry) into a leaderboard.
std::shared_ptr<const Leaderboard> load_leaderboard(const std::filesystem::path& snapshot_dir);

/// Percent-encoded path form of an endpoint id.
std::string endpoint_path_segment(const EndpointId& id);

/// Blocks serving HTTP/1.1 on `listen` ("host:port").
void serve(ApiService& service, const std::string& listen);

}  // namespace epbench
