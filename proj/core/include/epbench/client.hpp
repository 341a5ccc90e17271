// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "epbench/registry.hpp"

namespace epbench {

struct TokenProb {
  std::int32_t token = 0;
  double prob = 0.0;
  bool operator==(const TokenProb&) const = default;
};

struct TokenLogprob {
  std::int32_t token = 0;
  double logprob = 0.0;
};

struct StreamRequest {
  std::string prompt;
  std::int64_t input_tokens = 0;  // 0: count from prompt
  int max_tokens = 256;
  double temperature = 0.0;
  int logprobs_top_k = 0;
  /// Token ids to emit in place of the endpoint's own choice, so per-position
  /// distributions align with a reference continuation.
  std::vector<std::int32_t> forced_tokens;
  /// Per-request nonce; varies sampling without changing the prompt.
  std::uint64_t seed = 0;
  /// Request time in seconds on the stream clock. Event times share this clock.
  double issued_at = 0.0;
};

enum class EventKind { Token, Done, Error };

struct StreamEvent {
  EventKind kind = EventKind::Token;
  double time = 0.0;  // seconds, stream clock
  std::int32_t token = -1;
  std::string text;
  bool thinking = false;
  std::vector<TokenLogprob> top_logprobs;
  int http_status = 200;
};

/// Consumer callback; return false to stop the stream early.
using StreamSink = std::function<bool(const StreamEvent&)>;

/// The boundary between measurement loops and an endpoint. The simulator
/// implements it; a live provider client would too.
class EndpointClient {
 public:
  virtual ~EndpointClient() = default;

  /// Streams events for one request. Throws NotFoundError for an unknown
  /// endpoint and ValidationError for an unsupported request.
  virtual void stream(const EndpointId& endpoint, const StreamRequest& request,
                      const StreamSink& sink) const = 0;

  virtual bool supports_logprobs(const EndpointId& endpoint) const = 0;
};

}  // namespace epbench
