/*
 * Copyright 2026 The xlane Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// WebSocket transport for the broker's client protocol.

#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>

#include "xlane/service/broker.hpp"

namespace xlane::service {

/// Accepts WebSocket connections and bridges their text messages to a
/// SessionBroker, which must outlive the server. Each connection has a
/// bounded send queue that drops its oldest messages when the client falls
/// behind.
class WsServer {
 public:
  explicit WsServer(SessionBroker& broker, int port = 0, const std::string& address = "127.0.0.1",
                    std::size_t send_queue_capacity = 4096);
  ~WsServer();
  WsServer(const WsServer&) = delete;
  WsServer& operator=(const WsServer&) = delete;

  int port() const;
  std::size_t connections() const;
  void stop();

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

/// Minimal client used by tests and tools: messages are timestamped on
/// arrival.
class WsClient {
 public:
  struct Received {
    std::string text;
    std::chrono::steady_clock::time_point at;
  };

  WsClient(const std::string& host, int port);
  ~WsClient();
  WsClient(const WsClient&) = delete;
  WsClient& operator=(const WsClient&) = delete;

  void send(const std::string& text);
  std::optional<Received> next(std::chrono::milliseconds timeout);
  bool connected() const;
  void close();

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace xlane::service
