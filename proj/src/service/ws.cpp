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

#include "xlane/service/ws.hpp"

#include <atomic>
#include <deque>
#include <mutex>
#include <thread>
#include <vector>

#include <boost/asio/connect.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "xlane/service/bounded_queue.hpp"

namespace xlane::service {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

/// Serialized writer over a websocket stream; all calls on the stream's
/// executor.
template <typename Stream>
class SendQueue {
 public:
  explicit SendQueue(std::size_t capacity) : capacity_(capacity) {}

  template <typename Self>
  void push(const std::shared_ptr<Self>& self, Stream& ws, std::string msg) {
    queue_.push_back(std::move(msg));
    if (queue_.size() > capacity_) {
      // Never drop the message currently being written.
      queue_.erase(queue_.begin() + (writing_ ? 1 : 0));
      ++dropped_;
    }
    if (!writing_) write(self, ws);
  }

  std::size_t dropped() const { return dropped_; }

 private:
  template <typename Self>
  void write(const std::shared_ptr<Self>& self, Stream& ws) {
    writing_ = true;
    ws.text(true);
    ws.async_write(asio::buffer(queue_.front()),
                   [this, self, &ws](beast::error_code ec, std::size_t) {
                     queue_.pop_front();
                     if (ec) {
                       writing_ = false;
                       queue_.clear();
                       return;
                     }
                     if (queue_.empty()) {
                       writing_ = false;
                     } else {
                       write(self, ws);
                     }
                   });
  }

  std::size_t capacity_;
  std::deque<std::string> queue_;
  bool writing_ = false;
  std::size_t dropped_ = 0;
};

}  // namespace

// ---------------------------------------------------------------- server

struct WsServer::Impl : std::enable_shared_from_this<WsServer::Impl> {
  class Connection : public std::enable_shared_from_this<Connection> {
   public:
    Connection(tcp::socket socket, Impl& server, ClientId id)
        : ws_(std::move(socket)), server_(server), id_(id), out_(server.send_capacity) {}

    ~Connection() { server_.broker.detach_client(id_); }

    void start() {
      ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
      ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
        if (ec) return;
        std::weak_ptr<Connection> weak = self;
        self->server_.broker.attach_client(self->id_, [weak](const std::string& msg) {
          if (auto c = weak.lock()) {
            asio::post(c->ws_.get_executor(),
                       [c, msg] { c->out_.push(c, c->ws_, msg); });
          }
        });
        self->read();
      });
    }

    void close() {
      asio::post(ws_.get_executor(), [self = shared_from_this()] {
        beast::error_code ec;
        beast::get_lowest_layer(self->ws_).socket().close(ec);
      });
    }

   private:
    void read() {
      ws_.async_read(buf_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) return;
        const std::string text = beast::buffers_to_string(self->buf_.data());
        self->buf_.consume(self->buf_.size());
        self->server_.broker.handle_message(self->id_, text);
        self->read();
      });
    }

    websocket::stream<beast::tcp_stream> ws_;
    Impl& server_;
    ClientId id_;
    beast::flat_buffer buf_;
    SendQueue<websocket::stream<beast::tcp_stream>> out_;
  };

  Impl(SessionBroker& b, std::size_t cap) : broker(b), send_capacity(cap), acceptor(ioc) {}

  void accept() {
    acceptor.async_accept(asio::make_strand(ioc), [self = shared_from_this()](
                                                       beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      socket.set_option(tcp::no_delay(true), ec);
      auto c = std::make_shared<Connection>(std::move(socket), *self, ++self->next_id);
      {
        std::lock_guard lock(self->mu);
        std::erase_if(self->live, [](const auto& w) { return w.expired(); });
        self->live.push_back(c);
      }
      c->start();
      self->accept();
    });
  }

  SessionBroker& broker;
  std::size_t send_capacity;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  std::thread thread;
  std::atomic<ClientId> next_id{0};
  std::mutex mu;
  std::vector<std::weak_ptr<Connection>> live;
  int port = 0;
  bool stopped = false;
};

WsServer::WsServer(SessionBroker& broker, int port, const std::string& address,
                   std::size_t send_queue_capacity)
    : impl_(std::make_shared<Impl>(broker, send_queue_capacity)) {
  const tcp::endpoint ep(asio::ip::make_address(address), static_cast<unsigned short>(port));
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
  impl_->acceptor.bind(ep);
  impl_->acceptor.listen(asio::socket_base::max_listen_connections);
  impl_->port = impl_->acceptor.local_endpoint().port();
  impl_->accept();
  impl_->thread = std::thread([impl = impl_] { impl->ioc.run(); });
}

WsServer::~WsServer() { stop(); }

int WsServer::port() const { return impl_->port; }

std::size_t WsServer::connections() const {
  std::lock_guard lock(impl_->mu);
  std::size_t n = 0;
  for (const auto& w : impl_->live) n += w.expired() ? 0 : 1;
  return n;
}

void WsServer::stop() {
  if (impl_->stopped) return;
  impl_->stopped = true;
  // Closing the acceptor and every socket completes all pending operations,
  // after which the io loop runs out of work and returns.
  asio::post(impl_->ioc, [impl = impl_] {
    beast::error_code ec;
    impl->acceptor.close(ec);
    std::lock_guard lock(impl->mu);
    for (auto& w : impl->live) {
      if (auto c = w.lock()) c->close();
    }
  });
  if (impl_->thread.joinable()) impl_->thread.join();
  std::lock_guard lock(impl_->mu);
  impl_->live.clear();
}

// ---------------------------------------------------------------- client

struct WsClient::Impl : std::enable_shared_from_this<WsClient::Impl> {
  Impl() : ws(asio::make_strand(ioc)), inbox(1 << 20), out(1 << 16) {}

  void read() {
    ws.async_read(buf, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->open = false;
        self->inbox.close();
        return;
      }
      self->inbox.push({beast::buffers_to_string(self->buf.data()),
                        std::chrono::steady_clock::now()});
      self->buf.consume(self->buf.size());
      self->read();
    });
  }

  asio::io_context ioc;
  websocket::stream<beast::tcp_stream> ws;
  beast::flat_buffer buf;
  BoundedQueue<WsClient::Received> inbox;
  SendQueue<websocket::stream<beast::tcp_stream>> out;
  std::atomic<bool> open{false};
  std::thread thread;
};

WsClient::WsClient(const std::string& host, int port) : impl_(std::make_shared<Impl>()) {
  tcp::resolver resolver(impl_->ioc);
  const auto results = resolver.resolve(host, std::to_string(port));
  beast::get_lowest_layer(impl_->ws).connect(results);
  beast::get_lowest_layer(impl_->ws).socket().set_option(tcp::no_delay(true));
  impl_->ws.handshake(host + ":" + std::to_string(port), "/");
  websocket::stream_base::timeout opt{std::chrono::seconds(2), websocket::stream_base::none(),
                                      false};
  impl_->ws.set_option(opt);
  impl_->open = true;
  impl_->read();
  impl_->thread = std::thread([impl = impl_] { impl->ioc.run(); });
}

WsClient::~WsClient() { close(); }

void WsClient::send(const std::string& text) {
  asio::post(impl_->ws.get_executor(),
             [impl = impl_, text] { impl->out.push(impl, impl->ws, text); });
}

std::optional<WsClient::Received> WsClient::next(std::chrono::milliseconds timeout) {
  return impl_->inbox.pop(timeout);
}

bool WsClient::connected() const { return impl_->open; }

void WsClient::close() {
  if (!impl_->thread.joinable()) return;
  asio::post(impl_->ws.get_executor(), [impl = impl_] {
    if (!impl->open) return;
    impl->ws.async_close(websocket::close_code::normal, [impl](beast::error_code) {
      beast::error_code ec;
      beast::get_lowest_layer(impl->ws).socket().close(ec);
    });
  });
  impl_->thread.join();
  impl_->open = false;
  impl_->inbox.close();
}

}  // namespace xlane::service
