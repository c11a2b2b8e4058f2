#include <httplib.h>

#include <thread>

#include "delayprop/service.hpp"

namespace delayprop {

namespace {

void install_routes(httplib::Server& server, Service& service) {
  auto route = [&service](const httplib::Request& req, httplib::Response& res) {
    HttpRequest in{req.method, req.path, req.body, {}};
    if (req.is_multipart_form_data()) {
      for (const auto& [name, part] : req.files) in.parts[name] = part.content;
    }
    const auto out = service.handle(in);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  server.Get(".*", route);
  server.Post(".*", route);
  server.Delete(".*", route);
}

}  // namespace

void serve(Service& service, const std::string& host, int port) {
  httplib::Server server;
  install_routes(server, service);
  if (!server.listen(host, port)) {
    throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
  }
}

struct BackgroundServer::Impl {
  httplib::Server server;
  std::thread thread;
};

BackgroundServer::BackgroundServer(Service& service, const std::string& host, int port)
    : impl_(std::make_unique<Impl>()) {
  install_routes(impl_->server, service);
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
  } else {
    port_ = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) throw std::runtime_error("cannot bind " + host);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

BackgroundServer::~BackgroundServer() { stop(); }

void BackgroundServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace delayprop
