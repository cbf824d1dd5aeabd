#pragma once

#include <memory>
#include <string>

#include "tabsense/core/error.hpp"
#include "tabsense/service/workbench.hpp"

namespace tabsense::service {

int HttpStatusFor(ErrorCode code);

// /api/v1 on top of a Workbench.
class HttpServer {
 public:
  explicit HttpServer(Workbench& workbench);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Blocks until Stop().
  bool Listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it; follow with ListenAfterBind().
  int BindToAnyPort(const std::string& host);
  bool ListenAfterBind();
  void Stop();
  void WaitUntilReady() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tabsense::service
