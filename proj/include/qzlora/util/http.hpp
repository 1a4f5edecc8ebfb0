#pragma once

#include "qzlora/util/digest.hpp"

#include <chrono>
#include <map>
#include <stdexcept>
#include <string>

namespace qzlora {

struct Url {
  std::string scheme;  // "http" or "https"
  std::string host;
  int port = 0;
  std::string target;  // path plus query, always starts with '/'

  /// Throws std::invalid_argument for anything that is not http(s)://host[:port][/...].
  static Url parse(const std::string& text);
  std::string origin() const;
};

struct HttpResponse {
  int status = 0;
  Bytes body;
  std::string content_type;
};

/// Connection-level failure (DNS, refused, timeout). HTTP error statuses are
/// returned in HttpResponse, not thrown.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using HttpHeaders = std::multimap<std::string, std::string>;

class HttpClient {
 public:
  explicit HttpClient(std::string user_agent = "qzlora/1.0",
                      std::chrono::seconds timeout = std::chrono::seconds{120});

  HttpResponse get(const std::string& url, const HttpHeaders& headers = {}) const;
  HttpResponse post(const std::string& url, const std::string& body, const std::string& content_type,
                    const HttpHeaders& headers = {}) const;

 private:
  std::string user_agent_;
  std::chrono::seconds timeout_;
};

/// Percent-encodes everything outside the RFC 3986 unreserved set.
std::string url_encode(const std::string& text);

std::string base64_encode(std::string_view data);
Bytes base64_decode(std::string_view text);

}  // namespace qzlora
