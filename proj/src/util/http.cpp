#include "qzlora/util/http.hpp"

#include <httplib.h>
#include <openssl/evp.h>

#include <cctype>
#include <memory>

namespace qzlora {

Url Url::parse(const std::string& text) {
  Url url;
  const auto scheme_end = text.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("URL without scheme: " + text);
  url.scheme = text.substr(0, scheme_end);
  if (url.scheme != "http" && url.scheme != "https") {
    throw std::invalid_argument("unsupported URL scheme: " + text);
  }
  const auto authority_begin = scheme_end + 3;
  const auto path_begin = text.find('/', authority_begin);
  std::string authority = text.substr(authority_begin, path_begin - authority_begin);
  url.target = path_begin == std::string::npos ? "/" : text.substr(path_begin);
  url.port = url.scheme == "https" ? 443 : 80;
  if (const auto colon = authority.rfind(':'); colon != std::string::npos) {
    try {
      url.port = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad port in URL: " + text);
    }
    authority.resize(colon);
  }
  if (authority.empty()) throw std::invalid_argument("URL without host: " + text);
  url.host = authority;
  return url;
}

std::string Url::origin() const { return scheme + "://" + host + ":" + std::to_string(port); }

HttpClient::HttpClient(std::string user_agent, std::chrono::seconds timeout)
    : user_agent_(std::move(user_agent)), timeout_(timeout) {}

namespace {

std::unique_ptr<httplib::Client> make_client(const Url& url, std::chrono::seconds timeout) {
  auto client = std::make_unique<httplib::Client>(url.origin());
  client->set_connection_timeout(timeout);
  client->set_read_timeout(timeout);
  client->set_write_timeout(timeout);
  client->set_follow_location(true);
  return client;
}

httplib::Headers to_headers(const HttpHeaders& headers, const std::string& user_agent) {
  httplib::Headers out(headers.begin(), headers.end());
  out.emplace("User-Agent", user_agent);
  return out;
}

HttpResponse convert(const httplib::Result& result, const std::string& url) {
  if (!result) {
    throw TransportError("request to " + url + " failed: " + httplib::to_string(result.error()));
  }
  return HttpResponse{result->status, result->body, result->get_header_value("Content-Type")};
}

}  // namespace

HttpResponse HttpClient::get(const std::string& url, const HttpHeaders& headers) const {
  const Url parsed = Url::parse(url);
  auto client = make_client(parsed, timeout_);
  return convert(client->Get(parsed.target, to_headers(headers, user_agent_)), url);
}

HttpResponse HttpClient::post(const std::string& url, const std::string& body,
                              const std::string& content_type, const HttpHeaders& headers) const {
  const Url parsed = Url::parse(url);
  auto client = make_client(parsed, timeout_);
  return convert(client->Post(parsed.target, to_headers(headers, user_agent_), body, content_type),
                 url);
}

std::string url_encode(const std::string& text) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(char(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0x0f]);
    }
  }
  return out;
}

std::string base64_encode(std::string_view data) {
  std::string out(4 * ((data.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(data.data()),
                                static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Bytes base64_decode(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) clean.push_back(c);
  }
  if (clean.size() % 4 != 0) throw std::invalid_argument("base64 length not a multiple of 4");
  Bytes out(3 * clean.size() / 4 + 1, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) throw std::invalid_argument("invalid base64");
  std::size_t len = static_cast<std::size_t>(n);
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  if (!clean.empty() && clean.back() == '=') --len;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

}  // namespace qzlora
