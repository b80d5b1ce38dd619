#pragma once

#include <string>
#include <string_view>

namespace edukg {

struct Url {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string path;  // always starts with '/'

  // "scheme://host:port" without the path.
  std::string Origin() const;
};

// Accepts http://host[:port][/path] and redis://host[:port]. Throws ConfigError.
Url ParseUrl(std::string_view url);

std::string PercentDecode(std::string_view s);
std::string PercentEncode(std::string_view s);

}  // namespace edukg
