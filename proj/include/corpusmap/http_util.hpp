#pragma once

#include <string>

namespace corpusmap {

/// "http://host:port/path" split into the base understood by the HTTP client
/// and the request path.
struct UrlParts {
    std::string base;  // scheme://host[:port]
    std::string path;  // begins with '/'
};

UrlParts split_url(const std::string& url);

}  // namespace corpusmap
