#include "corpusmap/http_util.hpp"

#include "corpusmap/error.hpp"

namespace corpusmap {

UrlParts split_url(const std::string& url)
{
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) fail(ErrorCode::invalid_argument, "endpoint URL lacks a scheme", url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace corpusmap
