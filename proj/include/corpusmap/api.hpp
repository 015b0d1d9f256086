#pragma once

#include <map>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "corpusmap/engine.hpp"
#include "corpusmap/error.hpp"
#include "corpusmap/qa.hpp"
#include "corpusmap/types.hpp"

namespace corpusmap::api {

using nlohmann::json;

enum class ApiCode { bad_request, not_found, empty_result, provider_unavailable, snapshot_corrupt, unavailable };

std::string_view to_string(ApiCode c) noexcept;
int http_status(ApiCode c) noexcept;
ApiCode api_code(ErrorCode c) noexcept;

struct ApiError {
    ApiCode code = ApiCode::bad_request;
    std::string message;
    std::string detail;
};

json error_body(const ApiError& e, bool production_mode);

// Wire formats. Parsers throw Error(invalid_argument) on malformed input,
// including unknown keys.
json filter_to_json(const Filter& f);
Filter filter_from_json(const json& j);
/// Parses the URL parameter form (a JSON object serialized as text); an empty
/// string is the empty filter.
Filter parse_filter_param(std::string_view text);

json answer_to_json(const qa::Answer& a);
qa::Answer answer_from_json(const json& j);

engine::QaRequest qa_request_from_json(const json& j);
json qa_request_to_json(const engine::QaRequest& r);

json topic_to_json(const Topic& t);
json map_to_json(const engine::Engine& e, const engine::MapView& view);
json search_to_json(const engine::Engine& e, const engine::SearchRequest& req,
                    const std::vector<index::SearchHit>& hits);
json timeline_to_json(index::Bucket bucket, const std::vector<index::HistogramBin>& bins);
json health_to_json(const engine::Health& h);

struct Request {
    std::string method;  // "GET", "POST", ...
    std::string path;
    std::map<std::string, std::string> params;
    std::string body;
};

struct Response {
    int status = 200;
    json body;
};

/// Routes one request. A null engine (snapshot still loading) yields 503 for
/// every known route.
Response handle(const engine::Engine* engine, const Request& req, bool production_mode);

}  // namespace corpusmap::api
