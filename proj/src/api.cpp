#include "corpusmap/api.hpp"

#include <charconv>
#include <set>

#include "corpusmap/text.hpp"

namespace corpusmap::api {

std::string_view to_string(ApiCode c) noexcept
{
    switch (c) {
    case ApiCode::bad_request: return "bad_request";
    case ApiCode::not_found: return "not_found";
    case ApiCode::empty_result: return "empty_result";
    case ApiCode::provider_unavailable: return "provider_unavailable";
    case ApiCode::snapshot_corrupt: return "snapshot_corrupt";
    case ApiCode::unavailable: return "unavailable";
    }
    return "bad_request";
}

int http_status(ApiCode c) noexcept
{
    switch (c) {
    case ApiCode::bad_request: return 400;
    case ApiCode::not_found: return 404;
    case ApiCode::empty_result: return 422;
    case ApiCode::provider_unavailable: return 502;
    case ApiCode::snapshot_corrupt: return 500;
    case ApiCode::unavailable: return 503;
    }
    return 500;
}

ApiCode api_code(ErrorCode c) noexcept
{
    switch (c) {
    case ErrorCode::invalid_argument: return ApiCode::bad_request;
    case ErrorCode::not_found: return ApiCode::not_found;
    case ErrorCode::empty_corpus:
    case ErrorCode::empty_context:
    case ErrorCode::no_route: return ApiCode::empty_result;
    case ErrorCode::provider_unavailable: return ApiCode::provider_unavailable;
    case ErrorCode::io:
    case ErrorCode::incompatible_snapshot:
    case ErrorCode::corrupt_snapshot: return ApiCode::snapshot_corrupt;
    }
    return ApiCode::bad_request;
}

json error_body(const ApiError& e, bool production_mode)
{
    json err{{"code", to_string(e.code)}, {"message", e.message}};
    if (!production_mode && !e.detail.empty()) err["detail"] = e.detail;
    return json{{"error", std::move(err)}};
}

namespace {

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view what)
{
    if (!j.is_object()) fail(ErrorCode::invalid_argument, std::string(what) + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            fail(ErrorCode::invalid_argument, std::string(what) + " has unknown field '" + key + "'");
        }
    }
}

Date parse_date_field(const json& j, std::string_view name)
{
    if (!j.is_string()) fail(ErrorCode::invalid_argument, std::string(name) + " must be a YYYY-MM-DD string");
    auto d = Date::parse(j.get<std::string>());
    if (!d) fail(ErrorCode::invalid_argument, std::string(name) + " is not a valid date");
    return *d;
}

std::string string_field(const json& j, std::string_view name)
{
    if (!j.is_string()) fail(ErrorCode::invalid_argument, std::string(name) + " must be a string");
    return j.get<std::string>();
}

std::vector<std::string> string_list(const json& j, std::string_view name)
{
    if (!j.is_array()) fail(ErrorCode::invalid_argument, std::string(name) + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& v : j) out.push_back(string_field(v, name));
    return out;
}

json context_to_json(const qa::Context& c)
{
    return json{{"source_id", c.source_id},
                {"seq", c.seq ? json(*c.seq) : json(nullptr)},
                {"text", c.text},
                {"score", c.score}};
}

std::size_t size_param(const std::map<std::string, std::string>& params, const std::string& name, std::size_t fallback,
                       std::size_t lo, std::size_t hi)
{
    auto it = params.find(name);
    if (it == params.end()) return fallback;
    std::size_t v = 0;
    const auto& s = it->second;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v < lo || v > hi) {
        fail(ErrorCode::invalid_argument,
             name + " must be an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return v;
}

std::string param_or(const std::map<std::string, std::string>& params, const std::string& name, std::string fallback)
{
    auto it = params.find(name);
    return it == params.end() ? fallback : it->second;
}

constexpr std::size_t kMaxPageSize = 1000;
constexpr std::size_t kSnippetChars = 240;

}  // namespace

json filter_to_json(const Filter& f)
{
    json j = json::object();
    if (f.date_from) j["date_from"] = f.date_from->iso();
    if (f.date_to) j["date_to"] = f.date_to->iso();
    if (f.topic_ids) j["topic_ids"] = *f.topic_ids;
    if (f.title_keyword) j["title_keyword"] = *f.title_keyword;
    if (f.query) j["query"] = json{{"text", f.query->text}, {"mode", to_string(f.query->mode)}};
    return j;
}

Filter filter_from_json(const json& j)
{
    if (j.is_null()) return {};
    reject_unknown_keys(j, {"date_from", "date_to", "topic_ids", "title_keyword", "query"}, "filter");
    Filter f;
    if (j.contains("date_from") && !j["date_from"].is_null()) f.date_from = parse_date_field(j["date_from"], "date_from");
    if (j.contains("date_to") && !j["date_to"].is_null()) f.date_to = parse_date_field(j["date_to"], "date_to");
    if (j.contains("topic_ids") && !j["topic_ids"].is_null()) f.topic_ids = string_list(j["topic_ids"], "topic_ids");
    if (j.contains("title_keyword") && !j["title_keyword"].is_null()) {
        f.title_keyword = string_field(j["title_keyword"], "title_keyword");
    }
    if (j.contains("query") && !j["query"].is_null()) {
        const json& q = j["query"];
        reject_unknown_keys(q, {"text", "mode"}, "filter.query");
        TextQuery tq;
        tq.text = string_field(q.value("text", json()), "query.text");
        if (q.contains("mode")) {
            auto m = parse_query_mode(string_field(q["mode"], "query.mode"));
            if (!m) fail(ErrorCode::invalid_argument, "query.mode must be lexical or semantic");
            tq.mode = *m;
        }
        f.query = std::move(tq);
    }
    f.validate();
    return f;
}

Filter parse_filter_param(std::string_view text)
{
    if (text::trim(text).empty()) return {};
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception&) {
        fail(ErrorCode::invalid_argument, "filter is not valid JSON");
    }
    return filter_from_json(j);
}

json answer_to_json(const qa::Answer& a)
{
    json contexts = json::array();
    for (const auto& c : a.contexts) contexts.push_back(context_to_json(c));
    return json{{"text", a.text},
                {"mode", qa::to_string(a.mode)},
                {"citations", a.citations},
                {"contexts", std::move(contexts)},
                {"degraded", a.degraded}};
}

qa::Answer answer_from_json(const json& j)
{
    try {
        qa::Answer a;
        a.text = j.at("text").get<std::string>();
        auto m = qa::parse_mode(j.at("mode").get<std::string>());
        if (!m) fail(ErrorCode::invalid_argument, "answer mode must be corpus or document");
        a.mode = *m;
        a.citations = j.at("citations").get<std::vector<std::string>>();
        for (const auto& c : j.at("contexts")) {
            qa::Context ctx;
            ctx.source_id = c.at("source_id").get<std::string>();
            if (!c.at("seq").is_null()) ctx.seq = c.at("seq").get<std::uint32_t>();
            ctx.text = c.at("text").get<std::string>();
            ctx.score = c.at("score").get<double>();
            a.contexts.push_back(std::move(ctx));
        }
        a.degraded = j.at("degraded").get<bool>();
        return a;
    } catch (const json::exception& e) {
        fail(ErrorCode::invalid_argument, std::string("malformed answer: ") + e.what());
    }
}

engine::QaRequest qa_request_from_json(const json& j)
{
    reject_unknown_keys(j, {"mode", "query", "filter", "topic_ids"}, "qa request");
    engine::QaRequest r;
    if (!j.contains("mode")) fail(ErrorCode::invalid_argument, "qa request needs a mode (corpus or document)");
    auto m = qa::parse_mode(string_field(j["mode"], "mode"));
    if (!m) fail(ErrorCode::invalid_argument, "mode must be corpus or document");
    r.mode = *m;
    r.query = string_field(j.value("query", json()), "query");
    if (text::trim(r.query).empty()) fail(ErrorCode::invalid_argument, "query must not be empty");
    if (j.contains("filter")) r.filter = filter_from_json(j["filter"]);
    if (j.contains("topic_ids") && !j["topic_ids"].is_null()) r.topic_ids = string_list(j["topic_ids"], "topic_ids");
    return r;
}

json qa_request_to_json(const engine::QaRequest& r)
{
    json j{{"mode", qa::to_string(r.mode)}, {"query", r.query}, {"filter", filter_to_json(r.filter)}};
    if (r.topic_ids) j["topic_ids"] = *r.topic_ids;
    return j;
}

json topic_to_json(const Topic& t)
{
    json keywords = json::array();
    for (const auto& k : t.keywords) keywords.push_back(json{{"term", k.term}, {"weight", k.weight}});
    return json{{"topic_id", t.topic_id},
                {"label", t.label},
                {"description", t.description},
                {"keywords", std::move(keywords)},
                {"x", t.coords.x},
                {"y", t.coords.y},
                {"size", t.size},
                {"parent_id", t.parent_id ? json(*t.parent_id) : json(nullptr)},
                {"level", t.level},
                {"source_intervals", t.source_intervals},
                {"degraded_label", t.degraded_label}};
}

json map_to_json(const engine::Engine& e, const engine::MapView& view)
{
    json points = json::array();
    for (const auto& p : view.points) {
        points.push_back(json{{"doc_id", p.doc_id},
                              {"x", p.x},
                              {"y", p.y},
                              {"topic_id", p.topic_id.empty() ? json(nullptr) : json(p.topic_id)}});
    }
    json topics = json::array();
    for (const auto& t : e.snapshot().atlas.topics) topics.push_back(topic_to_json(t));
    return json{{"points", std::move(points)},
                {"topics", std::move(topics)},
                {"total", view.total},
                {"truncated", view.truncated}};
}

json search_to_json(const engine::Engine& e, const engine::SearchRequest& req,
                    const std::vector<index::SearchHit>& hits)
{
    json out = json::array();
    for (const auto& h : hits) {
        const Document* d = e.document(h.doc_id);
        json hit{{"doc_id", h.doc_id},
                 {"rank", h.rank},
                 {"score", h.score},
                 {"matched_field", index::to_string(h.matched_field)}};
        if (d != nullptr) {
            hit["title"] = d->title;
            hit["pub_date"] = d->pub_date.iso();
            hit["journal"] = d->journal;
            hit["authors"] = d->authors;
            hit["topic_id"] = d->topic_id ? json(*d->topic_id) : json(nullptr);
            hit["snippet"] = text::truncate_with_ellipsis(d->body, kSnippetChars);
        }
        out.push_back(std::move(hit));
    }
    return json{{"query", req.q},
                {"mode", to_string(req.mode)},
                {"field", index::to_string(req.field)},
                {"k", req.k},
                {"offset", req.offset},
                {"hits", std::move(out)}};
}

json timeline_to_json(index::Bucket bucket, const std::vector<index::HistogramBin>& bins)
{
    json out = json::array();
    std::size_t total = 0;
    for (const auto& b : bins) {
        out.push_back(json{{"start", b.start.iso()}, {"count", b.count}});
        total += b.count;
    }
    return json{{"bucket", index::to_string(bucket)}, {"bins", std::move(out)}, {"total", total}};
}

json health_to_json(const engine::Health& h)
{
    return json{{"status", "ok"},
                {"snapshot_id", h.snapshot_id},
                {"doc_count", h.doc_count},
                {"sentence_count", h.sentence_count},
                {"topic_count", h.topic_count},
                {"interval_count", h.interval_count}};
}

Response handle(const engine::Engine* engine, const Request& req, bool production_mode)
{
    static const std::set<std::string> kGetRoutes{"/health", "/map", "/search", "/timeline"};
    const bool known_get = kGetRoutes.contains(req.path);
    const bool known_post = req.path == "/qa";
    auto error = [&](ApiCode code, std::string message, std::string detail = {}) {
        return Response{http_status(code), error_body({code, std::move(message), std::move(detail)}, production_mode)};
    };

    if (!known_get && !known_post) return error(ApiCode::not_found, "no such route: " + req.path);
    if ((known_get && req.method != "GET") || (known_post && req.method != "POST")) {
        return error(ApiCode::not_found, "route " + req.path + " does not accept " + req.method);
    }
    if (engine == nullptr) return error(ApiCode::unavailable, "the snapshot is still loading");

    try {
        if (req.path == "/health") return {200, health_to_json(engine->health())};
        if (req.path == "/map") return {200, map_to_json(*engine, engine->map(parse_filter_param(param_or(req.params, "filter", ""))))};
        if (req.path == "/timeline") {
            const std::string name = param_or(req.params, "bucket", "day");
            auto bucket = index::parse_bucket(name);
            if (!bucket) return error(ApiCode::bad_request, "bucket must be day, week or month");
            const Filter f = parse_filter_param(param_or(req.params, "filter", ""));
            return {200, timeline_to_json(*bucket, engine->timeline(f, *bucket))};
        }
        if (req.path == "/search") {
            engine::SearchRequest s;
            s.q = param_or(req.params, "q", "");
            if (text::trim(s.q).empty()) return error(ApiCode::bad_request, "q must not be empty");
            auto mode = parse_query_mode(param_or(req.params, "mode", "lexical"));
            if (!mode) return error(ApiCode::bad_request, "mode must be lexical or semantic");
            auto field = index::parse_field(param_or(req.params, "field", "body"));
            if (!field) return error(ApiCode::bad_request, "field must be body or title");
            s.mode = *mode;
            s.field = *field;
            s.filter = parse_filter_param(param_or(req.params, "filter", ""));
            s.k = size_param(req.params, "k", 10, 1, kMaxPageSize);
            s.offset = size_param(req.params, "offset", 0, 0, 100000);
            return {200, search_to_json(*engine, s, engine->search(s))};
        }
        // POST /qa
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception&) {
            return error(ApiCode::bad_request, "request body is not valid JSON");
        }
        return {200, answer_to_json(engine->ask(qa_request_from_json(body)))};
    } catch (const Error& e) {
        return error(api_code(e.code()), e.what(), e.detail());
    } catch (const json::exception& e) {
        return error(ApiCode::bad_request, std::string("malformed request: ") + e.what());
    }
}

}  // namespace corpusmap::api
