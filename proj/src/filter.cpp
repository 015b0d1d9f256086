#include "corpusmap/filter.hpp"

#include <algorithm>
#include <map>

#include "corpusmap/text.hpp"

namespace corpusmap::index {

TopicTree::TopicTree(const std::vector<Topic>& topics)
{
    for (const auto& t : topics) {
        if (t.parent_id) children_[*t.parent_id].push_back(t.topic_id);
    }
}

std::unordered_set<std::string> TopicTree::expand(const std::vector<std::string>& ids) const
{
    std::unordered_set<std::string> out;
    std::vector<std::string> stack(ids.begin(), ids.end());
    while (!stack.empty()) {
        std::string id = std::move(stack.back());
        stack.pop_back();
        if (!out.insert(id).second) continue;
        if (auto it = children_.find(id); it != children_.end()) {
            stack.insert(stack.end(), it->second.begin(), it->second.end());
        }
    }
    return out;
}

DocMask filter_mask(const std::vector<Document>& docs, const Filter& filter, const TopicTree& tree)
{
    filter.validate();
    std::optional<std::unordered_set<std::string>> topics;
    if (filter.topic_ids) topics = tree.expand(*filter.topic_ids);

    DocMask mask(docs.size(), false);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const Document& d = docs[i];
        if (filter.date_from && d.pub_date < *filter.date_from) continue;
        if (filter.date_to && d.pub_date > *filter.date_to) continue;
        if (topics && (!d.topic_id || !topics->contains(*d.topic_id))) continue;
        if (filter.title_keyword && !text::contains_icase(d.title, *filter.title_keyword)) continue;
        mask[i] = true;
    }
    return mask;
}

std::set<std::string> apply_filter(const std::vector<Document>& docs, const Filter& filter, const TopicTree& tree)
{
    const DocMask mask = filter_mask(docs, filter, tree);
    std::set<std::string> ids;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (mask[i]) ids.insert(docs[i].doc_id);
    }
    return ids;
}

std::size_t count(const DocMask& mask)
{
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

DocMask intersect(DocMask a, const DocMask& b)
{
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = a[i] && b[i];
    return a;
}

std::string_view to_string(Bucket b) noexcept
{
    switch (b) {
    case Bucket::day: return "day";
    case Bucket::week: return "week";
    case Bucket::month: return "month";
    }
    return "day";
}

std::optional<Bucket> parse_bucket(std::string_view s) noexcept
{
    if (s == "day") return Bucket::day;
    if (s == "week") return Bucket::week;
    if (s == "month") return Bucket::month;
    return std::nullopt;
}

Date bucket_start(Date d, Bucket b)
{
    using namespace std::chrono;
    switch (b) {
    case Bucket::day: return d;
    case Bucket::week: {
        const unsigned since_monday = (weekday{d.sys_days()} - Monday).count();
        return d + -static_cast<int>(since_monday);
    }
    case Bucket::month: {
        const auto ymd = d.ymd();
        return Date(sys_days{ymd.year() / ymd.month() / 1});
    }
    }
    return d;
}

Date next_bucket(Date start, Bucket b)
{
    using namespace std::chrono;
    switch (b) {
    case Bucket::day: return start + 1;
    case Bucket::week: return start + 7;
    case Bucket::month: {
        const auto ymd = start.ymd();
        return Date(sys_days{(ymd.year() / ymd.month() / 1) + months{1}});
    }
    }
    return start + 1;
}

std::vector<HistogramBin> timeline_histogram(const std::vector<Document>& docs, const DocMask& mask, Bucket bucket)
{
    std::map<Date, std::size_t> counts;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (mask[i]) ++counts[bucket_start(docs[i].pub_date, bucket)];
    }
    std::vector<HistogramBin> out;
    if (counts.empty()) return out;
    const Date last = counts.rbegin()->first;
    for (Date s = counts.begin()->first; s <= last; s = next_bucket(s, bucket)) {
        auto it = counts.find(s);
        out.push_back({s, it == counts.end() ? 0 : it->second});
    }
    return out;
}

}  // namespace corpusmap::index
