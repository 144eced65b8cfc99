#include "augrag/augment.hpp"

#include "augrag/error.hpp"
#include "augrag/text.hpp"

#include <spdlog/spdlog.h>

namespace augrag {

AugmentTemplate::AugmentTemplate(std::string text, std::string name) : text_(std::move(text)), name_(std::move(name)) {
    if (count_occurrences(text_, "{query}") != 1) {
        throw InputError("augment template '" + name_ + "' must contain exactly one {query} placeholder");
    }
}

AugmentTemplate AugmentTemplate::standard() {
    return AugmentTemplate(std::string(kDefaultAugmentTemplate), "default");
}

AugmentTemplate AugmentTemplate::identity() {
    return AugmentTemplate("{query}", "identity");
}

std::string AugmentTemplate::render(std::string_view query) const {
    return replace_all(text_, "{query}", query);
}

AugmentResult augment_query(LlmClient& client, std::string_view query, const AugmentTemplate& tmpl,
                            AugmentFallback fallback) {
    if (trim(query).empty()) {
        throw InputError("augment_query: empty query");
    }
    std::string failure;
    try {
        std::string completion = client.complete(tmpl.render(query));
        if (!trim(completion).empty()) {
            return {std::string(trim(completion)), true, {}};
        }
        failure = "augmenter returned an empty completion";
    } catch (const ClientError& e) {
        failure = e.what();
    }
    if (fallback == AugmentFallback::fail) {
        throw ClientError("query augmentation failed: " + failure);
    }
    spdlog::warn("query augmentation failed, using the raw query: {}", failure);
    return {std::string(query), false, failure};
}

} // namespace augrag
