#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edukg::kb::wikitext {

// Underscores to spaces, whitespace collapsed, first character upper-cased.
std::string NormalizeTitle(std::string_view title);

// Target of "#REDIRECT [[T]]" at the start of the text.
std::optional<std::string> RedirectTarget(std::string_view text);

// Article link targets of [[target|label]] links in order of appearance,
// normalized, section anchors removed. Namespaced links are skipped.
std::vector<std::string> LinkTargets(std::string_view text);

// Names from [[Category:X|sort]] links, normalized, deduplicated.
std::vector<std::string> Categories(std::string_view text);

// {{disambiguation...}} / {{disambig...}}, first letter case-insensitive.
bool HasDisambiguationTemplate(std::string_view text);

// Text before the first section heading with markup removed.
std::string Abstract(std::string_view text);

// Drops {{...}} templates innermost first, at most `max_passes` sweeps.
std::string StripTemplates(std::string_view text, int max_passes = 10);

}  // namespace edukg::kb::wikitext
