#include <algorithm>
#include <fstream>
#include <set>

#include "binary_io.h"
#include "edukg/common/error.h"
#include "edukg/common/text.h"
#include "edukg/kb/kb.h"
#include "edukg/kb/wikitext.h"
#include "edukg/kb/xml_reader.h"
#include "json.hpp"

namespace edukg::kb {

namespace fs = std::filesystem;

namespace {

struct RawPage {
  std::optional<PageId> id;
  std::string title;
  std::string ns;
  std::optional<std::string> redirect_attr;
  std::string text;
  long long offset = 0;
};

struct ParsedPage {
  PageId id;
  std::string title;
  std::optional<std::string> redirect;
  std::vector<std::string> links;
  std::vector<std::string> categories;
  bool disambiguation = false;
  std::string abstract;
};

bool NamespacedTitle(const std::string& title) {
  static const char* kPrefixes[] = {"Category:", "Template:", "File:",   "Image:",
                                    "Wikipedia:", "Help:",    "Portal:", "Draft:",
                                    "Module:",   "MediaWiki:", "User:",  "Talk:"};
  for (const char* p : kPrefixes) {
    if (title.rfind(p, 0) == 0) return true;
  }
  return false;
}

PageId ParseId(const std::string& s, long long offset) {
  std::string t = text::Trim(s);
  if (t.empty() || !std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw ParseError("xml: page id '" + t + "' is not a number at byte offset " +
                         std::to_string(offset),
                     offset);
  }
  return std::stoull(t);
}

void WriteFile(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error("cannot write " + path.string());
}

}  // namespace

KBStats PreprocessDump(std::istream& xml, const embedding::EmbeddingProvider& embedder,
                       const fs::path& out_dir, const PreprocessOptions& options) {
  KBStats stats;
  std::vector<ParsedPage> pages;
  std::string latest_timestamp;

  // Pass over the stream: one page at a time, raw text dropped after parsing.
  XmlReader reader(xml);
  std::vector<std::string> path;
  std::optional<RawPage> page;
  std::string buffer;
  std::set<PageId> seen_ids;
  std::set<std::string> seen_titles;
  while (true) {
    auto ev = reader.Next();
    if (ev == XmlReader::Event::kEof) break;
    if (ev == XmlReader::Event::kStart) {
      path.push_back(reader.name());
      buffer.clear();
      if (reader.name() == "page") {
        page.emplace();
        page->offset = reader.offset();
      } else if (page && reader.name() == "redirect") {
        auto it = reader.attributes().find("title");
        if (it != reader.attributes().end()) page->redirect_attr = it->second;
      }
      continue;
    }
    if (ev == XmlReader::Event::kText) {
      buffer += reader.text();
      continue;
    }
    // End element.
    const std::string name = path.back();
    const std::string parent = path.size() >= 2 ? path[path.size() - 2] : "";
    path.pop_back();
    if (page) {
      if (name == "title" && parent == "page") page->title = buffer;
      else if (name == "ns" && parent == "page") page->ns = text::Trim(buffer);
      else if (name == "id" && parent == "page") page->id = ParseId(buffer, reader.offset());
      else if (name == "text" && parent == "revision") page->text = buffer;
      else if (name == "timestamp" && parent == "revision") {
        latest_timestamp = std::max(latest_timestamp, text::Trim(buffer));
      }
    }
    buffer.clear();
    if (name != "page" || !page) continue;

    RawPage raw = std::move(*page);
    page.reset();
    if (!raw.id) {
      throw ParseError("xml: page without id at byte offset " + std::to_string(raw.offset),
                       raw.offset);
    }
    std::string title = wikitext::NormalizeTitle(raw.title);
    if (title.empty()) {
      throw ParseError("xml: page without title at byte offset " + std::to_string(raw.offset),
                       raw.offset);
    }
    if ((!raw.ns.empty() && raw.ns != "0") || NamespacedTitle(title) ||
        !seen_titles.insert(title).second) {
      ++stats.skipped_pages;
      continue;
    }
    if (!seen_ids.insert(*raw.id).second) {
      throw DataError("duplicate page id " + std::to_string(*raw.id) + " at byte offset " +
                      std::to_string(raw.offset));
    }
    ParsedPage p;
    p.id = *raw.id;
    p.title = title;
    if (raw.redirect_attr) p.redirect = wikitext::NormalizeTitle(*raw.redirect_attr);
    if (!p.redirect) p.redirect = wikitext::RedirectTarget(raw.text);
    if (!p.redirect) {
      p.links = wikitext::LinkTargets(raw.text);
      p.categories = wikitext::Categories(raw.text);
      p.disambiguation = wikitext::HasDisambiguationTemplate(raw.text) ||
                         (title.size() > 17 && title.ends_with(" (disambiguation)"));
      p.abstract = wikitext::Abstract(raw.text);
    }
    pages.push_back(std::move(p));
  }

  // Redirects whose target is missing are dropped, repeatedly, since dropping
  // one can strand another.
  std::map<std::string, size_t> by_title;
  std::vector<bool> alive(pages.size(), true);
  for (size_t i = 0; i < pages.size(); ++i) by_title[pages[i].title] = i;
  for (bool changed = true; changed;) {
    changed = false;
    for (size_t i = 0; i < pages.size(); ++i) {
      if (!alive[i] || !pages[i].redirect) continue;
      auto it = by_title.find(*pages[i].redirect);
      if (it == by_title.end() || !alive[it->second]) {
        alive[i] = false;
        ++stats.skipped_pages;
        changed = true;
      }
    }
  }
  for (size_t i = 0; i < pages.size(); ++i) {
    if (!alive[i]) by_title.erase(pages[i].title);
  }
  auto canonical = [&](const std::string& title) -> std::optional<size_t> {
    auto it = by_title.find(title);
    for (int hop = 0; it != by_title.end(); ++hop) {
      const ParsedPage& p = pages[it->second];
      if (!p.redirect) return it->second;
      if (hop >= kMaxRedirectDepth) return std::nullopt;
      it = by_title.find(*p.redirect);
    }
    return std::nullopt;
  };

  std::vector<KBRecord> records;
  std::set<std::string> category_names;
  for (size_t i = 0; i < pages.size(); ++i) {
    if (!alive[i]) continue;
    const ParsedPage& p = pages[i];
    KBRecord r;
    r.page_id = p.id;
    r.title = p.title;
    if (p.redirect) {
      r.redirect_to = pages[by_title.at(*p.redirect)].id;
      r.abstract_embedding = embedding::Vector(embedder.dimension());
      ++stats.redirects;
    } else {
      std::set<std::string> unresolved;
      std::set<PageId> targets;
      for (const auto& t : p.links) {
        auto idx = canonical(t);
        if (!idx) {
          unresolved.insert(t);
          continue;
        }
        if (pages[*idx].id != p.id) targets.insert(pages[*idx].id);
      }
      stats.dropped_links += unresolved.size();
      r.out_links.assign(targets.begin(), targets.end());
      r.categories = p.categories;
      r.is_disambiguation = p.disambiguation;
      r.abstract = p.abstract;
      r.abstract_embedding = embedder.Embed(r.abstract);
      stats.links += r.out_links.size();
      stats.disambiguations += r.is_disambiguation;
      category_names.insert(p.categories.begin(), p.categories.end());
    }
    records.push_back(std::move(r));
  }
  std::sort(records.begin(), records.end(),
            [](const KBRecord& a, const KBRecord& b) { return a.page_id < b.page_id; });
  stats.pages = records.size();
  stats.categories = category_names.size();
  stats.build_timestamp = options.build_timestamp.empty() ? latest_timestamp : options.build_timestamp;

  // Serialize.
  const uint32_t dim = static_cast<uint32_t>(embedder.dimension());
  io::Writer rec_file, offsets, titles, inlinks, cats;
  rec_file.Header();
  rec_file.U32(dim);
  rec_file.U64(records.size());
  offsets.Header();
  offsets.U64(records.size());
  std::map<PageId, std::vector<PageId>> inverted;
  for (const auto& r : records) {
    offsets.U64(r.page_id);
    offsets.U64(rec_file.size());
    rec_file.U64(r.page_id);
    rec_file.Str(r.title);
    rec_file.Str(r.abstract);
    rec_file.U8(static_cast<uint8_t>((r.is_disambiguation ? 1 : 0) | (r.redirect_to ? 2 : 0)));
    rec_file.U64(r.redirect_to.value_or(0));
    rec_file.U32(static_cast<uint32_t>(r.out_links.size()));
    for (PageId t : r.out_links) {
      rec_file.U64(t);
      inverted[t].push_back(r.page_id);
    }
    rec_file.U32(static_cast<uint32_t>(r.categories.size()));
    for (const auto& c : r.categories) rec_file.Str(c);
    for (size_t k = 0; k < dim; ++k) rec_file.F64(r.abstract_embedding[k]);
  }
  std::map<std::string, PageId> title_index;
  for (const auto& r : records) title_index[r.title] = r.page_id;
  titles.Header();
  titles.U64(title_index.size());
  for (const auto& [t, id] : title_index) {
    titles.Str(t);
    titles.U64(id);
  }
  inlinks.Header();
  inlinks.U64(inverted.size());
  for (auto& [target, sources] : inverted) {
    std::sort(sources.begin(), sources.end());
    inlinks.U64(target);
    inlinks.U32(static_cast<uint32_t>(sources.size()));
    for (PageId s : sources) inlinks.U64(s);
  }
  cats.Header();
  cats.U32(dim);
  cats.U64(category_names.size());
  for (const auto& name : category_names) {
    cats.Str(name);
    embedding::Vector v = embedder.Embed(name);
    for (size_t k = 0; k < dim; ++k) cats.F64(v[k]);
  }
  nlohmann::ordered_json js = {{"format", "edukg-kb"},
                               {"version", io::kVersion},
                               {"embedder", embedder.name()},
                               {"dimension", dim},
                               {"pages", stats.pages},
                               {"redirects", stats.redirects},
                               {"disambiguations", stats.disambiguations},
                               {"links", stats.links},
                               {"categories", stats.categories},
                               {"dropped_links", stats.dropped_links},
                               {"skipped_pages", stats.skipped_pages},
                               {"build_timestamp", stats.build_timestamp}};

  fs::path target = fs::absolute(out_dir).lexically_normal();
  if (target.filename().empty()) target = target.parent_path();
  fs::path staging = target;
  staging += ".building";
  fs::path retired = target;
  retired += ".old";
  fs::remove_all(staging);
  fs::create_directories(staging);
  WriteFile(staging / "records.bin", rec_file.data());
  WriteFile(staging / "offsets.idx", offsets.data());
  WriteFile(staging / "titles.idx", titles.data());
  WriteFile(staging / "inlinks.idx", inlinks.data());
  WriteFile(staging / "categories.bin", cats.data());
  WriteFile(staging / "stats.json", js.dump(2) + "\n");
  fs::remove_all(retired);
  if (fs::exists(target)) fs::rename(target, retired);
  fs::rename(staging, target);
  fs::remove_all(retired);
  return stats;
}

}  // namespace edukg::kb
