#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "binary_io.h"
#include "edukg/common/error.h"
#include "edukg/kb/kb.h"
#include "edukg/kb/wikitext.h"
#include "json.hpp"

namespace edukg::kb {

namespace fs = std::filesystem;

namespace {

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("kb store file missing: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<PageId> Neighborhood::Pool() const {
  std::set<PageId> all(out_links.begin(), out_links.end());
  all.insert(in_links.begin(), in_links.end());
  return {all.begin(), all.end()};
}

std::vector<KBRecord> KnowledgeBase::GetMany(const std::vector<PageId>& ids) const {
  std::vector<KBRecord> out;
  out.reserve(ids.size());
  for (PageId id : ids) out.push_back(Get(id));
  return out;
}

KBRecord KnowledgeBase::Lookup(std::string_view title) const {
  auto r = FindTitle(title);
  if (!r) throw NotFound("no knowledge-base page titled '" + std::string(title) + "'");
  return *r;
}

std::unique_ptr<KBStore> KBStore::Open(const fs::path& dir) {
  std::unique_ptr<KBStore> store(new KBStore());
  const std::string records = ReadFile(dir / "records.bin");
  const std::string offsets = ReadFile(dir / "offsets.idx");
  const std::string titles = ReadFile(dir / "titles.idx");
  const std::string inlinks = ReadFile(dir / "inlinks.idx");
  const std::string cats = ReadFile(dir / "categories.bin");

  io::Reader rr(records, "records.bin");
  rr.Header();
  store->dimension_ = rr.U32();
  const uint64_t count = rr.U64();
  io::Reader ro(offsets, "offsets.idx");
  ro.Header();
  if (ro.U64() != count) throw DataError("offsets.idx does not match records.bin");
  store->records_.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    const PageId id = ro.U64();
    rr.Seek(ro.U64());
    KBRecord r;
    r.page_id = rr.U64();
    if (r.page_id != id) throw DataError("offsets.idx points at the wrong record");
    r.title = rr.Str();
    r.abstract = rr.Str();
    const uint8_t flags = rr.U8();
    const PageId redirect = rr.U64();
    r.is_disambiguation = flags & 1;
    if (flags & 2) r.redirect_to = redirect;
    r.out_links.resize(rr.U32());
    for (auto& t : r.out_links) t = rr.U64();
    r.categories.resize(rr.U32());
    for (auto& c : r.categories) c = rr.Str();
    std::vector<double> v(store->dimension_);
    for (auto& x : v) x = rr.F64();
    r.abstract_embedding = embedding::Vector(std::move(v));
    store->by_id_[r.page_id] = store->records_.size();
    store->records_.push_back(std::move(r));
  }

  io::Reader rt(titles, "titles.idx");
  rt.Header();
  for (uint64_t n = rt.U64(); n > 0; --n) {
    std::string t = rt.Str();
    store->by_title_[t] = rt.U64();
  }
  io::Reader ri(inlinks, "inlinks.idx");
  ri.Header();
  for (uint64_t n = ri.U64(); n > 0; --n) {
    PageId target = ri.U64();
    std::vector<PageId> sources(ri.U32());
    for (auto& s : sources) s = ri.U64();
    store->in_links_[target] = std::move(sources);
  }
  io::Reader rc(cats, "categories.bin");
  rc.Header();
  const uint32_t cdim = rc.U32();
  for (uint64_t n = rc.U64(); n > 0; --n) {
    std::string name = rc.Str();
    std::vector<double> v(cdim);
    for (auto& x : v) x = rc.F64();
    store->category_embeddings_.emplace(std::move(name), embedding::Vector(std::move(v)));
  }

  auto js = nlohmann::json::parse(ReadFile(dir / "stats.json"));
  KBStats& s = store->stats_;
  s.pages = js.at("pages");
  s.redirects = js.at("redirects");
  s.disambiguations = js.at("disambiguations");
  s.links = js.at("links");
  s.categories = js.at("categories");
  s.dropped_links = js.at("dropped_links");
  s.skipped_pages = js.at("skipped_pages");
  s.build_timestamp = js.at("build_timestamp");
  return store;
}

const KBRecord& KBStore::Raw(PageId id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw NotFound("no knowledge-base page with id " + std::to_string(id));
  return records_[it->second];
}

const KBRecord& KBStore::Resolve(const KBRecord& start) const {
  const KBRecord* cur = &start;
  for (int hop = 0; cur->redirect_to; ++hop) {
    if (hop >= kMaxRedirectDepth) {
      throw DataError("redirect chain from '" + start.title + "' is cyclic or deeper than " +
                      std::to_string(kMaxRedirectDepth));
    }
    auto it = by_id_.find(*cur->redirect_to);
    if (it == by_id_.end()) throw DataError("redirect from '" + cur->title + "' points nowhere");
    cur = &records_[it->second];
  }
  return *cur;
}

std::optional<KBRecord> KBStore::FindTitle(std::string_view title) const {
  auto it = by_title_.find(wikitext::NormalizeTitle(title));
  if (it == by_title_.end()) return std::nullopt;
  return Resolve(Raw(it->second));
}

KBRecord KBStore::Get(PageId id) const { return Resolve(Raw(id)); }

std::vector<PageId> KBStore::InLinks(PageId id) const {
  auto it = in_links_.find(id);
  return it == in_links_.end() ? std::vector<PageId>{} : it->second;
}

Neighborhood KBStore::Neighbors(PageId id) const {
  const KBRecord& rec = Resolve(Raw(id));
  auto eligible = [&](PageId other) {
    if (other == rec.page_id) return false;
    auto it = by_id_.find(other);
    if (it == by_id_.end()) return false;
    const KBRecord& r = records_[it->second];
    return !r.is_redirect() && !r.is_disambiguation;
  };
  Neighborhood out;
  std::set<PageId> outs, ins;
  for (PageId t : rec.out_links) {
    if (eligible(t)) outs.insert(t);
  }
  for (PageId s : InLinks(rec.page_id)) {
    if (eligible(s)) ins.insert(s);
  }
  out.out_links.assign(outs.begin(), outs.end());
  out.in_links.assign(ins.begin(), ins.end());
  return out;
}

std::vector<CategoryRef> KBStore::CategoriesOf(PageId id) const {
  const KBRecord& rec = Resolve(Raw(id));
  std::vector<CategoryRef> out;
  for (const auto& name : rec.categories) {
    auto it = category_embeddings_.find(name);
    if (it == category_embeddings_.end()) throw DataError("category without embedding: " + name);
    out.push_back({name, it->second});
  }
  return out;
}

std::vector<KBRecord> KBStore::DisambiguationCandidates(std::string_view title) const {
  std::optional<KBRecord> page = FindTitle(title);
  if (!page || !page->is_disambiguation) {
    page = FindTitle(std::string(title) + " (disambiguation)");
  }
  if (!page || !page->is_disambiguation) return {};
  std::vector<KBRecord> out;
  std::set<PageId> seen;
  for (PageId t : page->out_links) {
    KBRecord r = Get(t);
    if (r.is_disambiguation || !seen.insert(r.page_id).second) continue;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace edukg::kb
