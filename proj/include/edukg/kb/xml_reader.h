#pragma once

#include <istream>
#include <map>
#include <string>
#include <vector>

namespace edukg::kb {

// Minimal pull parser for the XML subset found in MediaWiki exports.
// Well-formedness violations raise ParseError carrying the byte offset.
class XmlReader {
 public:
  enum class Event { kStart, kEnd, kText, kEof };

  explicit XmlReader(std::istream& in) : in_(in) {}

  Event Next();

  // Valid after kStart / kEnd.
  const std::string& name() const { return name_; }
  // Valid after kStart. Self-closing tags produce kStart followed by kEnd.
  const std::map<std::string, std::string>& attributes() const { return attributes_; }
  // Valid after kText (entities decoded, CDATA included).
  const std::string& text() const { return text_; }
  size_t depth() const { return stack_.size(); }
  long long offset() const { return offset_; }

 private:
  int Get();
  int Peek();
  [[noreturn]] void Fail(const std::string& what) const;
  void ReadName(std::string& out);
  void SkipSpace();
  void DecodeEntity(std::string& out);
  void ParseTag();
  void SkipUntil(const std::string& terminator);

  std::istream& in_;
  long long offset_ = 0;
  std::string name_;
  std::string text_;
  std::map<std::string, std::string> attributes_;
  std::vector<std::string> stack_;
  bool pending_end_ = false;
  bool seen_root_ = false;
  Event last_ = Event::kText;
};

}  // namespace edukg::kb
