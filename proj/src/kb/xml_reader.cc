#include "edukg/kb/xml_reader.h"

#include "edukg/common/error.h"

namespace edukg::kb {

int XmlReader::Get() {
  int c = in_.get();
  if (c != std::char_traits<char>::eof()) ++offset_;
  return c;
}

int XmlReader::Peek() { return in_.peek(); }

void XmlReader::Fail(const std::string& what) const {
  throw ParseError("xml: " + what + " at byte offset " + std::to_string(offset_), offset_);
}

void XmlReader::SkipSpace() {
  while (true) {
    int c = Peek();
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      Get();
    } else {
      return;
    }
  }
}

void XmlReader::ReadName(std::string& out) {
  out.clear();
  while (true) {
    int c = Peek();
    if (c == std::char_traits<char>::eof()) Fail("unexpected end of input in name");
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '>' || c == '/' || c == '=' ||
        c == '<' || c == '"' || c == '\'') {
      break;
    }
    out.push_back(static_cast<char>(Get()));
  }
  if (out.empty()) Fail("empty name");
}

void XmlReader::DecodeEntity(std::string& out) {
  std::string ent;
  while (true) {
    int c = Get();
    if (c == std::char_traits<char>::eof()) Fail("unterminated entity");
    if (c == ';') break;
    ent.push_back(static_cast<char>(c));
    if (ent.size() > 10) Fail("entity too long");
  }
  if (ent == "amp") out += '&';
  else if (ent == "lt") out += '<';
  else if (ent == "gt") out += '>';
  else if (ent == "quot") out += '"';
  else if (ent == "apos") out += '\'';
  else if (ent.size() > 1 && ent[0] == '#') {
    unsigned long cp = 0;
    try {
      cp = ent[1] == 'x' || ent[1] == 'X' ? std::stoul(ent.substr(2), nullptr, 16)
                                          : std::stoul(ent.substr(1), nullptr, 10);
    } catch (const std::exception&) {
      Fail("bad character reference &" + ent + ";");
    }
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x110000) {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      Fail("character reference out of range");
    }
  } else {
    Fail("unknown entity &" + ent + ";");
  }
}

void XmlReader::SkipUntil(const std::string& terminator) {
  size_t matched = 0;
  while (matched < terminator.size()) {
    int c = Get();
    if (c == std::char_traits<char>::eof()) Fail("unterminated '" + terminator + "' construct");
    if (c == terminator[matched]) {
      ++matched;
    } else {
      matched = c == terminator[0] ? 1 : 0;
    }
  }
}

void XmlReader::ParseTag() {
  // '<' already consumed.
  attributes_.clear();
  if (Peek() == '/') {
    Get();
    ReadName(name_);
    SkipSpace();
    if (Get() != '>') Fail("expected '>' after end tag name");
    if (stack_.empty() || stack_.back() != name_) {
      Fail("mismatched end tag </" + name_ + ">" +
           (stack_.empty() ? "" : ", expected </" + stack_.back() + ">"));
    }
    stack_.pop_back();
    last_ = Event::kEnd;
    return;
  }
  if (stack_.empty() && seen_root_) Fail("content after the root element");
  ReadName(name_);
  while (true) {
    SkipSpace();
    int c = Peek();
    if (c == '>') {
      Get();
      break;
    }
    if (c == '/') {
      Get();
      if (Get() != '>') Fail("expected '>' after '/'");
      pending_end_ = true;
      break;
    }
    std::string attr;
    ReadName(attr);
    SkipSpace();
    if (Get() != '=') Fail("expected '=' after attribute name");
    SkipSpace();
    int quote = Get();
    if (quote != '"' && quote != '\'') Fail("attribute value must be quoted");
    std::string value;
    while (true) {
      int v = Get();
      if (v == std::char_traits<char>::eof()) Fail("unterminated attribute value");
      if (v == quote) break;
      if (v == '<') Fail("'<' in attribute value");
      if (v == '&') {
        DecodeEntity(value);
      } else {
        value.push_back(static_cast<char>(v));
      }
    }
    attributes_[attr] = std::move(value);
  }
  seen_root_ = true;
  stack_.push_back(name_);
  last_ = Event::kStart;
}

XmlReader::Event XmlReader::Next() {
  if (pending_end_) {
    pending_end_ = false;
    stack_.pop_back();
    last_ = Event::kEnd;
    return last_;
  }
  text_.clear();
  while (true) {
    int c = Peek();
    if (c == std::char_traits<char>::eof()) {
      if (!stack_.empty()) Fail("unexpected end of input inside <" + stack_.back() + ">");
      if (!text_.empty()) return last_ = Event::kText;
      if (!seen_root_) Fail("no root element");
      return last_ = Event::kEof;
    }
    if (c == '<') {
      // Markup: flush collected text first.
      if (!text_.empty()) return last_ = Event::kText;
      Get();
      int n = Peek();
      if (n == '?') {
        SkipUntil("?>");
        continue;
      }
      if (n == '!') {
        Get();
        if (Peek() == '-') {
          Get();
          if (Get() != '-') Fail("malformed comment");
          SkipUntil("-->");
          continue;
        }
        if (Peek() == '[') {
          std::string head;
          for (int k = 0; k < 7; ++k) head.push_back(static_cast<char>(Get()));
          if (head != "[CDATA[") Fail("malformed CDATA section");
          std::string data;
          size_t matched = 0;
          const std::string term = "]]>";
          while (matched < term.size()) {
            int d = Get();
            if (d == std::char_traits<char>::eof()) Fail("unterminated CDATA section");
            data.push_back(static_cast<char>(d));
            matched = d == term[matched] ? matched + 1 : (d == ']' ? 1 : 0);
          }
          data.resize(data.size() - 3);
          if (stack_.empty()) Fail("CDATA outside the root element");
          text_ += data;
          continue;
        }
        SkipUntil(">");  // DOCTYPE
        continue;
      }
      ParseTag();
      return last_;
    }
    Get();
    if (stack_.empty()) {
      if (c != ' ' && c != '\t' && c != '\n' && c != '\r') Fail("text outside the root element");
      continue;
    }
    if (c == '&') {
      DecodeEntity(text_);
    } else {
      text_.push_back(static_cast<char>(c));
    }
  }
}

}  // namespace edukg::kb
