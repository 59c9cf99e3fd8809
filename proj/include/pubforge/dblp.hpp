#pragma once

// Streaming ingestion of dblp-style XML.
//
// XmlReader is a small pull parser: it reads the input in fixed-size chunks
// and never holds more than the current token, so memory stays bounded on
// multi-gigabyte dumps. It checks well-formedness (tag balance, a single root,
// quoting, entity syntax) and reports failures with the byte offset. The DTD is
// skipped, not interpreted; named entities beyond the five predefined ones come
// from an optional EntityTable.

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pubforge/corpus.hpp"
#include "pubforge/error.hpp"
#include "pubforge/table.hpp"

namespace pubforge {

/// Entity name -> UTF-8 replacement text.
struct EntityTable {
  std::map<std::string, std::string, std::less<>> entries;

  /// Lines of `name=replacement`; blank lines and `#` comments are skipped.
  static EntityTable load(std::istream& in) {
    EntityTable table;
    std::string line;
    std::size_t lineno = 0;
    while (table::next_line(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      auto eq = line.find('=');
      if (eq == std::string::npos || eq == 0) throw RowError("expected name=replacement", lineno);
      table.entries[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return table;
  }
};

inline void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

class XmlReader {
 public:
  enum class Event { start_element, end_element, text, end_document };
  using Attributes = std::vector<std::pair<std::string, std::string>>;

  explicit XmlReader(std::istream& in, const EntityTable* entities = nullptr)
      : in_(in), entities_(entities) {}

  Event next() {
    if (pending_end_) {
      pending_end_ = false;
      name_ = stack_.back();
      stack_.pop_back();
      return Event::end_element;
    }
    for (;;) {
      int ch = peek();
      if (ch < 0) {
        if (!stack_.empty()) fail("unexpected end of document inside <" + stack_.back() + ">");
        if (!seen_root_) fail("document has no root element");
        return Event::end_document;
      }
      if (ch == '<') {
        token_start_ = offset_;
        get();
        int kind = peek();
        if (kind == '?') {
          skip_until("?>");
        } else if (kind == '!') {
          get();
          if (consume("--")) {
            skip_until("-->");
          } else if (consume("[CDATA[")) {
            if (stack_.empty()) fail("CDATA outside the root element");
            text_.clear();
            read_until("]]>", text_);
            return Event::text;
          } else if (consume("DOCTYPE")) {
            skip_doctype();
          } else {
            fail("unsupported markup declaration");
          }
        } else if (kind == '/') {
          get();
          read_name(name_);
          skip_space();
          expect('>');
          if (stack_.empty()) fail("closing tag </" + name_ + "> without open element");
          if (stack_.back() != name_) {
            fail("mismatched closing tag </" + name_ + ">, expected </" + stack_.back() + ">");
          }
          stack_.pop_back();
          return Event::end_element;
        } else {
          read_start_tag();
          return Event::start_element;
        }
      } else {
        token_start_ = offset_;
        text_.clear();
        read_text(text_);
        if (stack_.empty()) {
          for (char c : text_) {
            if (c != ' ' && c != '\t' && c != '\n' && c != '\r') {
              offset_ = token_start_;
              fail("character data outside the root element");
            }
          }
          continue;
        }
        return Event::text;
      }
    }
  }

  const std::string& name() const { return name_; }
  const std::string& text() const { return text_; }
  const Attributes& attributes() const { return attributes_; }

  std::string_view attribute(std::string_view key) const {
    for (const auto& [k, v] : attributes_) {
      if (k == key) return v;
    }
    return {};
  }
  bool has_attribute(std::string_view key) const {
    for (const auto& kv : attributes_) {
      if (kv.first == key) return true;
    }
    return false;
  }

  /// Open elements after the last event (a start event counts its element).
  std::size_t depth() const { return stack_.size(); }
  std::size_t offset() const { return offset_; }

 private:
  static constexpr std::size_t kChunk = 1 << 16;

  int peek() {
    if (pos_ == len_) {
      in_.read(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
      len_ = static_cast<std::size_t>(in_.gcount());
      pos_ = 0;
      if (len_ == 0) return -1;
    }
    return static_cast<unsigned char>(buffer_[pos_]);
  }

  int get() {
    int ch = peek();
    if (ch >= 0) {
      ++pos_;
      ++offset_;
    }
    return ch;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, offset_); }

  void expect(char want) {
    int ch = get();
    if (ch != want) {
      --offset_;
      fail(std::string("expected '") + want + "'");
    }
  }

  // Matches `literal` against upcoming input; literal prefixes are only
  // probed at points where a mismatch is a syntax error anyway.
  bool consume(std::string_view literal) {
    if (peek() != static_cast<unsigned char>(literal[0])) return false;
    for (char want : literal) {
      int ch = get();
      if (ch != static_cast<unsigned char>(want)) fail("malformed markup declaration");
    }
    return true;
  }

  void skip_until(std::string_view terminator) {
    std::string sink;
    read_until(terminator, sink, /*keep=*/false);
  }

  void read_until(std::string_view terminator, std::string& out, bool keep = true) {
    std::string tail;
    std::string& buf = keep ? out : tail;
    const std::size_t base = buf.size();
    for (;;) {
      int ch = get();
      if (ch < 0) fail("unterminated construct, expected '" + std::string(terminator) + "'");
      buf.push_back(static_cast<char>(ch));
      if (buf.size() - base >= terminator.size() &&
          std::string_view(buf).substr(buf.size() - terminator.size()) == terminator) {
        buf.resize(buf.size() - terminator.size());
        return;
      }
      if (!keep && tail.size() > 64) tail.erase(0, tail.size() - terminator.size());
    }
  }

  void skip_doctype() {
    int bracket = 0;
    char quote = 0;
    for (;;) {
      int ch = get();
      if (ch < 0) fail("unterminated DOCTYPE");
      if (quote) {
        if (ch == quote) quote = 0;
      } else if (ch == '"' || ch == '\'') {
        quote = static_cast<char>(ch);
      } else if (ch == '[') {
        ++bracket;
      } else if (ch == ']') {
        --bracket;
      } else if (ch == '>' && bracket <= 0) {
        return;
      }
    }
  }

  void skip_space() {
    for (int ch = peek(); ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r'; ch = peek()) get();
  }

  static bool name_char(int ch) {
    return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
           ch == '_' || ch == ':' || ch == '-' || ch == '.' || ch >= 0x80;
  }

  void read_name(std::string& out) {
    out.clear();
    int ch = peek();
    if (ch < 0 || !name_char(ch) || (ch >= '0' && ch <= '9') || ch == '-' || ch == '.') {
      fail("expected a name");
    }
    while (ch >= 0 && name_char(ch)) {
      out.push_back(static_cast<char>(get()));
      ch = peek();
    }
  }

  void read_start_tag() {
    if (seen_root_ && stack_.empty()) fail("content after the root element");
    read_name(name_);
    attributes_.clear();
    for (;;) {
      bool spaced = false;
      for (int ch = peek(); ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r'; ch = peek()) {
        get();
        spaced = true;
      }
      int ch = peek();
      if (ch == '>') {
        get();
        break;
      }
      if (ch == '/') {
        get();
        expect('>');
        pending_end_ = true;
        break;
      }
      if (ch < 0) fail("unexpected end of document inside a tag");
      if (!spaced) fail("expected whitespace between attributes");
      std::string key;
      read_name(key);
      skip_space();
      expect('=');
      skip_space();
      int quote = get();
      if (quote != '"' && quote != '\'') {
        --offset_;
        fail("attribute value must be quoted");
      }
      std::string value;
      for (;;) {
        int c = peek();
        if (c < 0) fail("unterminated attribute value");
        if (c == quote) {
          get();
          break;
        }
        if (c == '<') fail("'<' in attribute value");
        if (c == '&') {
          decode_entity(value);
        } else {
          value.push_back(static_cast<char>(get()));
        }
      }
      for (const auto& kv : attributes_) {
        if (kv.first == key) fail("duplicate attribute '" + key + "'");
      }
      attributes_.emplace_back(std::move(key), std::move(value));
    }
    seen_root_ = true;
    stack_.push_back(name_);
  }

  void read_text(std::string& out) {
    for (int ch = peek(); ch >= 0 && ch != '<'; ch = peek()) {
      if (ch == '&') {
        decode_entity(out);
      } else {
        out.push_back(static_cast<char>(get()));
      }
    }
  }

  void decode_entity(std::string& out) {
    std::size_t at = offset_;
    get();  // '&'
    std::string ref;
    for (;;) {
      int ch = get();
      if (ch < 0) {
        offset_ = at;
        fail("unterminated entity reference");
      }
      if (ch == ';') break;
      ref.push_back(static_cast<char>(ch));
      if (ref.size() > 64 || ch == '<' || ch == '&' || ch == ' ' || ch == '\n') {
        offset_ = at;
        fail("malformed entity reference");
      }
    }
    if (ref.empty()) {
      offset_ = at;
      fail("empty entity reference");
    }
    if (ref[0] == '#') {
      std::uint32_t cp = 0;
      bool ok = ref.size() > 1;
      bool hex = ok && (ref[1] == 'x' || ref[1] == 'X');
      std::string_view digits = std::string_view(ref).substr(hex ? 2 : 1);
      if (digits.empty()) ok = false;
      for (char d : digits) {
        int v = -1;
        if (d >= '0' && d <= '9') v = d - '0';
        else if (hex && d >= 'a' && d <= 'f') v = d - 'a' + 10;
        else if (hex && d >= 'A' && d <= 'F') v = d - 'A' + 10;
        if (v < 0 || cp > 0x10FFFF) {
          ok = false;
          break;
        }
        cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(v);
      }
      if (!ok || cp == 0 || cp > 0x10FFFF) {
        offset_ = at;
        fail("invalid character reference '&" + ref + ";'");
      }
      append_utf8(out, cp);
      return;
    }
    if (ref == "lt") out.push_back('<');
    else if (ref == "gt") out.push_back('>');
    else if (ref == "amp") out.push_back('&');
    else if (ref == "apos") out.push_back('\'');
    else if (ref == "quot") out.push_back('"');
    else {
      if (entities_) {
        auto it = entities_->entries.find(ref);
        if (it != entities_->entries.end()) {
          out += it->second;
          return;
        }
      }
      offset_ = at;
      fail("unknown entity '&" + ref + ";'");
    }
  }

  std::istream& in_;
  const EntityTable* entities_;
  std::array<char, kChunk> buffer_{};
  std::size_t pos_ = 0;
  std::size_t len_ = 0;
  std::size_t offset_ = 0;
  std::size_t token_start_ = 0;
  std::vector<std::string> stack_;
  std::string name_;
  std::string text_;
  Attributes attributes_;
  bool pending_end_ = false;
  bool seen_root_ = false;
};

inline bool is_publication_element(std::string_view name) {
  static constexpr std::array<std::string_view, 7> kKinds = {
      "article", "inproceedings", "proceedings", "incollection", "phdthesis", "mastersthesis", "book"};
  for (auto k : kKinds) {
    if (k == name) return true;
  }
  return false;
}

namespace detail {
inline std::string trim(std::string s) {
  auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  std::size_t b = 0, e = s.size();
  while (b < e && ws(s[b])) ++b;
  while (e > b && ws(s[e - 1])) --e;
  return s.substr(b, e - b);
}
}  // namespace detail

/// One record per (author, publication). Publications lacking a year, an
/// author or a key are skipped and tallied, as are years outside the bounds.
inline ParseResult parse_dblp_xml(std::istream& in, const IngestOptions& options = {},
                                  const EntityTable* entities = nullptr) {
  ParseResult out;
  XmlReader reader(in, entities);

  bool in_record = false;
  bool has_key = false;
  std::string key, year_text, journal, booktitle;
  bool has_year = false;
  std::vector<std::string> authors;
  std::string field;  // name of the child element being captured
  std::string capture;

  for (auto ev = reader.next(); ev != XmlReader::Event::end_document; ev = reader.next()) {
    switch (ev) {
      case XmlReader::Event::start_element:
        if (reader.depth() == 2) {
          if (is_publication_element(reader.name())) {
            in_record = true;
            has_key = reader.has_attribute("key") && !reader.attribute("key").empty();
            key = std::string(reader.attribute("key"));
            authors.clear();
            year_text.clear();
            journal.clear();
            booktitle.clear();
            has_year = false;
          } else {
            ++out.stats.ignored_elements;
          }
        } else if (in_record && reader.depth() == 3) {
          const auto& n = reader.name();
          if (n == "author" || n == "year" || n == "journal" || n == "booktitle") {
            field = n;
            capture.clear();
          }
        }
        break;
      case XmlReader::Event::text:
        if (!field.empty()) capture += reader.text();
        break;
      case XmlReader::Event::end_element:
        if (in_record && reader.depth() == 2 && !field.empty()) {
          std::string value = detail::trim(std::move(capture));
          if (field == "author") {
            if (!value.empty()) authors.push_back(std::move(value));
          } else if (field == "year") {
            year_text = std::move(value);
            has_year = true;
          } else if (field == "journal") {
            journal = std::move(value);
          } else {
            booktitle = std::move(value);
          }
          field.clear();
        } else if (in_record && reader.depth() == 1) {
          in_record = false;
          ++out.stats.records_seen;
          auto year = has_year ? table::parse_int<int>(year_text) : std::nullopt;
          if (!year || authors.empty() || !has_key) {
            ++out.stats.skipped_incomplete;
            break;
          }
          if (*year < options.year_min || *year > options.year_max) {
            ++out.stats.skipped_out_of_range;
            break;
          }
          const std::string& venue = !journal.empty() ? journal : booktitle;
          for (auto& a : authors) out.records.push_back({std::move(a), *year, venue, key});
        }
        break;
      case XmlReader::Event::end_document:
        break;
    }
  }
  return out;
}

}  // namespace pubforge
