#pragma once

// Thin XML layer over expat: a SAX driver, a small element tree for the
// model formats (PTML, PNML), and an escaping writer.

#include <expat.h>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "itree/error.hpp"

namespace itree::xml {

using Attributes = std::vector<std::pair<std::string, std::string>>;

inline std::optional<std::string_view> find_attribute(const Attributes& attrs, std::string_view key) {
  for (const auto& [k, v] : attrs) {
    if (k == key) return std::string_view(v);
  }
  return std::nullopt;
}

/// Receives parse events. Element names arrive without namespace processing.
class SaxHandler {
 public:
  virtual ~SaxHandler() = default;
  virtual void start_element(std::string_view name, const Attributes& attrs) = 0;
  virtual void end_element(std::string_view name) = 0;
  virtual void text(std::string_view) {}
};

namespace detail {

struct ExpatDeleter {
  void operator()(XML_ParserStruct* p) const noexcept { XML_ParserFree(p); }
};

struct Dispatch {
  SaxHandler* handler = nullptr;
  Attributes scratch;
  // Exceptions must not unwind through expat's C frames; park them here.
  std::exception_ptr pending;
  XML_Parser parser = nullptr;
};

inline void on_start(void* user, const XML_Char* name, const XML_Char** atts) {
  auto* d = static_cast<Dispatch*>(user);
  if (d->pending) return;
  try {
    d->scratch.clear();
    for (std::size_t i = 0; atts[i] != nullptr; i += 2) {
      d->scratch.emplace_back(atts[i], atts[i + 1]);
    }
    d->handler->start_element(name, d->scratch);
  } catch (...) {
    d->pending = std::current_exception();
    XML_StopParser(d->parser, XML_FALSE);
  }
}

inline void on_end(void* user, const XML_Char* name) {
  auto* d = static_cast<Dispatch*>(user);
  if (d->pending) return;
  try {
    d->handler->end_element(name);
  } catch (...) {
    d->pending = std::current_exception();
    XML_StopParser(d->parser, XML_FALSE);
  }
}

inline void on_text(void* user, const XML_Char* s, int len) {
  auto* d = static_cast<Dispatch*>(user);
  if (d->pending) return;
  try {
    d->handler->text(std::string_view(s, static_cast<std::size_t>(len)));
  } catch (...) {
    d->pending = std::current_exception();
    XML_StopParser(d->parser, XML_FALSE);
  }
}

}  // namespace detail

/// Incremental SAX parser. Feed chunks, then call finish().
class SaxParser {
 public:
  explicit SaxParser(SaxHandler& handler) : parser_(XML_ParserCreate("UTF-8")) {
    if (!parser_) fail(ErrorCode::MalformedXml, "cannot allocate XML parser");
    dispatch_.handler = &handler;
    dispatch_.parser = parser_.get();
    XML_SetUserData(parser_.get(), &dispatch_);
    XML_SetElementHandler(parser_.get(), &detail::on_start, &detail::on_end);
    XML_SetCharacterDataHandler(parser_.get(), &detail::on_text);
  }

  void feed(std::string_view chunk) { parse(chunk, false); }
  void finish() { parse({}, true); }

 private:
  void parse(std::string_view chunk, bool last) {
    const auto status = XML_Parse(parser_.get(), chunk.data(), static_cast<int>(chunk.size()),
                                  last ? XML_TRUE : XML_FALSE);
    if (dispatch_.pending) std::rethrow_exception(dispatch_.pending);
    if (status != XML_STATUS_OK) {
      const auto line = XML_GetCurrentLineNumber(parser_.get());
      fail(ErrorCode::MalformedXml,
           std::string("XML error at line ") + std::to_string(line) + ": " +
               XML_ErrorString(XML_GetErrorCode(parser_.get())));
    }
  }

  std::unique_ptr<XML_ParserStruct, detail::ExpatDeleter> parser_;
  detail::Dispatch dispatch_;
};

inline void parse_sax(std::string_view document, SaxHandler& handler) {
  SaxParser parser(handler);
  // expat takes an int length; chunk very large inputs.
  constexpr std::size_t kChunk = std::size_t{1} << 26;
  for (std::size_t off = 0; off < document.size(); off += kChunk) {
    parser.feed(document.substr(off, kChunk));
  }
  parser.finish();
}

struct Element {
  std::string name;
  Attributes attributes;
  std::vector<Element> children;
  std::string text;

  std::optional<std::string_view> attribute(std::string_view key) const {
    return find_attribute(attributes, key);
  }

  const Element* child(std::string_view child_name) const {
    for (const auto& c : children) {
      if (c.name == child_name) return &c;
    }
    return nullptr;
  }
};

namespace detail {

class TreeBuilder final : public SaxHandler {
 public:
  void start_element(std::string_view name, const Attributes& attrs) override {
    Element e;
    e.name = std::string(name);
    e.attributes = attrs;
    stack_.push_back(std::move(e));
  }

  void end_element(std::string_view) override {
    Element done = std::move(stack_.back());
    stack_.pop_back();
    if (stack_.empty()) {
      root_ = std::move(done);
    } else {
      stack_.back().children.push_back(std::move(done));
    }
  }

  void text(std::string_view s) override {
    if (!stack_.empty()) stack_.back().text.append(s);
  }

  Element take() { return std::move(root_); }

 private:
  std::vector<Element> stack_;
  Element root_;
};

}  // namespace detail

/// Parses a whole document into an element tree. Throws MalformedXml.
inline Element parse_document(std::string_view document) {
  detail::TreeBuilder builder;
  parse_sax(document, builder);
  return builder.take();
}

inline std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Minimal pretty-printing writer; enough for the formats we emit.
class Writer {
 public:
  Writer() { out_ = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"; }

  Writer& open(std::string_view name, const Attributes& attrs = {}) {
    start_tag(name, attrs);
    out_ += ">\n";
    open_.emplace_back(name);
    return *this;
  }

  Writer& leaf(std::string_view name, const Attributes& attrs = {}) {
    start_tag(name, attrs);
    out_ += "/>\n";
    return *this;
  }

  Writer& text_element(std::string_view name, std::string_view text) {
    indent();
    out_ += '<';
    out_ += name;
    out_ += '>';
    out_ += escape(text);
    out_ += "</";
    out_ += name;
    out_ += ">\n";
    return *this;
  }

  Writer& close() {
    std::string name = std::move(open_.back());
    open_.pop_back();
    indent();
    out_ += "</" + name + ">\n";
    return *this;
  }

  std::string str() && {
    while (!open_.empty()) close();
    return std::move(out_);
  }

 private:
  void indent() { out_.append(open_.size() * 2, ' '); }

  void start_tag(std::string_view name, const Attributes& attrs) {
    indent();
    out_ += '<';
    out_ += name;
    for (const auto& [k, v] : attrs) {
      out_ += ' ';
      out_ += k;
      out_ += "=\"";
      out_ += escape(v);
      out_ += '"';
    }
  }

  std::string out_;
  std::vector<std::string> open_;
};

}  // namespace itree::xml
