#include "webphuzz/html.hpp"

#include <cctype>
#include <string>

namespace webphuzz::html {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (lower(a[i]) != lower(b[i])) return false;
  }
  return true;
}

// Case-insensitive search for `needle` from `from`.
std::size_t ifind(std::string_view hay, std::string_view needle, std::size_t from) {
  if (needle.size() > hay.size()) return std::string_view::npos;
  for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
    if (iequals(hay.substr(i, needle.size()), needle)) return i;
  }
  return std::string_view::npos;
}

struct Span {
  std::size_t begin;
  std::size_t end;
  MarkerContext context;
};

// Splits the document into classified spans. Every byte belongs to at most
// one span; markup punctuation (<, >, =, quotes) belongs to none.
class Tokenizer {
 public:
  explicit Tokenizer(std::string_view doc) : doc_(doc) {}

  std::vector<Span> run() {
    std::size_t text_start = 0;
    while (pos_ < doc_.size()) {
      if (doc_[pos_] != '<') {
        ++pos_;
        continue;
      }
      std::size_t lt = pos_;
      char next = lt + 1 < doc_.size() ? doc_[lt + 1] : '\0';
      if (is_alpha(next) || next == '/' || next == '!' || next == '?') {
        emit(text_start, lt, MarkerContext::text);
        if (next == '!' || next == '?')
          markup_declaration();
        else
          tag();
        text_start = pos_;
      } else {
        ++pos_;
      }
    }
    emit(text_start, doc_.size(), MarkerContext::text);
    return std::move(spans_);
  }

 private:
  void emit(std::size_t b, std::size_t e, MarkerContext c) {
    if (e > b) spans_.push_back({b, e, c});
  }

  void markup_declaration() {
    std::size_t start = pos_;
    if (doc_.substr(pos_, 4) == "<!--") {
      auto end = doc_.find("-->", pos_ + 4);
      pos_ = end == std::string_view::npos ? doc_.size() : end + 3;
    } else {
      auto end = doc_.find('>', pos_);
      pos_ = end == std::string_view::npos ? doc_.size() : end + 1;
    }
    emit(start, pos_, MarkerContext::comment);
  }

  void tag() {
    ++pos_;  // '<'
    bool end_tag = false;
    if (pos_ < doc_.size() && doc_[pos_] == '/') {
      end_tag = true;
      ++pos_;
    }
    std::size_t name_start = pos_;
    while (pos_ < doc_.size() && !is_space(doc_[pos_]) && doc_[pos_] != '/' && doc_[pos_] != '>') ++pos_;
    std::string_view name = doc_.substr(name_start, pos_ - name_start);
    emit(name_start, pos_, MarkerContext::injected_tag);

    attributes();

    if (end_tag) return;
    if (iequals(name, "script") || iequals(name, "style") || iequals(name, "xmp") ||
        iequals(name, "noembed") || iequals(name, "noframes")) {
      raw_text(name, iequals(name, "script") ? MarkerContext::script_body : MarkerContext::text);
    } else if (iequals(name, "textarea") || iequals(name, "title")) {
      raw_text(name, MarkerContext::text);
    }
  }

  void attributes() {
    while (pos_ < doc_.size()) {
      char c = doc_[pos_];
      if (c == '>') {
        ++pos_;
        return;
      }
      if (is_space(c) || c == '/') {
        ++pos_;
        continue;
      }
      std::size_t name_start = pos_;
      // An attribute name may start with '='; it ends at space, '/', '>' or a later '='.
      ++pos_;
      while (pos_ < doc_.size() && !is_space(doc_[pos_]) && doc_[pos_] != '/' && doc_[pos_] != '>' &&
             doc_[pos_] != '=')
        ++pos_;
      std::string_view attr = doc_.substr(name_start, pos_ - name_start);
      emit(name_start, pos_, MarkerContext::injected_attribute);

      std::size_t look = pos_;
      while (look < doc_.size() && is_space(doc_[look])) ++look;
      if (look >= doc_.size() || doc_[look] != '=') continue;
      pos_ = look + 1;
      while (pos_ < doc_.size() && is_space(doc_[pos_])) ++pos_;
      value(attr);
    }
  }

  void value(std::string_view attr) {
    auto context = attr.size() > 2 && lower(attr[0]) == 'o' && lower(attr[1]) == 'n'
                       ? MarkerContext::event_handler
                       : MarkerContext::attribute_value;
    if (pos_ >= doc_.size()) return;
    char q = doc_[pos_];
    if (q == '"' || q == '\'') {
      std::size_t start = pos_ + 1;
      auto end = doc_.find(q, start);
      if (end == std::string_view::npos) end = doc_.size();
      emit(start, end, context);
      pos_ = end < doc_.size() ? end + 1 : end;
      return;
    }
    std::size_t start = pos_;
    while (pos_ < doc_.size() && !is_space(doc_[pos_]) && doc_[pos_] != '>') ++pos_;
    emit(start, pos_, context);
  }

  void raw_text(std::string_view name, MarkerContext context) {
    std::string close = "</" + std::string(name);
    std::size_t start = pos_;
    std::size_t at = start;
    for (;;) {
      at = ifind(doc_, close, at);
      if (at == std::string_view::npos) {
        emit(start, doc_.size(), context);
        pos_ = doc_.size();
        return;
      }
      std::size_t after = at + close.size();
      if (after >= doc_.size() || is_space(doc_[after]) || doc_[after] == '>' || doc_[after] == '/') break;
      at = after;
    }
    emit(start, at, context);
    pos_ = at;  // the end tag is tokenized normally
  }

  std::string_view doc_;
  std::size_t pos_ = 0;
  std::vector<Span> spans_;
};

}  // namespace

std::string_view to_string(MarkerContext c) {
  switch (c) {
    case MarkerContext::text: return "text";
    case MarkerContext::comment: return "comment";
    case MarkerContext::script_body: return "script_body";
    case MarkerContext::event_handler: return "event_handler";
    case MarkerContext::attribute_value: return "attribute_value";
    case MarkerContext::injected_tag: return "injected_tag";
    case MarkerContext::injected_attribute: return "injected_attribute";
  }
  return "?";
}

bool is_executable(MarkerContext c) {
  return c == MarkerContext::script_body || c == MarkerContext::event_handler ||
         c == MarkerContext::injected_tag || c == MarkerContext::injected_attribute;
}

std::vector<MarkerHit> find_marker_contexts(std::string_view document, std::string_view token) {
  std::vector<MarkerHit> hits;
  if (token.empty() || document.find(token) == std::string_view::npos) return hits;

  auto spans = Tokenizer(document).run();
  for (std::size_t at = document.find(token); at != std::string_view::npos;
       at = document.find(token, at + 1)) {
    // A token straddling span boundaries (e.g. split by a quote) is reported
    // with the context of the span it starts in.
    MarkerContext context = MarkerContext::text;
    for (const auto& s : spans) {
      if (at >= s.begin && at < s.end) {
        context = s.context;
        break;
      }
    }
    hits.push_back({context, at});
  }
  return hits;
}

}  // namespace webphuzz::html
