#pragma once

// Minimal HTML tokenizer for reflected-marker checks. It does not build a DOM;
// it only classifies where in the markup a given token occurs.

#include <cstddef>
#include <string_view>
#include <vector>

namespace webphuzz::html {

enum class MarkerContext {
  text,                // character data, including RCDATA such as <title>
  comment,             // <!-- ... --> and other markup declarations
  script_body,         // raw text of a <script> element
  event_handler,       // value of an on* attribute
  attribute_value,     // value of any other attribute
  injected_tag,        // part of a tag name
  injected_attribute,  // part of an attribute name
};

std::string_view to_string(MarkerContext c);

// True for the contexts in which a reflected marker means script execution or
// markup injection.
bool is_executable(MarkerContext c);

struct MarkerHit {
  MarkerContext context = MarkerContext::text;
  std::size_t offset = 0;  // byte offset of the token in the document
};

// Every raw occurrence of `token`, classified. Occurrences hidden behind
// character references (`&lt;`, `&#102;`) are not decoded and so not found.
std::vector<MarkerHit> find_marker_contexts(std::string_view document, std::string_view token);

}  // namespace webphuzz::html
