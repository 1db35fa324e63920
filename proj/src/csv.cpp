#include "sliar/csv.hpp"

#include <istream>
#include <ostream>

#include "sliar/errors.hpp"

namespace sliar::csv {

std::string quote(std::string_view field, bool force) {
  const bool needs = force || field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields,
               const std::vector<bool>& force_quote) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << quote(fields[i], i < force_quote.size() && force_quote[i]);
  }
  out << '\n';
}

std::optional<std::vector<std::string>> Reader::next() {
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  bool was_quoted = false;
  int ch;
  while ((ch = in_.get()) != std::char_traits<char>::eof()) {
    any = true;
    const char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty() && !was_quoted) {
      in_quotes = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c == '\r') {
      if (in_.peek() == '\n') continue;
      break;
    } else if (c == '\n') {
      break;
    } else {
      field.push_back(c);
    }
  }
  if (!any) return std::nullopt;
  ++row_;
  if (in_quotes) throw ParseError(row_, "unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

Header::Header(std::vector<std::string> names) : names_(std::move(names)) {
  // Tolerate a UTF-8 byte order mark on the first column.
  if (!names_.empty() && names_[0].starts_with("\xEF\xBB\xBF")) names_[0].erase(0, 3);
}

std::optional<std::size_t> Header::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Header::find_any(
    std::initializer_list<std::string_view> names) const {
  for (auto name : names) {
    if (auto i = find(name)) return i;
  }
  return std::nullopt;
}

}  // namespace sliar::csv
