#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sliar::csv {

/// RFC 4180 field quoting. `force` quotes even when not required.
std::string quote(std::string_view field, bool force = false);

void write_row(std::ostream& out, const std::vector<std::string>& fields,
               const std::vector<bool>& force_quote = {});

/// Streaming reader; quoted fields may span lines. `row()` is the 1-based
/// record index of the row most recently returned (header included).
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::optional<std::vector<std::string>> next();
  std::size_t row() const { return row_; }

 private:
  std::istream& in_;
  std::size_t row_ = 0;
};

/// Header lookup helper: column name -> index.
class Header {
 public:
  Header() = default;
  explicit Header(std::vector<std::string> names);

  std::optional<std::size_t> find(std::string_view name) const;
  /// First of the aliases present.
  std::optional<std::size_t> find_any(std::initializer_list<std::string_view> names) const;
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

}  // namespace sliar::csv
