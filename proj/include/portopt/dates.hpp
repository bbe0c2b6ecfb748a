#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace portopt {

/// A calendar day. No timezone; only ordering matters to the math.
struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    auto operator<=>(const Date&) const = default;

    /// Parses strict ISO-8601 `YYYY-MM-DD`, rejecting invalid calendar days.
    static std::optional<Date> parse(std::string_view text);

    /// Formats as `YYYY-MM-DD`.
    std::string to_string() const;

    /// Day after this one (Gregorian).
    Date next() const;

    bool valid() const;
};

} // namespace portopt
