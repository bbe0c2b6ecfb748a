#include "portopt/dates.hpp"

#include <charconv>

namespace portopt {
namespace {

bool is_leap(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int days_in_month(int year, int month) {
    static constexpr int kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2 && is_leap(year)) return 29;
    return kDays[month - 1];
}

bool parse_int(std::string_view text, int& out) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end;
}

} // namespace

bool Date::valid() const {
    return month >= 1 && month <= 12 && day >= 1 && day <= days_in_month(year, month);
}

std::optional<Date> Date::parse(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    Date d;
    if (!parse_int(text.substr(0, 4), d.year)) return std::nullopt;
    if (!parse_int(text.substr(5, 2), d.month)) return std::nullopt;
    if (!parse_int(text.substr(8, 2), d.day)) return std::nullopt;
    if (!d.valid()) return std::nullopt;
    return d;
}

std::string Date::to_string() const {
    char buf[11];
    buf[0] = static_cast<char>('0' + (year / 1000) % 10);
    buf[1] = static_cast<char>('0' + (year / 100) % 10);
    buf[2] = static_cast<char>('0' + (year / 10) % 10);
    buf[3] = static_cast<char>('0' + year % 10);
    buf[4] = '-';
    buf[5] = static_cast<char>('0' + month / 10);
    buf[6] = static_cast<char>('0' + month % 10);
    buf[7] = '-';
    buf[8] = static_cast<char>('0' + day / 10);
    buf[9] = static_cast<char>('0' + day % 10);
    buf[10] = '\0';
    return std::string(buf, 10);
}

Date Date::next() const {
    Date d = *this;
    if (++d.day > days_in_month(d.year, d.month)) {
        d.day = 1;
        if (++d.month > 12) {
            d.month = 1;
            ++d.year;
        }
    }
    return d;
}

} // namespace portopt
