#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace lockstep {

// Calendar day at UTC, whole-day resolution. Internally days since 1970-01-01.
class Date {
public:
    Date() = default;
    constexpr explicit Date(std::int32_t days_since_epoch) : days_(days_since_epoch) {}

    // Strict ISO-8601 "YYYY-MM-DD".
    static std::optional<Date> try_parse(std::string_view iso);
    static Date parse(std::string_view iso);  // throws Error

    std::string to_string() const;

    constexpr std::int32_t days_since_epoch() const { return days_; }

    friend constexpr auto operator<=>(Date, Date) = default;

    constexpr Date operator+(int days) const { return Date(days_ + days); }
    constexpr Date operator-(int days) const { return Date(days_ - days); }
    constexpr int operator-(Date other) const { return days_ - other.days_; }

private:
    std::int32_t days_ = 0;
};

}  // namespace lockstep
