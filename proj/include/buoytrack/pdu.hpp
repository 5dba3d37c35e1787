#pragma once

// GSM 03.40 SMS-SUBMIT encoder and SMS-DELIVER decoder, 8-bit data only.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "buoytrack/detail/text.hpp"
#include "buoytrack/error.hpp"

namespace buoytrack::pdu {

enum class Errc {
    NonDigit,
    LengthMismatch,
    InvalidAddress,
    PayloadTooLong,
    BadHex,
    NotDeliver,
    UnsupportedDcs,
    BadTimestamp,
    Truncated,
};

inline std::string_view to_string(Errc e) {
    switch (e) {
        case Errc::NonDigit: return "NonDigit";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::InvalidAddress: return "InvalidAddress";
        case Errc::PayloadTooLong: return "PayloadTooLong";
        case Errc::BadHex: return "BadHex";
        case Errc::NotDeliver: return "NotDeliver";
        case Errc::UnsupportedDcs: return "UnsupportedDcs";
        case Errc::BadTimestamp: return "BadTimestamp";
        case Errc::Truncated: return "Truncated";
    }
    return "Unknown";
}

using PduError = Error<Errc>;
using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kMaxPayload = 140;
inline constexpr std::size_t kMaxAddressDigits = 20;
inline constexpr std::uint8_t kTypeNational = 0x81;
inline constexpr std::uint8_t kTypeInternational = 0x91;

// Fixed header values for every SUBMIT we emit.
inline constexpr std::uint8_t kSubmitFirstOctet = 0x11;  // SMS-SUBMIT, relative VP
inline constexpr std::uint8_t kProtocolId = 0x00;
inline constexpr std::uint8_t kDcs8Bit = 0x04;
inline constexpr std::uint8_t kValidity4Days = 0xAA;

struct SmsSubmit {
    std::uint8_t message_ref = 0;
    std::string dest_digits;
    std::uint8_t type_of_address = kTypeNational;
    Bytes payload;
};

struct SmsTimestamp {
    int year = 2000;  // four digits
    int month = 1;
    int day = 1;
    int hour = 0;
    int minute = 0;
    int second = 0;
    int tz_quarter_hours = 0;  // signed offset from UTC

    friend bool operator==(const SmsTimestamp&, const SmsTimestamp&) = default;
};

struct SmsDeliver {
    std::string originator_digits;
    std::uint8_t type_of_address = kTypeNational;
    std::uint8_t protocol_id = 0;
    std::uint8_t dcs = kDcs8Bit;
    SmsTimestamp timestamp;
    Bytes payload;
};

/// Packs decimal digits two per octet, low nibble first; odd lengths are
/// padded with 0xF in the final high nibble.
inline Bytes encode_semi_octets(std::string_view digits) {
    Bytes out;
    out.reserve((digits.size() + 1) / 2);
    for (std::size_t i = 0; i < digits.size(); i += 2) {
        if (!detail::is_digit(digits[i])) throw PduError(Errc::NonDigit, std::string(digits));
        std::uint8_t lo = static_cast<std::uint8_t>(digits[i] - '0');
        std::uint8_t hi = 0x0F;
        if (i + 1 < digits.size()) {
            if (!detail::is_digit(digits[i + 1])) throw PduError(Errc::NonDigit, std::string(digits));
            hi = static_cast<std::uint8_t>(digits[i + 1] - '0');
        }
        out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
    }
    return out;
}

inline std::string decode_semi_octets(std::span<const std::uint8_t> bytes, std::size_t digit_count) {
    if (bytes.size() != (digit_count + 1) / 2) {
        throw PduError(Errc::LengthMismatch, std::to_string(bytes.size()) + " octets for " +
                                                 std::to_string(digit_count) + " digits");
    }
    std::string out;
    out.reserve(digit_count);
    for (std::size_t i = 0; i < digit_count; ++i) {
        const std::uint8_t b = bytes[i / 2];
        const std::uint8_t nibble = (i % 2 == 0) ? (b & 0x0F) : (b >> 4);
        if (nibble > 9) throw PduError(Errc::NonDigit, "nibble " + std::to_string(nibble));
        out.push_back(static_cast<char>('0' + nibble));
    }
    if (digit_count % 2 == 1 && (bytes.back() >> 4) != 0x0F) {
        throw PduError(Errc::NonDigit, "odd-length address without 0xF fill");
    }
    return out;
}

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) detail::append_hex_byte(out, b);
    return out;
}

inline Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw PduError(Errc::BadHex, "odd length");
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        const int hi = detail::hex_value(hex[i]);
        const int lo = detail::hex_value(hex[i + 1]);
        if (hi < 0 || lo < 0) throw PduError(Errc::BadHex, "non-hex character");
        out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
    }
    return out;
}

/// Full SUBMIT PDU as uppercase hex, SMSC omitted ("use stored").
inline std::string encode_submit(const SmsSubmit& msg) {
    if (msg.payload.size() > kMaxPayload) {
        throw PduError(Errc::PayloadTooLong, std::to_string(msg.payload.size()) + " octets");
    }
    if (msg.dest_digits.empty() || msg.dest_digits.size() > kMaxAddressDigits) {
        throw PduError(Errc::InvalidAddress, "destination must have 1-20 digits");
    }
    const Bytes address = encode_semi_octets(msg.dest_digits);

    Bytes pdu;
    pdu.reserve(9 + address.size() + msg.payload.size());
    pdu.push_back(0x00);  // SMSC length
    pdu.push_back(kSubmitFirstOctet);
    pdu.push_back(msg.message_ref);
    pdu.push_back(static_cast<std::uint8_t>(msg.dest_digits.size()));
    pdu.push_back(msg.type_of_address);
    pdu.insert(pdu.end(), address.begin(), address.end());
    pdu.push_back(kProtocolId);
    pdu.push_back(kDcs8Bit);
    pdu.push_back(kValidity4Days);
    pdu.push_back(static_cast<std::uint8_t>(msg.payload.size()));
    pdu.insert(pdu.end(), msg.payload.begin(), msg.payload.end());
    return to_hex(pdu);
}

/// 8-bit data in the general data coding group (0x04-0x07, 0x14-0x17, not
/// compressed) or the data-coding/message-class group (0xF4-0xF7).
inline bool is_8bit_dcs(std::uint8_t dcs) {
    return (dcs & 0xEC) == 0x04 || (dcs & 0xF4) == 0xF4;
}

namespace detail {

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t byte(const char* what) {
        if (pos_ >= data_.size()) throw PduError(Errc::Truncated, what);
        return data_[pos_++];
    }

    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        if (data_.size() - pos_ < n) throw PduError(Errc::Truncated, what);
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

inline int swapped_bcd(std::uint8_t b) {
    const int lo = b & 0x0F;
    const int hi = b >> 4;
    if (lo > 9 || hi > 9) throw PduError(Errc::BadTimestamp, "non-BCD digit");
    return lo * 10 + hi;
}

inline SmsTimestamp decode_scts(std::span<const std::uint8_t> s) {
    SmsTimestamp ts;
    ts.year = 2000 + swapped_bcd(s[0]);
    ts.month = swapped_bcd(s[1]);
    ts.day = swapped_bcd(s[2]);
    ts.hour = swapped_bcd(s[3]);
    ts.minute = swapped_bcd(s[4]);
    ts.second = swapped_bcd(s[5]);
    // Bit 3 of the low nibble carries the sign of the quarter-hour offset.
    const std::uint8_t tz = s[6];
    const bool negative = (tz & 0x08) != 0;
    const int tz_abs = swapped_bcd(static_cast<std::uint8_t>(tz & 0xF7));
    ts.tz_quarter_hours = negative ? -tz_abs : tz_abs;

    const int mdays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = ts.year % 4 == 0;  // 2000-2099 only
    if (ts.month < 1 || ts.month > 12 || ts.day < 1 ||
        ts.day > mdays[ts.month - 1] + (ts.month == 2 && leap ? 1 : 0) || ts.hour > 23 ||
        ts.minute > 59 || ts.second > 59 || tz_abs > 79) {
        throw PduError(Errc::BadTimestamp, "field out of range");
    }
    return ts;
}

}  // namespace detail

inline SmsDeliver decode_deliver(std::string_view hex) {
    const Bytes raw = from_hex(hex);
    detail::Reader in(raw);

    const std::uint8_t smsc_len = in.byte("SMSC length");
    in.take(smsc_len, "SMSC address");

    const std::uint8_t first = in.byte("first octet");
    if ((first & 0x03) != 0x00) throw PduError(Errc::NotDeliver, "MTI " + std::to_string(first & 0x03));

    SmsDeliver msg;
    const std::uint8_t digits = in.byte("originator length");
    if (digits > kMaxAddressDigits) throw PduError(Errc::InvalidAddress, "originator too long");
    msg.type_of_address = in.byte("originator type");
    msg.originator_digits = decode_semi_octets(in.take((digits + 1u) / 2u, "originator"), digits);
    msg.protocol_id = in.byte("PID");
    msg.dcs = in.byte("DCS");
    if (!is_8bit_dcs(msg.dcs)) throw PduError(Errc::UnsupportedDcs, "DCS " + std::to_string(msg.dcs));
    msg.timestamp = detail::decode_scts(in.take(7, "SCTS"));
    const std::uint8_t udl = in.byte("UDL");
    if (udl > kMaxPayload) throw PduError(Errc::PayloadTooLong, std::to_string(udl) + " octets");
    const auto ud = in.take(udl, "user data");
    msg.payload.assign(ud.begin(), ud.end());
    return msg;
}

}  // namespace buoytrack::pdu
