#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "e3/expected.hpp"

// E3AP PDU definitions and the binary wire format.
//
// Every frame is a fixed 6-byte header followed by a per-kind body, all
// integers big-endian, no padding:
//
//   header               {version u8 = 0x01, kind u8, body_len u32}
//   SetupRequest         {dapp_id u32, n u16, n x sm_id u16}
//   SetupResponse        {dapp_id u32, accepted u8, n u16, n x sm_id u16}
//   SubscriptionRequest  {dapp_id u32, sm_id u16, period_slots u16}
//   SubscriptionResponse {dapp_id u32, sm_id u16, accepted u8}
//   Indication           {sm_id u16, sequence u32, origin_ts_ns u64,
//                         payload_len u32, payload}
//   Control              {sm_id u16, sequence u32, n_entries u16, n x prb u32}
//   Report               {dapp_id u32, sm_id u16, payload_len u32, payload}
//   XAppControl          {dapp_id u32, policy_key u16, payload_len u32, payload}

namespace e3::codec {

inline constexpr uint8_t kProtocolVersion = 1;
inline constexpr size_t kHeaderBytes = 6;
// Fixed (non-payload) body bytes of an Indication: sm_id + sequence +
// origin_ts_ns + payload_len.
inline constexpr size_t kIndicationFixedBytes = 18;
// Total framing bytes an Indication adds on top of its raw payload.
inline constexpr size_t kIndicationFramingBytes = kHeaderBytes + kIndicationFixedBytes;
// Upper bound on opaque payload size accepted by encode().
inline constexpr size_t kMaxPayloadBytes = size_t{1} << 30;

enum class PduKind : uint8_t {
    SetupRequest = 1,
    SetupResponse = 2,
    SubscriptionRequest = 3,
    SubscriptionResponse = 4,
    Indication = 5,
    Control = 6,
    Report = 7,
    XAppControl = 8,
};

struct SetupRequestBody {
    uint32_t dapp_id = 0;
    std::vector<uint16_t> sm_ids;  // non-empty, no duplicates
    bool operator==(const SetupRequestBody&) const = default;
};

struct SetupResponseBody {
    uint32_t dapp_id = 0;
    bool accepted = false;
    std::vector<uint16_t> sm_ids;
    bool operator==(const SetupResponseBody&) const = default;
};

struct SubscriptionRequestBody {
    uint32_t dapp_id = 0;
    uint16_t sm_id = 0;
    uint16_t period_slots = 0;  // 0 = every available snapshot
    bool operator==(const SubscriptionRequestBody&) const = default;
};

struct SubscriptionResponseBody {
    uint32_t dapp_id = 0;
    uint16_t sm_id = 0;
    bool accepted = false;
    bool operator==(const SubscriptionResponseBody&) const = default;
};

struct IndicationBody {
    uint16_t sm_id = 0;
    uint32_t sequence = 0;      // monotone per service model, wraps mod 2^32
    uint64_t origin_ts_ns = 0;  // monotonic clock at dispatch
    std::vector<uint8_t> payload;
    bool operator==(const IndicationBody&) const = default;
};

struct ControlBody {
    uint16_t sm_id = 0;
    uint32_t sequence = 0;  // echoes the triggering indication
    std::vector<uint32_t> entries;  // strictly increasing PRB indices
    bool operator==(const ControlBody&) const = default;
};

struct ReportBody {
    uint32_t dapp_id = 0;
    uint16_t sm_id = 0;
    std::vector<uint8_t> payload;
    bool operator==(const ReportBody&) const = default;
};

struct XAppControlBody {
    uint32_t dapp_id = 0;
    uint16_t policy_key = 0;
    std::vector<uint8_t> payload;
    bool operator==(const XAppControlBody&) const = default;
};

using PduBody = std::variant<SetupRequestBody, SetupResponseBody,
                             SubscriptionRequestBody, SubscriptionResponseBody,
                             IndicationBody, ControlBody, ReportBody,
                             XAppControlBody>;

struct E3Pdu {
    uint8_t version = kProtocolVersion;
    PduBody body;

    PduKind kind() const { return static_cast<PduKind>(body.index() + 1); }
    bool operator==(const E3Pdu&) const = default;
};

enum class CodecError {
    FieldOutOfRange,
    ListTooLong,
    Truncated,
    UnknownKind,
    UnknownVersion,
    MalformedBody,
};

const char* to_string(CodecError e);

// Serializes one PDU into a complete frame.
Expected<std::vector<uint8_t>, CodecError> encode(const E3Pdu& pdu);

struct Decoded {
    E3Pdu pdu;
    size_t consumed = 0;  // bytes of the leading frame; trailing bytes untouched
};

// Parses the first complete frame from the buffer.
Expected<Decoded, CodecError> decode(std::span<const uint8_t> bytes);

// Frame length of an Indication carrying payload_len opaque bytes.
inline size_t indication_frame_len(size_t payload_len) {
    return payload_len + kIndicationFramingBytes;
}

// (frame_len - payload_len) / payload_len for an Indication. payload_len
// must be positive; the degenerate small-payload values are documented,
// not errors.
double framing_overhead(size_t payload_len);

}  // namespace e3::codec
