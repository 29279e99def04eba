#include "e3/codec.hpp"

#include <cassert>
#include <cstring>

namespace e3::codec {
namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    put_u32(out, static_cast<uint32_t>(v >> 32));
    put_u32(out, static_cast<uint32_t>(v));
}

// Bounds-checked big-endian reader over the body section of a frame.
class Cursor {
public:
    Cursor(std::span<const uint8_t> data) : data_(data) {}

    bool read_u8(uint8_t& v) {
        if (pos_ + 1 > data_.size()) return false;
        v = data_[pos_++];
        return true;
    }
    bool read_u16(uint16_t& v) {
        if (pos_ + 2 > data_.size()) return false;
        v = static_cast<uint16_t>(data_[pos_] << 8 | data_[pos_ + 1]);
        pos_ += 2;
        return true;
    }
    bool read_u32(uint32_t& v) {
        if (pos_ + 4 > data_.size()) return false;
        v = static_cast<uint32_t>(data_[pos_]) << 24 |
            static_cast<uint32_t>(data_[pos_ + 1]) << 16 |
            static_cast<uint32_t>(data_[pos_ + 2]) << 8 |
            static_cast<uint32_t>(data_[pos_ + 3]);
        pos_ += 4;
        return true;
    }
    bool read_u64(uint64_t& v) {
        uint32_t hi = 0, lo = 0;
        if (!read_u32(hi) || !read_u32(lo)) return false;
        v = static_cast<uint64_t>(hi) << 32 | lo;
        return true;
    }
    bool read_bytes(std::vector<uint8_t>& out, size_t n) {
        if (pos_ + n > data_.size()) return false;
        out.assign(data_.begin() + static_cast<ptrdiff_t>(pos_),
                   data_.begin() + static_cast<ptrdiff_t>(pos_ + n));
        pos_ += n;
        return true;
    }
    bool exhausted() const { return pos_ == data_.size(); }

private:
    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

struct BodyEncoder {
    std::vector<uint8_t>& out;

    Expected<Unit, CodecError> check_list(size_t n) const {
        if (n > 0xFFFF) return CodecError::ListTooLong;
        return Unit{};
    }
    Expected<Unit, CodecError> check_payload(size_t n) const {
        if (n > kMaxPayloadBytes) return CodecError::FieldOutOfRange;
        return Unit{};
    }

    Expected<Unit, CodecError> operator()(const SetupRequestBody& b) {
        if (auto r = check_list(b.sm_ids.size()); !r) return r;
        put_u32(out, b.dapp_id);
        put_u16(out, static_cast<uint16_t>(b.sm_ids.size()));
        for (uint16_t id : b.sm_ids) put_u16(out, id);
        return Unit{};
    }
    Expected<Unit, CodecError> operator()(const SetupResponseBody& b) {
        if (auto r = check_list(b.sm_ids.size()); !r) return r;
        put_u32(out, b.dapp_id);
        out.push_back(b.accepted ? 1 : 0);
        put_u16(out, static_cast<uint16_t>(b.sm_ids.size()));
        for (uint16_t id : b.sm_ids) put_u16(out, id);
        return Unit{};
    }
    Expected<Unit, CodecError> operator()(const SubscriptionRequestBody& b) {
        put_u32(out, b.dapp_id);
        put_u16(out, b.sm_id);
        put_u16(out, b.period_slots);
        return Unit{};
    }
    Expected<Unit, CodecError> operator()(const SubscriptionResponseBody& b) {
        put_u32(out, b.dapp_id);
        put_u16(out, b.sm_id);
        out.push_back(b.accepted ? 1 : 0);
        return Unit{};
    }
    Expected<Unit, CodecError> operator()(const IndicationBody& b) {
        if (auto r = check_payload(b.payload.size()); !r) return r;
        put_u16(out, b.sm_id);
        put_u32(out, b.sequence);
        put_u64(out, b.origin_ts_ns);
        put_u32(out, static_cast<uint32_t>(b.payload.size()));
        out.insert(out.end(), b.payload.begin(), b.payload.end());
        return Unit{};
    }
    Expected<Unit, CodecError> operator()(const ControlBody& b) {
        if (auto r = check_list(b.entries.size()); !r) return r;
        put_u16(out, b.sm_id);
        put_u32(out, b.sequence);
        put_u16(out, static_cast<uint16_t>(b.entries.size()));
        for (uint32_t prb : b.entries) put_u32(out, prb);
        return Unit{};
    }
    Expected<Unit, CodecError> operator()(const ReportBody& b) {
        if (auto r = check_payload(b.payload.size()); !r) return r;
        put_u32(out, b.dapp_id);
        put_u16(out, b.sm_id);
        put_u32(out, static_cast<uint32_t>(b.payload.size()));
        out.insert(out.end(), b.payload.begin(), b.payload.end());
        return Unit{};
    }
    Expected<Unit, CodecError> operator()(const XAppControlBody& b) {
        if (auto r = check_payload(b.payload.size()); !r) return r;
        put_u32(out, b.dapp_id);
        put_u16(out, b.policy_key);
        put_u32(out, static_cast<uint32_t>(b.payload.size()));
        out.insert(out.end(), b.payload.begin(), b.payload.end());
        return Unit{};
    }
};

Expected<PduBody, CodecError> decode_body(PduKind kind, Cursor& c) {
    switch (kind) {
        case PduKind::SetupRequest: {
            SetupRequestBody b;
            uint16_t n = 0;
            if (!c.read_u32(b.dapp_id) || !c.read_u16(n))
                return CodecError::MalformedBody;
            b.sm_ids.resize(n);
            for (uint16_t& id : b.sm_ids)
                if (!c.read_u16(id)) return CodecError::MalformedBody;
            return PduBody{std::move(b)};
        }
        case PduKind::SetupResponse: {
            SetupResponseBody b;
            uint8_t accepted = 0;
            uint16_t n = 0;
            if (!c.read_u32(b.dapp_id) || !c.read_u8(accepted) || !c.read_u16(n))
                return CodecError::MalformedBody;
            b.accepted = accepted != 0;
            b.sm_ids.resize(n);
            for (uint16_t& id : b.sm_ids)
                if (!c.read_u16(id)) return CodecError::MalformedBody;
            return PduBody{std::move(b)};
        }
        case PduKind::SubscriptionRequest: {
            SubscriptionRequestBody b;
            if (!c.read_u32(b.dapp_id) || !c.read_u16(b.sm_id) ||
                !c.read_u16(b.period_slots))
                return CodecError::MalformedBody;
            return PduBody{b};
        }
        case PduKind::SubscriptionResponse: {
            SubscriptionResponseBody b;
            uint8_t accepted = 0;
            if (!c.read_u32(b.dapp_id) || !c.read_u16(b.sm_id) ||
                !c.read_u8(accepted))
                return CodecError::MalformedBody;
            b.accepted = accepted != 0;
            return PduBody{b};
        }
        case PduKind::Indication: {
            IndicationBody b;
            uint32_t payload_len = 0;
            if (!c.read_u16(b.sm_id) || !c.read_u32(b.sequence) ||
                !c.read_u64(b.origin_ts_ns) || !c.read_u32(payload_len))
                return CodecError::MalformedBody;
            if (!c.read_bytes(b.payload, payload_len))
                return CodecError::MalformedBody;
            return PduBody{std::move(b)};
        }
        case PduKind::Control: {
            ControlBody b;
            uint16_t n = 0;
            if (!c.read_u16(b.sm_id) || !c.read_u32(b.sequence) || !c.read_u16(n))
                return CodecError::MalformedBody;
            b.entries.resize(n);
            for (uint32_t& prb : b.entries)
                if (!c.read_u32(prb)) return CodecError::MalformedBody;
            return PduBody{std::move(b)};
        }
        case PduKind::Report: {
            ReportBody b;
            uint32_t payload_len = 0;
            if (!c.read_u32(b.dapp_id) || !c.read_u16(b.sm_id) ||
                !c.read_u32(payload_len))
                return CodecError::MalformedBody;
            if (!c.read_bytes(b.payload, payload_len))
                return CodecError::MalformedBody;
            return PduBody{std::move(b)};
        }
        case PduKind::XAppControl: {
            XAppControlBody b;
            uint32_t payload_len = 0;
            if (!c.read_u32(b.dapp_id) || !c.read_u16(b.policy_key) ||
                !c.read_u32(payload_len))
                return CodecError::MalformedBody;
            if (!c.read_bytes(b.payload, payload_len))
                return CodecError::MalformedBody;
            return PduBody{std::move(b)};
        }
    }
    return CodecError::UnknownKind;
}

}  // namespace

const char* to_string(CodecError e) {
    switch (e) {
        case CodecError::FieldOutOfRange: return "FieldOutOfRange";
        case CodecError::ListTooLong: return "ListTooLong";
        case CodecError::Truncated: return "Truncated";
        case CodecError::UnknownKind: return "UnknownKind";
        case CodecError::UnknownVersion: return "UnknownVersion";
        case CodecError::MalformedBody: return "MalformedBody";
    }
    return "?";
}

Expected<std::vector<uint8_t>, CodecError> encode(const E3Pdu& pdu) {
    std::vector<uint8_t> frame;
    frame.reserve(kHeaderBytes + 64);
    frame.push_back(pdu.version);
    frame.push_back(static_cast<uint8_t>(pdu.kind()));
    put_u32(frame, 0);  // body_len backpatched below

    BodyEncoder enc{frame};
    if (auto r = std::visit(enc, pdu.body); !r) return r.error();

    const size_t body_len = frame.size() - kHeaderBytes;
    if (body_len > 0xFFFFFFFFull) return CodecError::FieldOutOfRange;
    frame[2] = static_cast<uint8_t>(body_len >> 24);
    frame[3] = static_cast<uint8_t>(body_len >> 16);
    frame[4] = static_cast<uint8_t>(body_len >> 8);
    frame[5] = static_cast<uint8_t>(body_len);
    return frame;
}

Expected<Decoded, CodecError> decode(std::span<const uint8_t> bytes) {
    if (bytes.size() < kHeaderBytes) return CodecError::Truncated;
    const uint8_t version = bytes[0];
    const uint8_t kind_raw = bytes[1];
    const uint32_t body_len = static_cast<uint32_t>(bytes[2]) << 24 |
                              static_cast<uint32_t>(bytes[3]) << 16 |
                              static_cast<uint32_t>(bytes[4]) << 8 |
                              static_cast<uint32_t>(bytes[5]);
    if (version != kProtocolVersion) return CodecError::UnknownVersion;
    if (kind_raw < 1 || kind_raw > 8) return CodecError::UnknownKind;
    if (bytes.size() - kHeaderBytes < body_len) return CodecError::Truncated;

    Cursor c(bytes.subspan(kHeaderBytes, body_len));
    auto body = decode_body(static_cast<PduKind>(kind_raw), c);
    if (!body) return body.error();
    // The body must account for every byte announced by the length field.
    if (!c.exhausted()) return CodecError::MalformedBody;

    Decoded d;
    d.pdu = E3Pdu{version, std::move(body.value())};
    d.consumed = kHeaderBytes + body_len;
    return d;
}

double framing_overhead(size_t payload_len) {
    assert(payload_len > 0);
    return static_cast<double>(kIndicationFramingBytes) /
           static_cast<double>(payload_len);
}

}  // namespace e3::codec
