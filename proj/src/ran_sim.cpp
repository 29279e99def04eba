#include "e3/ran_sim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <random>

namespace e3::ransim {

namespace {

// Distinct RNG stream per (seed, slot) so slots are reproducible in any order.
std::mt19937_64 slot_rng(uint64_t seed, uint64_t slot) {
    uint64_t x = seed ^ (slot * 0x9E3779B97F4A7C15ull + 0xD1B54A32D192ED03ull);
    // splitmix64 finalizer
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return std::mt19937_64(x);
}

int16_t saturate_i16(double v) {
    v = std::round(v);
    if (v > std::numeric_limits<int16_t>::max()) return std::numeric_limits<int16_t>::max();
    if (v < std::numeric_limits<int16_t>::min()) return std::numeric_limits<int16_t>::min();
    return static_cast<int16_t>(v);
}

void put_f32_be(std::vector<uint8_t>& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    out.push_back(static_cast<uint8_t>(bits >> 24));
    out.push_back(static_cast<uint8_t>(bits >> 16));
    out.push_back(static_cast<uint8_t>(bits >> 8));
    out.push_back(static_cast<uint8_t>(bits));
}

float get_f32_be(const uint8_t* p) {
    uint32_t bits = static_cast<uint32_t>(p[0]) << 24 |
                    static_cast<uint32_t>(p[1]) << 16 |
                    static_cast<uint32_t>(p[2]) << 8 | static_cast<uint32_t>(p[3]);
    float v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

}  // namespace

double bin_width_hz(const RadioConfig& cfg) {
    return cfg.bandwidth_hz / cfg.resolution_bins;
}

std::pair<double, double> bin_span_hz(const RadioConfig& cfg, uint32_t k) {
    const double d = bin_width_hz(cfg);
    return {k * d, (k + 1) * d};
}

uint32_t prb_of_bin(const RadioConfig& cfg, uint32_t k) {
    return static_cast<uint32_t>(static_cast<uint64_t>(k) * cfg.n_prbs /
                                 cfg.resolution_bins);
}

std::optional<std::pair<uint32_t, uint32_t>> incumbent_bin_range(
    const RadioConfig& cfg, const IncumbentConfig& inc) {
    const double f_lo = cfg.center_freq_hz - cfg.bandwidth_hz / 2;
    const double band_lo = inc.center_hz - inc.width_hz / 2 - f_lo;
    const double band_hi = inc.center_hz + inc.width_hz / 2 - f_lo;
    std::optional<uint32_t> first, last;
    for (uint32_t k = 0; k < cfg.resolution_bins; ++k) {
        auto [lo, hi] = bin_span_hz(cfg, k);
        if (lo < band_hi && hi > band_lo) {
            if (!first) first = k;
            last = k;
        }
    }
    if (!first) return std::nullopt;
    return std::pair{*first, *last};
}

std::set<uint32_t> incumbent_prbs(const RadioConfig& cfg, const IncumbentConfig& inc) {
    std::set<uint32_t> prbs;
    if (auto range = incumbent_bin_range(cfg, inc)) {
        for (uint32_t k = range->first; k <= range->second; ++k)
            prbs.insert(prb_of_bin(cfg, k));
    }
    return prbs;
}

IqSpectrum gen_spectrum(const RadioConfig& cfg, const IncumbentConfig& inc,
                        uint64_t slot, uint64_t seed, const PrbRange& usable_run) {
    assert(cfg.valid());
    IqSpectrum out;
    out.slot = slot;
    out.bins.resize(cfg.resolution_bins);

    const double noise_lin = std::pow(10.0, cfg.noise_floor_db / 10.0);
    const double carrier_lin =
        std::pow(10.0, (cfg.noise_floor_db + cfg.carrier_power_db) / 10.0);
    const double inc_lin =
        std::pow(10.0, (cfg.noise_floor_db + inc.power_db) / 10.0);

    std::optional<std::pair<uint32_t, uint32_t>> inc_bins;
    if (inc.enabled) inc_bins = incumbent_bin_range(cfg, inc);

    auto rng = slot_rng(seed, slot);
    std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);

    for (uint32_t k = 0; k < cfg.resolution_bins; ++k) {
        double power = noise_lin;
        if (usable_run.contains(prb_of_bin(cfg, k))) power += carrier_lin;
        if (inc_bins && k >= inc_bins->first && k <= inc_bins->second)
            power += inc_lin;
        const double amp = std::sqrt(power);
        const double theta = phase(rng);
        out.bins[k] = {saturate_i16(amp * std::cos(theta)),
                       saturate_i16(amp * std::sin(theta))};
    }
    return out;
}

IqSpectrum gen_spectrum(const RadioConfig& cfg, const IncumbentConfig& inc,
                        uint64_t slot, uint64_t seed) {
    return gen_spectrum(cfg, inc, slot, seed,
                        PrbRange::closed(0, cfg.n_prbs - 1));
}

std::vector<uint8_t> spectrum_payload(const IqSpectrum& spectrum) {
    std::vector<uint8_t> out;
    out.reserve(spectrum.bins.size() * 4);
    for (const IqBin& bin : spectrum.bins) {
        const auto i = static_cast<uint16_t>(bin.i);
        const auto q = static_cast<uint16_t>(bin.q);
        out.push_back(static_cast<uint8_t>(i >> 8));
        out.push_back(static_cast<uint8_t>(i));
        out.push_back(static_cast<uint8_t>(q >> 8));
        out.push_back(static_cast<uint8_t>(q));
    }
    return out;
}

std::optional<std::vector<IqBin>> parse_spectrum_payload(
    std::span<const uint8_t> payload) {
    if (payload.size() % 4 != 0) return std::nullopt;
    std::vector<IqBin> bins(payload.size() / 4);
    for (size_t k = 0; k < bins.size(); ++k) {
        const uint8_t* p = payload.data() + 4 * k;
        bins[k].i = static_cast<int16_t>(static_cast<uint16_t>(p[0]) << 8 | p[1]);
        bins[k].q = static_cast<int16_t>(static_cast<uint16_t>(p[2]) << 8 | p[3]);
    }
    return bins;
}

std::vector<CirSnapshot> gen_cir_multipath(const CirConfig& cfg,
                                           std::span<const PathComponent> paths,
                                           double snr_db, size_t count,
                                           uint64_t seed) {
    assert(cfg.n_subcarriers >= 2);
    const double spacing = cfg.subcarrier_spacing_hz();
    const bool noiseless = std::isinf(snr_db) && snr_db > 0;

    // Deterministic signal part, shared by the whole batch.
    std::vector<std::complex<double>> clean(cfg.n_subcarriers);
    for (uint32_t k = 0; k < cfg.n_subcarriers; ++k) {
        std::complex<double> h{0.0, 0.0};
        for (const PathComponent& path : paths) {
            const double arg = -2 * std::numbers::pi * spacing * k * path.delay_s;
            h += path.gain * std::complex<double>(std::cos(arg), std::sin(arg));
        }
        clean[k] = h;
    }

    double signal_power = 0;
    for (const auto& h : clean) signal_power += std::norm(h);
    signal_power /= cfg.n_subcarriers;

    // Complex AWGN with per-sample variance signal_power / snr.
    const double noise_var =
        noiseless ? 0.0 : signal_power / std::pow(10.0, snr_db / 10.0);
    const double sigma = std::sqrt(noise_var / 2.0);

    auto rng = slot_rng(seed, 0x5EED);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<CirSnapshot> out(count);
    const double true_delay =
        paths.empty() ? 0.0
                      : std::min_element(paths.begin(), paths.end(),
                                         [](const auto& a, const auto& b) {
                                             return a.delay_s < b.delay_s;
                                         })
                            ->delay_s;
    for (CirSnapshot& snap : out) {
        snap.response = clean;
        snap.subcarrier_spacing_hz = spacing;
        snap.snr_db = snr_db;
        snap.true_delay_s = true_delay;
        if (!noiseless) {
            for (auto& h : snap.response)
                h += std::complex<double>(sigma * gauss(rng), sigma * gauss(rng));
        }
    }
    return out;
}

std::vector<CirSnapshot> gen_cir(const CirConfig& cfg, double distance_m,
                                 double snr_db, size_t count, uint64_t seed) {
    assert(distance_m > 0);
    const PathComponent los{{1.0, 0.0}, distance_m / kSpeedOfLight};
    return gen_cir_multipath(cfg, std::span(&los, 1), snr_db, count, seed);
}

std::vector<uint8_t> cir_payload(const CirSnapshot& snapshot) {
    std::vector<uint8_t> out;
    out.reserve(snapshot.response.size() * 8);
    for (const auto& h : snapshot.response) {
        put_f32_be(out, static_cast<float>(h.real()));
        put_f32_be(out, static_cast<float>(h.imag()));
    }
    return out;
}

std::optional<std::vector<std::complex<double>>> parse_cir_payload(
    std::span<const uint8_t> payload) {
    if (payload.size() % 8 != 0) return std::nullopt;
    std::vector<std::complex<double>> response(payload.size() / 8);
    for (size_t k = 0; k < response.size(); ++k) {
        const uint8_t* p = payload.data() + 8 * k;
        response[k] = {get_f32_be(p), get_f32_be(p + 4)};
    }
    return response;
}

PrbRange schedule_slot(const SchedulerState& state, const RadioConfig& cfg) {
    if (state.mask.empty()) return PrbRange::closed(0, cfg.n_prbs - 1);
    const uint32_t first_blocked = *state.mask.begin();
    if (first_blocked == 0) return PrbRange::none();
    return PrbRange::closed(0, std::min(first_blocked - 1, cfg.n_prbs - 1));
}

double goodput_mbps(const GoodputModel& model, const PrbRange& usable_run,
                    const std::set<uint32_t>& interfered) {
    if (usable_run.empty) return 0.0;
    const uint32_t scheduled = usable_run.count();
    uint32_t hit = 0;
    for (uint32_t prb : interfered)
        if (usable_run.contains(prb)) ++hit;
    const uint32_t clean = scheduled - hit;
    const double hit_fraction = static_cast<double>(hit) / scheduled;
    const double clean_rate =
        std::max(0.0, 1.0 - model.retx_penalty * hit_fraction);
    return model.rate_per_prb_mbps *
           (clean * clean_rate + hit * (1.0 - model.loss_factor));
}

}  // namespace e3::ransim
