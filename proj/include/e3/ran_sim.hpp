#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "e3/expected.hpp"

// Simulated DU: per-slot frequency-domain sensing spectra, UL channel
// frequency responses, a type-1 contiguous scheduler with PRB masking, and
// a calibrated goodput model.

namespace e3::ransim {

inline constexpr double kSpeedOfLight = 299792458.0;

struct RadioConfig {
    double center_freq_hz = 3.6192e9;
    double bandwidth_hz = 40e6;
    uint32_t n_prbs = 106;
    uint32_t resolution_bins = 1536;  // one of 384, 768, 1536, 2048
    double noise_floor_db = 20.0;     // bin magnitude in dB at the floor
    double carrier_power_db = 6.0;    // carrier lift above the floor on scheduled PRBs
    uint32_t slot_us = 500;

    bool valid() const {
        return bandwidth_hz > 0 && n_prbs > 0 && resolution_bins >= n_prbs;
    }
};

struct IncumbentConfig {
    bool enabled = false;
    double center_hz = 3.63e9;
    double width_hz = 1e6;
    double power_db = 40.0;  // above the noise floor
};

struct IqBin {
    int16_t i = 0;
    int16_t q = 0;
    bool operator==(const IqBin&) const = default;
};

// One sensing snapshot: resolution_bins frequency-domain samples spanning
// the configured bandwidth. Bin k covers [f_lo + k*d, f_lo + (k+1)*d) with
// d = bandwidth/R and f_lo = center - bandwidth/2.
struct IqSpectrum {
    uint64_t slot = 0;
    std::vector<IqBin> bins;
};

// Inclusive PRB interval; empty when lo > hi.
struct PrbRange {
    uint32_t lo = 0;
    uint32_t hi = 0;
    bool empty = true;

    static PrbRange none() { return {0, 0, true}; }
    static PrbRange closed(uint32_t lo, uint32_t hi) { return {lo, hi, false}; }
    uint32_t count() const { return empty ? 0 : hi - lo + 1; }
    bool contains(uint32_t prb) const { return !empty && prb >= lo && prb <= hi; }
    bool operator==(const PrbRange&) const = default;
};

// ---- bin/frequency/PRB geometry ----

double bin_width_hz(const RadioConfig& cfg);
// [start, end) span of bin k relative to the lower band edge.
std::pair<double, double> bin_span_hz(const RadioConfig& cfg, uint32_t k);
uint32_t prb_of_bin(const RadioConfig& cfg, uint32_t k);
// Bins whose span intersects the incumbent band; nullopt when disjoint.
std::optional<std::pair<uint32_t, uint32_t>> incumbent_bin_range(
    const RadioConfig& cfg, const IncumbentConfig& inc);
// PRBs covered by the incumbent band (through the bin mapping).
std::set<uint32_t> incumbent_prbs(const RadioConfig& cfg, const IncumbentConfig& inc);

// ---- spectrum generation ----

// Deterministic under (seed, slot): bin powers are fixed by the configs
// (noise floor everywhere, carrier lift on scheduled PRBs, incumbent lift on
// overlapping bins, linear powers summed); only phases are random.
IqSpectrum gen_spectrum(const RadioConfig& cfg, const IncumbentConfig& inc,
                        uint64_t slot, uint64_t seed,
                        const PrbRange& usable_run);
IqSpectrum gen_spectrum(const RadioConfig& cfg, const IncumbentConfig& inc,
                        uint64_t slot, uint64_t seed);

// Wire payload for the SPECTRUM service model: 4 bytes per bin,
// int16 I then int16 Q, big-endian.
std::vector<uint8_t> spectrum_payload(const IqSpectrum& spectrum);
std::optional<std::vector<IqBin>> parse_spectrum_payload(std::span<const uint8_t> payload);

// ---- UL channel frequency response ----

struct CirConfig {
    uint32_t n_subcarriers = 1024;
    double bandwidth_hz = 40e6;  // spacing = bandwidth / n_subcarriers

    double subcarrier_spacing_hz() const {
        return bandwidth_hz / n_subcarriers;
    }
};

// One snapshot of the channel frequency response h[k], k over subcarriers:
// h[k] = sum_p alpha_p * exp(-j 2 pi f_k tau_p) + noise.
struct CirSnapshot {
    std::vector<std::complex<double>> response;
    double subcarrier_spacing_hz = 0;
    double snr_db = 0;        // configured per-snapshot SNR (inf = noiseless)
    double true_delay_s = 0;  // ground truth, for tests and scoring only
};

struct PathComponent {
    std::complex<double> gain{1.0, 0.0};
    double delay_s = 0;
};

// M snapshots with a common deterministic signal part and independent noise.
std::vector<CirSnapshot> gen_cir_multipath(const CirConfig& cfg,
                                           std::span<const PathComponent> paths,
                                           double snr_db, size_t count,
                                           uint64_t seed);
// Single line-of-sight path at delay distance/c, unit gain.
std::vector<CirSnapshot> gen_cir(const CirConfig& cfg, double distance_m,
                                 double snr_db, size_t count, uint64_t seed);

// Wire payload for the CIR service model: 8 bytes per subcarrier,
// float32 re then float32 im, big-endian.
std::vector<uint8_t> cir_payload(const CirSnapshot& snapshot);
std::optional<std::vector<std::complex<double>>> parse_cir_payload(
    std::span<const uint8_t> payload);

// ---- scheduler ----

// Blocked-PRB mask applied by dApp control actions. Replaced wholesale, never
// merged.
struct SchedulerState {
    std::set<uint32_t> mask;
};

// Type-1 (contiguous) allocation: the run is truncated at the first blocked
// PRB, so everything to the right of the mask stays unscheduled.
PrbRange schedule_slot(const SchedulerState& state, const RadioConfig& cfg);

// ---- goodput model ----

// Two calibration parameters on top of the per-PRB rate: in-band loss on
// interfered PRBs and a collateral retransmission penalty proportional to
// the interfered fraction of the allocation.
struct GoodputModel {
    double rate_per_prb_mbps = 71.3 / 106.0;
    double loss_factor = 1.0;     // throughput share lost on an interfered PRB
    double retx_penalty = 10.0;   // clean-PRB penalty slope vs interfered fraction
};

double goodput_mbps(const GoodputModel& model, const PrbRange& usable_run,
                    const std::set<uint32_t>& interfered);

}  // namespace e3::ransim
