//! OFDM physical layer: pathloss, link budget, adaptive modulation, air rate
//! and stochastic PDU delivery.
//!
//! Stations are fixed, so pathloss and SNR are computed once per link. Loss
//! is the only stochastic element: a PDU survives with `(1 - BER)^bits`
//! where BER follows a pinned margin curve (see [`margin_to_ber`]).

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::RandomStream;

/// `20 * log10(4 * pi / c)`: the distance- and frequency-free part of the
/// free-space pathloss in dB, with distance in meters and frequency in Hz.
const FRIIS_DB: f64 = -147.55;

/// Thermal noise power spectral density at 290 K, dBm per Hz.
const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

#[derive(Debug, Error)]
pub enum PhyError {
    #[error("distance {distance_m} m is below the pathloss reference distance {reference_m} m")]
    DistanceBelowReference { distance_m: f64, reference_m: f64 },
    #[error("modulation ladder: {0}")]
    InvalidLadder(String),
    #[error("modulation ladder line {line}: {msg}")]
    LadderParse { line: usize, msg: String },
    #[error("radio config: {0}")]
    InvalidRadio(String),
    #[error("subcarrier plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One rung of the adaptive modulation ladder.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulationCoding {
    pub name: String,
    pub code_rate: String,
    /// Information bits per symbol per Hz (spectral efficiency).
    pub bits_per_symbol_hz: f64,
    /// Minimum receiver SNR at which this profile operates.
    pub required_snr_db: f64,
}

impl ModulationCoding {
    /// Human-readable profile key, e.g. `64-QAM 3/4`. Scenario files select
    /// burst profiles by this label.
    pub fn label(&self) -> String {
        format!("{} {}", self.name, self.code_rate)
    }
}

impl std::fmt::Display for ModulationCoding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}", self.name, self.code_rate)
    }
}

/// Modulation ladder ordered by required SNR, strictly increasing in both
/// threshold and efficiency.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulationLadder {
    entries: Vec<ModulationCoding>,
}

const DEFAULT_LADDER_TSV: &str = include_str!("../data/modulation_ladder.tsv");

impl Default for ModulationLadder {
    /// The embedded default ladder (QPSK 1/2 through 64-QAM 3/4).
    fn default() -> Self {
        ModulationLadder::from_tsv_str(DEFAULT_LADDER_TSV)
            .expect("embedded modulation ladder must parse")
    }
}

impl ModulationLadder {
    pub fn new(entries: Vec<ModulationCoding>) -> Result<Self, PhyError> {
        if entries.is_empty() {
            return Err(PhyError::InvalidLadder("ladder has no entries".into()));
        }
        for pair in entries.windows(2) {
            if pair[1].required_snr_db <= pair[0].required_snr_db {
                return Err(PhyError::InvalidLadder(format!(
                    "required SNR must be strictly increasing ({} before {})",
                    pair[0].label(),
                    pair[1].label()
                )));
            }
            if pair[1].bits_per_symbol_hz <= pair[0].bits_per_symbol_hz {
                return Err(PhyError::InvalidLadder(format!(
                    "efficiency must be strictly increasing ({} before {})",
                    pair[0].label(),
                    pair[1].label()
                )));
            }
        }
        for e in &entries {
            if !(e.bits_per_symbol_hz > 0.0 && e.bits_per_symbol_hz.is_finite())
                || !e.required_snr_db.is_finite()
            {
                return Err(PhyError::InvalidLadder(format!(
                    "non-finite or non-positive entry {}",
                    e.label()
                )));
            }
        }
        Ok(ModulationLadder { entries })
    }

    /// Parses `name<TAB>code_rate<TAB>bits_per_symbol_hz<TAB>required_snr_db`
    /// rows. Blank lines, `#` comments and a literal header row are skipped.
    pub fn from_tsv_str(text: &str) -> Result<Self, PhyError> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("name\t") {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(PhyError::LadderParse {
                    line: idx + 1,
                    msg: format!("expected 4 tab-separated columns, found {}", cols.len()),
                });
            }
            let parse = |col: &str, what: &str| {
                col.trim().parse::<f64>().map_err(|_| PhyError::LadderParse {
                    line: idx + 1,
                    msg: format!("{what} is not a number: {col:?}"),
                })
            };
            entries.push(ModulationCoding {
                name: cols[0].trim().to_string(),
                code_rate: cols[1].trim().to_string(),
                bits_per_symbol_hz: parse(cols[2], "bits_per_symbol_hz")?,
                required_snr_db: parse(cols[3], "required_snr_db")?,
            });
        }
        ModulationLadder::new(entries)
    }

    pub fn from_path(path: &Path) -> Result<Self, PhyError> {
        ModulationLadder::from_tsv_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_tsv_string(&self) -> String {
        let mut out = String::from("name\tcode_rate\tbits_per_symbol_hz\trequired_snr_db\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                e.name, e.code_rate, e.bits_per_symbol_hz, e.required_snr_db
            ));
        }
        out
    }

    pub fn entries(&self) -> &[ModulationCoding] {
        &self.entries
    }

    /// SNR below which no profile operates at all.
    pub fn outage_threshold_db(&self) -> f64 {
        self.entries[0].required_snr_db
    }

    pub fn by_label(&self, label: &str) -> Option<&ModulationCoding> {
        self.entries.iter().find(|e| e.label() == label)
    }
}

/// Picks the highest-efficiency profile whose threshold the link meets, or
/// None when the SNR is below the bottom rung (outage). Thresholds are
/// inclusive: an SNR exactly at `required_snr_db` selects that profile.
pub fn select_modulation(snr_db: f64, ladder: &ModulationLadder) -> Option<&ModulationCoding> {
    ladder
        .entries
        .iter()
        .rev()
        .find(|e| snr_db >= e.required_snr_db)
}

/// Per-station radio parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    #[serde(default = "default_carrier_hz")]
    pub carrier_hz: f64,
    #[serde(default = "default_bandwidth_hz")]
    pub bandwidth_hz: f64,
    #[serde(default = "default_subcarriers")]
    pub subcarriers_total: u32,
    pub tx_power_dbm: f64,
    pub antenna_gain_dbi: f64,
    #[serde(default = "default_noise_figure_db")]
    pub noise_figure_db: f64,
    /// Antenna height above ground, meters.
    pub height_m: f64,
}

fn default_carrier_hz() -> f64 {
    2.5e9
}
fn default_bandwidth_hz() -> f64 {
    5e6
}
fn default_subcarriers() -> u32 {
    512
}
fn default_noise_figure_db() -> f64 {
    7.0
}

impl RadioConfig {
    pub fn validate(&self) -> Result<(), PhyError> {
        let fields = [
            ("carrier_hz", self.carrier_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("tx_power_dbm", self.tx_power_dbm),
            ("antenna_gain_dbi", self.antenna_gain_dbi),
            ("noise_figure_db", self.noise_figure_db),
            ("height_m", self.height_m),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(PhyError::InvalidRadio(format!("{name} is not finite")));
            }
        }
        if !(1.25e6..=20e6).contains(&self.bandwidth_hz) {
            return Err(PhyError::InvalidRadio(format!(
                "bandwidth_hz {} outside [1.25e6, 20e6]",
                self.bandwidth_hz
            )));
        }
        if self.carrier_hz <= 0.0 {
            return Err(PhyError::InvalidRadio("carrier_hz must be > 0".into()));
        }
        if self.subcarriers_total == 0 {
            return Err(PhyError::InvalidRadio("subcarriers_total must be > 0".into()));
        }
        if self.height_m <= 0.0 {
            return Err(PhyError::InvalidRadio("height_m must be > 0".into()));
        }
        Ok(())
    }
}

/// How the FFT bins are spent. Only data subcarriers carry payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubcarrierPlan {
    pub data: u32,
    pub pilot: u32,
    pub null: u32,
    pub dc: u32,
}

impl Default for SubcarrierPlan {
    fn default() -> Self {
        SubcarrierPlan {
            data: 360,
            pilot: 60,
            null: 91,
            dc: 1,
        }
    }
}

impl SubcarrierPlan {
    pub fn total(&self) -> u32 {
        self.data + self.pilot + self.null + self.dc
    }

    pub fn validate(&self, subcarriers_total: u32) -> Result<(), PhyError> {
        if self.data == 0 {
            return Err(PhyError::InvalidPlan("data subcarrier count must be > 0".into()));
        }
        if self.total() != subcarriers_total {
            return Err(PhyError::InvalidPlan(format!(
                "plan sums to {} but the radio has {} subcarriers",
                self.total(),
                subcarriers_total
            )));
        }
        Ok(())
    }

    /// An all-data plan, useful to reason about the raw channel envelope.
    pub fn all_data(subcarriers_total: u32) -> Self {
        SubcarrierPlan {
            data: subcarriers_total,
            pilot: 0,
            null: 0,
            dc: 0,
        }
    }
}

/// Large-scale pathloss model. Both variants reject distances below the
/// reference distance rather than extrapolating.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum PathlossModel {
    /// Log-distance suburban model (terrain type C: flat, light tree
    /// density) with frequency and receiver-height corrections.
    SuburbanErcegC {
        #[serde(default = "default_erceg_ref_m")]
        reference_distance_m: f64,
    },
    FreeSpace {
        #[serde(default = "default_friis_ref_m")]
        reference_distance_m: f64,
    },
}

fn default_erceg_ref_m() -> f64 {
    100.0
}
fn default_friis_ref_m() -> f64 {
    1.0
}

impl PathlossModel {
    pub fn reference_distance_m(&self) -> f64 {
        match *self {
            PathlossModel::SuburbanErcegC { reference_distance_m }
            | PathlossModel::FreeSpace { reference_distance_m } => reference_distance_m,
        }
    }
}

fn friis_db(distance_m: f64, carrier_hz: f64) -> f64 {
    20.0 * distance_m.log10() + 20.0 * carrier_hz.log10() + FRIIS_DB
}

// Terrain type C constants for the path-loss exponent
// gamma = a - b * hb + c / hb, base height hb in meters.
const ERCEG_C_A: f64 = 3.6;
const ERCEG_C_B: f64 = 0.005;
const ERCEG_C_C: f64 = 20.0;

/// Pathloss in dB over `distance_m`. Heights are taken reciprocally: the
/// taller antenna acts as the base, so uplink and downlink see the same
/// loss. Heights outside the model's fitted range are clamped (base to
/// [10, 80] m, terminal to [2, 10] m).
pub fn pathloss_db(
    model: PathlossModel,
    distance_m: f64,
    carrier_hz: f64,
    tx_height_m: f64,
    rx_height_m: f64,
) -> Result<f64, PhyError> {
    let reference_m = model.reference_distance_m();
    if distance_m < reference_m {
        return Err(PhyError::DistanceBelowReference {
            distance_m,
            reference_m,
        });
    }
    match model {
        PathlossModel::FreeSpace { .. } => Ok(friis_db(distance_m, carrier_hz)),
        PathlossModel::SuburbanErcegC { reference_distance_m } => {
            let base_h = tx_height_m.max(rx_height_m).clamp(10.0, 80.0);
            let term_h = tx_height_m.min(rx_height_m).clamp(2.0, 10.0);
            let gamma = ERCEG_C_A - ERCEG_C_B * base_h + ERCEG_C_C / base_h;
            let intercept = friis_db(reference_distance_m, carrier_hz);
            let freq_corr = 6.0 * (carrier_hz / 2e9).log10();
            let height_corr = -20.0 * (term_h / 2.0).log10();
            Ok(intercept
                + 10.0 * gamma * (distance_m / reference_distance_m).log10()
                + freq_corr
                + height_corr)
        }
    }
}

/// Receiver noise floor over the full channel bandwidth.
pub fn noise_floor_dbm(radio: &RadioConfig) -> f64 {
    THERMAL_NOISE_DBM_HZ + 10.0 * radio.bandwidth_hz.log10() + radio.noise_figure_db
}

/// Link budget: EIRP plus receive gain, minus pathloss, over the receiver
/// noise floor.
pub fn link_snr_db(tx: &RadioConfig, rx: &RadioConfig, pathloss_db: f64) -> f64 {
    tx.tx_power_dbm + tx.antenna_gain_dbi + rx.antenna_gain_dbi - pathloss_db
        - noise_floor_dbm(rx)
}

/// Gross air rate of a profile over the configured channel: spectral
/// efficiency times bandwidth, derated by the fraction of subcarriers that
/// carry data.
pub fn phy_rate_bps(mc: &ModulationCoding, radio: &RadioConfig, plan: &SubcarrierPlan) -> f64 {
    mc.bits_per_symbol_hz * radio.bandwidth_hz * f64::from(plan.data)
        / f64::from(radio.subcarriers_total)
}

/// BER when the channel cannot sustain the profile at all.
pub const OUTAGE_BER: f64 = 0.5;

/// BER reached at [`BER_FLOOR_MARGIN_DB`] of margin and kept beyond it.
pub const BER_FLOOR: f64 = 5e-10;

/// Margin at which the BER curve bottoms out.
pub const BER_FLOOR_MARGIN_DB: f64 = 6.0;

/// Waterfall steepness below the floor, in decades of BER per dB of margin.
const BER_DECADES_PER_DB: f64 = 0.5;

/// Pinned margin-to-BER curve: flat floor of [`BER_FLOOR`] at margins of
/// +6 dB and above, rising half a decade per dB below that, capped at
/// [`OUTAGE_BER`]. Continuous and monotone non-increasing in the margin.
pub fn margin_to_ber(margin_db: f64) -> f64 {
    if margin_db >= BER_FLOOR_MARGIN_DB {
        return BER_FLOOR;
    }
    let decades = BER_DECADES_PER_DB * (BER_FLOOR_MARGIN_DB - margin_db);
    (BER_FLOOR * 10f64.powf(decades)).min(OUTAGE_BER)
}

/// Probability that a PDU of `size_bits` is corrupted: `1 - (1 - BER)^bits`,
/// with BER taken from the profile margin. `None` means outage and loses
/// the PDU with certainty.
pub fn pdu_loss_probability(snr_db: f64, mc: Option<&ModulationCoding>, size_bits: u64) -> f64 {
    let Some(mc) = mc else {
        return 1.0;
    };
    let ber = margin_to_ber(snr_db - mc.required_snr_db);
    // 1 - (1-ber)^n via log1p/expm1 so tiny BERs don't cancel away.
    -((size_bits as f64) * (-ber).ln_1p()).exp_m1()
}

/// Draws the fate of one PDU. Returns true when it is delivered intact.
/// Consumes exactly one uniform from the stream regardless of outcome.
pub fn pdu_delivery(
    snr_db: f64,
    mc: Option<&ModulationCoding>,
    size_bits: u64,
    stream: &mut RandomStream,
) -> bool {
    let p_loss = pdu_loss_probability(snr_db, mc, size_bits);
    !stream.bernoulli(p_loss)
}
