//! Static link-budget walk: pathloss, SNR, best sustainable burst profile,
//! and the loss probability of a maximum-size PDU at increasing distance —
//! no simulation involved, just the radio model.
//!
//! ```text
//! cargo run --example link_budget
//! ```

use wimaxsim::phy::{
    link_snr_db, pathloss_db, pdu_loss_probability, phy_rate_bps, select_modulation,
    ModulationLadder, PathlossModel, RadioConfig, SubcarrierPlan,
};

fn main() {
    // The radios the shipped scenarios use: a 2.5 GHz / 5 MHz cell.
    let bs = RadioConfig {
        carrier_hz: 2.5e9,
        bandwidth_hz: 5e6,
        subcarriers_total: 512,
        tx_power_dbm: 35.8,
        antenna_gain_dbi: 15.0,
        noise_figure_db: 7.0,
        height_m: 32.0,
    };
    let ss = RadioConfig {
        tx_power_dbm: 33.0,
        antenna_gain_dbi: 14.0,
        height_m: 6.0,
        ..bs.clone()
    };
    let model = PathlossModel::SuburbanErcegC {
        reference_distance_m: 100.0,
    };
    let ladder = ModulationLadder::default();
    let plan = SubcarrierPlan::all_data(512);
    // Largest PDU the MAC emits under its defaults: 1024 B payload + 6 B
    // header.
    let pdu_bits = (1024 + 6) * 8;

    println!(
        "{:>8}  {:>9}  {:>8}  {:>12}  {:>10}  {:>12}",
        "dist", "pathloss", "DL SNR", "profile", "rate", "P(PDU loss)"
    );
    for km in [0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0] {
        let pl = pathloss_db(model, km * 1_000.0, bs.carrier_hz, bs.height_m, ss.height_m)
            .expect("distance above model reference");
        let snr = link_snr_db(&bs, &ss, pl);
        let best = select_modulation(snr, &ladder);
        let (profile, rate) = match best {
            Some(mc) => (mc.label(), format!("{:.1} Mbps", phy_rate_bps(mc, &bs, &plan) / 1e6)),
            None => ("outage".to_string(), "-".to_string()),
        };
        let p_loss = pdu_loss_probability(snr, best, pdu_bits);
        println!(
            "{:>6.1}km  {:>7.2}dB  {:>6.2}dB  {:>12}  {:>10}  {:>12.3e}",
            km, pl, snr, profile, rate, p_loss
        );
    }
    println!(
        "\nprofiles adapt downward with distance; past the QPSK 1/2 \
         threshold ({:.1} dB) the link is in outage",
        ladder.outage_threshold_db()
    );
}
