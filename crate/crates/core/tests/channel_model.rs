mod common;

use beamsched::channel::{
    db_to_linear, default_layout, generate_channels, synthesize_channel, GeoPoint, NoiseModel, UserTerminal,
};

#[test]
fn same_seed_same_channels() {
    let layout = default_layout(7).unwrap();
    let noise = NoiseModel::default();
    let a = generate_channels(&layout, 50, 42, noise, 15.0).unwrap();
    let b = generate_channels(&layout, 50, 42, noise, 15.0).unwrap();
    let c = generate_channels(&layout, 50, 43, noise, 15.0).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    // A longer campaign starts with the same generations.
    let longer = generate_channels(&layout, 80, 42, noise, 15.0).unwrap();
    assert_eq!(&longer[..50], &a[..]);
}

/// Received SNR of a probe user at `point` in its own beam `beam`.
fn own_beam_snr_db(beam: usize, point: GeoPoint, snr_db: f64) -> f64 {
    let layout = default_layout(7).unwrap();
    let noise = NoiseModel::default();
    let mut users: Vec<UserTerminal> = (0..7)
        .map(|b| UserTerminal {
            position: layout.beam_centers[b],
            home_beam: b,
            generation: 0,
            phase_rad: 0.0,
        })
        .collect();
    users[beam].position = point;
    let h = synthesize_channel(&layout, &users, noise, snr_db).unwrap();
    10.0 * (h.entries[(beam, beam)].norm_sqr() / noise.n0).log10()
}

#[test]
fn peak_in_beam_snr_equals_reference() {
    let layout = default_layout(7).unwrap();
    for snr_db in [5.0, 15.0, 25.0] {
        for beam in [0, 3] {
            let c = layout.beam_centers[beam];
            let mut best = f64::NEG_INFINITY;
            for i in -60..=60 {
                for j in -60..=60 {
                    let p = GeoPoint::new(c.lat_deg + i as f64 * 0.025, c.lon_deg + j as f64 * 0.025);
                    if layout.covers(beam, p) {
                        let s = own_beam_snr_db(beam, p, snr_db);
                        assert!(s <= snr_db + 1e-9);
                        best = best.max(s);
                    }
                }
            }
            assert!((best - snr_db).abs() < 0.1, "peak {best} dB vs {snr_db} dB");
        }
    }
    assert!((db_to_linear(15.0) - 31.622776601683793).abs() < 1e-12);
}

#[test]
fn adjacent_beam_gain_below_own_gain() {
    let layout = default_layout(7).unwrap();
    for h in generate_channels(&layout, 500, 8, NoiseModel::default(), 15.0).unwrap() {
        for user in 0..7 {
            let own = h.entries[(user, user)].norm_sqr();
            for beam in (0..7).filter(|&b| b != user && layout.are_adjacent(b, user)) {
                assert!(h.entries[(beam, user)].norm_sqr() < own);
            }
        }
    }
}

#[test]
fn home_beam_dominates_each_column() {
    for h in common::generations(7, 300, 12) {
        for user in 0..7 {
            assert_eq!(h.dominant_row(user), user);
        }
    }
}
