//! Frame independence and spatial convergence of the method of lines.

use std::path::Path;

use redqueen::config::{FrameMode, SimulationConfig};
use redqueen::solver::{simulate, Sample};

fn gap(s: &Sample) -> f64 {
    s.xbar.iter().zip(&s.ybar).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[test]
fn comoving_and_fixed_frames_agree() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/pursuit.toml");
    let mut cfg = SimulationConfig::load(&path).unwrap();
    cfg.t_end = 5.0;
    cfg.snapshot_times = vec![];
    cfg.frame = FrameMode::Comoving;
    let moving = simulate(&cfg).unwrap();
    cfg.frame = FrameMode::Fixed;
    let fixed = simulate(&cfg).unwrap();
    assert_eq!(moving.samples.len(), fixed.samples.len());
    for (a, b) in moving.samples.iter().zip(&fixed.samples) {
        assert_eq!(a.t, b.t);
        assert!((a.h_mass - b.h_mass).abs() < 1e-4, "H at t={}: {} vs {}", a.t, a.h_mass, b.h_mass);
        assert!((a.p_mass - b.p_mass).abs() < 1e-4, "P at t={}: {} vs {}", a.t, a.p_mass, b.p_mass);
        assert!((gap(a) - gap(b)).abs() < 1e-4, "gap at t={}", a.t);
    }
}

#[test]
fn host_mass_converges_at_second_order() {
    let mut cfg = SimulationConfig::reference();
    cfg.t_end = 2.0;
    cfg.snapshot_times = vec![];
    let h: Vec<f64> = [48, 96, 192]
        .iter()
        .map(|&m| {
            cfg.grid.m = m;
            simulate(&cfg).unwrap().final_sample().unwrap().h_mass
        })
        .collect();
    let order = ((h[0] - h[1]).abs() / (h[1] - h[2]).abs()).log2();
    assert!(order >= 1.8, "observed order {order} from H = {h:?}");
}
