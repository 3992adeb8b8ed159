use sixflow::diagnostics::Termination;
use sixflow::flow::{normal_speed, run_flow, step, FlowConfig, FlowState};
use sixflow::io::{generate_initial, InitialSpec};
use sixflow::{compute_geometry, DiscreteCurve};

fn cosine(n: usize) -> DiscreteCurve {
    generate_initial(&InitialSpec::cosine(0.05, 1, n)).unwrap().curve
}

fn energy(state: &FlowState) -> f64 {
    let p = state.profile();
    let w = p.weights();
    0.5 * p.k_s().iter().zip(&w).map(|(v, w)| v * v * w).sum::<f64>()
}

#[test]
fn one_step_decreases_energy() {
    let s0 = FlowState::new(cosine(128)).unwrap();
    let h = s0.profile().spacing;
    let s1 = step(&s0, 0.1 * h * h).unwrap();
    assert!(energy(&s1) < energy(&s0));
    assert_eq!(s1.step_index(), 1);
    assert_eq!(s1.curve().points()[0][0], -1.0);
    assert_eq!(s1.curve().points()[128][0], 1.0);
}

#[test]
fn small_step_moves_nodes_with_normal_speed() {
    let s0 = FlowState::new(cosine(128)).unwrap();
    let p = s0.profile();
    let f = normal_speed(p);
    // normal velocity at a few nodes, extrapolated to dt → 0
    let rate = |dt: f64, i: usize| {
        let s1 = step(&s0, dt).unwrap();
        let (a, b) = (s0.curve().points()[i], s1.curve().points()[i]);
        let nu = p.normal(i);
        ((b[0] - a[0]) * nu[0] + (b[1] - a[1]) * nu[1]) / dt
    };
    for i in [20, 40, 64, 90] {
        let dt = 1e-8;
        let extrapolated = 2.0 * rate(dt, i) - rate(2.0 * dt, i);
        let scale = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(
            (extrapolated - f[i]).abs() < 2e-3 * scale,
            "node {i}: {extrapolated} vs {}",
            f[i]
        );
    }
}

#[test]
fn flat_start_converges_immediately() {
    let c = DiscreteCurve::horizontal(64, -1.0, 1.0, 0.3).unwrap();
    let tr = run_flow(&FlowConfig::new(64, 1.0), &c).unwrap();
    assert_eq!(tr.metadata.termination, Termination::Converged);
    assert_eq!(tr.metadata.steps, 0);
    assert_eq!(tr.snapshots.len(), 1);
    assert_eq!(tr.snapshots[0].curve, c);
}

#[test]
fn winding_far_from_zero_is_refused() {
    // a curve leaving the left line downward and looping once
    let mut pts = vec![[-1.0, 0.0]];
    for i in 1..200 {
        let a = -std::f64::consts::FRAC_PI_2 + 2.0 * std::f64::consts::PI * i as f64 / 200.0;
        pts.push([0.3 * a.cos(), 0.3 + 0.3 * a.sin()]);
    }
    pts.push([1.0, 0.0]);
    let c = DiscreteCurve::new(pts, -1.0, 1.0).unwrap();
    let r = run_flow(&FlowConfig::new(128, 0.1), &c);
    assert!(r.is_err());
}

#[test]
fn horizon_reached_exactly_and_snapshots_ordered() {
    let mut cfg = FlowConfig::new(32, 0.01);
    cfg.snapshot_every = 50;
    cfg.stop_knorm = 0.0;
    let tr = run_flow(&cfg, &cosine(32)).unwrap();
    assert_eq!(tr.metadata.termination, Termination::Horizon);
    let t = tr.times();
    assert_eq!(*t.last().unwrap(), 0.01);
    assert!(t.windows(2).all(|w| w[0] < w[1]));
    assert!(tr.snapshots.iter().all(|s| s.record.delta_margin > 0.0));
}

#[test]
fn max_steps_stops_run() {
    let mut cfg = FlowConfig::new(32, 1.0);
    cfg.max_steps = 7;
    cfg.stop_knorm = 0.0;
    let tr = run_flow(&cfg, &cosine(32)).unwrap();
    assert_eq!(tr.metadata.termination, Termination::MaxSteps);
    assert_eq!(tr.metadata.steps, 7);
    assert_eq!(tr.snapshots.len(), 2);
}

#[test]
fn input_is_resampled_to_configured_count() {
    let mut cfg = FlowConfig::new(48, 1e-4);
    cfg.stop_knorm = 0.0;
    let tr = run_flow(&cfg, &cosine(100)).unwrap();
    assert!(tr.snapshots.iter().all(|s| s.curve.segments() == 48));
    let p = compute_geometry(&tr.snapshots[0].curve).unwrap();
    assert!(p.spacing > 0.0);
}
