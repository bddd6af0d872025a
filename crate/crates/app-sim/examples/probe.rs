use app_sim::*;

fn main() {
    for (name, profile) in [
        ("carmap", StateProfile::carmap_like()),
        ("emp", StateProfile::emp_like()),
    ] {
        for mode in [Mode::TwoStep, Mode::BaselineReactive] {
            let mut blocking = Vec::new();
            let mut downtime = Vec::new();
            let mut residual = Vec::new();
            let mut bytes = 0u64;
            for seed in 0..31 {
                let scenario = Scenario {
                    profile: profile.clone(),
                    mode,
                    seed,
                    gap: GapModel::Fixed(5.0),
                    ..Default::default()
                };
                let m = run_scenario(&scenario).unwrap();
                assert!(m.all_checksums_ok());
                blocking.push(m.handovers[0].blocking_ms);
                downtime.push(m.handovers[0].downtime_ms);
                residual.push(m.handovers[0].residual_keys);
                bytes += m.total_sync_bytes();
            }
            println!(
                "{name:8} {mode:?}: median blocking {:.3} ms, median downtime {:.3} ms, residual[0] {}, bytes {}",
                median_of(blocking.iter().copied()),
                median_of(downtime.iter().copied()),
                residual[0],
                bytes
            );
        }
    }
    let base = Scenario { profile: StateProfile::carmap_like(), gap: GapModel::Fixed(5.0), ..Default::default() };
    let points = sweep(SweepAxis::Horizon, &[0.0, 10.0, 50.0, 100.0, 200.0], &base, 15).unwrap();
    for p in &points {
        println!(
            "horizon {:6.1} {:?}: median blocking {:.3} ms",
            p.value, p.mode, p.median_blocking_ms
        );
    }
    let points = sweep(SweepAxis::DynamicFraction, &[20.0, 50.0, 100.0], &base, 10).unwrap();
    for p in &points {
        println!(
            "dynamic {:5.1}% {:?}: median blocking {:.3} ms",
            p.value, p.mode, p.median_blocking_ms
        );
    }
}
