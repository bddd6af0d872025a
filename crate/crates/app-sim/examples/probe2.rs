use app_sim::*;

fn main() {
    // 3 MB, 100% dynamic @ 50/s: updates demand 1.2 Gb/s > 1 Gb/s link.
    let profile = profile_with(3_000_000, 1.0, 50.0);
    println!("objects {} total {}", profile.expand().len(), profile.total_bytes());
    for mode in [Mode::TwoStep, Mode::BaselineReactive] {
        let scenario = Scenario {
            profile: profile.clone(),
            mode,
            seed: 7,
            gap: GapModel::Fixed(5.0),
            ..Default::default()
        };
        let m = run_scenario(&scenario).unwrap();
        let h = &m.handovers[0];
        println!(
            "{mode:?}: blocking {:.3} ms residual {} bg_keys {} skipped {} value_bytes {} framing {}",
            h.blocking_ms, h.residual_keys, h.background_keys, m.skipped_writes,
            m.sync_value_bytes, m.sync_framing_bytes
        );
    }
}
