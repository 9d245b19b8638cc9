//! Discretionary lane-change decision as a leader-follower game.
//!
//! A subject vehicle stuck behind a slow leader weighs changing lanes against
//! staying, anticipating the best reply of the target-lane follower for each
//! driving style it might have. Moving the follower closer flips the
//! decision. The payoff matrix and its mixed-strategy reading are printed for
//! the contested scene.

use mergesim::game::{
    build_payoffs, mixed_equilibrium, sv_decide, FvTypeDistribution, GameConfig, LocalScene,
    VehicleSnapshot, FV_ACTIONS, FV_TYPES, SV_ACTIONS,
};
use mergesim::traffic::IdmParams;

fn car(x: f64, v: f64) -> VehicleSnapshot {
    VehicleSnapshot { x, v, a: 0.0, length: 5.0, width: 2.0, idm: IdmParams::default() }
}

fn main() {
    let cfg = GameConfig::default();
    let dist = FvTypeDistribution::default();

    let mut scene = LocalScene {
        sv: car(0.0, 15.0),
        cur_leader: Some(car(20.0, 12.0)),
        cur_follower: Some(car(-35.0, 15.0)),
        tgt_leader: Some(car(120.0, 25.0)),
        tgt_follower: Some(car(-45.0, 20.0)),
        lane_offset: 3.5,
    };

    let open = sv_decide(&scene, &dist, &cfg).expect("valid style mix");
    println!("target-lane follower 45 m back:");
    println!(
        "  decision {:?}  (expected cost change {:.3} vs keep {:.3})",
        open.action, open.expected_change, open.expected_keep
    );
    for (t, r) in FV_TYPES.iter().zip(open.responses) {
        println!("  {t:?} follower replies {r:?}");
    }

    // Nothing to gain, plenty to disturb: the target lane is just as slow
    // up front and its follower is close and closing.
    scene.tgt_leader = Some(car(22.0, 12.5));
    scene.tgt_follower = Some(car(-6.0, 26.0));
    let contested = sv_decide(&scene, &dist, &cfg).expect("valid style mix");
    println!("\ntarget lane equally congested, follower 6 m back and closing:");
    println!(
        "  decision {:?}  (expected cost change {:.3} vs keep {:.3})",
        contested.action, contested.expected_change, contested.expected_keep
    );

    let payoffs = build_payoffs(&scene, &cfg);
    println!("\nsubject-vehicle rollout costs (rows: action, columns: follower reply):");
    for t in FV_TYPES {
        println!("  {t:?} follower");
        for sv in SV_ACTIONS {
            let row: Vec<String> =
                FV_ACTIONS.iter().map(|&fv| format!("{:8.2}", payoffs.at(t, sv, fv).sv)).collect();
            println!("    {:15} {}", format!("{sv:?}"), row.join(" "));
        }
    }

    let mixed = mixed_equilibrium(&payoffs, &dist);
    println!(
        "\nmixed reading: P(change)={:.2}, deterministic action {:?}",
        mixed.sv_probs[0],
        mixed.sv_action()
    );
}
