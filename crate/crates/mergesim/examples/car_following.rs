//! Three car-following models chasing the same braking leader.
//!
//! The leader cruises at 25 m/s, brakes to 15 m/s, and holds. An exact-input
//! IDM follower, a delayed-perception human follower, and an automated
//! follower that also reads the leader's acceleration each trail it from the
//! same start. The human brakes late and then harder; the automated car sees
//! the leader recovering and never over-brakes.

use mergesim::traffic::{
    cav_accel, hdv_accel, idm_accel, CavParams, HdvParams, HistorySample, IdmParams,
    StateHistory,
};

struct Follower {
    x: f64,
    v: f64,
    a: f64,
    min_a: f64,
}

impl Follower {
    fn new(x: f64, v: f64) -> Self {
        Self { x, v, a: 0.0, min_a: 0.0 }
    }

    fn advance(&mut self, a: f64, dt: f64) {
        self.a = a;
        self.min_a = self.min_a.min(a);
        self.v = (self.v + a * dt).max(0.0);
        self.x += self.v * dt;
    }
}

fn main() {
    let idm = IdmParams::default();
    let hdv = HdvParams::default();
    let cav = CavParams::default();

    let dt = 0.1;
    let mut history = StateHistory::for_delays(hdv.max_delay(), dt);

    // Followers start at the 25 m/s equilibrium gap, so the leader's braking
    // is the only disturbance.
    let len = 5.0;
    let mut lead_x = idm.desired_gap(25.0, 0.0) + len;
    let mut lead_v = 25.0;
    let mut f_idm = Follower::new(0.0, 25.0);
    let mut f_hdv = Follower::new(0.0, 25.0);
    let mut f_cav = Follower::new(0.0, 25.0);

    println!(
        "{:>5} {:>7} | {:>7} {:>6} | {:>7} {:>6} | {:>7} {:>6}",
        "t", "lead_v", "idm_gap", "idm_a", "hdv_gap", "hdv_a", "cav_gap", "cav_a"
    );
    for step in 0..=300 {
        let t = step as f64 * dt;
        let lead_a = if (2.0..7.0).contains(&t) && lead_v > 15.0 { -2.0 } else { 0.0 };

        let gap = |f: &Follower| lead_x - f.x - len;
        history.push(HistorySample {
            t,
            gap: gap(&f_hdv),
            speed: f_hdv.v,
            dspeed: f_hdv.v - lead_v,
        });

        let a_idm = idm_accel(&idm, gap(&f_idm), f_idm.v, f_idm.v - lead_v);
        let a_hdv = hdv_accel(&hdv, &history, t);
        let a_cav = cav_accel(&cav, gap(&f_cav), f_cav.v, lead_v, lead_a);

        if step % 30 == 0 {
            println!(
                "{:>5.1} {:>7.2} | {:>7.2} {:>6.2} | {:>7.2} {:>6.2} | {:>7.2} {:>6.2}",
                t,
                lead_v,
                gap(&f_idm),
                a_idm,
                gap(&f_hdv),
                a_hdv,
                gap(&f_cav),
                a_cav
            );
        }

        f_idm.advance(a_idm, dt);
        f_hdv.advance(a_hdv, dt);
        f_cav.advance(a_cav, dt);
        lead_v = (lead_v + lead_a * dt).max(0.0);
        lead_x += lead_v * dt;
    }

    println!();
    println!("hardest braking  idm {:6.2}  hdv {:6.2}  cav {:6.2}", f_idm.min_a, f_hdv.min_a, f_cav.min_a);
    println!(
        "final gap        idm {:6.2}  hdv {:6.2}  cav {:6.2}",
        lead_x - f_idm.x - len,
        lead_x - f_hdv.x - len,
        lead_x - f_cav.x - len
    );
    let eq = idm.desired_gap(15.0, 0.0);
    println!("steady gap the plain model settles toward at 15 m/s: {eq:.2}");
}
