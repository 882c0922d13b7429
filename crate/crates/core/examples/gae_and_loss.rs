//! Advantages for a short reward trace, and the clipped surrogate by hand.
//!
//! ```text
//! cargo run --example gae_and_loss
//! ```

use artic::ppo::{clipped_surrogate, compute_gae};

fn main() -> artic::Result<()> {
    let rewards = [-1.0, -1.0, 0.4, 0.7, 0.9];
    let values = [0.0, -0.5, 0.2, 0.5, 0.8];
    let (adv, ret) = compute_gae(&rewards, &values, 0.0, 0.99, 0.95)?;
    println!("t,reward,value,advantage,return");
    for t in 0..rewards.len() {
        println!("{t},{},{},{:.6},{:.6}", rewards[t], values[t], adv[t], ret[t]);
    }

    println!("\nratio,advantage,term,clipped");
    for (ratio, a) in [(1.0, 1.0), (1.5, 1.0), (0.5, 1.0), (0.5, -1.0), (1.5, -1.0), (1.1, 2.0)] {
        let s = clipped_surrogate(ratio, a, 0.2);
        println!("{ratio},{a},{:.3},{}", s.value, s.clipped);
    }
    Ok(())
}
