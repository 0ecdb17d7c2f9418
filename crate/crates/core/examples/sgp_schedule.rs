//! Builds the resolvable comparison schedule for a handful of items and
//! checks that every pair shares a group exactly once.
//!
//!     cargo run --example sgp_schedule -- 10

use crowdsort::design::{sgp_schedule, verify_schedule};

fn main() -> crowdsort::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .map_or(Ok(10), |a| a.parse())
        .expect("item count");
    let schedule = sgp_schedule(n, 42)?;
    println!(
        "n = {n}: q = {}, {} slots, {} hallucinated",
        schedule.q,
        schedule.slot_count(),
        schedule.hallucinated_count()
    );
    for (k, partition) in schedule.partitions.iter().enumerate() {
        let groups: Vec<String> = partition
            .iter()
            .map(|g| {
                let items: Vec<String> = g
                    .iter()
                    .map(|id| {
                        if id.real {
                            id.index.to_string()
                        } else {
                            format!("({})", id.index)
                        }
                    })
                    .collect();
                format!("[{}]", items.join(" "))
            })
            .collect();
        println!("partition {k}: {}", groups.join(" "));
    }
    let cov = verify_schedule(&schedule);
    println!(
        "exact partitions: {}, pairs once: {}, missing: {}, repeated: {}",
        cov.exact_partitions, cov.pairs_once, cov.pairs_uncovered, cov.pairs_repeated
    );
    Ok(())
}
