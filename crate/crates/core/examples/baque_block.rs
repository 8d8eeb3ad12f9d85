//! Draw one randomly scheduled BaQue block and show which instance owns
//! each round.
//!
//! Rows run from the block scale `n` down to 0. `Q` marks a query round of
//! the row's instance, `=` a replayed round and `.` a round masked by a
//! finer instance.
//!
//! ```text
//! cargo run --example baque_block -- [n] [ratio] [seed]
//! ```

use nsbandit::{BlockSchedule, RandomStream, StreamId};

fn main() {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<u64>().expect("integer argument"));
    let n = args.next().unwrap_or(3) as u32;
    let ratio = args.next().unwrap_or(4);
    let seed = args.next().unwrap_or(1);
    assert!(ratio >= 2, "the budget ratio is at least 2");

    let mut rng = RandomStream::new(seed, StreamId::Scheduler);
    let block = BlockSchedule::build(n, ratio, 3, u64::MAX, &mut rng);
    println!(
        "block n = {n}, ratio b = {ratio}: {} rounds, {} instances, {} baseline queries\n",
        block.length(),
        block.instances().len(),
        block.baseline_queries()
    );
    print!("{}", block.diagram());
    println!();
    print!("{}", block.describe());
}
