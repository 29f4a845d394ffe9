//! Probability of a run of at least `v` successes in a block of `T` slots,
//! next to the value obtained by enumerating all `2^T` outcomes.
//!
//! cargo run --example chi_table -- [T]

use aloha_control::BlockShape;

fn main() -> aloha_control::Result<()> {
    let slots: usize = std::env::args()
        .nth(1)
        .map_or(5, |s| s.parse().expect("block length"));

    print!("{:>5}", "x");
    for v in 1..=slots {
        print!(" {:>10}", format!("v={v}"));
    }
    println!();
    let shapes: Vec<BlockShape> = (1..=slots)
        .map(|v| BlockShape::new(slots, v))
        .collect::<Result<_, _>>()?;
    let mut worst = 0.0f64;
    for i in 0..=10 {
        let x = i as f64 / 10.0;
        print!("{x:>5.2}");
        for s in &shapes {
            let chi = s.chi(x)?;
            if slots <= 16 {
                worst = worst.max((chi - s.chi_bruteforce(x)?).abs());
            }
            print!(" {chi:>10.6}");
        }
        println!();
    }
    if slots <= 16 {
        println!("largest gap to enumeration: {worst:.2e}");
    }
    Ok(())
}
