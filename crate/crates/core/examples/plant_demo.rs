//! One block of the input protocol on a double integrator: retransmission
//! after a failed slot, target reached after `v` consecutive deliveries,
//! dummy packets afterwards.
//!
//! cargo run --example plant_demo -- [pattern]

use aloha_control::cli::parse_pattern;
use aloha_control::plant::PlantModel;
use aloha_control::BlockShape;
use nalgebra::DVector;

fn main() -> aloha_control::Result<()> {
    let pattern = std::env::args().nth(1).unwrap_or_else(|| "01110".to_owned());
    let g = parse_pattern(&pattern)?;
    let v = 3;
    let shape = BlockShape::new(g.len(), v)?;
    let plant = PlantModel::double_integrator(v)?;
    let x0 = DVector::from_vec(vec![-0.5, 0.2]);

    let trace = plant.run_block(&shape, &x0, &g)?;
    println!("target {:?}, start {:?}", plant.target().as_slice(), x0.as_slice());
    println!("slot  G  phase            input      estimate");
    for s in &trace.slots {
        println!(
            "{:>4}  {}  {:<15}  {:>9.4}  ({:.4}, {:.4})",
            s.slot,
            u8::from(s.delivered),
            format!("{:?}", s.phase).to_lowercase(),
            s.input[0],
            s.estimate[0],
            s.estimate[1]
        );
    }
    match trace.target_slot {
        Some(t) => println!("target reached at slot {t}"),
        None => println!("no run of {v} deliveries: target not reached"),
    }
    Ok(())
}
