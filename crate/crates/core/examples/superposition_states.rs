//! Click distributions of a few 3- and 4-bin states after the DLI.

use dpsqkd::states::{differential_bits, dli_transform, make_superposition, PhasePattern};

fn main() -> dpsqkd::Result<()> {
    for bits in [vec![0, 0], vec![0, 1], vec![1, 0, 1]] {
        let pattern = PhasePattern::from_differential(&bits)?;
        let state = make_superposition(pattern.n_bins(), &pattern, 1e-9)?;
        println!("differential bits {:?}", differential_bits(&pattern));
        for v in [1.0, 0.92] {
            let dist = dli_transform(&state, v)?;
            print!("  V={v:<4}");
            for bin in 1..=dist.n_output_bins() {
                print!("  [{:.3} {:.3}]", dist.prob(bin, 0), dist.prob(bin, 1));
            }
            println!();
        }
    }
    Ok(())
}
