//! Designs a codebook, sounds one random channel with it and estimates the
//! channel with OMP.
//!
//! `cargo run --release --example estimate_channel`

use hbcodebook::channel::{build_dictionary, generate_channel, PathConfig};
use hbcodebook::codebook::{combiner_codebook, select_pilots_and_order, GreedyOptions};
use hbcodebook::estimator::{nmse, omp, to_db, OmpConfig};
use hbcodebook::sensing::{assemble_phi, build_schedule, measure};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hbcodebook::Result<()> {
    let (n_t, n_r, l_t, l_r, m_x) = (32, 8, 4, 2, 2);
    let snr_db = 10.0;

    let design = select_pilots_and_order(n_t, l_t, m_x, &GreedyOptions::default())?;
    println!(
        "pilots {:?}, coherence {:.4}",
        design.pilot.selected(),
        design.coherence.value()
    );

    let combiner = combiner_codebook(n_r, l_r)?;
    let system = assemble_phi(&build_schedule(&design, &combiner), &design, &combiner)?;
    let at = build_dictionary(n_t, 48)?;
    let ar = build_dictionary(n_r, 12)?;

    // average transmit power ρ spread over the N_t·L_t unit-modulus entries
    let rho = 10f64.powf(snr_db / 10.0) / (n_t * l_t) as f64;
    let op = system.equivalent_operator(&at, &ar, rho)?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let paths = PathConfig::default();
    let channel = generate_channel(n_t, n_r, &paths, &mut rng)?;
    let y = measure(&system, &channel, rho, 1.0, &mut rng)?.y;
    let est = omp(&op, &y, &OmpConfig::with_sparsity(paths.paths))?;
    let err = nmse(&channel.h, &est.channel(&at, &ar)?)?;

    println!(
        "{} measurements, support {:?}, NMSE {:.2} dB",
        y.len(),
        est.support,
        to_db(err)
    );
    Ok(())
}
