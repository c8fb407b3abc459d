//! Builds the supported filter families and checks their defining identities.

use waveleton::wavelet::{make_filter, Family};

fn main() -> waveleton::Result<()> {
    let mut all = vec![make_filter(Family::Haar, 1)?];
    all.extend((2..=10).map(|m| make_filter(Family::Daubechies, m)).collect::<Result<Vec<_>, _>>()?);
    all.extend((4..=10).map(|m| make_filter(Family::Symmlet, m)).collect::<Result<Vec<_>, _>>()?);
    println!("{:<6} {:>4} {:>12} {:>12}", "name", "len", "orth defect", "moment defect");
    for f in &all {
        println!("{:<6} {:>4} {:>12.2e} {:>12.2e}", f.name(), f.len(), f.orthonormality_defect(), f.moment_defect());
    }
    println!("\n{}", make_filter(Family::Daubechies, 2)?.to_json());
    Ok(())
}
