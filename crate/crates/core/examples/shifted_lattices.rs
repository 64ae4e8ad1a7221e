//! The 3^n shifted dyadic lattices over a base cube: every tripled reference
//! cube belongs to one of them, and each holds a triple-size parent of every
//! reference cube.
use rough_weights::geometry::{audit_shifted_lattices, containing_triple, make_shifted_lattices, Cube};

fn main() -> rough_weights::Result<()> {
    for (n, depth) in [(1, 6), (2, 4)] {
        let base = Cube::from_ints(&vec![0; n], 8)?;
        let audit = audit_shifted_lattices(n, depth, &base)?;
        println!(
            "n={n} depth={depth}: {} reference cubes, {} lattice cubes, {} failures",
            audit.reference_cubes,
            audit.lattice_cubes,
            audit.failures.len()
        );
    }
    let base = Cube::from_ints(&[0], 8)?;
    let q = Cube::from_ints(&[3], 1)?;
    for d in make_shifted_lattices(1, 3, &base)? {
        println!("lattice {}: {q} sits in {}", d.tag(), containing_triple(&q, &d)?);
    }
    Ok(())
}
