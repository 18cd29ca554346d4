//! Soft mode and first gapped mode of an open power-law chain near its
//! threshold field.

use qcrit::spinwave::{critical_field, critical_field_direct, gapped_mode_population, spectrum_scan};
use qcrit::interaction::{synthetic_jij, Boundary};

fn main() -> qcrit::Result<()> {
    for p in [0.5, 0.9, 2.0] {
        let j = synthetic_jij(200, p, Boundary::Open, 1.0)?;
        let bc = critical_field(&j)?;
        let rows = spectrum_scan(&j, &[bc, bc + 0.1, bc + 0.3])?;
        println!("p = {p}: B_c = {bc:.5} (direct {:.5})", critical_field_direct(&j)?);
        for (b, l0, l1, _) in rows {
            println!("   B = {b:.4}  Lambda0 = {l0:.4}  Lambda1 = {l1:.4}");
        }
        let l1 = spectrum_scan(&j, &[bc])?[0].2;
        println!("   population of the gapped mode after the sweep: {:.4}", gapped_mode_population(1.0, l1)?);
    }
    Ok(())
}
