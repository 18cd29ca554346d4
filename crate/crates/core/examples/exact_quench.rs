//! Full-basis critical quench of a power-law chain, recording the
//! correlator and the energy.

use qcrit::dynamics::{
    find_peak, run_protocol, Basis, HamiltonianSpec, Observable, ProtocolOptions, QuenchProtocol, Segment, SegmentEnd,
};
use qcrit::interaction::{synthetic_jij, Boundary};

fn main() -> qcrit::Result<()> {
    let n = 10;
    let j = synthetic_jij(n, 0.9, Boundary::Open, 1.0)?;
    let spec = HamiltonianSpec::new(j, 1.0, 0.0, 1.0, true)?;
    let protocol = QuenchProtocol { n, basis: Basis::Full, segments: vec![Segment { spec, end: SegmentEnd::Duration(6.0), dt: 0.25 }] };
    let run = run_protocol(&protocol, &[Observable::Cx2, Observable::Energy], &ProtocolOptions::default())?;

    let (c, e) = (&run.series[0], &run.series[1]);
    for k in (0..c.len()).step_by(4) {
        println!("Jt = {:5.2}  C^2/N^2 = {:.5}  E = {:+.6}", c.times[k], c.values[k] / (n * n) as f64, e.values[k]);
    }
    let p = find_peak(c)?;
    println!("peak C^2/N^2 = {:.5} at Jt = {:.2}", p.value / (n * n) as f64, p.time);
    Ok(())
}
