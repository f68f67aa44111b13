use std::time::Instant;
use jdirac::boundary::{boundary_cases, BoundaryPipeline};
use jdirac::oracle::gamma::make_gamma;
use jdirac::oracle::jfield::sample_j;
use jdirac::oracle::numeric::numeric_case;

fn main() {
    let rep = make_gamma(4).unwrap();
    let inst = sample_j(1, 4);
    let pipeline = BoundaryPipeline::new(4).unwrap();
    let _ = &pipeline;
    for spec in boundary_cases(4).unwrap() {
        let t = Instant::now();
        let v = numeric_case(&rep, &inst, &spec, 1e-9).unwrap();
        println!("{}: {:?}  value {:.6e}+{:.6e}i", spec.id, t.elapsed(), v.re, v.im);
    }
}
