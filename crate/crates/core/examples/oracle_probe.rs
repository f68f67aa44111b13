use std::time::Instant;
use jdirac::boundary::BoundaryPipeline;
use jdirac::oracle::{run_oracle_checks, OracleConfig};

fn main() {
    for n in [4u8, 3] {
        let t0 = Instant::now();
        let pipeline = BoundaryPipeline::new(n).unwrap();
        let cases = pipeline.all_cases().unwrap();
        println!("== dim {n} (pipeline {:?})", t0.elapsed());
        let cfg = OracleConfig { dim: n, seed: 1, samples: 20 };
        let t1 = Instant::now();
        match run_oracle_checks(&cfg, &cases) {
            Ok(checks) => {
                for c in checks {
                    println!(
                        "{:42} tol {:8.1e}  err {:10.3e}  {}",
                        c.id, c.tolerance, c.max_error,
                        if c.pass { "ok" } else { "FAIL" }
                    );
                }
            }
            Err(e) => println!("oracle error: {e}"),
        }
        println!("oracle elapsed: {:?}", t1.elapsed());
    }
}
