mod common;

use common::{oracle_gaps, ORACLE_REL_TOL};

#[test]
fn rpca_objective_matches_interior_point_reference() {
    let gaps = oracle_gaps();
    assert_eq!(gaps.len(), 20);
    for (file, ours, reference, gap) in &gaps {
        println!("{file}: {ours:.10} vs {reference:.10} (rel {gap:.2e})");
    }
    let worst = gaps.iter().map(|g| g.3).fold(0.0, f64::max);
    assert!(worst <= ORACLE_REL_TOL, "worst relative gap {worst:e}");
}
