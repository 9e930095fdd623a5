use std::sync::Arc;

use steinlab::derivations::{derivation_space, Envelope};
use steinlab::vndim::derivation_dimension;
use steinlab::{group_algebra, multimatrix, FiniteGroup};

fn multimatrix_oracle(blocks: &[(usize, f64)]) -> f64 {
    1.0 - blocks
        .iter()
        .map(|(n, a)| a * a / (*n * *n) as f64)
        .sum::<f64>()
}

#[test]
fn group_algebras() {
    for g in ["Z/2", "Z/3", "Z/4", "Z/6", "S3"] {
        let g = FiniteGroup::named(g).unwrap();
        let env = Envelope::new(Arc::new(group_algebra(&g)));
        let d = derivation_dimension(&derivation_space(&env).unwrap()).unwrap();
        assert!(
            (d.value - (1.0 - 1.0 / g.order() as f64)).abs() < 1e-9,
            "{}: {}",
            g.label(),
            d.value
        );
    }
}

#[test]
fn largest_multimatrix() {
    let blocks = [(3, 0.5), (3, 0.3), (3, 0.2)];
    let env = Envelope::new(Arc::new(multimatrix(&blocks).unwrap()));
    let d = derivation_dimension(&derivation_space(&env).unwrap()).unwrap();
    assert!(
        (d.value - multimatrix_oracle(&blocks)).abs() < 1e-9,
        "{}",
        d.value
    );
}
