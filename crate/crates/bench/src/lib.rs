//! Shared fixtures for the criterion benchmarks.

use std::sync::Arc;

use steinlab::constructions::{group_algebra, multimatrix, CrossedProduct, GroupAction};
use steinlab::derivations::CrossedContext;
use steinlab::{FDAlgebra, FiniteGroup};

/// `M_3 ⊕ M_3 ⊕ M_3` with uneven weights, the largest multimatrix used in tests.
pub fn largest_multimatrix() -> FDAlgebra {
    multimatrix(&[(3, 0.5), (3, 0.3), (3, 0.2)]).unwrap()
}

pub fn group_algebra_of(group: &FiniteGroup) -> FDAlgebra {
    group_algebra(group)
}

/// `C³ ⋊ Z/3` with the cyclic block shift.
pub fn cyclic_shift_context() -> Arc<CrossedContext> {
    let blocks = [(1, 1.0 / 3.0), (1, 1.0 / 3.0), (1, 1.0 / 3.0)];
    let a = Arc::new(multimatrix(&blocks).unwrap());
    let group = FiniteGroup::cyclic(3);
    let maps = group
        .elements()
        .map(|g| {
            let perm: Vec<usize> = (0..3).map(|i| (i + g) % 3).collect();
            GroupAction::block_permutation_matrix(&blocks, &perm).unwrap()
        })
        .collect();
    let act = GroupAction::new(group, a, maps).unwrap();
    CrossedContext::new(CrossedProduct::new(Arc::new(act)).unwrap())
}
