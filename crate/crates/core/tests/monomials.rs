use std::collections::BTreeSet;

use ngrc_core::features::{monomial_count, MonomialTable};
use ngrc_core::NgrcConfig;
use proptest::prelude::*;

/// Every exponent vector over `n` variables whose total degree is in `orders`,
/// found by scanning the full box `[0, max]^n`.
fn brute_force(n: usize, orders: &[u32]) -> BTreeSet<Vec<u32>> {
    let max = *orders.iter().max().unwrap();
    let mut out = BTreeSet::new();
    let mut e = vec![0u32; n];
    loop {
        if orders.contains(&e.iter().sum()) {
            out.insert(e.clone());
        }
        let Some(p) = (0..n).find(|&p| e[p] < max) else {
            return out;
        };
        e[p] += 1;
        e[..p].iter_mut().for_each(|v| *v = 0);
    }
}

proptest! {
    #[test]
    fn table_matches_brute_force(n in 1usize..6, mask in 1u8..16) {
        let orders: Vec<u32> = (1..=4).filter(|o| mask & (1 << (o - 1)) != 0).collect();
        let table = MonomialTable::new(n, &orders);
        let rows = table.exponent_rows();
        let unique: BTreeSet<Vec<u32>> = rows.iter().cloned().collect();
        prop_assert_eq!(unique.len(), rows.len(), "duplicate monomials");
        prop_assert_eq!(&unique, &brute_force(n, &orders));
        prop_assert_eq!(rows.len(), monomial_count(n, &orders));
        let degrees: Vec<u32> = rows.iter().map(|r| r.iter().sum()).collect();
        prop_assert!(degrees.windows(2).all(|w| w[0] <= w[1]), "degrees not ascending");
    }
}

#[test]
fn degree_blocks_list_the_current_state_first() {
    let table = MonomialTable::new(3, &[1, 2]);
    let rows = table.exponent_rows();
    assert_eq!(rows[..3], [vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
    assert_eq!(rows[3], vec![2, 0, 0]);
    assert_eq!(rows.last().unwrap(), &vec![0, 0, 2]);
}

#[test]
fn published_feature_dimensions() {
    let power = NgrcConfig::<f64>::power_system();
    assert_eq!(brute_force(power.embedded_dim(), &power.orders).len(), 164);
    assert_eq!(power.feature_dim(), 1 + 3 * 164);
    let food = NgrcConfig::<f32>::food_chain();
    assert_eq!(brute_force(food.embedded_dim(), &food.orders).len(), 90);
    assert_eq!(food.feature_dim(), 1 + 3 * 90);
}
