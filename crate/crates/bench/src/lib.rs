//! Seeded fixtures shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smdp_core::gen::{random_cnf, random_mdp, random_policy, MdpShape};
use smdp_core::reductions::Cnf;
use smdp_core::{StationaryPolicy, SuccinctMdp};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random table-defined MDP over `num_vars` variables with a random policy.
pub fn mdp_with_policy(
    num_vars: usize,
    actions: usize,
    seed: u64,
) -> (SuccinctMdp, StationaryPolicy) {
    let mut r = rng(seed);
    let shape = MdpShape {
        num_vars,
        actions,
        ..MdpShape::default()
    };
    let m = random_mdp(&mut r, "bench", &shape).expect("valid shape");
    let p = random_policy(&mut r, num_vars, actions).expect("valid policy");
    (m, p)
}

/// A random formula with about 4.26 clauses per variable, clause width 3.
pub fn three_cnf(num_vars: usize, seed: u64) -> Cnf {
    let clauses = (num_vars * 426).div_ceil(100).max(1);
    random_cnf(&mut rng(seed), num_vars, clauses, 3).expect("valid formula")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        assert_eq!(mdp_with_policy(3, 2, 7), mdp_with_policy(3, 2, 7));
        assert_eq!(three_cnf(5, 1), three_cnf(5, 1));
        assert_eq!(three_cnf(5, 1).clauses().len(), 22);
    }
}
