/// Ceilings on exhaustive work. Operations that would exceed one fail with
/// [`crate::Error::LimitExceeded`] instead of approximating.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Limits {
    /// Expanded states per explicit MDP.
    pub max_states: usize,
    /// State variables a plain succinct MDP may have before successor
    /// enumeration over all 2ⁿ candidates is refused. Also bounds SAT oracles.
    pub max_enum_vars: usize,
    /// Trajectory-tree nodes visited by exact evaluation.
    pub max_trajectories: usize,
    /// Gate budget for exhaustive policy-circuit search.
    pub max_policy_gates: usize,
    /// Candidate explicit policies enumerated by the bounded-policy search.
    pub max_explicit_policies: usize,
}

pub const LIMIT_ENV: &str = "SMDP_LIMIT_STATES";

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: 1 << 20,
            max_enum_vars: 20,
            max_trajectories: 1 << 22,
            max_policy_gates: 6,
            max_explicit_policies: 1 << 20,
        }
    }
}

impl Limits {
    /// Defaults, with `max_states` overridden by `SMDP_LIMIT_STATES` when it
    /// holds a positive integer.
    pub fn from_env() -> Self {
        let mut limits = Limits::default();
        if let Some(n) = std::env::var(LIMIT_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
        {
            limits.max_states = n;
        }
        limits
    }
}
