//! Default tolerances of every acceptance check, in one table.
//!
//! | field                        | value    | check                                                   |
//! |------------------------------|----------|---------------------------------------------------------|
//! | `compensator_residual`       | 1e-12    | SK identity residual per unit `|xi|`                    |
//! | `energy_identity`            | 1e-12    | relative residual of the linear energy identity         |
//! | `decrement_slack`            | 1e-10    | Lyapunov decrement slack relative to `|w|^2`            |
//! | `dissipation_fraction`       | 0.4      | decay exponent `>= 0.4 r^2 / (1 + r^2)`                 |
//! | `branch_formula`             | 1e-8     | decay exponent vs closed-form branches                  |
//! | `linear_exponent`            | 0.05     | quadrature-path fitted exponents                        |
//! | `half_rate_gap`              | 0.07     | velocity minus density exponent vs `-1/2`               |
//! | `difference_rate_min`        | 0.45     | difference-system fitted rate lower bound               |
//! | `difference_r_squared`       | 0.999    | difference-system fit quality                           |
//! | `mass_drift`                 | 1e-10    | relative drift of each species mass                     |
//! | `constraint_residual`        | 1e-10    | `||div E - rho|| / (||sigma_e|| + ||sigma_i||)`         |
//! | `linear_mode_agreement`      | 1e-8     | grid modes vs matrix exponential                        |
//! | `grid_slope`                 | 0.2      | nonlinear grid density slope vs `-3/4`                  |
//! | `functional_growth`          | 2.0      | `E(T) / E(5)` bound                                     |
//! | `partition_of_unity`         | 1e-12    | Littlewood-Paley partition sum                          |
//! | `embedding_slack`            | 1e-8     | relative slack of the Besov embedding chain             |
//! | `interpolation_constant`     | 10.0     | largest fitted constant per interpolation inequality    |
//! | `theory_consistency`         | 1e-14    | p/s regime agreement and the `-1/2` gap                 |

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub compensator_residual: f64,
    pub energy_identity: f64,
    pub decrement_slack: f64,
    pub dissipation_fraction: f64,
    pub branch_formula: f64,
    pub linear_exponent: f64,
    pub half_rate_gap: f64,
    pub difference_rate_min: f64,
    pub difference_r_squared: f64,
    pub mass_drift: f64,
    pub constraint_residual: f64,
    pub linear_mode_agreement: f64,
    pub grid_slope: f64,
    pub functional_growth: f64,
    pub partition_of_unity: f64,
    pub embedding_slack: f64,
    pub interpolation_constant: f64,
    pub theory_consistency: f64,
}

pub const DEFAULT: Tolerances = Tolerances {
    compensator_residual: 1e-12,
    energy_identity: 1e-12,
    decrement_slack: 1e-10,
    dissipation_fraction: 0.4,
    branch_formula: 1e-8,
    linear_exponent: 0.05,
    half_rate_gap: 0.07,
    difference_rate_min: 0.45,
    difference_r_squared: 0.999,
    mass_drift: 1e-10,
    constraint_residual: 1e-10,
    linear_mode_agreement: 1e-8,
    grid_slope: 0.2,
    functional_growth: 2.0,
    partition_of_unity: 1e-12,
    embedding_slack: 1e-8,
    interpolation_constant: 10.0,
    theory_consistency: 1e-14,
};

impl Default for Tolerances {
    fn default() -> Self {
        DEFAULT
    }
}
