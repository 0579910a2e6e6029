//! Fixtures shared by the benchmarks.

use infodesign::{Instance, PowerValue, RiskAttitude};

/// Two-action neutral instance with the midpoint plan `(2.5, 2.5)`.
pub fn neutral_fixture() -> (Instance, RiskAttitude) {
    (
        Instance::from_pairs(&[(4.0, 2.0), (8.0, 3.0)]).unwrap(),
        RiskAttitude::Neutral,
    )
}

/// Two-action instance with a square-root agent.
pub fn averse_fixture() -> (Instance, RiskAttitude) {
    (
        Instance::from_pairs(&[(2.0, 0.8), (5.0, 1.0)]).unwrap(),
        RiskAttitude::averse(PowerValue::sqrt()),
    )
}

/// `n` actions with rewards and costs growing at different rates, so that
/// several actions clear the principal's floor.
pub fn ladder(n: usize, attitude: RiskAttitude) -> (Instance, RiskAttitude) {
    let pairs: Vec<(f64, f64)> = (1..=n)
        .map(|i| {
            let i = i as f64;
            (2.0 * i + 0.5 * i.sqrt(), 0.5 + 0.4 * i)
        })
        .collect();
    (Instance::from_pairs(&pairs).unwrap(), attitude)
}
