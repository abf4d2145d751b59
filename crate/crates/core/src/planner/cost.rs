use std::fmt;
use std::ops::{Add, AddAssign};

/// Estimated resource use, in abstract units.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Cost {
    pub cpu: f64,
    pub io: f64,
    pub memory: f64,
}

impl Cost {
    pub const ZERO: Cost = Cost {
        cpu: 0.0,
        io: 0.0,
        memory: 0.0,
    };

    pub fn new(cpu: f64, io: f64, memory: f64) -> Self {
        Cost { cpu, io, memory }
    }

    pub fn cpu(cpu: f64) -> Self {
        Cost::new(cpu, 0.0, 0.0)
    }

    pub fn scaled(self, factor: f64) -> Cost {
        Cost::new(self.cpu * factor, self.io * factor, self.memory * factor)
    }
}

impl Add for Cost {
    type Output = Cost;

    fn add(self, o: Cost) -> Cost {
        Cost::new(self.cpu + o.cpu, self.io + o.io, self.memory + o.memory)
    }
}

impl AddAssign for Cost {
    fn add_assign(&mut self, o: Cost) {
        *self = *self + o;
    }
}

impl std::iter::Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Cost {
        iter.fold(Cost::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{cpu={}, io={}, memory={}}}", self.cpu, self.io, self.memory)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostWeights {
    pub cpu: f64,
    pub io: f64,
    pub memory: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            cpu: 1.0,
            io: 4.0,
            memory: 2.0,
        }
    }
}

impl CostWeights {
    pub fn is_valid(&self) -> bool {
        let all = [self.cpu, self.io, self.memory];
        all.iter().all(|w| *w >= 0.0 && w.is_finite()) && all.iter().any(|w| *w > 0.0)
    }
}

pub fn scalar_cost(cost: &Cost, weights: &CostWeights) -> f64 {
    weights.cpu * cost.cpu + weights.io * cost.io + weights.memory * cost.memory
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_defaults() {
        let w = CostWeights::default();
        assert_eq!(scalar_cost(&Cost::ZERO, &w), 0.0);
        assert_eq!(scalar_cost(&Cost::new(100.0, 1000.0, 0.0), &w), 4100.0);
    }

    #[test]
    fn additive() {
        let total: Cost = [Cost::cpu(1.0), Cost::new(0.0, 2.0, 3.0)].into_iter().sum();
        assert_eq!(total, Cost::new(1.0, 2.0, 3.0));
    }
}
