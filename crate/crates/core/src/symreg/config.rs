use crate::expr::{BinaryOp, UnaryOp};

use super::SrError;

/// Transformation applied to an expression's output before the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Link {
    #[default]
    Identity,
    Sigmoid,
}

impl Link {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Link::Identity => x,
            Link::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Link::Identity => "identity",
            Link::Sigmoid => "sigmoid",
        }
    }
}

/// Relative selection weights of the mutation kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutationWeights {
    pub point: f64,
    pub subtree: f64,
    pub jitter: f64,
    pub insert: f64,
    pub delete: f64,
    pub fold: f64,
}

impl Default for MutationWeights {
    fn default() -> Self {
        MutationWeights {
            point: 0.25,
            subtree: 0.2,
            jitter: 0.3,
            insert: 0.1,
            delete: 0.1,
            fold: 0.05,
        }
    }
}

impl MutationWeights {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.point,
            self.subtree,
            self.jitter,
            self.insert,
            self.delete,
            self.fold,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SRConfig {
    /// Number of islands.
    pub populations: usize,
    pub population_size: usize,
    /// Offspring produced per island per iteration.
    pub ncycles_per_iteration: usize,
    pub niterations: usize,
    /// Upper bound on complexity.
    pub maxsize: usize,
    pub maxdepth: usize,
    pub binary_ops: Vec<BinaryOp>,
    pub unary_ops: Vec<UnaryOp>,
    pub constant_complexity: usize,
    pub link: Link,
    pub seed: u64,
    pub mutation: MutationWeights,
    /// Fraction of each island replaced by its neighbour's best at migration.
    pub migration_fraction: f64,
    pub tournament_size: usize,
    /// Probability of producing offspring by crossover instead of mutation.
    pub crossover_probability: f64,
    /// Fit on a fixed seeded subsample of at most this many rows.
    pub max_rows: Option<usize>,
    /// Stop once the best frontier loss is at or below this value.
    pub early_stop_loss: Option<f64>,
}

impl Default for SRConfig {
    /// Shared budgets with the cheaper cycle count and every operator enabled.
    fn default() -> Self {
        SRConfig {
            populations: 8,
            population_size: 50,
            ncycles_per_iteration: 50,
            niterations: 200,
            maxsize: 50,
            maxdepth: 10,
            binary_ops: BinaryOp::ALL.to_vec(),
            unary_ops: UnaryOp::ALL.to_vec(),
            constant_complexity: 2,
            link: Link::Identity,
            seed: 0,
            mutation: MutationWeights::default(),
            migration_fraction: 0.1,
            tournament_size: 5,
            crossover_probability: 0.3,
            max_rows: None,
            early_stop_loss: None,
        }
    }
}

impl SRConfig {
    /// Settings for the top-level `Rf ~ (Psi, xi)` equation.
    pub fn rf_level() -> Self {
        SRConfig {
            ncycles_per_iteration: 50,
            unary_ops: vec![UnaryOp::Square],
            link: Link::Sigmoid,
            ..SRConfig::default()
        }
    }

    /// Settings for every polarity-index equation.
    pub fn index_level() -> Self {
        SRConfig {
            ncycles_per_iteration: 500,
            unary_ops: UnaryOp::ALL.to_vec(),
            ..SRConfig::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SrError> {
        let positive = [
            ("populations", self.populations),
            ("population_size", self.population_size),
            ("ncycles_per_iteration", self.ncycles_per_iteration),
            ("niterations", self.niterations),
            ("maxsize", self.maxsize),
            ("maxdepth", self.maxdepth),
            ("tournament_size", self.tournament_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(SrError::Config(format!("{name} must be positive")));
            }
        }
        if self.binary_ops.is_empty() {
            return Err(SrError::Config("binary operator set is empty".into()));
        }
        if self.maxsize < self.constant_complexity {
            return Err(SrError::Config(
                "maxsize is smaller than a single constant".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.migration_fraction)
            || !(0.0..=1.0).contains(&self.crossover_probability)
        {
            return Err(SrError::Config("fractions must lie in [0, 1]".into()));
        }
        let w = self.mutation.as_array();
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
            return Err(SrError::Config(
                "mutation weights must be nonnegative and not all zero".into(),
            ));
        }
        if self.max_rows == Some(0) {
            return Err(SrError::Config("max_rows must be positive".into()));
        }
        Ok(())
    }
}
