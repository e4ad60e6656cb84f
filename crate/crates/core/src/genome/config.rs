use serde::{Deserialize, Serialize};

use crate::tensor::AdadeltaConfig;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid config: {0}")]
pub struct ConfigError(pub String);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityCoeffs {
    pub excess: f64,
    pub disjoint: f64,
    pub weight: f64,
}

impl Default for CompatibilityCoeffs {
    fn default() -> Self {
        Self {
            excess: 1.0,
            disjoint: 1.0,
            weight: 0.4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightInit {
    pub mean: f64,
    pub std: f64,
}

impl Default for WeightInit {
    fn default() -> Self {
        Self { mean: 0.0, std: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MutationRates {
    pub add_connection: f64,
    pub remove_connection: f64,
    pub add_node: f64,
    pub remove_node: f64,
    pub reinit_weights: f64,
}

impl MutationRates {
    pub const NONE: MutationRates = MutationRates {
        add_connection: 0.0,
        remove_connection: 0.0,
        add_node: 0.0,
        remove_node: 0.0,
        reinit_weights: 0.0,
    };
}

impl Default for MutationRates {
    fn default() -> Self {
        Self {
            add_connection: 0.6,
            remove_connection: 0.6,
            add_node: 0.5,
            remove_node: 0.5,
            reinit_weights: 0.0,
        }
    }
}

/// Weight search used only by the purely genetic trainer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightMutation {
    pub perturb_prob: f64,
    pub perturb_std: f64,
    pub replace_prob: f64,
}

impl Default for WeightMutation {
    fn default() -> Self {
        Self {
            perturb_prob: 0.8,
            perturb_std: 0.5,
            replace_prob: 0.1,
        }
    }
}

/// Everything that controls one evolutionary run. Flat so it reads and
/// writes as a plain key-value file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    pub epochs_per_generation: usize,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
    pub p_add_connection: f64,
    pub p_remove_connection: f64,
    pub p_add_node: f64,
    pub p_remove_node: f64,
    pub p_reinit_weights: f64,
    pub compat_excess: f64,
    pub compat_disjoint: f64,
    pub compat_weight: f64,
    pub compatibility_threshold: f64,
    pub elimination_fraction: f64,
    pub weight_init_mean: f64,
    pub weight_init_std: f64,
    pub weight_perturb_prob: f64,
    pub weight_perturb_std: f64,
    pub weight_replace_prob: f64,
    pub adadelta_rho: f64,
    pub adadelta_eps: f64,
    pub seed: u64,
    /// Worker threads for per-genome training; 0 uses every core.
    pub parallelism: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        let rates = MutationRates::default();
        let compat = CompatibilityCoeffs::default();
        let init = WeightInit::default();
        let wm = WeightMutation::default();
        let ada = AdadeltaConfig::default();
        Self {
            population_size: 500,
            generations: 500,
            epochs_per_generation: 25,
            batch_size: None,
            p_add_connection: rates.add_connection,
            p_remove_connection: rates.remove_connection,
            p_add_node: rates.add_node,
            p_remove_node: rates.remove_node,
            p_reinit_weights: rates.reinit_weights,
            compat_excess: compat.excess,
            compat_disjoint: compat.disjoint,
            compat_weight: compat.weight,
            compatibility_threshold: 3.0,
            elimination_fraction: 0.5,
            weight_init_mean: init.mean,
            weight_init_std: init.std,
            weight_perturb_prob: wm.perturb_prob,
            weight_perturb_std: wm.perturb_std,
            weight_replace_prob: wm.replace_prob,
            adadelta_rho: ada.rho,
            adadelta_eps: ada.eps,
            seed: 0,
            parallelism: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn mutation_rates(&self) -> MutationRates {
        MutationRates {
            add_connection: self.p_add_connection,
            remove_connection: self.p_remove_connection,
            add_node: self.p_add_node,
            remove_node: self.p_remove_node,
            reinit_weights: self.p_reinit_weights,
        }
    }

    pub fn set_mutation_rates(&mut self, r: MutationRates) {
        self.p_add_connection = r.add_connection;
        self.p_remove_connection = r.remove_connection;
        self.p_add_node = r.add_node;
        self.p_remove_node = r.remove_node;
        self.p_reinit_weights = r.reinit_weights;
    }

    pub fn compatibility(&self) -> CompatibilityCoeffs {
        CompatibilityCoeffs {
            excess: self.compat_excess,
            disjoint: self.compat_disjoint,
            weight: self.compat_weight,
        }
    }

    pub fn weight_init(&self) -> WeightInit {
        WeightInit {
            mean: self.weight_init_mean,
            std: self.weight_init_std,
        }
    }

    pub fn weight_mutation(&self) -> WeightMutation {
        WeightMutation {
            perturb_prob: self.weight_perturb_prob,
            perturb_std: self.weight_perturb_std,
            replace_prob: self.weight_replace_prob,
        }
    }

    pub fn adadelta(&self) -> AdadeltaConfig {
        AdadeltaConfig {
            rho: self.adadelta_rho,
            eps: self.adadelta_eps,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let probs = [
            ("p_add_connection", self.p_add_connection),
            ("p_remove_connection", self.p_remove_connection),
            ("p_add_node", self.p_add_node),
            ("p_remove_node", self.p_remove_node),
            ("p_reinit_weights", self.p_reinit_weights),
            ("weight_perturb_prob", self.weight_perturb_prob),
            ("weight_replace_prob", self.weight_replace_prob),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError(format!("{name} = {p} is not a probability")));
            }
        }
        if self.weight_perturb_prob + self.weight_replace_prob > 1.0 {
            return Err(ConfigError(
                "weight_perturb_prob + weight_replace_prob exceeds 1".into(),
            ));
        }
        if self.population_size < 2 {
            return Err(ConfigError("population_size must be at least 2".into()));
        }
        if !(self.elimination_fraction > 0.0 && self.elimination_fraction < 1.0) {
            return Err(ConfigError("elimination_fraction must lie in (0, 1)".into()));
        }
        if self.batch_size == Some(0) {
            return Err(ConfigError("batch_size must be positive".into()));
        }
        if self.compatibility_threshold.is_nan() || self.compatibility_threshold < 0.0 {
            return Err(ConfigError("compatibility_threshold must be non-negative".into()));
        }
        if !(self.weight_init_std >= 0.0 && self.weight_perturb_std >= 0.0) {
            return Err(ConfigError("standard deviations must be non-negative".into()));
        }
        if !(self.adadelta_rho > 0.0 && self.adadelta_rho < 1.0 && self.adadelta_eps > 0.0) {
            return Err(ConfigError(
                "adadelta_rho must lie in (0, 1) and adadelta_eps be positive".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_protocol() {
        let c = EvolutionConfig::default();
        assert_eq!(
            (c.population_size, c.generations, c.epochs_per_generation),
            (500, 500, 25)
        );
        assert_eq!(c.p_add_connection, 0.6);
        assert_eq!(c.p_remove_connection, 0.6);
        assert_eq!(c.p_add_node, 0.5);
        assert_eq!(c.p_remove_node, 0.5);
        assert_eq!(c.p_reinit_weights, 0.0);
        assert_eq!((c.weight_init_mean, c.weight_init_std), (0.0, 1.0));
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = EvolutionConfig {
            p_add_node: 1.5,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c.p_add_node = 0.5;
        c.population_size = 1;
        assert!(c.validate().is_err());
        c.population_size = 10;
        c.elimination_fraction = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_roundtrip() {
        let c = EvolutionConfig {
            batch_size: Some(32),
            seed: 9,
            ..Default::default()
        };
        let text = toml::to_string(&c).unwrap();
        let back: EvolutionConfig = toml::from_str(&text).unwrap();
        assert_eq!(c, back);
        let partial: EvolutionConfig = toml::from_str("generations = 3\n").unwrap();
        assert_eq!(partial.generations, 3);
        assert_eq!(partial.population_size, 500);
    }
}
