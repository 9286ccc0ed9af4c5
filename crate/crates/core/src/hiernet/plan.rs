use std::collections::HashSet;
use std::fmt;

use super::HierError;
use crate::dataset::schema::{
    canonical_name, DISTRIBUTION_COLUMNS, FG_COLUMNS, SOLVENT_COLUMNS, TARGET_COLUMN,
};
use crate::neural::Activation;

/// One sub-model: a latent and the columns it may see.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterSpec {
    pub latent: String,
    pub columns: Vec<String>,
}

impl ClusterSpec {
    pub fn new(latent: &str, columns: &[&str]) -> Self {
        ClusterSpec {
            latent: latent.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSpec {
    pub clusters: Vec<ClusterSpec>,
    /// Observed column for the first stage, an earlier latent otherwise.
    pub target: String,
    pub head_output: Activation,
}

impl StageSpec {
    /// Stage input width: all cluster columns, concatenated in cluster order.
    pub fn n_inputs(&self) -> usize {
        self.clusters.iter().map(|c| c.columns.len()).sum()
    }

    /// Column names in stage-input order.
    pub fn input_columns(&self) -> Vec<&str> {
        self.clusters
            .iter()
            .flat_map(|c| c.columns.iter().map(String::as_str))
            .collect()
    }

    pub fn latents(&self) -> Vec<&str> {
        self.clusters.iter().map(|c| c.latent.as_str()).collect()
    }

    pub fn cluster(&self, latent: &str) -> Option<(usize, &ClusterSpec)> {
        self.clusters
            .iter()
            .enumerate()
            .find(|(_, c)| c.latent == latent)
    }
}

/// Ordered stages plus the hidden widths shared by every network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UhisrPlan {
    pub stages: Vec<StageSpec>,
    pub hidden: Vec<usize>,
}

pub const DEFAULT_HIDDEN: [usize; 2] = [50, 50];

impl UhisrPlan {
    /// Solvent/solute split, then distribution/count split of the solute,
    /// then five functional-group families.
    pub fn builtin() -> Self {
        let mut solute: Vec<&str> = DISTRIBUTION_COLUMNS.to_vec();
        solute.extend(FG_COLUMNS);
        let stage1 = StageSpec {
            clusters: vec![
                ClusterSpec::new("Psi", &SOLVENT_COLUMNS),
                ClusterSpec::new("xi", &solute),
            ],
            target: TARGET_COLUMN.to_string(),
            head_output: Activation::Sigmoid,
        };
        let stage2 = StageSpec {
            clusters: vec![
                ClusterSpec::new("alpha", &DISTRIBUTION_COLUMNS),
                ClusterSpec::new("beta", &FG_COLUMNS),
            ],
            target: "xi".into(),
            head_output: Activation::Linear,
        };
        let stage3 = StageSpec {
            clusters: vec![
                ClusterSpec::new("gamma1", &["CtAmide", "CtCO2H"]),
                ClusterSpec::new("gamma2", &["CtNH2", "CtOH", "CtPhenol"]),
                ClusterSpec::new("gamma3", &["CtNO2", "CtRCO2R"]),
                ClusterSpec::new("gamma4", &["CtF", "CtAldehyde", "CtR2CO", "CtCN", "CtROR"]),
                ClusterSpec::new("gamma5", &["CtCl", "CtBr", "CtI", "CtMe"]),
            ],
            target: "beta".into(),
            head_output: Activation::Linear,
        };
        UhisrPlan {
            stages: vec![stage1, stage2, stage3],
            hidden: DEFAULT_HIDDEN.to_vec(),
        }
    }

    /// 1-based stage lookup.
    pub fn stage(&self, n: usize) -> Result<&StageSpec, HierError> {
        n.checked_sub(1)
            .and_then(|i| self.stages.get(i))
            .ok_or_else(|| {
                HierError::Plan(format!("no stage {n} (plan has {})", self.stages.len()))
            })
    }

    /// 1-based number of the stage that produces `latent`.
    pub fn stage_of(&self, latent: &str) -> Option<usize> {
        self.stages
            .iter()
            .position(|s| s.clusters.iter().any(|c| c.latent == latent))
            .map(|i| i + 1)
    }

    /// Whether some later stage is trained to reproduce `latent`.
    pub fn is_refined(&self, latent: &str) -> bool {
        self.stages.iter().any(|s| s.target == latent)
    }

    pub fn validate(&self) -> Result<(), HierError> {
        let err = |m: String| Err(HierError::Plan(m));
        if self.stages.is_empty() {
            return err("plan has no stages".into());
        }
        if self.hidden.contains(&0) {
            return err("hidden widths must be positive".into());
        }
        let mut latents = HashSet::new();
        let mut columns = HashSet::new();
        for (i, s) in self.stages.iter().enumerate() {
            let n = i + 1;
            if s.clusters.len() < 2 {
                return err(format!("stage {n} needs at least two clusters"));
            }
            let mut seen = HashSet::new();
            for c in &s.clusters {
                if c.columns.is_empty() {
                    return err(format!("cluster `{}` has no columns", c.latent));
                }
                for col in &c.columns {
                    if !seen.insert(col.as_str()) {
                        return err(format!("stage {n}: column `{col}` appears in two clusters"));
                    }
                    columns.insert(col.as_str());
                }
            }
            if i == 0 {
                if latents.contains(s.target.as_str()) {
                    return err("first stage must target an observed column".into());
                }
            } else if !latents.contains(s.target.as_str()) {
                return err(format!(
                    "stage {n} target `{}` is not an earlier latent",
                    s.target
                ));
            }
            for c in &s.clusters {
                if !latents.insert(c.latent.as_str()) {
                    return err(format!("latent `{}` defined twice", c.latent));
                }
            }
        }
        if let Some(l) = latents.iter().find(|l| columns.contains(*l)) {
            return err(format!("`{l}` is both a latent and an input column"));
        }
        if latents.contains(self.stages[0].target.as_str()) {
            return err("first stage target is also a latent".into());
        }
        Ok(())
    }

    /// Every input column and the first-stage target are present.
    pub fn check_columns(&self, has: impl Fn(&str) -> bool) -> Result<(), HierError> {
        for s in &self.stages {
            for col in s.input_columns() {
                if !has(col) {
                    return Err(HierError::MissingColumn(col.to_string()));
                }
            }
        }
        if !has(&self.stages[0].target) {
            return Err(HierError::MissingColumn(self.stages[0].target.clone()));
        }
        Ok(())
    }

    /// Plan file format:
    ///
    /// ```text
    /// hidden = 50 50
    /// stage target=Rf head=sigmoid
    /// Psi = Hex EA DCM MeOH Et2O
    /// xi = NBen MSD ...
    /// stage target=xi head=linear
    /// ...
    /// ```
    pub fn parse(text: &str) -> Result<Self, HierError> {
        let mut plan = UhisrPlan {
            stages: Vec::new(),
            hidden: DEFAULT_HIDDEN.to_vec(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |m: &str| HierError::Plan(format!("line {}: {m}", i + 1));
            if let Some(rest) = line.strip_prefix("stage") {
                let mut target = None;
                let mut head = Activation::Linear;
                for kv in rest.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("target", v)) => target = Some(canonical_name(v).to_string()),
                        Some(("head", v)) => {
                            head = match v {
                                "sigmoid" => Activation::Sigmoid,
                                "linear" => Activation::Linear,
                                _ => return Err(bad("head must be `sigmoid` or `linear`")),
                            }
                        }
                        _ => return Err(bad(&format!("unexpected `{kv}`"))),
                    }
                }
                let target = target.ok_or_else(|| bad("stage needs target=NAME"))?;
                plan.stages.push(StageSpec {
                    clusters: Vec::new(),
                    target,
                    head_output: head,
                });
            } else if let Some((lhs, rhs)) = line.split_once('=') {
                let lhs = lhs.trim();
                if lhs == "hidden" {
                    plan.hidden = rhs
                        .split_whitespace()
                        .map(|w| w.parse().map_err(|_| bad("hidden widths must be integers")))
                        .collect::<Result<_, _>>()?;
                    continue;
                }
                let stage = plan
                    .stages
                    .last_mut()
                    .ok_or_else(|| bad("cluster before any `stage` line"))?;
                let columns = rhs
                    .split_whitespace()
                    .map(|c| canonical_name(c).to_string())
                    .collect();
                stage.clusters.push(ClusterSpec {
                    latent: lhs.to_string(),
                    columns,
                });
            } else {
                return Err(bad("expected `stage ...` or `name = columns`"));
            }
        }
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, HierError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| HierError::Io(path.display().to_string(), e))?;
        Self::parse(&text)
    }
}

impl fmt::Display for UhisrPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hidden: Vec<String> = self.hidden.iter().map(|h| h.to_string()).collect();
        writeln!(f, "hidden = {}", hidden.join(" "))?;
        for s in &self.stages {
            writeln!(f, "stage target={} head={}", s.target, s.head_output.name())?;
            for c in &s.clusters {
                writeln!(f, "{} = {}", c.latent, c.columns.join(" "))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::schema::schema_columns;

    #[test]
    fn builtin_is_valid_and_uses_schema_columns() {
        let plan = UhisrPlan::builtin();
        plan.validate().unwrap();
        let schema: HashSet<&str> = schema_columns().collect();
        plan.check_columns(|c| schema.contains(c)).unwrap();
        assert_eq!(plan.stages[0].n_inputs(), 24);
        assert_eq!(plan.stages[0].clusters[1].columns.len(), 19);
    }

    #[test]
    fn stage_three_partitions_fg_counts() {
        let plan = UhisrPlan::builtin();
        let s3 = &plan.stages[2];
        let widths: Vec<usize> = s3.clusters.iter().map(|c| c.columns.len()).collect();
        assert_eq!(widths, vec![2, 3, 2, 5, 4]);
        let mut cols: Vec<&str> = s3.input_columns();
        cols.sort();
        let mut fg = FG_COLUMNS.to_vec();
        fg.sort();
        assert_eq!(cols, fg);
    }

    #[test]
    fn text_round_trip() {
        let plan = UhisrPlan::builtin();
        assert_eq!(UhisrPlan::parse(&plan.to_string()).unwrap(), plan);
    }

    #[test]
    fn invalid_plans_rejected() {
        assert!(UhisrPlan::parse("stage target=y\na = x0\n").is_err());
        assert!(UhisrPlan::parse("stage target=y\na = x0\nb = x0\n").is_err());
        assert!(UhisrPlan::parse(
            "stage target=y\na = x0\nb = x1\nstage target=q\nc = x0\nd = x1\n"
        )
        .is_err());
        assert!(UhisrPlan::parse("a = x0").is_err());
        UhisrPlan::parse(
            "stage target=y head=sigmoid\na = x0\nb = x1\nstage target=a\nc = x0\nd = x2\n",
        )
        .unwrap();
    }
}
