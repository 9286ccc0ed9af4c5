use rand::Rng;

use super::plan::StageSpec;
use super::HierError;
use crate::neural::{Activation, MlpParams, MlpSpec, Model};

/// Sub-models plus head sharing one flat parameter vector: each sub-model's
/// block in cluster order, then the head.
#[derive(Debug, Clone, PartialEq)]
pub struct StageModel {
    subs: Vec<MlpSpec>,
    head: MlpSpec,
    /// Start of each cluster's slice of the stage input.
    input_starts: Vec<usize>,
    /// Start of each network's parameter block; the head is last.
    param_starts: Vec<usize>,
    params: Vec<f64>,
}

fn specs(stage: &StageSpec, hidden: &[usize]) -> Result<(Vec<MlpSpec>, MlpSpec), HierError> {
    let net = |n_in: usize, out: Activation| {
        let mut sizes = vec![n_in];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        MlpSpec::new(&sizes, Activation::LeakyRelu, out)
    };
    let subs = stage
        .clusters
        .iter()
        .map(|c| net(c.columns.len(), Activation::Linear))
        .collect::<Result<_, _>>()?;
    let head = net(stage.clusters.len(), stage.head_output)?;
    Ok((subs, head))
}

impl StageModel {
    fn assemble(
        subs: Vec<MlpSpec>,
        head: MlpSpec,
        params: Option<Vec<f64>>,
    ) -> Result<Self, HierError> {
        let mut input_starts = Vec::with_capacity(subs.len());
        let mut at = 0;
        for s in &subs {
            input_starts.push(at);
            at += s.n_inputs();
        }
        let mut param_starts = Vec::with_capacity(subs.len() + 1);
        let mut p = 0;
        for s in subs.iter().chain(std::iter::once(&head)) {
            param_starts.push(p);
            p += s.n_params();
        }
        let params = params.unwrap_or_else(|| vec![0.0; p]);
        if params.len() != p {
            return Err(HierError::Shape(format!(
                "expected {p} parameters, found {}",
                params.len()
            )));
        }
        Ok(StageModel {
            subs,
            head,
            input_starts,
            param_starts,
            params,
        })
    }

    /// Fresh networks with seeded uniform fan-in weights.
    pub fn init<R: Rng + ?Sized>(
        stage: &StageSpec,
        hidden: &[usize],
        rng: &mut R,
    ) -> Result<Self, HierError> {
        let (subs, head) = specs(stage, hidden)?;
        let mut params = Vec::new();
        for s in subs.iter().chain(std::iter::once(&head)) {
            params.extend_from_slice(MlpParams::init(s.clone(), rng).flat());
        }
        Self::assemble(subs, head, Some(params))
    }

    /// Rebuilds from persisted networks, checking them against `stage`.
    pub fn from_networks(
        stage: &StageSpec,
        hidden: &[usize],
        nets: &[MlpParams],
    ) -> Result<Self, HierError> {
        let (subs, head) = specs(stage, hidden)?;
        let expected: Vec<&MlpSpec> = subs.iter().chain(std::iter::once(&head)).collect();
        if nets.len() != expected.len() {
            return Err(HierError::Shape(format!(
                "expected {} networks, found {}",
                expected.len(),
                nets.len()
            )));
        }
        for (k, (net, spec)) in nets.iter().zip(&expected).enumerate() {
            if net.spec() != *spec {
                return Err(HierError::Shape(format!(
                    "network {k} does not match the stage layout"
                )));
            }
        }
        let params = nets.iter().flat_map(|n| n.flat().iter().copied()).collect();
        Self::assemble(subs, head, Some(params))
    }

    /// Sub-models in cluster order, then the head.
    pub fn to_networks(&self) -> Vec<MlpParams> {
        self.subs
            .iter()
            .chain(std::iter::once(&self.head))
            .enumerate()
            .map(|(k, s)| {
                MlpParams::from_flat(s.clone(), self.block(k).to_vec()).expect("block sizes match")
            })
            .collect()
    }

    pub fn n_latents(&self) -> usize {
        self.subs.len()
    }

    pub fn sub_spec(&self, k: usize) -> &MlpSpec {
        &self.subs[k]
    }

    pub fn head_spec(&self) -> &MlpSpec {
        &self.head
    }

    fn block(&self, k: usize) -> &[f64] {
        let end = self
            .param_starts
            .get(k + 1)
            .copied()
            .unwrap_or(self.params.len());
        &self.params[self.param_starts[k]..end]
    }

    fn cluster_input<'a>(&self, k: usize, x: &'a [f64]) -> &'a [f64] {
        &x[self.input_starts[k]..self.input_starts[k] + self.subs[k].n_inputs()]
    }

    /// Output of sub-model `k` given only its cluster's values.
    pub fn latent(&self, k: usize, cluster_x: &[f64]) -> Result<f64, HierError> {
        Ok(self.subs[k].predict_with(self.block(k), cluster_x)?[0])
    }

    /// All latents for one stage-input row.
    pub fn latents(&self, x: &[f64]) -> Vec<f64> {
        (0..self.subs.len())
            .map(|k| {
                self.latent(k, self.cluster_input(k, x))
                    .expect("row width checked by caller")
            })
            .collect()
    }

    pub fn head_output(&self, z: &[f64]) -> f64 {
        self.head
            .predict_with(self.block(self.subs.len()), z)
            .expect("latent count fixed")[0]
    }
}

impl Model for StageModel {
    fn n_inputs(&self) -> usize {
        self.subs.iter().map(MlpSpec::n_inputs).sum()
    }

    fn n_outputs(&self) -> usize {
        1
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn predict_row(&self, x: &[f64]) -> Vec<f64> {
        vec![self.head_output(&self.latents(x))]
    }

    fn accumulate_sq_error_grad(&self, x: &[f64], y: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.subs.len();
        let mut caches = Vec::with_capacity(n);
        let mut z = Vec::with_capacity(n);
        for k in 0..n {
            let (out, cache) = self.subs[k]
                .forward_with(self.block(k), self.cluster_input(k, x))
                .expect("width");
            z.push(out[0]);
            caches.push(cache);
        }
        let (out, head_cache) = self.head.forward_with(self.block(n), &z).expect("width");
        let err = out[0] - y[0];
        let (head_start, head_end) = (self.param_starts[n], self.params.len());
        let dz = self
            .head
            .backward_with(
                self.block(n),
                &head_cache,
                &[2.0 * err],
                &mut grad[head_start..head_end],
            )
            .expect("shapes");
        for k in 0..n {
            let (s, e) = (self.param_starts[k], self.param_starts[k + 1]);
            self.subs[k]
                .backward_with(self.block(k), &caches[k], &[dz[k]], &mut grad[s..e])
                .expect("shapes");
        }
        err * err
    }
}
