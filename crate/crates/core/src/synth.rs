//! Synthetic benchmarks: random DAGs, edge weights, structural equation models and the
//! corruptions used in the robustness ablations.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index::sample as sample_indices;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gumbel, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dag::{Dag, WeightedGraph};
use crate::data::{Dataset, GenerationRecord};
use crate::error::{Error, Result};
use crate::gp::gp_sample_function;

/// Largest sample size accepted by the GP-based mechanisms (each node factorizes an
/// `n x n` kernel).
pub const GP_MAX_SAMPLES: usize = 2000;

/// Hidden width of the random MLP mechanism.
pub const MLP_HIDDEN: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GraphModel {
    Er,
    Sf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub d: usize,
    pub model: GraphModel,
    /// Expected in-degree; the graph has about `k * d` edges.
    pub k: usize,
    pub seed: u64,
}

impl GraphSpec {
    pub fn new(d: usize, model: GraphModel, k: usize, seed: u64) -> Self {
        Self { d, model, k, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.k == 0 {
            return Err(Error::InvalidArgument("graph needs d >= 1 and k >= 1".into()));
        }
        if self.model == GraphModel::Er && self.d > 1 && self.edge_probability() > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "in-degree {} is infeasible on {} nodes (edge probability {:.3} > 1)",
                self.k,
                self.d,
                self.edge_probability()
            )));
        }
        Ok(())
    }

    /// Probability of each forward pair under the ER model.
    pub fn edge_probability(&self) -> f64 {
        if self.d < 2 {
            return 0.0;
        }
        2.0 * self.k as f64 / (self.d - 1) as f64
    }
}

/// A finite union of closed intervals; samples are uniform over the union.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightRange {
    pub intervals: Vec<(f64, f64)>,
}

impl WeightRange {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty()
            || intervals
                .iter()
                .any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi))
        {
            return Err(Error::InvalidArgument("weight range needs non-empty intervals lo < hi".into()));
        }
        if intervals.iter().any(|&(lo, hi)| lo <= 0.0 && hi >= 0.0) {
            return Err(Error::InvalidArgument("weight range must exclude zero".into()));
        }
        Ok(Self { intervals })
    }

    /// `[-5, -2] U [2, 5]`
    pub fn wide() -> Self {
        Self { intervals: vec![(-5.0, -2.0), (2.0, 5.0)] }
    }

    /// `[-2, -0.5] U [0.5, 2]`
    pub fn regular() -> Self {
        Self { intervals: vec![(-2.0, -0.5), (0.5, 2.0)] }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total: f64 = self.intervals.iter().map(|(lo, hi)| hi - lo).sum();
        let mut u = rng.random::<f64>() * total;
        for &(lo, hi) in &self.intervals {
            let len = hi - lo;
            if u < len {
                return lo + u;
            }
            u -= len;
        }
        let (_, hi) = *self.intervals.last().expect("non-empty range");
        hi
    }
}

impl fmt::Display for WeightRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.intervals.iter().map(|(lo, hi)| format!("[{lo},{hi}]")).collect();
        f.write_str(&parts.join("U"))
    }
}

impl FromStr for WeightRange {
    type Err = Error;

    /// Accepts `wide`, `regular`, or a list such as `-2:-0.5,0.5:2`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "wide" => return Ok(Self::wide()),
            "regular" => return Ok(Self::regular()),
            _ => {}
        }
        let bad = || Error::InvalidArgument(format!("cannot parse weight range '{s}'"));
        let intervals = s
            .split(',')
            .map(|part| {
                let (lo, hi) = part.split_once(':').ok_or_else(bad)?;
                Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(intervals)
    }
}

/// Additive noise families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Noise {
    /// Zero-mean Gaussian with the given variance.
    Gauss(f64),
    /// Zero-mean Gaussian whose variance is drawn once per node from `U(lo, hi)`.
    GaussRange(f64, f64),
    /// Exponential with rate 1.
    Exp,
    /// Gumbel with location 0 and scale 1.
    Gumbel,
    /// Laplace with location 0 and scale 1.
    Laplace,
    /// Uniform on `[-1, 1]`.
    Uniform,
}

impl Noise {
    /// Fixes any per-node randomness of the family. Only [`Noise::GaussRange`] draws from `rng`.
    pub fn for_node<R: Rng + ?Sized>(&self, rng: &mut R) -> Noise {
        match *self {
            Noise::GaussRange(lo, hi) => Noise::Gauss(rng.random_range(lo..=hi)),
            other => other,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Noise::Gauss(var) => var.sqrt() * rng.sample::<f64, _>(StandardNormal),
            Noise::GaussRange(lo, hi) => {
                let var = rng.random_range(lo..=hi);
                var.sqrt() * rng.sample::<f64, _>(StandardNormal)
            }
            Noise::Exp => rng.sample(Exp1),
            Noise::Gumbel => Gumbel::new(0.0, 1.0).expect("valid scale").sample(rng),
            Noise::Laplace => laplace(rng),
            Noise::Uniform => rng.random_range(-1.0..=1.0),
        }
    }
}

fn laplace<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Inverse CDF on u in (-1/2, 1/2).
    let u: f64 = rng.random::<f64>() - 0.5;
    -u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

impl fmt::Display for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Noise::Gauss(v) => write!(f, "gauss:{v}"),
            Noise::GaussRange(lo, hi) => write!(f, "gauss:{lo}..{hi}"),
            Noise::Exp => f.write_str("exp"),
            Noise::Gumbel => f.write_str("gumbel"),
            Noise::Laplace => f.write_str("laplace"),
            Noise::Uniform => f.write_str("uniform"),
        }
    }
}

impl FromStr for Noise {
    type Err = Error;

    /// `gauss` (unit variance), `gauss:<var>`, `gauss:<lo>..<hi>`, `exp`, `gumbel`, `laplace`,
    /// `uniform`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, arg) = match lower.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (lower.as_str(), None),
        };
        let noise = match (name, arg) {
            ("gauss" | "gaussian", None) => Noise::Gauss(1.0),
            ("gauss" | "gaussian", Some(a)) if a.contains("..") => {
                let (lo, hi) = a.split_once("..").expect("checked");
                let parse = |v: &str| -> Result<f64> {
                    v.trim()
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad noise variance in '{s}'")))
                };
                let (lo, hi) = (parse(lo)?, parse(hi)?);
                if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
                    return Err(Error::InvalidArgument(format!("bad noise variance range in '{s}'")));
                }
                Noise::GaussRange(lo, hi)
            }
            ("gauss" | "gaussian", Some(a)) => {
                let var: f64 = a
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad noise variance in '{s}'")))?;
                if !(var >= 0.0 && var.is_finite()) {
                    return Err(Error::InvalidArgument(format!("noise variance must be >= 0, got {var}")));
                }
                Noise::Gauss(var)
            }
            ("exp", None) => Noise::Exp,
            ("gumbel", None) => Noise::Gumbel,
            ("laplace", None) => Noise::Laplace,
            ("uniform", None) => Noise::Uniform,
            _ => return Err(Error::InvalidArgument(format!("unknown noise '{s}'"))),
        };
        Ok(noise)
    }
}

impl TryFrom<String> for Noise {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Noise> for String {
    fn from(n: Noise) -> String {
        n.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mechanism {
    Linear,
    Gp,
    Mlp,
    PnlGp,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::Linear => "linear",
            Mechanism::Gp => "gp",
            Mechanism::Mlp => "mlp",
            Mechanism::PnlGp => "pnl-gp",
        })
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "linear" => Ok(Mechanism::Linear),
            "gp" => Ok(Mechanism::Gp),
            "mlp" => Ok(Mechanism::Mlp),
            "pnl-gp" | "pnl" => Ok(Mechanism::PnlGp),
            _ => Err(Error::InvalidArgument(format!("unknown mechanism '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemSpec {
    pub mechanism: Mechanism,
    pub weight_range: WeightRange,
    pub noise: Noise,
    pub n: usize,
    pub standardize: bool,
    /// Weight law of the MLP layers.
    pub mlp_weight_range: WeightRange,
    /// Length scale of the GP mechanisms.
    pub gp_length_scale: f64,
}

impl SemSpec {
    /// Linear-Gaussian SEM with unit noise and wide weights.
    pub fn linear(n: usize) -> Self {
        Self {
            mechanism: Mechanism::Linear,
            weight_range: WeightRange::wide(),
            noise: Noise::Gauss(1.0),
            n,
            standardize: false,
            mlp_weight_range: WeightRange::regular(),
            gp_length_scale: 1.0,
        }
    }

    pub fn with_mechanism(mut self, mechanism: Mechanism) -> Self {
        self.mechanism = mechanism;
        self
    }

    pub fn with_noise(mut self, noise: Noise) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_weights(mut self, range: WeightRange) -> Self {
        self.weight_range = range;
        self
    }

    pub fn standardized(mut self, yes: bool) -> Self {
        self.standardize = yes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument("need at least two samples".into()));
        }
        if matches!(self.mechanism, Mechanism::Gp | Mechanism::PnlGp) && self.n > GP_MAX_SAMPLES {
            return Err(Error::InvalidArgument(format!(
                "GP mechanisms are limited to n <= {GP_MAX_SAMPLES}, got {}",
                self.n
            )));
        }
        if !(self.gp_length_scale > 0.0) {
            return Err(Error::InvalidArgument("GP length scale must be positive".into()));
        }
        Ok(())
    }
}

pub fn gen_graph<R: Rng + ?Sized>(spec: &GraphSpec, rng: &mut R) -> Result<Dag> {
    spec.validate()?;
    let d = spec.d;
    let mut adj = vec![false; d * d];
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(rng);
    match spec.model {
        GraphModel::Er => {
            let p = spec.edge_probability();
            for a in 0..d {
                for b in a + 1..d {
                    if rng.random::<f64>() < p {
                        adj[perm[a] * d + perm[b]] = true;
                    }
                }
            }
        }
        GraphModel::Sf => {
            // Preferential attachment: node t links to min(k, t) earlier nodes drawn with
            // probability proportional to degree + 1. Edges point from older to newer.
            let mut degree = vec![0usize; d];
            for t in 1..d {
                let m = spec.k.min(t);
                let mut chosen: Vec<usize> = Vec::with_capacity(m);
                while chosen.len() < m {
                    let total: usize = (0..t).filter(|s| !chosen.contains(s)).map(|s| degree[s] + 1).sum();
                    let mut u = rng.random_range(0..total);
                    for s in (0..t).filter(|s| !chosen.contains(s)) {
                        let w = degree[s] + 1;
                        if u < w {
                            chosen.push(s);
                            break;
                        }
                        u -= w;
                    }
                }
                for s in chosen {
                    degree[s] += 1;
                    degree[t] += 1;
                    adj[perm[s] * d + perm[t]] = true;
                }
            }
        }
    }
    Ok(Dag::from_adjacency_unchecked(d, adj))
}

pub fn gen_weights<R: Rng + ?Sized>(g: &Dag, range: &WeightRange, rng: &mut R) -> WeightedGraph {
    let d = g.d();
    let mut w = DMatrix::zeros(d, d);
    for (i, j) in g.edges() {
        w[(i, j)] = range.sample(rng);
    }
    WeightedGraph::new(w).expect("support of an acyclic graph")
}

/// Samples `sem.n` observations from the SEM over `g`. LINEAR uses the edge weights;
/// the nonlinear mechanisms only use the support.
pub fn simulate<R: Rng + ?Sized>(g: &WeightedGraph, sem: &SemSpec, rng: &mut R) -> Result<Dataset> {
    sem.validate()?;
    let d = g.d();
    let n = sem.n;
    let dag = g.support();
    let mut x = DMatrix::<f64>::zeros(n, d);
    for node in dag.topological_order() {
        let parents = dag.parents(node);
        let noise = sem.noise.for_node(rng);
        let signal: Vec<f64> = if parents.is_empty() {
            vec![0.0; n]
        } else {
            match sem.mechanism {
                Mechanism::Linear => (0..n)
                    .map(|r| parents.iter().map(|&p| x[(r, p)] * g.weight(p, node)).sum())
                    .collect(),
                Mechanism::Gp | Mechanism::PnlGp => {
                    let inputs = DMatrix::from_fn(n, parents.len(), |r, c| x[(r, parents[c])]);
                    gp_sample_function(&inputs, sem.gp_length_scale, rng)?
                }
                Mechanism::Mlp => mlp_signal(&x, &parents, &sem.mlp_weight_range, rng),
            }
        };
        for (r, s) in signal.into_iter().enumerate() {
            x[(r, node)] = match sem.mechanism {
                Mechanism::PnlGp => sigmoid(s + laplace(rng)),
                _ => s + noise.sample(rng),
            };
        }
        if let Some(r) = (0..n).find(|&r| !x[(r, node)].is_finite()) {
            return Err(Error::Numeric(format!(
                "mechanism diverged at node {node}, sample {r}"
            )));
        }
    }
    let mut data = Dataset::new(x)?;
    if sem.standardize {
        data = data.standardized();
    }
    Ok(data.with_meta(GenerationRecord {
        graph: Some(dag),
        weights: Some(g.clone()),
        mechanism: Some(sem.mechanism.to_string()),
        noise: Some(match sem.mechanism {
            Mechanism::PnlGp => Noise::Laplace.to_string(),
            _ => sem.noise.to_string(),
        }),
        seed: None,
    }))
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn mlp_signal<R: Rng + ?Sized>(x: &DMatrix<f64>, parents: &[usize], range: &WeightRange, rng: &mut R) -> Vec<f64> {
    let w1 = DMatrix::from_fn(parents.len(), MLP_HIDDEN, |_, _| range.sample(rng));
    let w2: Vec<f64> = (0..MLP_HIDDEN).map(|_| range.sample(rng)).collect();
    (0..x.nrows())
        .map(|r| {
            (0..MLP_HIDDEN)
                .map(|h| {
                    let pre: f64 = parents.iter().enumerate().map(|(c, &p)| x[(r, p)] * w1[(c, h)]).sum();
                    sigmoid(pre) * w2[h]
                })
                .sum()
        })
        .collect()
}

/// Adds `N(0, sigma2)` to exactly `round(percent / 100 * n * d)` distinct entries.
pub fn corrupt<R: Rng + ?Sized>(data: &Dataset, percent: f64, sigma2: f64, rng: &mut R) -> Result<Dataset> {
    if !(0.0..=100.0).contains(&percent) || !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "corrupt needs percent in [0, 100] and sigma2 >= 0, got {percent} and {sigma2}"
        )));
    }
    let (n, d) = (data.n(), data.d());
    let total = n * d;
    let count = ((percent / 100.0 * total as f64).round() as usize).min(total);
    let mut out = data.clone();
    let sd = sigma2.sqrt();
    let x = out.x_mut();
    for idx in sample_indices(rng, total, count) {
        x[(idx % n, idx / n)] += sd * rng.sample::<f64, _>(StandardNormal);
    }
    Ok(out)
}

/// Simulates on `d + extra` nodes, then hides `extra` of them, preferring nodes with at
/// least two children so that they act as confounders. Returns the observed data and the
/// induced graph on the kept nodes.
pub fn with_hidden_confounders<R: Rng + ?Sized>(
    spec: &GraphSpec,
    sem: &SemSpec,
    extra: usize,
    rng: &mut R,
) -> Result<(Dataset, Dag)> {
    let full_spec = GraphSpec { d: spec.d + extra, ..spec.clone() };
    let g = gen_graph(&full_spec, rng)?;
    let w = gen_weights(&g, &sem.weight_range, rng);
    let data = simulate(&w, sem, rng)?;
    if extra == 0 {
        return Ok((data, g));
    }
    let total = full_spec.d;
    let mut candidates: Vec<usize> = (0..total).filter(|&v| g.children(v).len() >= 2).collect();
    let mut rest: Vec<usize> = (0..total).filter(|&v| g.children(v).len() < 2).collect();
    candidates.shuffle(rng);
    rest.shuffle(rng);
    let mut hidden: Vec<usize> = candidates.into_iter().chain(rest).take(extra).collect();
    hidden.sort_unstable();
    let keep: Vec<usize> = (0..total).filter(|v| hidden.binary_search(v).is_err()).collect();
    let sub = g.induced_subgraph(&keep);
    let mut observed = data.select_columns(&keep);
    observed.meta = Some(GenerationRecord {
        graph: Some(sub.clone()),
        weights: None,
        mechanism: Some(sem.mechanism.to_string()),
        noise: Some(sem.noise.to_string()),
        seed: None,
    });
    Ok((observed, sub))
}

/// Graph, weights and samples from a single seeded stream.
pub fn generate(graph: &GraphSpec, sem: &SemSpec) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(graph.seed);
    let g = gen_graph(graph, &mut rng)?;
    let w = gen_weights(&g, &sem.weight_range, &mut rng);
    let mut data = simulate(&w, sem, &mut rng)?;
    if let Some(meta) = data.meta.as_mut() {
        meta.seed = Some(graph.seed);
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn er_edge_count_matches_expectation() {
        let spec = GraphSpec::new(30, GraphModel::Er, 1, 0);
        assert!((spec.edge_probability() - 2.0 / 29.0).abs() < 1e-15);
        let mut r = rng(11);
        let total: usize = (0..1000).map(|_| gen_graph(&spec, &mut r).unwrap().edge_count()).sum();
        let mean = total as f64 / 1000.0;
        assert!((mean - 30.0).abs() <= 3.0, "{mean}");
    }

    #[test]
    fn saturated_er_is_complete() {
        let g = gen_graph(&GraphSpec::new(3, GraphModel::Er, 1, 0), &mut rng(2)).unwrap();
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn infeasible_in_degree() {
        assert!(gen_graph(&GraphSpec::new(3, GraphModel::Er, 2, 0), &mut rng(0)).is_err());
    }

    #[test]
    fn scale_free_is_acyclic_with_expected_size() {
        let spec = GraphSpec::new(20, GraphModel::Sf, 2, 0);
        let g = gen_graph(&spec, &mut rng(4)).unwrap();
        assert!(Dag::from_adjacency(20, g.adjacency().to_vec()).is_ok());
        // 1 + 2 * 18 edges: the second node can only attach to the first.
        assert_eq!(g.edge_count(), 37);
    }

    #[test]
    fn weight_ranges() {
        let mut r = rng(5);
        for _ in 0..10_000 {
            let w = WeightRange::wide().sample(&mut r).abs();
            assert!((2.0..=5.0).contains(&w));
            let w = WeightRange::regular().sample(&mut r).abs();
            assert!((0.5..=2.0).contains(&w));
        }
        assert!(WeightRange::new(vec![(-1.0, 1.0)]).is_err());
        assert_eq!("-2:-0.5,0.5:2".parse::<WeightRange>().unwrap(), WeightRange::regular());
    }

    #[test]
    fn empty_graph_has_zero_weights() {
        let w = gen_weights(&Dag::empty(4), &WeightRange::wide(), &mut rng(0));
        assert_eq!(w.weights().abs().max(), 0.0);
    }

    #[test]
    fn noiseless_linear_chain() {
        let mut w = DMatrix::zeros(2, 2);
        w[(0, 1)] = 2.0;
        let g = WeightedGraph::new(w).unwrap();
        let sem = SemSpec::linear(100).with_noise(Noise::Gauss(0.0));
        let ds = simulate(&g, &sem, &mut rng(0)).unwrap();
        for r in 0..100 {
            assert_eq!(ds.x()[(r, 1)], 2.0 * ds.x()[(r, 0)]);
        }
    }

    #[test]
    fn root_variance_is_noise_variance() {
        let g = WeightedGraph::zeros(3);
        let ds = simulate(&g, &SemSpec::linear(1000), &mut rng(9)).unwrap();
        for v in ds.variances() {
            assert!((v - 1.0).abs() <= 0.15, "{v}");
        }
    }

    #[test]
    fn standardize_flag() {
        let spec = GraphSpec::new(5, GraphModel::Er, 1, 3);
        let ds = generate(&spec, &SemSpec::linear(500).standardized(true)).unwrap();
        let n = ds.n() as f64;
        for j in 0..5 {
            let mean = ds.x().column(j).sum() / n;
            assert!(mean.abs() < 1e-10);
        }
        for v in ds.variances() {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn noise_families_parse_and_sample() {
        let mut r = rng(1);
        for name in ["gauss", "gauss:0.5", "exp", "gumbel", "laplace", "uniform"] {
            let noise: Noise = name.parse().unwrap();
            let draws: Vec<f64> = (0..20_000).map(|_| noise.sample(&mut r)).collect();
            let mean = draws.iter().sum::<f64>() / draws.len() as f64;
            let expected = match noise {
                Noise::Exp => 1.0,
                Noise::Gumbel => 0.577_215_664_901_532_9,
                _ => 0.0,
            };
            assert!((mean - expected).abs() < 0.05, "{name}: {mean}");
            if noise == Noise::Uniform {
                assert!(draws.iter().all(|v| v.abs() <= 1.0));
            }
        }
        assert!("cauchy".parse::<Noise>().is_err());
        assert_eq!("gauss:0.4..0.8".parse::<Noise>().unwrap(), Noise::GaussRange(0.4, 0.8));
        assert!("gauss:2..1".parse::<Noise>().is_err());
        assert_eq!(serde_json::to_string(&Noise::Gauss(0.1)).unwrap(), "\"gauss:0.1\"");
    }

    #[test]
    fn laplace_variance_is_two() {
        let mut r = rng(8);
        let draws: Vec<f64> = (0..50_000).map(|_| laplace(&mut r)).collect();
        let var = draws.iter().map(|v| v * v).sum::<f64>() / draws.len() as f64;
        assert!((var - 2.0).abs() < 0.1, "{var}");
    }

    #[test]
    fn nonlinear_mechanisms_are_finite() {
        let spec = GraphSpec::new(5, GraphModel::Er, 1, 2);
        for mech in [Mechanism::Gp, Mechanism::Mlp, Mechanism::PnlGp] {
            let ds = generate(&spec, &SemSpec::linear(200).with_mechanism(mech)).unwrap();
            assert_eq!((ds.n(), ds.d()), (200, 5));
        }
        let big = SemSpec::linear(GP_MAX_SAMPLES + 1).with_mechanism(Mechanism::Gp);
        assert!(generate(&spec, &big).is_err());
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let spec = GraphSpec::new(6, GraphModel::Sf, 1, 21);
        let a = generate(&spec, &SemSpec::linear(50)).unwrap();
        let b = generate(&spec, &SemSpec::linear(50)).unwrap();
        assert_eq!(a.x(), b.x());
    }

    #[test]
    fn corrupt_counts() {
        let spec = GraphSpec::new(30, GraphModel::Er, 1, 0);
        let ds = generate(&spec, &SemSpec::linear(1000)).unwrap();
        let same = corrupt(&ds, 0.0, 0.1, &mut rng(1)).unwrap();
        assert_eq!(same.x(), ds.x());
        let c = corrupt(&ds, 5.0, 0.1, &mut rng(1)).unwrap();
        let changed = c.x().iter().zip(ds.x().iter()).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 1500);
        let all = corrupt(&ds, 100.0, 0.1, &mut rng(2)).unwrap();
        assert!(all.x().iter().zip(ds.x().iter()).all(|(a, b)| a != b));
    }

    #[test]
    fn hidden_confounders_keep_d_columns() {
        let spec = GraphSpec::new(8, GraphModel::Er, 2, 0);
        let sem = SemSpec::linear(100);
        let (ds, g) = with_hidden_confounders(&spec, &sem, 2, &mut rng(3)).unwrap();
        assert_eq!(ds.d(), 8);
        assert_eq!(g.d(), 8);
        let (ds0, g0) = with_hidden_confounders(&spec, &sem, 0, &mut rng(3)).unwrap();
        let mut r = rng(3);
        let g_ref = gen_graph(&spec, &mut r).unwrap();
        let w_ref = gen_weights(&g_ref, &sem.weight_range, &mut r);
        let ds_ref = simulate(&w_ref, &sem, &mut r).unwrap();
        assert_eq!(g0, g_ref);
        assert_eq!(ds0.x(), ds_ref.x());
    }
}
