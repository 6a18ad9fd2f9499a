//! JSON model and result documents, and seeded example generators.
//!
//! Model documents list the tree nodes, one generator list per non-root node
//! and the initial state. Result documents store adapted sequences as one
//! `node id -> vector` map per level.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cones::{ConeSpec, Generator, GrowthConstants, RandomCone, Tolerances};
use crate::error::{Result, VngError};
use crate::model::Model;
use crate::paths::{DynkinDual, Multipliers, PrimalPath, RadnerDual};
use crate::scenario_tree::{AdaptedVector, ScenarioNode, ScenarioTree};
use crate::solver::certify::InfeasibilityCertificate;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "vng";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub schema_version: u32,
    pub dim: usize,
    pub horizon: usize,
    pub nodes: Vec<ScenarioNode>,
    /// Generators keyed by node id.
    pub cones: BTreeMap<String, Vec<Generator>>,
    pub x0: Vec<f64>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub stationary: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub free_disposal_closure: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, rename = "D", skip_serializing_if = "Option::is_none")]
    pub big_d: Option<f64>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// A validated model with its growth constants.
#[derive(Clone, Debug)]
pub struct LoadedModel {
    pub model: Model,
    pub constants: GrowthConstants,
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> VngError {
    VngError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses JSON into `T`, naming the offending field on failure.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(if path == "." { String::from("$") } else { path }, e.into_inner().to_string())
    })
}

impl ModelDocument {
    /// Builds the tree and cones without checking (G.1)–(G.3).
    pub fn to_model(&self) -> Result<Model> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        if self.x0.len() != self.dim {
            return Err(schema("x0", format!("expected {} entries, found {}", self.dim, self.x0.len())));
        }
        let tree = ScenarioTree::build(&self.nodes, self.dim)?;
        if tree.horizon() != self.horizon {
            return Err(schema(
                "horizon",
                format!("declared {} but the node table ends at {}", self.horizon, tree.horizon()),
            ));
        }
        for id in self.cones.keys() {
            match tree.find(id) {
                None => return Err(schema(format!("cones.{id}"), "unknown node id")),
                Some(node) if node == tree.root() => {
                    return Err(schema(format!("cones.{id}"), "the root carries no cone"))
                }
                _ => {}
            }
        }
        let mut cones = Vec::with_capacity(tree.num_nodes());
        for node in 0..tree.num_nodes() {
            if node == tree.root() {
                cones.push(None);
                continue;
            }
            let label = tree.label(node);
            let gens = self.cones.get(label).ok_or_else(|| VngError::Cone {
                node: label.to_owned(),
                message: "missing cone".into(),
            })?;
            for (k, g) in gens.iter().enumerate() {
                if g.a.len() != self.dim || g.b.len() != self.dim {
                    return Err(schema(format!("cones.{label}[{k}]"), format!("generator vectors must have {} entries", self.dim)));
                }
            }
            let mut cone = ConeSpec::new(self.dim, gens.clone()).map_err(|e| name_node(e, label))?;
            if self.free_disposal_closure {
                cone = cone.with_free_disposal().map_err(|e| name_node(e, label))?;
            }
            cones.push(Some(cone));
        }
        let cones = RandomCone::new(&tree, cones)?;
        if let Some(d) = self.delta {
            if let Some(i) = self.x0.iter().position(|x| *x < d) {
                return Err(VngError::InitialState(format!("x0[{i}] = {} is below delta = {d}", self.x0[i])));
            }
        }
        if let Some(d) = self.big_d {
            if let Some(i) = self.x0.iter().position(|x| *x > d) {
                return Err(VngError::InitialState(format!("x0[{i}] = {} exceeds D = {d}", self.x0[i])));
            }
        }
        Model::new(tree, cones, self.x0.clone(), self.stationary)
    }

    pub fn from_model(model: &Model) -> Self {
        let tree = &model.tree;
        let mut cones = BTreeMap::new();
        for node in 0..tree.num_nodes() {
            if node != tree.root() {
                cones.insert(tree.label(node).to_owned(), model.cone(node).generators().to_vec());
            }
        }
        Self {
            schema_version: SCHEMA_VERSION,
            dim: model.dim(),
            horizon: model.horizon(),
            nodes: tree.records(),
            cones,
            x0: model.x0.clone(),
            stationary: model.stationary,
            free_disposal_closure: false,
            delta: None,
            big_d: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_checked(self)
    }
}

fn name_node(e: VngError, node: &str) -> VngError {
    match e {
        VngError::Cone { message, .. } => VngError::Cone {
            node: node.to_owned(),
            message,
        },
        other => other,
    }
}

/// Parses, builds and validates a model document.
pub fn load_model_str(text: &str, tol: f64) -> Result<LoadedModel> {
    let doc: ModelDocument = parse_json(text)?;
    load_document(&doc, tol)
}

pub fn load_document(doc: &ModelDocument, tol: f64) -> Result<LoadedModel> {
    let model = doc.to_model()?;
    let constants = model.constants(tol)?;
    Ok(LoadedModel { model, constants })
}

pub fn load_model(path: &Path, tol: f64) -> Result<LoadedModel> {
    load_model_str(&fs::read_to_string(path)?, tol)
}

/// Serializes after rejecting non-finite numbers (which JSON cannot carry).
pub fn to_json_checked<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    if let Some(path) = find_null(&v, String::from("$")) {
        return Err(schema(path, "non-finite number"));
    }
    Ok(serde_json::to_string_pretty(&v)?)
}

// Non-finite floats serialize as null; optional fields are skipped instead,
// so any null marks a NaN or infinity.
fn find_null(v: &serde_json::Value, path: String) -> Option<String> {
    match v {
        serde_json::Value::Null => Some(path),
        serde_json::Value::Array(items) => items.iter().enumerate().find_map(|(i, x)| find_null(x, format!("{path}[{i}]"))),
        serde_json::Value::Object(map) => map.iter().find_map(|(k, x)| find_null(x, format!("{path}.{k}"))),
        _ => None,
    }
}

/// One level of an adapted sequence.
pub type LevelMap = BTreeMap<String, Vec<f64>>;

pub fn level_map(tree: &ScenarioTree, v: &AdaptedVector) -> LevelMap {
    tree.level(v.time())
        .iter()
        .map(|&id| (tree.label(id).to_owned(), v.at(tree, id).to_vec()))
        .collect()
}

/// Reads level `t` back, requiring exactly the ids of that level.
pub fn adapted_from_map(tree: &ScenarioTree, t: usize, map: &LevelMap, field: &str) -> Result<AdaptedVector> {
    if map.len() != tree.level_len(t) {
        return Err(schema(field, format!("expected {} nodes at time {t}, found {}", tree.level_len(t), map.len())));
    }
    let values = tree
        .level(t)
        .iter()
        .map(|&id| {
            let label = tree.label(id);
            map.get(label)
                .cloned()
                .ok_or_else(|| schema(format!("{field}.{label}"), "missing node"))
        })
        .collect::<Result<Vec<_>>>()?;
    AdaptedVector::new(t, values).map_err(|e| schema(field, e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tolerances: Tolerances,
}

impl Provenance {
    pub fn new(tolerances: Tolerances, seed: Option<u64>) -> Self {
        Self {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            seed,
            tolerances,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationRecord {
    /// `"a supporting dual"`, `"prefix-certified"` or `"not rapid"`.
    pub status: String,
    pub min_total_slack: f64,
}

pub const STATUS_SUPPORTED: &str = "a supporting dual";
pub const STATUS_PREFIX: &str = "prefix-certified";
pub const STATUS_NOT_RAPID: &str = "not rapid";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultDocument {
    pub schema_version: u32,
    pub horizon: usize,
    /// `x_0 .. x_N`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<LevelMap>>,
    /// `p_1 .. p_{N+1}`, the last entry keyed by time-`N` nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynkin: Option<Vec<LevelMap>>,
    /// `q_0 .. q_N`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radner: Option<Vec<LevelMap>>,
    /// `g_1 .. g_N`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multipliers: Option<Vec<LevelMap>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certification: Option<CertificationRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infeasibility: Option<InfeasibilityCertificate>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub residuals: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<GrowthConstants>,
    pub provenance: Provenance,
}

impl ResultDocument {
    pub fn new(horizon: usize, provenance: Provenance) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            horizon,
            path: None,
            dynkin: None,
            radner: None,
            multipliers: None,
            certification: None,
            infeasibility: None,
            residuals: BTreeMap::new(),
            constants: None,
            provenance,
        }
    }

    pub fn set_path(&mut self, tree: &ScenarioTree, x: &PrimalPath) {
        self.path = Some(x.levels().iter().map(|v| level_map(tree, v)).collect());
    }

    pub fn set_dynkin(&mut self, tree: &ScenarioTree, p: &DynkinDual) {
        self.dynkin = Some(p.levels().iter().map(|v| level_map(tree, v)).collect());
    }

    pub fn set_radner(&mut self, tree: &ScenarioTree, q: &RadnerDual) {
        self.radner = Some(q.levels().iter().map(|v| level_map(tree, v)).collect());
    }

    pub fn set_multipliers(&mut self, tree: &ScenarioTree, g: &Multipliers) {
        self.multipliers = Some(g.levels().iter().map(|v| level_map(tree, v)).collect());
    }

    fn levels(&self, field: &str, maps: &Option<Vec<LevelMap>>, expected: usize) -> Result<Vec<LevelMap>> {
        let maps = maps.as_ref().ok_or_else(|| schema(field, "missing"))?;
        if maps.len() != expected {
            return Err(schema(field, format!("expected {expected} levels, found {}", maps.len())));
        }
        Ok(maps.clone())
    }

    pub fn primal_path(&self, tree: &ScenarioTree) -> Result<PrimalPath> {
        let n = tree.horizon();
        let maps = self.levels("path", &self.path, n + 1)?;
        let levels = maps
            .iter()
            .enumerate()
            .map(|(t, m)| adapted_from_map(tree, t, m, &format!("path[{t}]")))
            .collect::<Result<Vec<_>>>()?;
        PrimalPath::new(levels)
    }

    pub fn dynkin_dual(&self, tree: &ScenarioTree) -> Result<DynkinDual> {
        let n = tree.horizon();
        let maps = self.levels("dynkin", &self.dynkin, n + 1)?;
        let levels = maps
            .iter()
            .enumerate()
            .map(|(k, m)| adapted_from_map(tree, (k + 1).min(n), m, &format!("dynkin[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        DynkinDual::new(levels)
    }

    pub fn radner_dual(&self, tree: &ScenarioTree) -> Result<RadnerDual> {
        let n = tree.horizon();
        let maps = self.levels("radner", &self.radner, n + 1)?;
        let levels = maps
            .iter()
            .enumerate()
            .map(|(t, m)| adapted_from_map(tree, t, m, &format!("radner[{t}]")))
            .collect::<Result<Vec<_>>>()?;
        RadnerDual::new(levels)
    }

    pub fn multipliers(&self, tree: &ScenarioTree) -> Result<Multipliers> {
        let n = tree.horizon();
        let maps = self.levels("multipliers", &self.multipliers, n)?;
        let levels = maps
            .iter()
            .enumerate()
            .map(|(k, m)| adapted_from_map(tree, k + 1, m, &format!("multipliers[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        Multipliers::new(levels)
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_checked(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = parse_json(text)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(schema("schema_version", format!("unsupported version {}", doc.schema_version)));
        }
        Ok(doc)
    }
}

/// Writes `result` to `path` as JSON.
pub fn save_results(result: &ResultDocument, path: &Path) -> Result<()> {
    fs::write(path, result.to_json()?)?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<ResultDocument> {
    ResultDocument::from_json(&fs::read_to_string(path)?)
}

/// Deterministic chain with every cone spanned by `(1, 2)` and `x_0 = 1`.
pub fn chain2_document(horizon: usize) -> ModelDocument {
    single_chain(horizon, vec![Generator::new(vec![1.0], vec![2.0])])
}

pub fn chain2(horizon: usize) -> Model {
    chain2_document(horizon).to_model().expect("chain model")
}

/// Deterministic chain with cones spanned by `(1, 2)` and `(1, 1)`.
pub fn two_generator_document(horizon: usize) -> ModelDocument {
    single_chain(
        horizon,
        vec![Generator::new(vec![1.0], vec![2.0]), Generator::new(vec![1.0], vec![1.0])],
    )
}

pub fn two_generator(horizon: usize) -> Model {
    two_generator_document(horizon).to_model().expect("chain model")
}

fn single_chain(horizon: usize, gens: Vec<Generator>) -> ModelDocument {
    let mut nodes = vec![ScenarioNode::new("r", 0, None, 1.0)];
    let mut cones = BTreeMap::new();
    let mut parent = String::from("r");
    for t in 1..=horizon {
        let id = format!("{parent}.0");
        nodes.push(ScenarioNode::new(id.clone(), t, Some(&parent), 1.0));
        cones.insert(id.clone(), gens.clone());
        parent = id;
    }
    ModelDocument {
        schema_version: SCHEMA_VERSION,
        dim: 1,
        horizon,
        nodes,
        cones,
        x0: vec![1.0],
        stationary: true,
        free_disposal_closure: false,
        delta: None,
        big_d: None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExampleKind {
    Neumann,
    Currency,
}

impl FromStr for ExampleKind {
    type Err = VngError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neumann" => Ok(Self::Neumann),
            "currency" => Ok(Self::Currency),
            other => Err(VngError::InvalidParameter(format!("unknown example kind `{other}`"))),
        }
    }
}

/// Parameters for [`generate_example`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExampleParams {
    pub dim: usize,
    pub horizon: usize,
    pub branching: usize,
    /// Productive generators per node (neumann).
    pub productive: usize,
    /// Range of the productivity floor `γ` (neumann).
    pub gamma: (f64, f64),
    /// Scale of the random part of outputs and inputs (neumann); zero gives
    /// `a = e`, `b = γ e` and equal branch probabilities.
    pub spread: f64,
    /// Proportional exchange cost in `[0, 1)` (currency).
    pub cost: f64,
    /// Range of per-node gross returns (currency).
    pub returns: (f64, f64),
    pub stationary: bool,
}

impl Default for ExampleParams {
    fn default() -> Self {
        Self {
            dim: 2,
            horizon: 3,
            branching: 2,
            productive: 2,
            gamma: (0.5, 1.5),
            spread: 1.0,
            cost: 0.01,
            returns: (0.9, 1.2),
            stationary: false,
        }
    }
}

impl ExampleParams {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(VngError::InvalidParameter(m.into()));
        if self.dim == 0 || self.horizon == 0 || self.branching == 0 {
            return bad("dim, horizon and branching must be positive");
        }
        if !(self.gamma.0 > 0.0 && self.gamma.0 <= self.gamma.1 && self.gamma.1.is_finite()) {
            return bad("gamma range must satisfy 0 < lo <= hi");
        }
        if !(self.spread >= 0.0 && self.spread.is_finite()) {
            return bad("spread must be non-negative");
        }
        if !(0.0..1.0).contains(&self.cost) {
            return bad("cost must lie in [0, 1)");
        }
        if !(self.returns.0 > 0.0 && self.returns.0 <= self.returns.1 && self.returns.1.is_finite()) {
            return bad("return range must satisfy 0 < lo <= hi");
        }
        Ok(())
    }
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

fn unit(n: usize, i: usize, scale: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = scale;
    v
}

/// Seeded random model whose cones satisfy (G.1)–(G.3) by construction.
pub fn generate_example(kind: ExampleKind, params: &ExampleParams, seed: u64) -> Result<ModelDocument> {
    params.validate()?;
    if kind == ExampleKind::Currency && params.dim < 2 {
        return Err(VngError::InvalidParameter("currency models need at least two assets".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.dim;
    let uniform = kind == ExampleKind::Neumann && params.spread == 0.0;

    let mut nodes = vec![ScenarioNode::new("r", 0, None, 1.0)];
    let mut frontier = vec![String::from("r")];
    let mut cones = BTreeMap::new();
    for t in 1..=params.horizon {
        let mut next = Vec::new();
        for parent in &frontier {
            let probs = branch_probs(&mut rng, params.branching, uniform);
            for (k, p) in probs.into_iter().enumerate() {
                let id = format!("{parent}.{k}");
                let gens = match kind {
                    ExampleKind::Neumann => neumann_cone(&mut rng, params),
                    ExampleKind::Currency => currency_cone(&mut rng, params),
                };
                nodes.push(ScenarioNode::new(id.clone(), t, Some(parent), p));
                cones.insert(id.clone(), gens);
                next.push(id);
            }
        }
        frontier = next;
    }
    let x0 = if uniform {
        vec![1.0; n]
    } else {
        (0..n).map(|_| rng.gen_range(0.5..1.5)).collect()
    };
    Ok(ModelDocument {
        schema_version: SCHEMA_VERSION,
        dim: n,
        horizon: params.horizon,
        nodes,
        cones,
        x0,
        stationary: params.stationary,
        free_disposal_closure: false,
        delta: None,
        big_d: None,
    })
}

fn branch_probs(rng: &mut ChaCha8Rng, m: usize, uniform: bool) -> Vec<f64> {
    if m == 1 {
        return vec![1.0];
    }
    let raw: Vec<f64> = if uniform {
        vec![1.0; m]
    } else {
        (0..m).map(|_| rng.gen_range(0.2..1.0)).collect()
    };
    let total: f64 = raw.iter().sum();
    let mut probs: Vec<f64> = raw[..m - 1].iter().map(|r| r / total).collect();
    let head: f64 = probs.iter().sum();
    probs.push(1.0 - head);
    probs
}

fn neumann_cone(rng: &mut ChaCha8Rng, params: &ExampleParams) -> Vec<Generator> {
    let n = params.dim;
    let mut gens: Vec<Generator> = (0..n).map(|i| Generator::new(unit(n, i, 1.0), vec![0.0; n])).collect();
    for _ in 0..params.productive.max(1) {
        let gamma = draw(rng, params.gamma);
        let (a, b) = if params.spread == 0.0 {
            (vec![1.0; n], vec![gamma; n])
        } else {
            let a = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
            let b = (0..n).map(|_| gamma + params.spread * rng.gen::<f64>()).collect();
            (a, b)
        };
        gens.push(Generator::new(a, b));
    }
    gens
}

/// Holding asset `i` returns `R_i`; exchanging one unit of `i` for `j`
/// delivers `(1 - c) R_j` units of `j`.
fn currency_cone(rng: &mut ChaCha8Rng, params: &ExampleParams) -> Vec<Generator> {
    let n = params.dim;
    let r: Vec<f64> = (0..n).map(|_| draw(rng, params.returns)).collect();
    let mut gens = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let scale = if i == j { r[j] } else { (1.0 - params.cost) * r[j] };
            gens.push(Generator::new(unit(n, i, 1.0), unit(n, j, scale)));
        }
    }
    gens
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain2_loads_with_constants() {
        let text = chain2_document(3).to_json().unwrap();
        let loaded = load_model_str(&text, 1e-9).unwrap();
        assert_eq!(loaded.constants.gamma(1), 2.0);
        assert_eq!(loaded.constants.m(1), 2.0);
    }

    #[test]
    fn missing_cone_names_node() {
        let mut doc = chain2_document(2);
        doc.cones.remove("r.0.0");
        let err = load_document(&doc, 1e-9).unwrap_err();
        assert!(err.to_string().contains("r.0.0"), "{err}");
    }

    #[test]
    fn g3_violation_is_named() {
        let mut doc = chain2_document(2);
        doc.dim = 2;
        doc.x0 = vec![1.0, 1.0];
        for gens in doc.cones.values_mut() {
            *gens = vec![
                Generator::new(vec![1.0, 0.0], vec![1.0, 0.0]),
                Generator::new(vec![0.0, 1.0], vec![1.0, 0.0]),
            ];
        }
        let err = load_document(&doc, 1e-9).unwrap_err();
        assert!(err.to_string().starts_with("G3-violation at node"), "{err}");
    }

    #[test]
    fn schema_errors_carry_paths() {
        let text = chain2_document(1).to_json().unwrap().replace("\"cond_prob\": 1.0", "\"cond_prob\": \"one\"");
        let err = load_model_str(&text, 1e-9).unwrap_err();
        assert!(err.to_string().contains("nodes[0].cond_prob"), "{err}");
        let err = load_model_str("{\"schema_version\": 1, \"bogus\": 2}", 1e-9).unwrap_err();
        assert!(matches!(err, VngError::Schema { .. }));
    }

    #[test]
    fn declared_bounds_on_x0() {
        let mut doc = chain2_document(1);
        doc.delta = Some(2.0);
        assert!(matches!(doc.to_model(), Err(VngError::InitialState(_))));
        doc.delta = Some(0.5);
        doc.big_d = Some(1.0);
        assert!(doc.to_model().is_ok());
    }

    #[test]
    fn generator_is_deterministic() {
        let p = ExampleParams::default();
        let a = generate_example(ExampleKind::Neumann, &p, 7).unwrap().to_json().unwrap();
        let b = generate_example(ExampleKind::Neumann, &p, 7).unwrap().to_json().unwrap();
        let c = generate_example(ExampleKind::Neumann, &p, 8).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn degenerate_neumann_is_chain_like() {
        let p = ExampleParams {
            dim: 1,
            horizon: 2,
            branching: 1,
            productive: 1,
            gamma: (2.0, 2.0),
            spread: 0.0,
            ..ExampleParams::default()
        };
        let doc = generate_example(ExampleKind::Neumann, &p, 0).unwrap();
        let loaded = load_document(&doc, 1e-9).unwrap();
        assert_eq!(loaded.constants.m(1), 2.0);
        assert_eq!(doc.cones["r.0"], vec![Generator::new(vec![1.0], vec![0.0]), Generator::new(vec![1.0], vec![2.0])]);
    }

    #[test]
    fn zero_cost_currency_conserves_value() {
        let p = ExampleParams {
            dim: 2,
            cost: 0.0,
            returns: (1.0, 1.0),
            ..ExampleParams::default()
        };
        let loaded = load_document(&generate_example(ExampleKind::Currency, &p, 3).unwrap(), 1e-9).unwrap();
        for t in 1..=p.horizon {
            assert_eq!(loaded.constants.m(t), 1.0);
        }
    }

    #[test]
    fn generated_models_validate() {
        for seed in 0..20 {
            let p = ExampleParams {
                dim: 1 + (seed as usize % 3),
                horizon: 1 + (seed as usize % 4),
                ..ExampleParams::default()
            };
            load_document(&generate_example(ExampleKind::Neumann, &p, seed).unwrap(), 1e-9).unwrap();
            let q = ExampleParams { dim: 2 + (seed as usize % 2), ..p };
            load_document(&generate_example(ExampleKind::Currency, &q, seed).unwrap(), 1e-9).unwrap();
        }
    }

    #[test]
    fn bad_params_are_rejected() {
        let p = ExampleParams {
            cost: 1.0,
            ..ExampleParams::default()
        };
        assert!(generate_example(ExampleKind::Currency, &p, 0).is_err());
        assert!("bogus".parse::<ExampleKind>().is_err());
    }

    #[test]
    fn result_round_trip_and_nan() {
        let m = chain2(2);
        let mut doc = ResultDocument::new(2, Provenance::new(Tolerances::default(), Some(3)));
        let x = PrimalPath::new(
            (0..=2)
                .map(|t| AdaptedVector::constant(&m.tree, t, &[0.1 * 3f64.powi(t as i32)]))
                .collect(),
        )
        .unwrap();
        doc.set_path(&m.tree, &x);
        let back = ResultDocument::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.primal_path(&m.tree).unwrap(), x);
        assert!(!doc.to_json().unwrap().contains("dynkin"));

        doc.residuals.insert("bad".into(), f64::NAN);
        let err = doc.to_json().unwrap_err();
        assert!(err.to_string().contains("residuals.bad"), "{err}");
    }
}
