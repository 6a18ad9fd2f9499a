use crate::cones::{ConeSpec, GrowthConstants, RandomCone};
use crate::error::{Result, VngError};
use crate::scenario_tree::{NodeId, ScenarioNode, ScenarioTree};

/// A von Neumann-Gale system on a finite tree: the filtration, one cone per
/// non-root node, and the initial state.
#[derive(Clone, Debug)]
pub struct Model {
    pub tree: ScenarioTree,
    pub cones: RandomCone,
    pub x0: Vec<f64>,
    /// Level-1 cones may be replicated below the leaves to reach longer
    /// horizons.
    pub stationary: bool,
}

impl Model {
    pub fn new(tree: ScenarioTree, cones: RandomCone, x0: Vec<f64>, stationary: bool) -> Result<Self> {
        if x0.len() != tree.dim() {
            return Err(VngError::Dimension {
                expected: tree.dim(),
                actual: x0.len(),
            });
        }
        if x0.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(VngError::InitialState("x_0 must be finite and non-negative".into()));
        }
        Ok(Self {
            tree,
            cones,
            x0,
            stationary,
        })
    }

    pub fn dim(&self) -> usize {
        self.tree.dim()
    }

    pub fn horizon(&self) -> usize {
        self.tree.horizon()
    }

    pub fn cone(&self, node: NodeId) -> &ConeSpec {
        self.cones.at(node)
    }

    /// Validates (G.1)–(G.3) and computes the growth constants.
    pub fn constants(&self, tol: f64) -> Result<GrowthConstants> {
        GrowthConstants::compute(&self.tree, &self.cones, &self.x0, tol)
    }

    /// The same model cut at horizon `n`, or extended to it when stationary.
    pub fn at_horizon(&self, n: usize) -> Result<Model> {
        if n == 0 {
            return Err(VngError::InvalidParameter("horizon must be >= 1".into()));
        }
        if n == self.horizon() {
            return Ok(self.clone());
        }
        if n > self.horizon() && !self.stationary {
            return Err(VngError::InvalidParameter(format!(
                "horizon {n} exceeds declared horizon {} of a non-stationary model",
                self.horizon()
            )));
        }

        let mut records: Vec<ScenarioNode> = Vec::new();
        let mut cones: Vec<Option<ConeSpec>> = Vec::new();
        for t in 0..=n.min(self.horizon()) {
            for &id in self.tree.level(t) {
                records.push(ScenarioNode {
                    id: self.tree.label(id).to_owned(),
                    time: t,
                    parent: self.tree.parent(id).map(|p| self.tree.label(p).to_owned()),
                    cond_prob: self.tree.cond_prob(id),
                });
                cones.push(if t == 0 { None } else { Some(self.cones.at(id).clone()) });
            }
        }

        if n > self.horizon() {
            let template: Vec<(f64, ConeSpec)> = self
                .tree
                .children(self.tree.root())
                .iter()
                .map(|&c| (self.tree.cond_prob(c), self.cones.at(c).clone()))
                .collect();
            let mut frontier: Vec<String> = self
                .tree
                .level(self.horizon())
                .iter()
                .map(|&id| self.tree.label(id).to_owned())
                .collect();
            for t in self.horizon() + 1..=n {
                let mut next = Vec::with_capacity(frontier.len() * template.len());
                for parent in &frontier {
                    for (k, (p, cone)) in template.iter().enumerate() {
                        let id = format!("{parent}.{k}");
                        records.push(ScenarioNode {
                            id: id.clone(),
                            time: t,
                            parent: Some(parent.clone()),
                            cond_prob: *p,
                        });
                        cones.push(Some(cone.clone()));
                        next.push(id);
                    }
                }
                frontier = next;
            }
        }

        let tree = ScenarioTree::build(&records, self.dim())?;
        // `build` indexes nodes in record order
        let cones = RandomCone::new(&tree, cones)?;
        Model::new(tree, cones, self.x0.clone(), self.stationary)
    }
}
