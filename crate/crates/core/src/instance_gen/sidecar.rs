//! Instance directories: `dataset.txt` plus an `instance.json` sidecar.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GapssInstance, HudeInstance, UrdeInstance};
use crate::dataset::Dataset;
use crate::distributions::QueryMultiset;
use crate::{Error, Result};

pub const DATASET_FILE: &str = "dataset.txt";
pub const SIDECAR_FILE: &str = "instance.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Hude,
    Urde,
    Gapss,
}

impl std::str::FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hude" => Ok(Problem::Hude),
            "urde" => Ok(Problem::Urde),
            "gapss" => Ok(Problem::Gapss),
            _ => Err(Error::domain(format!(
                "unknown problem {s:?} (expected hude, urde or gapss)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSidecar {
    pub version: String,
    pub problem: Problem,
    pub n: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub s: f64,
    pub seed: u64,
    pub truth_index: usize,
    /// `[element, multiplicity]` pairs, sorted by element.
    pub query: Vec<(u32, u32)>,
    /// The sample stream in draw order.
    pub draws: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_mean: Option<f64>,
}

impl InstanceSidecar {
    fn base(
        problem: Problem,
        data: &Dataset,
        s: f64,
        seed: u64,
        truth: usize,
        q: &QueryMultiset,
    ) -> Self {
        InstanceSidecar {
            version: crate::VERSION.to_string(),
            problem,
            n: data.domain(),
            k: data.len(),
            w_u: None,
            w_q: None,
            epsilon: None,
            s,
            seed,
            truth_index: truth,
            query: q.counts().iter().map(|(&e, &c)| (e, c)).collect(),
            draws: q.draws().to_vec(),
            query_mean: None,
        }
    }

    pub fn from_hude(inst: &HudeInstance) -> Self {
        let mut sc = Self::base(
            Problem::Hude,
            &inst.dataset,
            inst.s,
            inst.seed,
            inst.truth_index,
            &inst.query,
        );
        sc.epsilon = Some(inst.epsilon);
        sc
    }

    pub fn from_urde(inst: &UrdeInstance) -> Self {
        let mut sc = Self::base(
            Problem::Urde,
            &inst.dataset,
            inst.s,
            inst.seed,
            inst.truth_index,
            &inst.query,
        );
        sc.w_u = Some(inst.w_u);
        sc.query_mean = Some(inst.query_mean);
        sc
    }

    /// GapSS queries are sets; each coordinate appears once. `s` is the
    /// sample rate the instance reduces to.
    pub fn from_gapss(inst: &GapssInstance) -> Self {
        let q = QueryMultiset::from_draws(inst.dataset.domain(), inst.query.to_vec())
            .expect("query lies in the domain");
        let s = super::reduction_s(inst.w_u, inst.w_q);
        let mut sc = Self::base(
            Problem::Gapss,
            &inst.dataset,
            s,
            inst.seed,
            inst.truth_index,
            &q,
        );
        sc.w_u = Some(inst.w_u);
        sc.w_q = Some(inst.w_q);
        sc
    }

    /// Rebuilds the query, checking the draw stream against the counts.
    pub fn query_multiset(&self) -> Result<QueryMultiset> {
        let q = QueryMultiset::from_draws(self.n, self.draws.clone())?;
        let counts: Vec<(u32, u32)> = q.counts().iter().map(|(&e, &c)| (e, c)).collect();
        if counts != self.query {
            return Err(Error::domain(
                "sidecar `query` counts disagree with `draws`",
            ));
        }
        Ok(q)
    }

    pub fn metadata_lines(&self) -> Vec<String> {
        let mut v = vec![
            format!("hude {} {:?} instance", self.version, self.problem).to_lowercase(),
            format!("n={} k={} s={} seed={}", self.n, self.k, self.s, self.seed),
        ];
        if let Some(w) = self.w_u {
            v.push(format!("w_u={w}"));
        }
        if let Some(w) = self.w_q {
            v.push(format!("w_q={w}"));
        }
        if let Some(e) = self.epsilon {
            v.push(format!("epsilon={e}"));
        }
        v
    }
}

pub fn write_instance(dir: &Path, data: &Dataset, sidecar: &InstanceSidecar) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    data.write_file(&dir.join(DATASET_FILE), &sidecar.metadata_lines())?;
    let path = dir.join(SIDECAR_FILE);
    let mut json = serde_json::to_string_pretty(sidecar).map_err(|e| Error::Json {
        path: path.clone(),
        source: e,
    })?;
    json.push('\n');
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

pub fn load_instance(dir: &Path) -> Result<(Dataset, InstanceSidecar)> {
    let data = Dataset::read_file(&dir.join(DATASET_FILE))?;
    let path = dir.join(SIDECAR_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let sc: InstanceSidecar = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.clone(),
        source: e,
    })?;
    if sc.n != data.domain() || sc.k != data.len() {
        return Err(Error::domain(format!(
            "{}: sidecar says n={} k={}, dataset has n={} k={}",
            path.display(),
            sc.n,
            sc.k,
            data.domain(),
            data.len()
        )));
    }
    if sc.truth_index >= sc.k {
        return Err(Error::domain(format!(
            "truth index {} >= k = {}",
            sc.truth_index, sc.k
        )));
    }
    Ok((data, sc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance_gen::{gen_gapss, gen_hude, gen_urde};

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let inst = gen_hude(20, 6, 0.2, 4.0, 5).unwrap();
        let sc = InstanceSidecar::from_hude(&inst);
        write_instance(dir.path(), &inst.dataset, &sc).unwrap();
        let (data, back) = load_instance(dir.path()).unwrap();
        assert_eq!(data, inst.dataset);
        assert_eq!(back, sc);
        assert_eq!(back.query_multiset().unwrap(), inst.query);
    }

    #[test]
    fn json_fields() {
        let u = gen_urde(30, 3, 0.5, 3.0, 1).unwrap();
        let json = serde_json::to_value(InstanceSidecar::from_urde(&u)).unwrap();
        assert_eq!(json["problem"], "urde");
        assert_eq!(json["w_u"], 0.5);
        assert!(json.get("epsilon").is_none());
        let g = gen_gapss(30, 3, 0.5, 0.1, 1).unwrap();
        let sc = InstanceSidecar::from_gapss(&g);
        assert!(sc.query.iter().all(|&(_, c)| c == 1));
        assert_eq!(sc.query_multiset().unwrap().distinct(), &g.query);
    }

    #[test]
    fn inconsistent_sidecar_is_rejected() {
        let inst = gen_hude(20, 6, 0.2, 4.0, 5).unwrap();
        let mut sc = InstanceSidecar::from_hude(&inst);
        sc.draws.push(0);
        sc.draws.push(0);
        sc.draws.push(0);
        assert!(sc.query_multiset().is_err());
    }
}
