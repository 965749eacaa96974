//! Two-body qubit Hamiltonian
//! `H = Σ_{m<n,α,β} J_mn^{αβ} σ_m^α σ_n^β + Σ_{m,α} b_m^α σ_m^α`,
//! with all coefficients in units of the largest coupling `J = 1`.
//!
//! Bit convention, shared by every module: qubit 0 is the most significant
//! bit of a basis-state index.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Map, Value};

use crate::error::{invalid, Result, TomoError};
use crate::operator::PauliSum;
use crate::pauli::{PauliAxis, C64};

/// Largest `n_spins` for which a dense matrix is ever built.
pub const DENSE_CAP: usize = 12;

/// Key of a two-body coefficient in canonical order (`m < n`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CouplingKey {
    pub m: usize,
    pub n: usize,
    pub a: PauliAxis,
    pub b: PauliAxis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    n_spins: usize,
    couplings: BTreeMap<CouplingKey, f64>,
    fields: BTreeMap<(usize, PauliAxis), f64>,
}

impl SpinSystem {
    /// A system with every coefficient zero.
    pub fn new(n_spins: usize) -> Result<Self> {
        if n_spins == 0 {
            return Err(invalid("n_spins must be positive"));
        }
        Ok(Self {
            n_spins,
            couplings: BTreeMap::new(),
            fields: BTreeMap::new(),
        })
    }

    /// Draws every `J_mn^{αβ}` and `b_m^α` i.i.d. uniform on `[−1, 1]`.
    ///
    /// No distance decay is applied, so every pair is coupled.
    pub fn random_instance(n_spins: usize, seed: u64) -> Result<Self> {
        if n_spins < 2 {
            return Err(invalid(format!(
                "random instance needs at least 2 spins, got {n_spins}"
            )));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut sys = Self::new(n_spins)?;
        for m in 0..n_spins {
            for n in (m + 1)..n_spins {
                for a in PauliAxis::ALL {
                    for b in PauliAxis::ALL {
                        let v: f64 = rng.random_range(-1.0..=1.0);
                        sys.couplings.insert(CouplingKey { m, n, a, b }, v);
                    }
                }
            }
        }
        for m in 0..n_spins {
            for a in PauliAxis::ALL {
                let v: f64 = rng.random_range(-1.0..=1.0);
                sys.fields.insert((m, a), v);
            }
        }
        Ok(sys)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    /// Number of explicitly stored coefficients.
    pub fn n_coefficients(&self) -> usize {
        self.couplings.len() + self.fields.len()
    }

    /// `J_mn^{ab}`; for `m > n` this resolves to `J_nm^{ba}`.
    pub fn coupling(&self, m: usize, n: usize, a: PauliAxis, b: PauliAxis) -> f64 {
        let key = if m < n {
            CouplingKey { m, n, a, b }
        } else {
            CouplingKey {
                m: n,
                n: m,
                a: b,
                b: a,
            }
        };
        self.couplings.get(&key).copied().unwrap_or(0.0)
    }

    pub fn field(&self, m: usize, a: PauliAxis) -> f64 {
        self.fields.get(&(m, a)).copied().unwrap_or(0.0)
    }

    pub fn field_vector(&self, m: usize) -> [f64; 3] {
        PauliAxis::ALL.map(|a| self.field(m, a))
    }

    /// Sets `J_mn^{ab}`; `m > n` is stored as `J_nm^{ba}`.
    pub fn set_coupling(
        &mut self,
        m: usize,
        n: usize,
        a: PauliAxis,
        b: PauliAxis,
        value: f64,
    ) -> Result<()> {
        if m == n || m >= self.n_spins || n >= self.n_spins {
            return Err(invalid(format!(
                "coupling indices ({m}, {n}) invalid for {} spins",
                self.n_spins
            )));
        }
        let key = if m < n {
            CouplingKey { m, n, a, b }
        } else {
            CouplingKey {
                m: n,
                n: m,
                a: b,
                b: a,
            }
        };
        if value == 0.0 {
            self.couplings.remove(&key);
        } else {
            self.couplings.insert(key, value);
        }
        Ok(())
    }

    pub fn set_field(&mut self, m: usize, a: PauliAxis, value: f64) -> Result<()> {
        if m >= self.n_spins {
            return Err(invalid(format!(
                "field index {m} invalid for {} spins",
                self.n_spins
            )));
        }
        if value == 0.0 {
            self.fields.remove(&(m, a));
        } else {
            self.fields.insert((m, a), value);
        }
        Ok(())
    }

    pub fn couplings(&self) -> impl Iterator<Item = (CouplingKey, f64)> + '_ {
        self.couplings.iter().map(|(k, v)| (*k, *v))
    }

    pub fn fields(&self) -> impl Iterator<Item = ((usize, PauliAxis), f64)> + '_ {
        self.fields.iter().map(|(k, v)| (*k, *v))
    }

    /// Every term of the Hamiltonian as `(coefficient, [(qubit, axis), ...])`.
    pub fn terms(&self) -> Vec<(f64, Vec<(usize, PauliAxis)>)> {
        let mut out = Vec::with_capacity(self.n_coefficients());
        for (k, v) in self.couplings() {
            out.push((v, vec![(k.m, k.a), (k.n, k.b)]));
        }
        for ((m, a), v) in self.fields() {
            out.push((v, vec![(m, a)]));
        }
        out
    }

    /// Dense Hermitian matrix of the Hamiltonian.
    pub fn matrix_representation(&self) -> Result<DMatrix<C64>> {
        if self.n_spins > DENSE_CAP {
            return Err(TomoError::ResourceLimit {
                what: "dense Hamiltonian qubits",
                requested: self.n_spins,
                cap: DENSE_CAP,
            });
        }
        Ok(PauliSum::from_system(self).to_dense())
    }

    pub fn to_document(&self) -> Value {
        let couplings: Vec<Value> = self
            .couplings()
            .map(|(k, v)| json!({"m": k.m, "n": k.n, "a": k.a.as_str(), "b": k.b.as_str(), "value": v}))
            .collect();
        let fields: Vec<Value> = self
            .fields()
            .map(|((m, a), v)| json!({"m": m, "a": a.as_str(), "value": v}))
            .collect();
        json!({"n_spins": self.n_spins, "couplings": couplings, "fields": fields})
    }

    /// Parses and validates a Hamiltonian document.
    pub fn from_document(doc: &Value) -> Result<Self> {
        let obj = doc.as_object().ok_or_else(|| parse_err("$", "expected an object"))?;
        let n_spins = get_index(obj, "n_spins", "n_spins")?;
        let mut sys = Self::new(n_spins).map_err(|_| TomoError::Validation {
            key: "n_spins".into(),
            msg: "must be positive".into(),
        })?;

        if let Some(list) = obj.get("couplings") {
            let list = list
                .as_array()
                .ok_or_else(|| parse_err("couplings", "expected an array"))?;
            for (idx, entry) in list.iter().enumerate() {
                let path = format!("couplings[{idx}]");
                let e = entry
                    .as_object()
                    .ok_or_else(|| parse_err(&path, "expected an object"))?;
                let m = get_index(e, "m", &path)?;
                let n = get_index(e, "n", &path)?;
                let a = get_axis(e, "a", &path)?;
                let b = get_axis(e, "b", &path)?;
                let value = get_value(e, &path)?;
                if m >= n {
                    return Err(validation(&format!("{path}.m"), "m < n is required"));
                }
                if n >= n_spins {
                    return Err(validation(&format!("{path}.n"), "spin index out of range"));
                }
                let key = CouplingKey { m, n, a, b };
                if sys.couplings.contains_key(&key) {
                    return Err(validation(&path, "duplicate coupling entry"));
                }
                sys.couplings.insert(key, value);
            }
        }
        if let Some(list) = obj.get("fields") {
            let list = list
                .as_array()
                .ok_or_else(|| parse_err("fields", "expected an array"))?;
            for (idx, entry) in list.iter().enumerate() {
                let path = format!("fields[{idx}]");
                let e = entry
                    .as_object()
                    .ok_or_else(|| parse_err(&path, "expected an object"))?;
                let m = get_index(e, "m", &path)?;
                let a = get_axis(e, "a", &path)?;
                let value = get_value(e, &path)?;
                if m >= n_spins {
                    return Err(validation(&format!("{path}.m"), "spin index out of range"));
                }
                if sys.fields.insert((m, a), value).is_some() {
                    return Err(validation(&path, "duplicate field entry"));
                }
            }
        }
        for key in obj.keys() {
            if !matches!(key.as_str(), "n_spins" | "couplings" | "fields") {
                return Err(parse_err(key, "unknown key"));
            }
        }
        Ok(sys)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let doc: Value = serde_json::from_str(&text)?;
        Self::from_document(&doc)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_document())?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

fn parse_err(key: &str, msg: &str) -> TomoError {
    TomoError::Parse {
        key: key.to_string(),
        msg: msg.to_string(),
    }
}

fn validation(key: &str, msg: &str) -> TomoError {
    TomoError::Validation {
        key: key.to_string(),
        msg: msg.to_string(),
    }
}

fn key_path(parent: &str, key: &str) -> String {
    if parent == key {
        key.to_string()
    } else {
        format!("{parent}.{key}")
    }
}

fn get_index(obj: &Map<String, Value>, key: &str, parent: &str) -> Result<usize> {
    let path = key_path(parent, key);
    let v = obj
        .get(key)
        .ok_or_else(|| parse_err(&path, "missing key"))?;
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| parse_err(&path, "expected a non-negative integer"))
}

fn get_axis(obj: &Map<String, Value>, key: &str, parent: &str) -> Result<PauliAxis> {
    let path = key_path(parent, key);
    let v = obj
        .get(key)
        .ok_or_else(|| parse_err(&path, "missing key"))?;
    let s = v
        .as_str()
        .ok_or_else(|| parse_err(&path, "expected \"x\", \"y\" or \"z\""))?;
    s.parse()
        .map_err(|_| parse_err(&path, "expected \"x\", \"y\" or \"z\""))
}

fn get_value(obj: &Map<String, Value>, parent: &str) -> Result<f64> {
    let path = key_path(parent, "value");
    let v = obj
        .get("value")
        .ok_or_else(|| parse_err(&path, "missing key"))?
        .as_f64()
        .ok_or_else(|| parse_err(&path, "expected a number"))?;
    if !v.is_finite() || v.abs() > 1.0 {
        return Err(validation(&path, "coefficient must lie in [-1, 1]"));
    }
    Ok(v)
}
