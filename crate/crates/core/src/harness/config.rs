//! INI run configuration: sections, defaults, validation and the effective-config echo.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use ini::Ini;
use serde::{Deserialize, Serialize};

use crate::coupling::{CouplingConfig, CouplingMode};
use crate::error::{Error, Result};
use crate::flow::{BottomCondition, FlowConfig};
use crate::heat::HeatConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSection {
    pub dim: usize,
    /// Lengths of the bottom along x (and y in 3-D).
    pub length: [f64; 2],
    /// `constant`, `affine` or `sampled`.
    pub height_kind: String,
    pub height_base: f64,
    pub height_slope: [f64; 2],
    pub height_samples: Vec<f64>,
    pub height_nx: usize,
    pub height_ny: usize,
    /// Subdivisions along x, (y,) and the vertical.
    pub resolution: Vec<usize>,
    pub cell_degree: usize,
    pub facet_degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RheologySection {
    /// `constant`, `carreau`, `bingham` or `power`.
    pub kind: String,
    pub mu_inf: f64,
    pub eta0: f64,
    pub lambda_c: f64,
    pub r_exp: f64,
    pub beta: f64,
    pub tau_y: f64,
    pub eps: f64,
    pub mu0: f64,
    pub mu1: f64,
    /// Declared shear monotonicity; empty means derived from the parameters.
    pub monotone_in_s: String,
    /// Declared temperature Lipschitz constant; negative means derived.
    pub c_mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductivitySection {
    /// `constant` or `affine`.
    pub kind: String,
    pub k: f64,
    pub grad: [f64; 3],
    pub k0: f64,
    pub k1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSection {
    /// `zero`, `constant` or `tanh`.
    pub kind: String,
    pub value: f64,
    pub r0: f64,
    pub a: f64,
    pub t_ref: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrictionSection {
    pub k: f64,
    /// Per-bottom-facet thresholds; overrides `k` when present.
    pub k_per_facet: Vec<f64>,
    pub s: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcsSection {
    /// `couette_poiseuille` or `zero`.
    pub lateral: String,
    /// Volume flux per unit width of the lateral profile.
    pub flux: f64,
    pub theta_omega: f64,
    pub theta_omega_per_facet: Vec<f64>,
    pub force: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSection {
    pub cfg: CouplingConfig,
    /// `zero` or `random`.
    pub theta0: String,
    pub theta0_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    pub dir: String,
    pub vtk: bool,
    pub csv: bool,
    pub json: bool,
    pub seed: u64,
    /// Random fields in the sampled `L⁴` embedding estimate.
    pub constant_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub domain: DomainSection,
    pub rheology: RheologySection,
    pub conductivity: ConductivitySection,
    pub source: SourceSection,
    pub friction: FrictionSection,
    pub bcs: BcsSection,
    pub flow: FlowConfig,
    pub heat: HeatConfig,
    pub coupling: CouplingSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: DomainSection {
                dim: 2,
                length: [2.0, 1.0],
                height_kind: "affine".into(),
                height_base: 1.0,
                height_slope: [0.25, 0.0],
                height_samples: Vec::new(),
                height_nx: 0,
                height_ny: 0,
                resolution: vec![16, 8],
                cell_degree: crate::fem::DEFAULT_CELL_DEGREE,
                facet_degree: crate::fem::DEFAULT_FACET_DEGREE,
            },
            rheology: RheologySection {
                kind: "carreau".into(),
                mu_inf: 1.0,
                eta0: 2.0,
                lambda_c: 1.0,
                r_exp: 2.5,
                beta: 0.3,
                tau_y: 0.0,
                eps: 1e-4,
                mu0: 0.5,
                mu1: 20.0,
                monotone_in_s: String::new(),
                c_mu: -1.0,
            },
            conductivity: ConductivitySection {
                kind: "constant".into(),
                k: 1.0,
                grad: [0.0; 3],
                k0: 1.0,
                k1: 1.0,
            },
            source: SourceSection {
                kind: "tanh".into(),
                value: 0.0,
                r0: 0.5,
                a: 0.5,
                t_ref: 1.0,
            },
            friction: FrictionSection {
                k: 0.5,
                k_per_facet: Vec::new(),
                s: [1.0, 0.0],
            },
            bcs: BcsSection {
                lateral: "couette_poiseuille".into(),
                flux: 0.8,
                theta_omega: 1.0,
                theta_omega_per_facet: Vec::new(),
                force: [0.5, -1.0, 0.0],
            },
            flow: FlowConfig::default(),
            heat: HeatConfig::default(),
            coupling: CouplingSection {
                cfg: CouplingConfig::default(),
                theta0: "zero".into(),
                theta0_amplitude: 1.0,
            },
            output: OutputSection {
                dir: "thermoslip-out".into(),
                vtk: true,
                csv: true,
                json: true,
                seed: 42,
                constant_samples: 1000,
            },
        }
    }
}

/// Keys that must appear in every file.
const REQUIRED: &[(&str, &str)] = &[("domain", "dim"), ("rheology", "kind")];

struct Reader {
    values: BTreeMap<(String, String), String>,
    used: std::collections::BTreeSet<(String, String)>,
    errors: Vec<String>,
}

impl Reader {
    fn raw(&mut self, sec: &str, key: &str) -> Option<String> {
        let k = (sec.to_string(), key.to_string());
        let v = self.values.get(&k).cloned();
        if v.is_some() {
            self.used.insert(k);
        }
        v
    }

    fn get<T: FromStr>(&mut self, sec: &str, key: &str, slot: &mut T) {
        if let Some(v) = self.raw(sec, key) {
            match v.trim().parse::<T>() {
                Ok(x) => *slot = x,
                Err(_) => self.errors.push(format!("[{sec}] {key}: cannot parse '{v}'")),
            }
        }
    }

    fn list<T: FromStr>(&mut self, sec: &str, key: &str, slot: &mut Vec<T>) {
        if let Some(v) = self.raw(sec, key) {
            let parsed: std::result::Result<Vec<T>, _> =
                v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse::<T>).collect();
            match parsed {
                Ok(x) => *slot = x,
                Err(_) => self.errors.push(format!("[{sec}] {key}: cannot parse list '{v}'")),
            }
        }
    }

    fn string(&mut self, sec: &str, key: &str, slot: &mut String, allowed: &[&str]) {
        if let Some(v) = self.raw(sec, key) {
            let v = v.trim().to_string();
            if allowed.is_empty() || allowed.contains(&v.as_str()) {
                *slot = v;
            } else {
                self.errors.push(format!("[{sec}] {key}: '{v}' is not one of {}", allowed.join(", ")));
            }
        }
    }
}

const SECTIONS: &[&str] = &[
    "domain",
    "rheology",
    "conductivity",
    "source",
    "friction",
    "bcs",
    "flow",
    "heat",
    "coupling",
    "output",
];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parse and validate; every problem found is reported, not just the first.
    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(vec![format!("syntax: {e}")]))?;
        let mut errors = Vec::new();
        let mut values = BTreeMap::new();
        for (sec, props) in ini.iter() {
            let Some(sec) = sec else {
                if props.iter().next().is_some() {
                    errors.push("keys outside any section".to_string());
                }
                continue;
            };
            if !SECTIONS.contains(&sec) {
                errors.push(format!("unknown section [{sec}]"));
                continue;
            }
            for (k, v) in props.iter() {
                if props.get_all(k).count() > 1 {
                    errors.push(format!("[{sec}] {k}: given more than once"));
                }
                values.insert((sec.to_string(), k.to_string()), v.to_string());
            }
        }
        for (s, k) in REQUIRED {
            if !values.contains_key(&(s.to_string(), k.to_string())) {
                errors.push(format!("[{s}] {k}: required key missing"));
            }
        }
        let mut r = Reader {
            values,
            used: Default::default(),
            errors,
        };
        let mut c = RunConfig::default();

        let d = &mut c.domain;
        r.get("domain", "dim", &mut d.dim);
        r.get("domain", "length_x", &mut d.length[0]);
        r.get("domain", "length_y", &mut d.length[1]);
        r.string("domain", "height_kind", &mut d.height_kind, &["constant", "affine", "sampled"]);
        r.get("domain", "height_base", &mut d.height_base);
        r.get("domain", "height_slope_x", &mut d.height_slope[0]);
        r.get("domain", "height_slope_y", &mut d.height_slope[1]);
        r.list("domain", "height_samples", &mut d.height_samples);
        r.get("domain", "height_nx", &mut d.height_nx);
        r.get("domain", "height_ny", &mut d.height_ny);
        r.list("domain", "resolution", &mut d.resolution);
        r.get("domain", "cell_degree", &mut d.cell_degree);
        r.get("domain", "facet_degree", &mut d.facet_degree);

        let m = &mut c.rheology;
        r.string("rheology", "kind", &mut m.kind, &["constant", "carreau", "bingham", "power"]);
        r.get("rheology", "mu_inf", &mut m.mu_inf);
        r.get("rheology", "eta0", &mut m.eta0);
        r.get("rheology", "lambda_c", &mut m.lambda_c);
        r.get("rheology", "r_exp", &mut m.r_exp);
        r.get("rheology", "beta", &mut m.beta);
        r.get("rheology", "tau_y", &mut m.tau_y);
        r.get("rheology", "eps", &mut m.eps);
        r.get("rheology", "mu0", &mut m.mu0);
        r.get("rheology", "mu1", &mut m.mu1);
        r.string("rheology", "monotone_in_s", &mut m.monotone_in_s, &["", "nondecreasing", "nonincreasing"]);
        r.get("rheology", "c_mu", &mut m.c_mu);

        let k = &mut c.conductivity;
        r.string("conductivity", "kind", &mut k.kind, &["constant", "affine"]);
        r.get("conductivity", "k", &mut k.k);
        r.get("conductivity", "grad_x", &mut k.grad[0]);
        r.get("conductivity", "grad_y", &mut k.grad[1]);
        r.get("conductivity", "grad_z", &mut k.grad[2]);
        r.get("conductivity", "k0", &mut k.k0);
        r.get("conductivity", "k1", &mut k.k1);

        let s = &mut c.source;
        r.string("source", "kind", &mut s.kind, &["zero", "constant", "tanh"]);
        r.get("source", "value", &mut s.value);
        r.get("source", "r0", &mut s.r0);
        r.get("source", "a", &mut s.a);
        r.get("source", "t_ref", &mut s.t_ref);

        let f = &mut c.friction;
        r.get("friction", "k", &mut f.k);
        r.list("friction", "k_per_facet", &mut f.k_per_facet);
        r.get("friction", "s_x", &mut f.s[0]);
        r.get("friction", "s_y", &mut f.s[1]);

        let b = &mut c.bcs;
        r.string("bcs", "lateral", &mut b.lateral, &["couette_poiseuille", "zero"]);
        r.get("bcs", "flux", &mut b.flux);
        r.get("bcs", "theta_omega", &mut b.theta_omega);
        r.list("bcs", "theta_omega_per_facet", &mut b.theta_omega_per_facet);
        r.get("bcs", "force_x", &mut b.force[0]);
        r.get("bcs", "force_y", &mut b.force[1]);
        r.get("bcs", "force_z", &mut b.force[2]);

        let fl = &mut c.flow;
        r.get("flow", "tol_picard", &mut fl.tol_picard);
        r.get("flow", "max_picard", &mut fl.max_picard);
        r.get("flow", "max_uzawa", &mut fl.max_uzawa);
        r.get("flow", "comp_tol_factor", &mut fl.comp_tol_factor);
        r.get("flow", "rho_factor", &mut fl.rho_factor);
        r.get("flow", "picard_relax", &mut fl.picard_relax);
        r.get("flow", "p_exponent", &mut fl.p_exponent);
        r.get("flow", "power_iters", &mut fl.power_iters);
        let mut bottom = "friction".to_string();
        r.string("flow", "bottom", &mut bottom, &["friction", "stick"]);
        fl.bottom = if bottom == "stick" {
            BottomCondition::Stick
        } else {
            BottomCondition::Friction
        };

        let h = &mut c.heat;
        r.get("heat", "artificial_diffusion", &mut h.artificial_diffusion);
        r.get("heat", "coercivity_probes", &mut h.coercivity_probes);

        let cp = &mut c.coupling;
        let mut mode = cp.cfg.mode.name().to_string();
        r.string("coupling", "mode", &mut mode, &["gauss_seidel", "paper_nested"]);
        cp.cfg.mode = if mode == "paper_nested" {
            CouplingMode::PaperNested
        } else {
            CouplingMode::GaussSeidel
        };
        r.get("coupling", "damping", &mut cp.cfg.damping);
        r.get("coupling", "auto_damping_after", &mut cp.cfg.auto_damping_after);
        r.get("coupling", "tol_outer", &mut cp.cfg.tol_outer);
        r.get("coupling", "max_outer", &mut cp.cfg.max_outer);
        r.get("coupling", "tol_inner", &mut cp.cfg.tol_inner);
        r.get("coupling", "max_inner", &mut cp.cfg.max_inner);
        r.get("coupling", "p_exponent", &mut cp.cfg.p_exponent);
        r.string("coupling", "theta0", &mut cp.theta0, &["zero", "random"]);
        r.get("coupling", "theta0_amplitude", &mut cp.theta0_amplitude);

        let o = &mut c.output;
        r.string("output", "dir", &mut o.dir, &[]);
        r.get("output", "vtk", &mut o.vtk);
        r.get("output", "csv", &mut o.csv);
        r.get("output", "json", &mut o.json);
        r.get("output", "seed", &mut o.seed);
        r.get("output", "constant_samples", &mut o.constant_samples);

        let unused: Vec<String> = r
            .values
            .keys()
            .filter(|k| !r.used.contains(*k))
            .map(|(s, k)| format!("[{s}] {k}: unknown key"))
            .collect();
        r.errors.extend(unused);
        r.errors.extend(c.violations());
        if r.errors.is_empty() {
            Ok(c)
        } else {
            Err(Error::Config(r.errors))
        }
    }

    /// Physical and numerical bounds, all collected.
    pub fn violations(&self) -> Vec<String> {
        let mut e = Vec::new();
        let d = &self.domain;
        if d.dim != 2 && d.dim != 3 {
            e.push(format!("[domain] dim must be 2 or 3, got {}", d.dim));
        } else if d.resolution.len() != d.dim {
            e.push(format!("[domain] resolution needs {} entries, got {}", d.dim, d.resolution.len()));
        }
        if d.resolution.contains(&0) {
            e.push("[domain] resolution entries must be at least 1".into());
        }
        for i in 0..d.dim.saturating_sub(1).min(2) {
            if !(d.length[i] > 0.0) {
                e.push(format!("[domain] length must be positive, got {}", d.length[i]));
            }
        }
        if d.height_kind == "sampled" && d.height_samples.len() != d.height_nx.max(1) * d.height_ny.max(1) {
            e.push("[domain] height_samples must hold height_nx × height_ny values".into());
        }
        let m = &self.rheology;
        if !(m.mu0 > 0.0) {
            e.push(format!("[rheology] mu0 must be positive (lower viscosity bound), got {}", m.mu0));
        }
        if !(m.mu1 >= m.mu0) {
            e.push(format!("[rheology] mu1 must be at least mu0, got {} < {}", m.mu1, m.mu0));
        }
        let k = &self.conductivity;
        if !(k.k0 > 0.0) {
            e.push(format!("[conductivity] k0 must be positive, got {}", k.k0));
        }
        if !(k.k1 >= k.k0) {
            e.push(format!("[conductivity] k1 must be at least k0, got {} < {}", k.k1, k.k0));
        }
        let f = &self.friction;
        if !(f.k >= 0.0) || f.k_per_facet.iter().any(|&x| !(x >= 0.0)) {
            e.push("[friction] friction threshold k must be nonnegative".into());
        }
        if self.source.kind == "tanh" && !(self.source.t_ref > 0.0) {
            e.push("[source] t_ref must be positive".into());
        }
        if !(self.flow.p_exponent >= 4.0) {
            e.push(format!(
                "[flow] p_exponent must be at least 4 for the heat estimates, got {}",
                self.flow.p_exponent
            ));
        }
        if let Err(Error::Config(v)) = self.flow.validate() {
            e.extend(v.into_iter().map(|s| format!("[flow] {s}")));
        }
        if let Err(Error::Config(v)) = self.heat.validate() {
            e.extend(v.into_iter().map(|s| format!("[heat] {s}")));
        }
        if let Err(Error::Config(v)) = self.coupling.cfg.validate() {
            e.extend(v.into_iter().map(|s| format!("[coupling] {s}")));
        }
        e
    }

    /// Effective configuration as INI text, every key spelled out.
    pub fn to_ini(&self) -> String {
        let mut ini = Ini::new();
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let d = &self.domain;
        ini.with_section(Some("domain"))
            .set("dim", d.dim.to_string())
            .set("length_x", d.length[0].to_string())
            .set("length_y", d.length[1].to_string())
            .set("height_kind", d.height_kind.clone())
            .set("height_base", d.height_base.to_string())
            .set("height_slope_x", d.height_slope[0].to_string())
            .set("height_slope_y", d.height_slope[1].to_string())
            .set("height_samples", list(&d.height_samples))
            .set("height_nx", d.height_nx.to_string())
            .set("height_ny", d.height_ny.to_string())
            .set(
                "resolution",
                d.resolution.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "),
            )
            .set("cell_degree", d.cell_degree.to_string())
            .set("facet_degree", d.facet_degree.to_string());
        let m = &self.rheology;
        ini.with_section(Some("rheology"))
            .set("kind", m.kind.clone())
            .set("mu_inf", m.mu_inf.to_string())
            .set("eta0", m.eta0.to_string())
            .set("lambda_c", m.lambda_c.to_string())
            .set("r_exp", m.r_exp.to_string())
            .set("beta", m.beta.to_string())
            .set("tau_y", m.tau_y.to_string())
            .set("eps", m.eps.to_string())
            .set("mu0", m.mu0.to_string())
            .set("mu1", m.mu1.to_string())
            .set("monotone_in_s", m.monotone_in_s.clone())
            .set("c_mu", m.c_mu.to_string());
        let k = &self.conductivity;
        ini.with_section(Some("conductivity"))
            .set("kind", k.kind.clone())
            .set("k", k.k.to_string())
            .set("grad_x", k.grad[0].to_string())
            .set("grad_y", k.grad[1].to_string())
            .set("grad_z", k.grad[2].to_string())
            .set("k0", k.k0.to_string())
            .set("k1", k.k1.to_string());
        let s = &self.source;
        ini.with_section(Some("source"))
            .set("kind", s.kind.clone())
            .set("value", s.value.to_string())
            .set("r0", s.r0.to_string())
            .set("a", s.a.to_string())
            .set("t_ref", s.t_ref.to_string());
        let f = &self.friction;
        ini.with_section(Some("friction"))
            .set("k", f.k.to_string())
            .set("k_per_facet", list(&f.k_per_facet))
            .set("s_x", f.s[0].to_string())
            .set("s_y", f.s[1].to_string());
        let b = &self.bcs;
        ini.with_section(Some("bcs"))
            .set("lateral", b.lateral.clone())
            .set("flux", b.flux.to_string())
            .set("theta_omega", b.theta_omega.to_string())
            .set("theta_omega_per_facet", list(&b.theta_omega_per_facet))
            .set("force_x", b.force[0].to_string())
            .set("force_y", b.force[1].to_string())
            .set("force_z", b.force[2].to_string());
        let fl = &self.flow;
        ini.with_section(Some("flow"))
            .set("tol_picard", fl.tol_picard.to_string())
            .set("max_picard", fl.max_picard.to_string())
            .set("max_uzawa", fl.max_uzawa.to_string())
            .set("comp_tol_factor", fl.comp_tol_factor.to_string())
            .set("rho_factor", fl.rho_factor.to_string())
            .set("picard_relax", fl.picard_relax.to_string())
            .set("p_exponent", fl.p_exponent.to_string())
            .set("power_iters", fl.power_iters.to_string())
            .set(
                "bottom",
                match fl.bottom {
                    BottomCondition::Friction => "friction",
                    BottomCondition::Stick => "stick",
                },
            );
        ini.with_section(Some("heat"))
            .set("artificial_diffusion", self.heat.artificial_diffusion.to_string())
            .set("coercivity_probes", self.heat.coercivity_probes.to_string());
        let cp = &self.coupling;
        ini.with_section(Some("coupling"))
            .set("mode", cp.cfg.mode.name())
            .set("damping", cp.cfg.damping.to_string())
            .set("auto_damping_after", cp.cfg.auto_damping_after.to_string())
            .set("tol_outer", cp.cfg.tol_outer.to_string())
            .set("max_outer", cp.cfg.max_outer.to_string())
            .set("tol_inner", cp.cfg.tol_inner.to_string())
            .set("max_inner", cp.cfg.max_inner.to_string())
            .set("p_exponent", cp.cfg.p_exponent.to_string())
            .set("theta0", cp.theta0.clone())
            .set("theta0_amplitude", cp.theta0_amplitude.to_string());
        let o = &self.output;
        ini.with_section(Some("output"))
            .set("dir", o.dir.clone())
            .set("vtk", o.vtk.to_string())
            .set("csv", o.csv.to_string())
            .set("json", o.json.to_string())
            .set("seed", o.seed.to_string())
            .set("constant_samples", o.constant_samples.to_string());
        let mut buf = Vec::new();
        ini.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ini output is utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[domain]\ndim = 2\n[rheology]\nkind = carreau\n";

    fn errors(text: &str) -> Vec<String> {
        match RunConfig::parse(text) {
            Err(Error::Config(v)) => v,
            other => panic!("expected config errors, got {other:?}"),
        }
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn echo_round_trips() {
        let mut c = RunConfig::default();
        c.friction.k_per_facet = vec![0.1, 0.2];
        c.coupling.cfg.mode = CouplingMode::PaperNested;
        c.flow.bottom = BottomCondition::Stick;
        let text = c.to_ini();
        assert_eq!(RunConfig::parse(&text).unwrap(), c);
    }

    #[test]
    fn zero_lower_viscosity_rejected() {
        let e = errors(&format!("{MINIMAL}mu0 = 0\n"));
        assert!(e.iter().any(|m| m.contains("mu0 must be positive")), "{e:?}");
    }

    #[test]
    fn small_exponent_rejected() {
        let e = errors(&format!("{MINIMAL}[flow]\np_exponent = 3\n"));
        assert!(e.iter().any(|m| m.contains("p_exponent must be at least 4")), "{e:?}");
        let e = errors(&format!("{MINIMAL}[coupling]\np_exponent = 3\n"));
        assert!(e.iter().any(|m| m.contains("p_exponent must be at least 4")), "{e:?}");
    }

    #[test]
    fn all_violations_reported() {
        let text = "# broken\n[domain]\ndim = 2\ncolour = red\n[rheology]\nkind = carreau\nmu0 = -1\n\
                    [conductivity]\nk0 = 2\nk1 = 1\n[friction]\nk = abc\n[nonsense]\nx = 1\n";
        let e = errors(text);
        assert_eq!(e.len(), 5, "{e:?}");
        assert!(e.iter().any(|m| m.contains("unknown section [nonsense]")));
        assert!(e.iter().any(|m| m.contains("colour: unknown key")));
        assert!(e.iter().any(|m| m.contains("k1 must be at least k0")));
        assert!(e.iter().any(|m| m.contains("cannot parse 'abc'")));
    }

    #[test]
    fn required_keys_enforced() {
        let e = errors("[domain]\ndim = 2\n");
        assert_eq!(e, vec!["[rheology] kind: required key missing".to_string()]);
    }
}
