//! Model files: JSON documents `{kind, metadata, payload}` validated into
//! library objects.

use std::path::Path;

use jsonc_parser::ast;
use jsonc_parser::common::Ranged;
use serde::Serialize;
use serde_json::{json, Value};

use spinchain::fcs::{
    from_hidden_markov, validate_triple, GeneratingTriple, HiddenMarkovSpec, TripleValidation,
};
use spinchain::ldp::Interaction;
use spinchain::linalg::{c, CMat, C64};
use spinchain::maps::KrausMap;
use spinchain::source::{LocalGibbs, ProductState, StateSource, Tracial};
use spinchain::{ComplexOperator, DensityOperator, HermitianOperator};

use crate::error::CliError;

/// Validation tolerances that can be overridden from the command line.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    /// Allowed deviation of a transition row sum from 1.
    pub stochastic: f64,
    /// Allowed negativity of a density matrix eigenvalue.
    pub psd: f64,
    /// Allowed deviation of a density trace from 1.
    pub trace: f64,
    /// Allowed `max |m − m*|` of a Hermitian input.
    pub hermitian: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            stochastic: 1e-9,
            psd: 1e-9,
            trace: 1e-9,
            hermitian: 1e-9,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub code: &'static str,
    /// JSON pointer into the model file.
    pub path: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Triple,
    HiddenMarkov,
    Product,
    Interaction,
    Gibbs,
}

impl Kind {
    fn parse(s: &str) -> Option<Kind> {
        Some(match s {
            "triple" => Kind::Triple,
            "hidden_markov" => Kind::HiddenMarkov,
            "product" => Kind::Product,
            "interaction" => Kind::Interaction,
            "gibbs" => Kind::Gibbs,
            _ => return None,
        })
    }
}

pub enum Body {
    Triple(GeneratingTriple),
    HiddenMarkov(HiddenMarkovSpec, GeneratingTriple),
    Product(ProductState, GeneratingTriple),
    /// Interaction paired with the normalized trace.
    Interaction(Interaction, Tracial),
    /// Local Gibbs states of the interaction.
    Gibbs(LocalGibbs),
}

pub struct Model {
    pub kind: Kind,
    pub name: Option<String>,
    pub description: Option<String>,
    pub body: Body,
    /// Optional one-site observable carried by the file.
    pub observable: Option<HermitianOperator>,
    pub notes: Vec<String>,
    pub validation: Option<TripleValidation>,
}

impl Model {
    pub fn triple(&self) -> Option<&GeneratingTriple> {
        match &self.body {
            Body::Triple(t) | Body::HiddenMarkov(_, t) | Body::Product(_, t) => Some(t),
            _ => None,
        }
    }

    pub fn hidden_markov(&self) -> Option<&HiddenMarkovSpec> {
        match &self.body {
            Body::HiddenMarkov(s, _) => Some(s),
            _ => None,
        }
    }

    pub fn interaction(&self) -> Option<&Interaction> {
        match &self.body {
            Body::Interaction(i, _) => Some(i),
            Body::Gibbs(g) => Some(&g.0),
            _ => None,
        }
    }

    pub fn source(&self) -> &dyn StateSource {
        match &self.body {
            Body::Triple(t) | Body::HiddenMarkov(_, t) => t,
            Body::Product(p, _) => p,
            Body::Interaction(_, tr) => tr,
            Body::Gibbs(g) => g,
        }
    }

    pub fn site_dim(&self) -> usize {
        self.source().site_dim()
    }

    /// Description used in JSON summaries.
    pub fn summary(&self) -> Value {
        let mut v = json!({
            "kind": self.kind,
            "name": self.name,
            "description": self.description,
            "site_dim": self.site_dim(),
            "notes": self.notes,
        });
        if let Some(t) = self.triple() {
            v["auxiliary_dim"] = json!(t.d_b());
        }
        if let Some(i) = self.interaction() {
            v["range"] = json!(i.range());
        }
        v
    }
}

/// Collects violations while walking the document.
struct Checker<'a> {
    text: &'a str,
    ast: Option<ast::Value<'a>>,
    tol: Tolerances,
    violations: Vec<Violation>,
}

impl<'a> Checker<'a> {
    fn push(&mut self, code: &'static str, path: &str, message: impl Into<String>) {
        let (line, column) = self
            .locate(path)
            .map_or((None, None), |(l, c)| (Some(l), Some(c)));
        self.violations.push(Violation {
            code,
            path: path.to_string(),
            line,
            column,
            message: message.into(),
        });
    }

    fn locate(&self, pointer: &str) -> Option<(usize, usize)> {
        // deepest existing node on the path
        let mut node = self.ast.as_ref()?;
        for token in pointer.split('/').skip(1) {
            let next = match node {
                ast::Value::Object(o) => o.get(token).map(|p| &p.value),
                ast::Value::Array(a) => token.parse::<usize>().ok().and_then(|i| a.elements.get(i)),
                _ => None,
            };
            match next {
                Some(n) => node = n,
                None => break,
            }
        }
        let before = &self.text[..node.start()];
        let line = before.matches('\n').count() + 1;
        let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
        Some((line, column))
    }

    fn library(&mut self, path: &str, e: spinchain::Error) {
        use spinchain::Error as E;
        let code = match &e {
            E::NotStochastic { .. } => "STOCHASTIC_ROW",
            E::NotPositive { .. } => "NON_PSD",
            E::NotHermitian { .. } => "NOT_HERMITIAN",
            E::InvalidTrace { .. } => "TRACE",
            E::NotCompletelyPositive { .. } => "NOT_CP",
            E::NotUnital { .. } => "NOT_UNITAL",
            E::NotFaithful { .. } => "NOT_FAITHFUL",
            E::NotStationary { .. } => "NOT_INVARIANT",
            E::DimensionMismatch(_) | E::NotSquare { .. } => "DIMENSION_MISMATCH",
            _ => "INVALID",
        };
        self.push(code, path, e.to_string());
    }

    fn get<'v>(
        &mut self,
        obj: &'v Value,
        path: &str,
        key: &str,
        required: bool,
    ) -> Option<&'v Value> {
        match obj.get(key) {
            Some(Value::Null) | None => {
                if required {
                    self.push("MISSING_FIELD", path, format!("missing field `{key}`"));
                }
                None
            }
            Some(v) => Some(v),
        }
    }

    fn number(&mut self, v: &Value, path: &str) -> Option<f64> {
        match v.as_f64() {
            Some(x) => Some(x),
            None => {
                self.push("TYPE", path, "expected a number");
                None
            }
        }
    }

    fn usize(&mut self, v: &Value, path: &str) -> Option<usize> {
        match v.as_u64() {
            Some(x) if x > 0 => Some(x as usize),
            _ => {
                self.push("TYPE", path, "expected a positive integer");
                None
            }
        }
    }

    fn array<'v>(&mut self, v: &'v Value, path: &str) -> Option<&'v Vec<Value>> {
        match v.as_array() {
            Some(a) => Some(a),
            None => {
                self.push("TYPE", path, "expected an array");
                None
            }
        }
    }

    fn real_vector(&mut self, v: &Value, path: &str) -> Option<Vec<f64>> {
        let arr = self.array(v, path)?;
        let out: Vec<Option<f64>> = arr
            .iter()
            .enumerate()
            .map(|(i, x)| self.number(x, &format!("{path}/{i}")))
            .collect();
        out.into_iter().collect()
    }

    fn entry(&mut self, v: &Value, path: &str) -> Option<C64> {
        if let Some(x) = v.as_f64() {
            return Some(c(x));
        }
        match v.as_array().map(|a| a.as_slice()) {
            Some([re, im]) => match (re.as_f64(), im.as_f64()) {
                (Some(re), Some(im)) => Some(C64::new(re, im)),
                _ => {
                    self.push(
                        "TYPE",
                        path,
                        "complex entry must be [re, im] with numeric parts",
                    );
                    None
                }
            },
            _ => {
                self.push("TYPE", path, "matrix entry must be a number or [re, im]");
                None
            }
        }
    }

    /// Rectangular complex matrix given by rows.
    fn matrix(&mut self, v: &Value, path: &str) -> Option<CMat> {
        let rows = self.array(v, path)?;
        if rows.is_empty() {
            self.push("DIMENSION_MISMATCH", path, "empty matrix");
            return None;
        }
        let mut data = Vec::with_capacity(rows.len());
        let mut ok = true;
        for (i, row) in rows.iter().enumerate() {
            let rp = format!("{path}/{i}");
            let Some(cells) = self.array(row, &rp) else {
                ok = false;
                continue;
            };
            let parsed: Vec<Option<C64>> = cells
                .iter()
                .enumerate()
                .map(|(j, x)| self.entry(x, &format!("{rp}/{j}")))
                .collect();
            match parsed.into_iter().collect::<Option<Vec<_>>>() {
                Some(r) => data.push(r),
                None => ok = false,
            }
        }
        if !ok {
            return None;
        }
        let cols = data[0].len();
        if let Some(i) = data.iter().position(|r| r.len() != cols) {
            self.push(
                "DIMENSION_MISMATCH",
                &format!("{path}/{i}"),
                format!("row has {} entries, expected {cols}", data[i].len()),
            );
            return None;
        }
        Some(CMat::from_fn(data.len(), cols, |i, j| data[i][j]))
    }

    fn square(&mut self, v: &Value, path: &str, dim: Option<usize>) -> Option<CMat> {
        let m = self.matrix(v, path)?;
        if m.nrows() != m.ncols() {
            self.push(
                "DIMENSION_MISMATCH",
                path,
                format!("matrix is {}x{}, expected square", m.nrows(), m.ncols()),
            );
            return None;
        }
        if let Some(d) = dim.filter(|&d| d != m.nrows()) {
            self.push(
                "DIMENSION_MISMATCH",
                path,
                format!("matrix has dimension {}, expected {d}", m.nrows()),
            );
            return None;
        }
        Some(m)
    }

    fn hermitian(
        &mut self,
        v: &Value,
        path: &str,
        dim: Option<usize>,
    ) -> Option<HermitianOperator> {
        let m = self.square(v, path, dim)?;
        match ComplexOperator::new(m)
            .and_then(|op| HermitianOperator::with_tol(op, self.tol.hermitian))
        {
            Ok(h) => Some(h),
            Err(e) => {
                self.library(path, e);
                None
            }
        }
    }

    fn density(&mut self, v: &Value, path: &str, dim: Option<usize>) -> Option<DensityOperator> {
        let h = self.hermitian(v, path, dim)?;
        match DensityOperator::with_tol(h, self.tol.psd, self.tol.trace) {
            Ok(d) => Some(d),
            Err(e) => {
                self.library(path, e);
                None
            }
        }
    }

    /// Square nonnegative matrix with unit row sums; rows are renormalized
    /// after passing the tolerance check.
    fn stochastic(&mut self, v: &Value, path: &str) -> Option<Vec<Vec<f64>>> {
        let rows = self.array(v, path)?;
        let n = rows.len();
        if n == 0 {
            self.push("DIMENSION_MISMATCH", path, "empty transition matrix");
            return None;
        }
        let mut out = Vec::with_capacity(n);
        let mut ok = true;
        for (i, row) in rows.iter().enumerate() {
            let rp = format!("{path}/{i}");
            let Some(r) = self.real_vector(row, &rp) else {
                ok = false;
                continue;
            };
            if r.len() != n {
                self.push(
                    "DIMENSION_MISMATCH",
                    &rp,
                    format!("row has {} entries, expected {n}", r.len()),
                );
                ok = false;
                continue;
            }
            if let Some(j) = r.iter().position(|&x| x < 0.0) {
                self.push(
                    "NEGATIVE_ENTRY",
                    &format!("{rp}/{j}"),
                    format!("entry {} is negative", r[j]),
                );
                ok = false;
                continue;
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > self.tol.stochastic {
                self.push("STOCHASTIC_ROW", &rp, format!("row sums to {sum}"));
                ok = false;
                continue;
            }
            out.push(r.into_iter().map(|x| x / sum).collect());
        }
        ok.then_some(out)
    }
}

fn text_of(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: &Path, tol: Tolerances) -> Result<Model, CliError> {
    let text = text_of(path)?;
    parse_model(&text, tol)
}

pub fn parse_model(text: &str, tol: Tolerances) -> Result<Model, CliError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| {
        CliError::Invalid(vec![Violation {
            code: "PARSE_ERROR",
            path: String::new(),
            line: Some(e.line()),
            column: Some(e.column()),
            message: e.to_string(),
        }])
    })?;
    let ast = jsonc_parser::parse_to_ast(text, &Default::default(), &Default::default())
        .ok()
        .and_then(|r| r.value);
    let mut ck = Checker {
        text,
        ast,
        tol,
        violations: Vec::new(),
    };
    let model = build(&mut ck, &doc);
    match model {
        Some(m) if ck.violations.is_empty() => Ok(m),
        _ => {
            if ck.violations.is_empty() {
                ck.push("INVALID", "", "model could not be constructed");
            }
            Err(CliError::Invalid(ck.violations))
        }
    }
}

fn build(ck: &mut Checker<'_>, doc: &Value) -> Option<Model> {
    if !doc.is_object() {
        ck.push("TYPE", "", "model file must be a JSON object");
        return None;
    }
    let kind_str = ck.get(doc, "/kind", "kind", true)?;
    let Some(kind) = kind_str.as_str().and_then(Kind::parse) else {
        ck.push("UNKNOWN_KIND", "/kind", format!("unknown kind {kind_str}"));
        return None;
    };
    let meta = doc.get("metadata");
    let text_field = |k: &str| {
        meta.and_then(|m| m.get(k))
            .and_then(Value::as_str)
            .map(str::to_string)
    };
    let (name, description) = (text_field("name"), text_field("description"));
    let payload = ck.get(doc, "/payload", "payload", true)?;
    if !payload.is_object() {
        ck.push("TYPE", "/payload", "payload must be an object");
        return None;
    }
    let mut notes = Vec::new();
    let body = match kind {
        Kind::Triple => build_triple(ck, payload, &mut notes)?,
        Kind::HiddenMarkov => build_hidden_markov(ck, payload, &mut notes)?,
        Kind::Product => {
            let rho_v = ck.get(payload, "/payload/rho", "rho", true)?;
            let rho = ck.density(rho_v, "/payload/rho", None)?;
            let triple = lib(ck, "/payload/rho", GeneratingTriple::product(&rho))?;
            Body::Product(ProductState(rho), triple)
        }
        Kind::Interaction => {
            let phi = build_interaction(ck, payload)?;
            let d = phi.site_dim();
            Body::Interaction(phi, Tracial(d))
        }
        Kind::Gibbs => Body::Gibbs(LocalGibbs(build_interaction(ck, payload)?)),
    };
    let site_dim = match &body {
        Body::Triple(t) | Body::HiddenMarkov(_, t) | Body::Product(_, t) => t.d_a(),
        Body::Interaction(i, _) => i.site_dim(),
        Body::Gibbs(g) => g.0.site_dim(),
    };
    let observable = match payload.get("observable") {
        Some(v) if !v.is_null() => Some(ck.hermitian(v, "/payload/observable", Some(site_dim))?),
        _ => None,
    };
    let validation = match &body {
        Body::Triple(t) | Body::HiddenMarkov(_, t) | Body::Product(_, t) => {
            Some(lib(ck, "/payload", validate_triple(t))?)
        }
        _ => None,
    };
    if let Some(err) = validation.as_ref().and_then(TripleValidation::to_error) {
        ck.library("/payload", err);
        return None;
    }
    Some(Model {
        kind,
        name,
        description,
        body,
        observable,
        notes,
        validation,
    })
}

fn lib<T>(ck: &mut Checker<'_>, path: &str, r: spinchain::Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            ck.library(path, e);
            None
        }
    }
}

/// Payload `{d_a, d_b, kraus: [K_i], rho?}` with `E(X) = Σ K_i X K_i*` mapping
/// `M_{d_a} ⊗ M_{d_b}` to `M_{d_b}`.
fn build_triple(ck: &mut Checker<'_>, p: &Value, notes: &mut Vec<String>) -> Option<Body> {
    let d_a = ck
        .get(p, "/payload/d_a", "d_a", true)
        .and_then(|v| ck.usize(v, "/payload/d_a"));
    let d_b = ck
        .get(p, "/payload/d_b", "d_b", true)
        .and_then(|v| ck.usize(v, "/payload/d_b"));
    let (d_a, d_b) = (d_a?, d_b?);
    let ops_v = ck.get(p, "/payload/kraus", "kraus", true)?;
    let ops_arr = ck.array(ops_v, "/payload/kraus")?;
    let mut ops = Vec::with_capacity(ops_arr.len());
    for (i, v) in ops_arr.iter().enumerate() {
        let path = format!("/payload/kraus/{i}");
        let m = ck.matrix(v, &path)?;
        if (m.nrows(), m.ncols()) != (d_b, d_a * d_b) {
            ck.push(
                "DIMENSION_MISMATCH",
                &path,
                format!(
                    "Kraus operator is {}x{}, expected {d_b}x{}",
                    m.nrows(),
                    m.ncols(),
                    d_a * d_b
                ),
            );
            return None;
        }
        ops.push(m);
    }
    let e = lib(ck, "/payload/kraus", KrausMap::new(d_a * d_b, d_b, ops))?;
    match p.get("rho").filter(|v| !v.is_null()) {
        Some(v) => {
            let rho = ck.density(v, "/payload/rho", Some(d_b))?;
            Some(Body::Triple(lib(
                ck,
                "/payload",
                GeneratingTriple::new(d_a, d_b, e, rho),
            )?))
        }
        None => {
            let (t, st) = lib(
                ck,
                "/payload/kraus",
                GeneratingTriple::with_stationary_state(d_a, d_b, e),
            )?;
            notes.push(format!(
                "rho not supplied; stationary state computed (fixed-space dimension {})",
                st.multiplicity
            ));
            notes.extend(st.warning);
            Some(Body::Triple(t))
        }
    }
}

/// Payload `{transition, initial?, emissions}` where `emissions[x][y]` is the
/// site density emitted on the transition `x → y` (or null when `T_xy = 0`).
/// A flat `emissions` list holds one density per state.
fn build_hidden_markov(ck: &mut Checker<'_>, p: &Value, notes: &mut Vec<String>) -> Option<Body> {
    let t = ck
        .get(p, "/payload/transition", "transition", true)
        .and_then(|v| ck.stochastic(v, "/payload/transition"));
    let r = match p.get("initial").filter(|v| !v.is_null()) {
        Some(v) => Some(ck.real_vector(v, "/payload/initial")?),
        None => None,
    };
    let em = ck.get(p, "/payload/emissions", "emissions", true)?;
    let t = t?;
    let n = t.len();
    let rows = ck.array(em, "/payload/emissions")?;
    if rows.len() != n {
        ck.push(
            "DIMENSION_MISMATCH",
            "/payload/emissions",
            format!("{} entries for {n} states", rows.len()),
        );
        return None;
    }
    let mut d_a = None;
    let mut theta: Vec<Vec<Option<DensityOperator>>> = Vec::with_capacity(n);
    let flat = rows.iter().all(is_matrix_like);
    for (x, row) in rows.iter().enumerate() {
        let rp = format!("/payload/emissions/{x}");
        if flat {
            let dm = ck.density(row, &rp, d_a)?;
            d_a = Some(dm.dim());
            theta.push(vec![Some(dm); n]);
            continue;
        }
        let cells = ck.array(row, &rp)?;
        if cells.len() != n {
            ck.push(
                "DIMENSION_MISMATCH",
                &rp,
                format!("{} emissions for {n} states", cells.len()),
            );
            return None;
        }
        let mut out = Vec::with_capacity(n);
        for (y, cell) in cells.iter().enumerate() {
            let cp = format!("{rp}/{y}");
            if cell.is_null() {
                if t[x][y] > 0.0 {
                    ck.push(
                        "MISSING_EMISSION",
                        &cp,
                        format!("T[{x}][{y}] > 0 requires an emission"),
                    );
                    return None;
                }
                out.push(None);
            } else {
                let dm = ck.density(cell, &cp, d_a)?;
                d_a = Some(dm.dim());
                out.push(Some(dm));
            }
        }
        theta.push(out);
    }
    if r.is_none() {
        notes.push("initial distribution not supplied; stationary distribution computed".into());
    }
    let spec = lib(ck, "/payload", HiddenMarkovSpec::new(t, r, theta))?;
    let triple = lib(ck, "/payload", from_hidden_markov(&spec))?;
    Some(Body::HiddenMarkov(spec, triple))
}

/// Whether `v` looks like a matrix (rows of scalars or `[re, im]` pairs)
/// rather than a row of matrices.
fn is_matrix_like(v: &Value) -> bool {
    let scalar = |x: &Value| {
        x.is_number()
            || x.as_array()
                .is_some_and(|p| p.len() == 2 && p.iter().all(Value::is_number))
    };
    v.as_array().is_some_and(|rows| {
        rows.iter().all(|r| {
            r.as_array()
                .is_some_and(|cells| !cells.is_empty() && cells.iter().all(scalar))
        })
    })
}

/// Payload `{site_dim, terms: [h_1, h_2, …]}` with `h_ℓ` acting on `ℓ`
/// consecutive sites, or `{ising: {coupling, field: [hx, hy, hz]}}`.
fn build_interaction(ck: &mut Checker<'_>, p: &Value) -> Option<Interaction> {
    if let Some(is) = p.get("ising").filter(|v| !v.is_null()) {
        let coupling = ck
            .get(is, "/payload/ising/coupling", "coupling", true)
            .and_then(|v| ck.number(v, "/payload/ising/coupling"));
        let field = match is.get("field").filter(|v| !v.is_null()) {
            Some(v) => ck.real_vector(v, "/payload/ising/field"),
            None => Some(vec![0.0; 3]),
        };
        let (coupling, field) = (coupling?, field?);
        if field.len() != 3 {
            ck.push(
                "DIMENSION_MISMATCH",
                "/payload/ising/field",
                "field must have three components",
            );
            return None;
        }
        return Some(Interaction::ising(coupling, [field[0], field[1], field[2]]));
    }
    let d = ck
        .get(p, "/payload/site_dim", "site_dim", true)
        .and_then(|v| ck.usize(v, "/payload/site_dim"));
    let terms_v = ck.get(p, "/payload/terms", "terms", true)?;
    let d = d?;
    let arr = ck.array(terms_v, "/payload/terms")?;
    let mut terms = Vec::with_capacity(arr.len());
    let mut dim = 1usize;
    for (i, v) in arr.iter().enumerate() {
        dim *= d;
        if v.is_null() {
            terms.push(None);
        } else {
            terms.push(Some(ck.hermitian(
                v,
                &format!("/payload/terms/{i}"),
                Some(dim),
            )?));
        }
    }
    lib(ck, "/payload/terms", Interaction::new(d, terms))
}

/// One-site observable from a file holding either a bare matrix or
/// `{"matrix": …}`.
pub fn load_observable(
    path: &Path,
    d: usize,
    tol: Tolerances,
) -> Result<HermitianOperator, CliError> {
    let text = text_of(path)?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| {
        CliError::Invalid(vec![Violation {
            code: "PARSE_ERROR",
            path: String::new(),
            line: Some(e.line()),
            column: Some(e.column()),
            message: e.to_string(),
        }])
    })?;
    let ast = jsonc_parser::parse_to_ast(&text, &Default::default(), &Default::default())
        .ok()
        .and_then(|r| r.value);
    let mut ck = Checker {
        text: &text,
        ast,
        tol,
        violations: Vec::new(),
    };
    let (v, path) = match doc.get("matrix") {
        Some(m) => (m, "/matrix"),
        None => (&doc, ""),
    };
    match ck.hermitian(v, path, Some(d)) {
        Some(h) if ck.violations.is_empty() => Ok(h),
        _ => Err(CliError::Invalid(ck.violations)),
    }
}
