//! The chain zoo: a catalog of small reversible test chains spanning
//! periodic, fast-mixing, and slow-mixing regimes, each paired with its
//! exact stationary distribution.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{FiniteKernel, KernelError, ProbVector};
use crate::rng::stream_rng;

#[derive(Debug, Error)]
pub enum ZooError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("invalid zoo parameters: {0}")]
    InvalidParameters(String),
}

pub type ZooResult<T> = Result<T, ZooError>;

/// What to build. Every kind produces a reversible kernel together with an
/// exact stationary distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZooSpec {
    /// Simple random walk on an n-cycle.
    Cycle { n: usize },
    /// Nearest-neighbor walk on the d-dimensional hypercube (2^d states).
    Hypercube { d: usize },
    /// Birth-death chain from up/down probabilities; holding mass fills
    /// each row.
    BirthDeath { up: Vec<f64>, down: Vec<f64> },
    /// Ehrenfest urn on n balls (n + 1 states).
    Ehrenfest { n: usize },
    /// Metropolized chain against random weights: reversible by
    /// construction.
    RandomReversible { n: usize, seed: u64 },
    /// The two-state deterministic flip.
    Flip,
    /// Lazy version of the uniform-rows kernel on n states.
    LazyUniform { n: usize },
}

impl ZooSpec {
    pub fn id(&self) -> String {
        match self {
            ZooSpec::Cycle { n } => format!("cycle({n})"),
            ZooSpec::Hypercube { d } => format!("hypercube({d})"),
            ZooSpec::BirthDeath { up, .. } => format!("birth_death({})", up.len() + 1),
            ZooSpec::Ehrenfest { n } => format!("ehrenfest({n})"),
            ZooSpec::RandomReversible { n, seed } => format!("random_reversible({n},{seed})"),
            ZooSpec::Flip => "flip".to_string(),
            ZooSpec::LazyUniform { n } => format!("lazy_uniform({n})"),
        }
    }
}

impl std::str::FromStr for ZooSpec {
    type Err = ZooError;

    /// Parses the textual form used by the CLI: `flip`, `cycle(8)`,
    /// `hypercube(3)`, `ehrenfest(6)`, `lazy_uniform(4)`,
    /// `random_reversible(6,42)`, `birth_death(0.5,0.25;0.25,0.5)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = |msg: &str| ZooError::InvalidParameters(format!("{msg} in spec `{s}`"));
        let (kind, args) = match s.find('(') {
            None => (s, ""),
            Some(open) => {
                if !s.ends_with(')') {
                    return Err(bad("unbalanced parentheses"));
                }
                (&s[..open], &s[open + 1..s.len() - 1])
            }
        };
        let ints = |args: &str| -> Result<Vec<u64>, ZooError> {
            args.split(',')
                .map(|a| a.trim().parse::<u64>().map_err(|e| bad(&e.to_string())))
                .collect()
        };
        let floats = |part: &str| -> Result<Vec<f64>, ZooError> {
            part.split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|e| bad(&e.to_string())))
                .collect()
        };
        match kind {
            "flip" => Ok(ZooSpec::Flip),
            "cycle" => match ints(args)?.as_slice() {
                [n] => Ok(ZooSpec::Cycle { n: *n as usize }),
                _ => Err(bad("cycle takes one integer")),
            },
            "hypercube" => match ints(args)?.as_slice() {
                [d] => Ok(ZooSpec::Hypercube { d: *d as usize }),
                _ => Err(bad("hypercube takes one integer")),
            },
            "ehrenfest" => match ints(args)?.as_slice() {
                [n] => Ok(ZooSpec::Ehrenfest { n: *n as usize }),
                _ => Err(bad("ehrenfest takes one integer")),
            },
            "lazy_uniform" => match ints(args)?.as_slice() {
                [n] => Ok(ZooSpec::LazyUniform { n: *n as usize }),
                _ => Err(bad("lazy_uniform takes one integer")),
            },
            "random_reversible" => match ints(args)?.as_slice() {
                [n, seed] => Ok(ZooSpec::RandomReversible {
                    n: *n as usize,
                    seed: *seed,
                }),
                _ => Err(bad("random_reversible takes (n, seed)")),
            },
            "birth_death" => {
                let halves: Vec<&str> = args.split(';').collect();
                if halves.len() != 2 {
                    return Err(bad("birth_death takes up;down probability lists"));
                }
                Ok(ZooSpec::BirthDeath {
                    up: floats(halves[0])?,
                    down: floats(halves[1])?,
                })
            }
            other => Err(bad(&format!("unknown chain kind `{other}`"))),
        }
    }
}

/// A built chain plus its exact stationary law and structure flags.
#[derive(Debug, Clone)]
pub struct ZooChain {
    pub id: String,
    pub kernel: FiniteKernel,
    pub pi: ProbVector,
    pub aperiodic: bool,
}

/// Builds the kernel and its exact stationary distribution.
pub fn build_zoo_chain(spec: &ZooSpec) -> ZooResult<ZooChain> {
    let (kernel, pi) = match spec {
        ZooSpec::Cycle { n } => {
            if *n < 3 {
                return Err(ZooError::InvalidParameters(
                    "cycle needs at least 3 states".into(),
                ));
            }
            let mut rows = vec![vec![0.0; *n]; *n];
            for i in 0..*n {
                rows[i][(i + 1) % n] = 0.5;
                rows[i][(i + n - 1) % n] = 0.5;
            }
            (FiniteKernel::new(rows)?, ProbVector::uniform(*n))
        }
        ZooSpec::Hypercube { d } => {
            if *d == 0 || *d > 10 {
                return Err(ZooError::InvalidParameters(
                    "hypercube dimension must be in 1..=10".into(),
                ));
            }
            let n = 1usize << d;
            let mut rows = vec![vec![0.0; n]; n];
            for x in 0..n {
                for bit in 0..*d {
                    rows[x][x ^ (1 << bit)] = 1.0 / *d as f64;
                }
            }
            let labels = (0..n).map(|x| format!("{x:0width$b}", width = d)).collect();
            (
                FiniteKernel::with_labels(rows, labels)?,
                ProbVector::uniform(n),
            )
        }
        ZooSpec::BirthDeath { up, down } => {
            if up.len() != down.len() {
                return Err(ZooError::InvalidParameters(
                    "up and down must have equal length".into(),
                ));
            }
            let n = up.len() + 1;
            if n < 2 {
                return Err(ZooError::InvalidParameters(
                    "birth-death needs at least 2 states".into(),
                ));
            }
            let mut rows = vec![vec![0.0; n]; n];
            for i in 0..n - 1 {
                if up[i] <= 0.0 || down[i] <= 0.0 {
                    return Err(ZooError::InvalidParameters(
                        "up/down probabilities must be positive".into(),
                    ));
                }
                rows[i][i + 1] = up[i];
                rows[i + 1][i] = down[i];
            }
            for (i, row) in rows.iter_mut().enumerate() {
                let off: f64 = row.iter().sum();
                if off > 1.0 + 1e-12 {
                    return Err(ZooError::InvalidParameters(format!(
                        "row {i} off-diagonal mass {off} exceeds 1"
                    )));
                }
                row[i] = (1.0 - off).max(0.0);
            }
            // Detailed balance along the path gives pi exactly.
            let mut w = vec![1.0; n];
            for i in 0..n - 1 {
                w[i + 1] = w[i] * up[i] / down[i];
            }
            (FiniteKernel::new(rows)?, ProbVector::normalized(w)?)
        }
        ZooSpec::Ehrenfest { n } => {
            if *n < 2 {
                return Err(ZooError::InvalidParameters(
                    "ehrenfest needs at least 2 balls".into(),
                ));
            }
            let states = n + 1;
            let mut rows = vec![vec![0.0; states]; states];
            for k in 0..states {
                if k > 0 {
                    rows[k][k - 1] = k as f64 / *n as f64;
                }
                if k < *n {
                    rows[k][k + 1] = (*n - k) as f64 / *n as f64;
                }
            }
            // pi = Binomial(n, 1/2).
            let mut w = vec![0.0; states];
            for (k, slot) in w.iter_mut().enumerate() {
                *slot = binomial(*n, k);
            }
            (FiniteKernel::new(rows)?, ProbVector::normalized(w)?)
        }
        ZooSpec::RandomReversible { n, seed } => {
            if *n < 2 {
                return Err(ZooError::InvalidParameters(
                    "random_reversible needs at least 2 states".into(),
                ));
            }
            let mut rng = stream_rng(*seed, 0);
            let weights: Vec<f64> = (0..*n).map(|_| rng.random_range(0.2..1.0)).collect();
            let mut rows = vec![vec![0.0; *n]; *n];
            for i in 0..*n {
                let propose = 1.0 / (*n as f64 - 1.0);
                let mut stay = 0.0;
                for j in 0..*n {
                    if i == j {
                        continue;
                    }
                    let accept = (weights[j] / weights[i]).min(1.0);
                    rows[i][j] = propose * accept;
                    stay += propose * (1.0 - accept);
                }
                rows[i][i] = stay;
            }
            (FiniteKernel::new(rows)?, ProbVector::normalized(weights)?)
        }
        ZooSpec::Flip => (
            FiniteKernel::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]])?,
            ProbVector::uniform(2),
        ),
        ZooSpec::LazyUniform { n } => {
            if *n < 2 {
                return Err(ZooError::InvalidParameters(
                    "lazy_uniform needs at least 2 states".into(),
                ));
            }
            let u = 0.5 / *n as f64;
            let mut rows = vec![vec![u; *n]; *n];
            for (i, row) in rows.iter_mut().enumerate() {
                row[i] += 0.5;
            }
            (FiniteKernel::new(rows)?, ProbVector::uniform(*n))
        }
    };
    let aperiodic = is_aperiodic(&kernel);
    Ok(ZooChain {
        id: spec.id(),
        kernel,
        pi,
        aperiodic,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Period test for irreducible chains: gcd over support edges `(u, v)` of
/// `level(u) + 1 - level(v)` from a BFS rooted at state 0; aperiodic iff
/// the gcd is 1.
pub fn is_aperiodic(kernel: &FiniteKernel) -> bool {
    let n = kernel.n_states();
    let succs = kernel.support_successors();
    let mut level = vec![i64::MIN; n];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &v in &succs[u] {
            if level[v] == i64::MIN {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g: i64 = 0;
    for u in 0..n {
        if level[u] == i64::MIN {
            continue;
        }
        for &v in &succs[u] {
            if level[v] == i64::MIN {
                continue;
            }
            g = gcd(g, (level[u] + 1 - level[v]).abs());
        }
    }
    g == 1
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The default experiment zoo: flip, lazy uniform, cycles 5..=12,
/// hypercubes 2..=4, the Ehrenfest urn, two birth-death fixtures, and four
/// Metropolized random chains. All are reversible.
pub fn default_zoo() -> Vec<ZooChain> {
    default_zoo_specs()
        .iter()
        .map(|s| build_zoo_chain(s).expect("default zoo specs are valid"))
        .collect()
}

pub fn default_zoo_specs() -> Vec<ZooSpec> {
    let mut specs = vec![ZooSpec::Flip, ZooSpec::LazyUniform { n: 4 }];
    for n in 5..=12 {
        specs.push(ZooSpec::Cycle { n });
    }
    for d in 2..=4 {
        specs.push(ZooSpec::Hypercube { d });
    }
    specs.push(ZooSpec::Ehrenfest { n: 6 });
    specs.push(ZooSpec::BirthDeath {
        up: vec![0.5, 0.25],
        down: vec![0.25, 0.5],
    });
    specs.push(ZooSpec::BirthDeath {
        up: vec![0.3, 0.3, 0.3, 0.3],
        down: vec![0.2, 0.2, 0.2, 0.2],
    });
    for seed in 1..=4 {
        specs.push(ZooSpec::RandomReversible { n: 6, seed });
    }
    specs
}
