//! Aperiodic pulse sequences and stroboscopic powers.
//!
//! Thue-Morse and Fibonacci protocols are words over two tokens. A PLUS
//! token applies exp(-i (H + V) T) for one full period, a MINUS token the
//! same with H - V. The words grow by concatenation:
//!
//! ```text
//! Thue-Morse:  w(1) = +-          w(n+1) = w(n) then complement(w(n))
//! Fibonacci:   w(0) = +, w(1) = - w(n) = w(n-1) then w(n-2)
//! ```
//!
//! so the level-n unitaries obey pair recursions that need one or two
//! matrix products per level instead of exponentially many token factors.
//! Around level 60 the repeated products accumulate enough roundoff to
//! push states off the unit sphere, so the walker re-projects its tracked
//! matrices onto the unitary group (polar iteration) whenever a periodic
//! check finds a defect above 1e-8.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::Error;
use crate::floquet::reunitarize_polar;
use crate::hilbert::OperatorMatrix;
use crate::linalg;
use crate::Result;

/// Pulse token: PLUS drives with H + V, MINUS with H - V.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Token {
    Plus,
    Minus,
}

impl Token {
    pub fn complement(self) -> Token {
        match self {
            Token::Plus => Token::Minus,
            Token::Minus => Token::Plus,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Token::Plus => '+',
            Token::Minus => '-',
        }
    }
}

/// Render a token word as text, e.g. "+--+".
pub fn tokens_string(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.as_char()).collect()
}

/// Which drive protocol a run follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    Periodic,
    ThueMorse,
    Fibonacci,
}

/// The two self-similar sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceKind {
    ThueMorse,
    Fibonacci,
}

/// Largest token word any expansion will materialize (2^26 entries).
/// Recursion-level unitaries are never built from expanded words, so this
/// only limits explicit token export.
const MAX_TOKEN_WORD: u64 = 1 << 26;

/// Thue-Morse word at `level` >= 1, chronological order.
pub fn thue_morse_tokens(level: u32) -> Result<Vec<Token>> {
    if level < 1 {
        return Err(Error::InvalidArgument(
            "Thue-Morse levels start at 1".into(),
        ));
    }
    if 1u64 << level > MAX_TOKEN_WORD {
        return Err(Error::InvalidArgument(format!(
            "Thue-Morse word at level {level} would have 2^{level} tokens; refusing to expand"
        )));
    }
    let mut word = vec![Token::Plus, Token::Minus];
    for _ in 1..level {
        let complement: Vec<Token> = word.iter().map(|t| t.complement()).collect();
        word.extend(complement);
    }
    Ok(word)
}

/// Fibonacci word at `level` >= 0, chronological order. Lengths follow
/// F(level + 1) with F(1) = F(2) = 1.
pub fn fibonacci_tokens(level: u32) -> Result<Vec<Token>> {
    let mut len_prev = 1u64; // level 0
    let mut len_cur = 1u64; // level 1
    for _ in 1..level {
        let next = len_prev + len_cur;
        len_prev = len_cur;
        len_cur = next;
        if len_cur > MAX_TOKEN_WORD {
            return Err(Error::InvalidArgument(format!(
                "Fibonacci word at level {level} is too long to expand"
            )));
        }
    }
    match level {
        0 => Ok(vec![Token::Plus]),
        1 => Ok(vec![Token::Minus]),
        _ => {
            let mut prev = vec![Token::Plus];
            let mut cur = vec![Token::Minus];
            for _ in 2..=level {
                let mut next = cur.clone();
                next.extend(prev.iter().copied());
                prev = cur;
                cur = next;
            }
            Ok(cur)
        }
    }
}

/// Protocol descriptor: kind plus recursion level (sequences) or period
/// count (periodic drive).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DriveProtocol {
    pub kind: ProtocolKind,
    pub level: u32,
}

impl DriveProtocol {
    /// Token word of this protocol in chronological order. For the
    /// periodic protocol each cycle contributes a PLUS and a MINUS half
    /// step; for the sequences each token spans one full period.
    pub fn tokens(&self) -> Result<Vec<Token>> {
        match self.kind {
            ProtocolKind::Periodic => {
                let n = self.level as u64;
                if 2 * n > MAX_TOKEN_WORD {
                    return Err(Error::InvalidArgument(format!(
                        "periodic token word with {n} cycles is too long to expand"
                    )));
                }
                let mut word = Vec::with_capacity(2 * n as usize);
                for _ in 0..n {
                    word.push(Token::Plus);
                    word.push(Token::Minus);
                }
                Ok(word)
            }
            ProtocolKind::ThueMorse => thue_morse_tokens(self.level),
            ProtocolKind::Fibonacci => fibonacci_tokens(self.level),
        }
    }
}

/// How often the walker measures unitarity drift (in levels).
pub const DRIFT_CHECK_EVERY: u32 = 4;
/// Defect above which a tracked matrix is re-projected.
pub const DRIFT_DEFECT_TOL: f64 = 1e-8;
/// Convergence target of the polar re-projection.
pub const DRIFT_POLAR_TARGET: f64 = 1e-14;
/// Newton steps allowed per re-projection.
pub const DRIFT_POLAR_MAX_ITER: usize = 4;

/// Streaming generator of sequence unitaries, one recursion level at a
/// time. Memory stays at two matrices regardless of level, which is what
/// makes level 30+ runs at dimension ~1100 feasible.
#[derive(Debug, Clone)]
pub struct SequenceWalker {
    kind: SequenceKind,
    level: u32,
    // Thue-Morse: (a, b) = (U_n, twin U~_n).
    // Fibonacci: (a, b) = (U_{n-1}, U_n).
    a: Array2<Complex64>,
    b: Array2<Complex64>,
    // Periods covered by b and a (Fibonacci tracks both durations).
    elapsed_b: f64,
    elapsed_a: f64,
}

impl SequenceWalker {
    /// Start at level 1. `u_plus` and `u_minus` are the one-period token
    /// unitaries.
    pub fn new(kind: SequenceKind, u_plus: &OperatorMatrix, u_minus: &OperatorMatrix) -> Result<Self> {
        if u_plus.dim() != u_minus.dim() {
            return Err(Error::DimensionMismatch {
                expected: u_plus.dim(),
                got: u_minus.dim(),
            });
        }
        Ok(match kind {
            SequenceKind::ThueMorse => SequenceWalker {
                kind,
                level: 1,
                // chronological +- : U_1 = U_- U_+, twin U~_1 = U_+ U_-
                a: u_minus.data.dot(&u_plus.data),
                b: u_plus.data.dot(&u_minus.data),
                elapsed_b: 2.0,
                elapsed_a: 2.0,
            },
            SequenceKind::Fibonacci => SequenceWalker {
                kind,
                level: 1,
                a: u_plus.data.clone(),  // level 0 word "+"
                b: u_minus.data.clone(), // level 1 word "-"
                elapsed_a: 1.0,
                elapsed_b: 1.0,
            },
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Drive periods covered by the current level word (exact in f64 well
    /// past level 60, where the counts exceed u64 anyway).
    pub fn elapsed_periods(&self) -> f64 {
        match self.kind {
            SequenceKind::ThueMorse => self.elapsed_a,
            SequenceKind::Fibonacci => self.elapsed_b,
        }
    }

    /// Unitary of the current level word.
    pub fn current(&self) -> &Array2<Complex64> {
        match self.kind {
            SequenceKind::ThueMorse => &self.a,
            SequenceKind::Fibonacci => &self.b,
        }
    }

    /// Advance one recursion level; applies drift control every
    /// [`DRIFT_CHECK_EVERY`] levels.
    pub fn advance(&mut self) -> Result<()> {
        match self.kind {
            SequenceKind::ThueMorse => {
                // U_{n+1} = U~_n U_n, U~_{n+1} = U_n U~_n
                let next = self.b.dot(&self.a);
                let twin = self.a.dot(&self.b);
                self.a = next;
                self.b = twin;
                self.elapsed_a *= 2.0;
                self.elapsed_b *= 2.0;
            }
            SequenceKind::Fibonacci => {
                // w(n+1) = w(n) then w(n-1): the older unitary acts last.
                let next = self.a.dot(&self.b);
                self.a = std::mem::replace(&mut self.b, next);
                let dur = self.elapsed_a + self.elapsed_b;
                self.elapsed_a = self.elapsed_b;
                self.elapsed_b = dur;
            }
        }
        self.level += 1;
        if self.level % DRIFT_CHECK_EVERY == 0 {
            self.drift_control()?;
        }
        Ok(())
    }

    fn drift_control(&mut self) -> Result<()> {
        for m in [&mut self.a, &mut self.b] {
            if unitarity_defect_of(m) > DRIFT_DEFECT_TOL {
                *m = reunitarize_polar(m, DRIFT_POLAR_TARGET, DRIFT_POLAR_MAX_ITER)?;
            }
        }
        Ok(())
    }
}

fn unitarity_defect_of(m: &Array2<Complex64>) -> f64 {
    let gram = linalg::adjoint(m).dot(m);
    let n = gram.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Unitaries for levels 1..=max_level, built through the pair recursions
/// (token words are never expanded). Holds all levels in memory; for long
/// runs at large dimension drive a [`SequenceWalker`] directly instead.
pub fn sequence_unitaries(
    kind: SequenceKind,
    max_level: u32,
    u_plus: &OperatorMatrix,
    u_minus: &OperatorMatrix,
) -> Result<Vec<OperatorMatrix>> {
    if max_level < 1 {
        return Err(Error::InvalidArgument("max_level must be at least 1".into()));
    }
    let mut walker = SequenceWalker::new(kind, u_plus, u_minus)?;
    let mut out = Vec::with_capacity(max_level as usize);
    out.push(OperatorMatrix::unitary(walker.current().clone()));
    while walker.level() < max_level {
        walker.advance()?;
        out.push(OperatorMatrix::unitary(walker.current().clone()));
    }
    Ok(out)
}

/// n-th stroboscopic power of a one-cycle operator.
///
/// Small powers (n up to the matrix dimension) go through binary powering;
/// beyond that the eigendecomposition route is cheaper and exact in the
/// phases: U^n = P diag(exp(i n theta)) P^{-1} with the eigenvalue moduli
/// normalized away.
pub fn periodic_stroboscope(u_cycle: &OperatorMatrix, n_steps: u64) -> Result<OperatorMatrix> {
    let dim = u_cycle.dim();
    if n_steps == 0 {
        return Ok(OperatorMatrix::identity(dim));
    }
    if n_steps <= dim as u64 {
        let mut result: Option<Array2<Complex64>> = None;
        let mut square = u_cycle.data.clone();
        let mut k = n_steps;
        loop {
            if k & 1 == 1 {
                result = Some(match result {
                    None => square.clone(),
                    Some(acc) => square.dot(&acc),
                });
            }
            k >>= 1;
            if k == 0 {
                break;
            }
            square = square.dot(&square);
        }
        Ok(OperatorMatrix::unitary(result.unwrap()))
    } else {
        let (vals, p) = linalg::eig(&u_cycle.data)?;
        let pinv = linalg::inv(&p)?;
        let n = n_steps as f64;
        let mut scaled = p.clone();
        for (k, lam) in vals.iter().enumerate() {
            let theta = lam.arg();
            let phase = Complex64::from_polar(1.0, theta * n);
            scaled.column_mut(k).mapv_inplace(|z| z * phase);
        }
        Ok(OperatorMatrix::unitary(scaled.dot(&pinv)))
    }
}
